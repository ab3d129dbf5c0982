"""Training variants, the alternating clean/noisy schedule, epoch selection
by dev F1, and the multi-seed trial harness.

Six variants are supported.  base-model trains on clean data only.
base-model-with-noise pools clean data with a fresh noisy subsample each
epoch, without noise handling.  noise-model alternates clean epochs with
noisy epochs that train through the noise layer, whose weights start from
the smoothed clean/noisy confusion of C; noise-model-with-identity-init is
identical but starts from the identity matrix.  noise-adaptation-model
trains through the noise layer on the full noisy set only, initializing
from the confusion between a noisy-pretrained model's predictions and the
noisy labels.  noise-cleaning-model trains a label cleaning network on C
each epoch and then trains the base model on cleaned noisy data plus C.
"""

import dataclasses
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .autodiff import Tensor, absolute_error, cross_entropy
from .data import SplitDataset, prepare, split_by_lengths
from .evaluation import PRFReport, entity_prf
from .model import (
    CleaningNetwork,
    NoiseMatrix,
    WindowClassifier,
    noisy_forward,
    one_hot,
)
from .noise import estimate_confusion, identity_init, init_noise_weights
from .optim import Adam
from .rng import substream

VARIANTS = (
    "base-model",
    "base-model-with-noise",
    "noise-model",
    "noise-model-with-identity-init",
    "noise-adaptation-model",
    "noise-cleaning-model",
)


@dataclass
class VariantSpec:
    """One of the six accepted training recipes."""

    name: str

    def __post_init__(self):
        if self.name not in VARIANTS:
            raise ValueError(f"unknown variant {self.name!r}; expected one of {VARIANTS}")

    @property
    def uses_noise_layer(self):
        return self.name in (
            "noise-model", "noise-model-with-identity-init", "noise-adaptation-model"
        )

    @property
    def uses_cleaner(self):
        return self.name == "noise-cleaning-model"


def schedule(variant_name, epochs):
    """Observable epoch phases, in order.  The alternating variants always
    start with a clean epoch and alternate strictly."""
    if variant_name == "base-model":
        return ["clean"] * epochs
    if variant_name == "base-model-with-noise":
        return ["pooled"] * epochs
    if variant_name in ("noise-model", "noise-model-with-identity-init"):
        return ["clean" if e % 2 == 0 else "noisy" for e in range(epochs)]
    if variant_name == "noise-adaptation-model":
        return ["noisy-full"] * epochs
    if variant_name == "noise-cleaning-model":
        return ["cleaning"] * epochs
    raise ValueError(f"unknown variant {variant_name!r}")


def subsample_noisy(n_total, size, seed, epoch=0):
    """Uniform sample without replacement of ``size`` indices out of
    ``n_total``; deterministic in (seed, epoch), fresh across epochs."""
    if size > n_total:
        raise ValueError(f"subsample size {size} exceeds noisy pool {n_total}")
    rng = substream(seed, "subsample", epoch)
    return rng.permutation(n_total)[:size]


@dataclass
class TrialResult:
    seed: int
    variant: str
    dev_f1_history: list
    selected_epoch: int
    test_f1: float
    test_report: PRFReport
    theta: Optional[np.ndarray]
    noise_b: Optional[np.ndarray]
    model_state: dict
    cleaner_state: Optional[dict] = None


@dataclass
class TrialsSummary:
    variant: str
    mean_f1: float
    se: float
    n_seeds: int
    degenerate: bool
    trials: list


def _batches(order, batch_size):
    for start in range(0, len(order), batch_size):
        yield order[start:start + batch_size]


def _supervised_pass(model, ids, labels, optimizer, rng, batch_size):
    """One shuffled pass of plain cross-entropy training; returns mean loss."""
    order = rng.permutation(ids.shape[0])
    total = 0.0
    for batch in _batches(order, batch_size):
        loss = cross_entropy(model.probs(ids[batch]), labels[batch])
        loss.backward()
        optimizer.step()
        total += loss.item() * len(batch)
    return total / max(ids.shape[0], 1)


def train_clean_epoch(model, clean_split, optimizer, rng, batch_size):
    """One pass over shuffled C with cross-entropy against the trusted
    labels; the noise layer is not part of this graph."""
    ids, y = clean_split.take(slice(None), "y")
    return _supervised_pass(model, ids, y, optimizer, rng, batch_size)


def train_noisy_epoch(model, noise, noisy_split, indices, opt_base, opt_noise,
                      rng, batch_size):
    """One pass over a noisy subsample through the noise layer; both the
    shared base weights and the noise weights are updated."""
    ids, z = noisy_split.take(indices, "z")
    order = rng.permutation(ids.shape[0])
    total = 0.0
    for batch in _batches(order, batch_size):
        predicted = noisy_forward(model.probs(ids[batch]), noise)
        loss = cross_entropy(predicted, z[batch])
        loss.backward()
        opt_base.step()
        if opt_noise is not None:
            opt_noise.step()
        total += loss.item() * len(batch)
    return total / max(ids.shape[0], 1)


def train_pooled_epoch(model, clean_split, noisy_split, indices, optimizer,
                       rng, batch_size):
    """One pass over C pooled with a noisy subsample, no noise handling."""
    clean_ids, y = clean_split.take(slice(None), "y")
    noisy_ids, z = noisy_split.take(indices, "z")
    ids = np.concatenate([clean_ids, noisy_ids])
    labels = np.concatenate([y, z])
    return _supervised_pass(model, ids, labels, optimizer, rng, batch_size)


def _train_cleaner_pass(model, cleaner, clean_split, optimizer, rng, batch_size, k):
    """Fit the cleaning network on (C features, noisy labels) -> clean labels
    with the absolute error loss.  Base weights are left untouched."""
    ids, y = clean_split.take(slice(None), "y")
    _, z = clean_split.take(slice(None), "z")
    dtype = cleaner.proj_w.values.dtype
    order = rng.permutation(ids.shape[0])
    total = 0.0
    for batch in _batches(order, batch_size):
        feats = Tensor(model.infer_features(ids[batch]))
        out = cleaner.forward(feats, one_hot(z[batch], k, dtype=dtype))
        loss = absolute_error(out, Tensor(one_hot(y[batch], k, dtype=dtype)))
        loss.backward()
        optimizer.step()
        total += loss.item()
    return total / max(ids.shape[0], 1)


def _clean_noisy_labels(model, cleaner, noisy_split, indices, k, eval_batch):
    """Hard labels for a noisy subsample: the cleaner output is renormalized
    to a distribution and its argmax is used; rows that clip to all zero
    fall back to the observed noisy label."""
    ids, z = noisy_split.take(indices, "z")
    cleaned = np.empty(ids.shape[0], dtype=np.int64)
    for start in range(0, ids.shape[0], eval_batch):
        sl = slice(start, start + eval_batch)
        feats = model.infer_features(ids[sl])
        vec = cleaner.infer(feats, one_hot(z[sl], k))
        sums = vec.sum(axis=1)
        out = np.argmax(vec, axis=1)
        dead = sums <= 0.0
        out[dead] = z[sl][dead]
        cleaned[sl] = out
    return ids, cleaned


def evaluate_split(model, split, label_set, eval_batch):
    """Entity-level report of the model's predictions on one split."""
    preds = np.empty(len(split), dtype=np.int64)
    ids, _ = split.take(slice(None))
    for start in range(0, ids.shape[0], eval_batch):
        preds[start:start + eval_batch] = model.predict(ids[start:start + eval_batch])
    gold = split.sequences("y")
    predicted = split_by_lengths(preds, split.sentence_lengths)
    report = entity_prf(gold, predicted, label_set)
    return report.overall.f1, report


def _init_noise_matrix(variant, model, data, config, trial_seed):
    k = data.k
    dtype = np.float32 if config.dtype == "float32" else np.float64
    if variant == "noise-model":
        if data.clean.z is None:
            raise ValueError("noise-model needs noisy twins of the clean labels")
        counts = estimate_confusion(data.clean.y, data.clean.z, k)
        return NoiseMatrix(init_noise_weights(counts, config.alpha), dtype=dtype)
    if variant == "noise-model-with-identity-init":
        return NoiseMatrix(identity_init(k), dtype=dtype)
    if variant == "noise-adaptation-model":
        # pretrain on noisy labels only, then read the confusion between
        # the model's own predictions and those labels
        opt = Adam(model.parameters(), lr=config.learning_rate,
                   beta1=config.beta1, beta2=config.beta2, eps=config.epsilon)
        ids, z = data.noisy.take(slice(None), "z")
        for epoch in range(config.pretrain_epochs):
            rng = substream(trial_seed, "shuffle", "pretrain", epoch)
            _supervised_pass(model, ids, z, opt, rng, config.batch_size)
        preds = np.empty(len(data.noisy), dtype=np.int64)
        for start in range(0, ids.shape[0], config.eval_batch_size):
            preds[start:start + config.eval_batch_size] = model.predict(
                ids[start:start + config.eval_batch_size])
        counts = estimate_confusion(preds, z, k)
        return NoiseMatrix(init_noise_weights(counts, config.alpha), dtype=dtype)
    return None


def train_variant(spec, data: SplitDataset, config, trial_seed,
                  metrics_sink=None):
    """Run one seeded trial of a variant; selects the best epoch by dev F1
    (earliest epoch wins ties) and reports test scores from that epoch."""
    if isinstance(spec, str):
        spec = VariantSpec(spec)
    variant = spec.name
    k = data.k
    dtype = np.float32 if config.dtype == "float32" else np.float64
    model = WindowClassifier(
        data.embedding_table, k=k, hidden_size=config.hidden_size,
        dense_size=config.dense_size, seed=trial_seed,
        trainable_embeddings=config.trainable_embeddings,
        pooling=config.pooling, dtype=dtype,
    )
    opt_base = Adam(model.parameters(), lr=config.learning_rate,
                    beta1=config.beta1, beta2=config.beta2, eps=config.epsilon)
    noise = _init_noise_matrix(variant, model, data, config, trial_seed)
    opt_noise = None
    if noise is not None and noise.trainable:
        opt_noise = Adam(noise.parameters(), lr=config.learning_rate,
                         beta1=config.beta1, beta2=config.beta2, eps=config.epsilon)
    cleaner = None
    opt_cleaner = None
    if spec.uses_cleaner:
        cleaner = CleaningNetwork(2 * config.hidden_size, k,
                                  proj_size=config.cleaner_proj_size,
                                  seed=trial_seed, dtype=dtype)
        opt_cleaner = Adam(cleaner.parameters(), lr=config.learning_rate,
                           beta1=config.beta1, beta2=config.beta2, eps=config.epsilon)

    subsample_size = int(round(config.noisy_factor * len(data.clean)))
    phases = schedule(variant, config.epochs)
    dev_history = []
    best_f1 = -1.0
    best_epoch = -1
    best_state = None
    best_noise_b = None

    for epoch, phase in enumerate(phases):
        rng = substream(trial_seed, "shuffle", epoch)
        cleaner_loss = None
        if phase == "clean":
            loss = train_clean_epoch(model, data.clean, opt_base, rng, config.batch_size)
        elif phase == "pooled":
            indices = subsample_noisy(len(data.noisy), subsample_size, trial_seed, epoch)
            loss = train_pooled_epoch(model, data.clean, data.noisy, indices,
                                      opt_base, rng, config.batch_size)
        elif phase == "noisy":
            indices = subsample_noisy(len(data.noisy), subsample_size, trial_seed, epoch)
            loss = train_noisy_epoch(model, noise, data.noisy, indices,
                                     opt_base, opt_noise, rng, config.batch_size)
        elif phase == "noisy-full":
            indices = np.arange(len(data.noisy))
            loss = train_noisy_epoch(model, noise, data.noisy, indices,
                                     opt_base, opt_noise, rng, config.batch_size)
        elif phase == "cleaning":
            cleaner_loss = _train_cleaner_pass(
                model, cleaner, data.clean, opt_cleaner,
                substream(trial_seed, "shuffle", epoch, "cleaner"),
                config.batch_size, k)
            indices = subsample_noisy(len(data.noisy), subsample_size, trial_seed, epoch)
            noisy_ids, cleaned = _clean_noisy_labels(
                model, cleaner, data.noisy, indices, k, config.eval_batch_size)
            clean_ids, y = data.clean.take(slice(None), "y")
            ids = np.concatenate([noisy_ids, clean_ids])
            labels = np.concatenate([cleaned, y])
            loss = _supervised_pass(model, ids, labels, opt_base, rng, config.batch_size)
        else:
            raise ValueError(f"unknown phase {phase!r}")

        dev_f1, _ = evaluate_split(model, data.dev, data.label_set, config.eval_batch_size)
        dev_history.append(dev_f1)
        if dev_f1 > best_f1:
            best_f1 = dev_f1
            best_epoch = epoch
            best_state = model.state_dict()
            best_noise_b = None if noise is None else noise.b_matrix()
        if metrics_sink is not None:
            record = {
                "variant": variant,
                "seed": trial_seed,
                "epoch": epoch,
                "phase": phase,
                "train_loss": loss,
                "dev_f1": dev_f1,
            }
            if cleaner_loss is not None:
                record["cleaner_loss"] = cleaner_loss
            metrics_sink(record)

    model.load_state(best_state)
    test_f1, test_report = evaluate_split(model, data.test, data.label_set,
                                          config.eval_batch_size)
    theta = None
    noise_b = None
    if noise is not None:
        if best_noise_b is not None:
            selected = NoiseMatrix(best_noise_b)
            theta = selected.theta()
            noise_b = best_noise_b
        else:
            theta = noise.theta()
            noise_b = noise.b_matrix()
    return TrialResult(
        seed=trial_seed,
        variant=variant,
        dev_f1_history=dev_history,
        selected_epoch=best_epoch,
        test_f1=test_f1,
        test_report=test_report,
        theta=theta,
        noise_b=noise_b,
        model_state=model.state_dict(),
        cleaner_state=None if cleaner is None else cleaner.state_dict(),
    )


def run_trials(spec, data: SplitDataset, config, n_seeds=None,
               metrics_sink=None):
    """Independent seeded trials; reports mean test F1 and standard error
    (sample standard deviation over the square root of the trial count)."""
    if isinstance(spec, str):
        spec = VariantSpec(spec)
    n = config.n_seeds if n_seeds is None else n_seeds
    if n < 1:
        raise ValueError("need at least one trial")
    trials = [
        train_variant(spec, data, config, trial_seed=config.seed + i,
                      metrics_sink=metrics_sink)
        for i in range(n)
    ]
    f1s = np.array([t.test_f1 for t in trials])
    mean = float(f1s.mean())
    se = float(f1s.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return TrialsSummary(
        variant=spec.name,
        mean_f1=mean,
        se=se,
        n_seeds=n,
        degenerate=(n == 1),
        trials=trials,
    )


def mean_and_se(values):
    """Mean and standard error of a sample; SE is 0 for a single value."""
    arr = np.asarray(values, dtype=np.float64)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / np.sqrt(arr.size)) if arr.size > 1 else 0.0
    return mean, se


@dataclass
class SweepRow:
    axis_value: float
    variant: str
    mean_f1: float
    se: float
    n_seeds: int


SWEEP_AXES = ("clean-size", "noisy-factor")


def sweep(axis, values, spec, train_corpus, dev_corpus, test_corpus, config,
          gazetteer=None, metrics_sink=None):
    """Run the harness across clean-data sizes or noisy subsample factors.

    clean-size resamples C at each budget (the per-epoch noisy subsample
    stays tied to |C|); noisy-factor keeps C fixed and scales the
    subsample.  Returns one row per value.
    """
    if isinstance(spec, str):
        spec = VariantSpec(spec)
    if axis not in SWEEP_AXES:
        raise ValueError(f"unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}")
    if not values:
        raise ValueError("sweep needs at least one value")
    rows = []
    for value in values:
        if axis == "clean-size":
            cfg = dataclasses.replace(config, clean_budget=int(value))
        else:
            cfg = dataclasses.replace(config, noisy_factor=float(value))
        data = prepare(cfg, train_corpus, dev_corpus, test_corpus, gazetteer=gazetteer)
        size = int(round(cfg.noisy_factor * len(data.clean)))
        if size > len(data.noisy):
            raise ValueError(
                f"noisy subsample of {size} exceeds pool of {len(data.noisy)}"
            )
        summary = run_trials(spec, data, cfg, metrics_sink=metrics_sink)
        rows.append(SweepRow(
            axis_value=float(value),
            variant=spec.name,
            mean_f1=summary.mean_f1,
            se=summary.se,
            n_seeds=summary.n_seeds,
        ))
    return rows


def sweep_csv(rows):
    lines = ["axis_value,variant,mean_f1,se,n_seeds"]
    for row in rows:
        lines.append(
            f"{row.axis_value!r},{row.variant},{row.mean_f1!r},{row.se!r},{row.n_seeds}"
        )
    return "\n".join(lines) + "\n"
