"""Windowed token classifier (embedding, BiLSTM, dense ReLU, softmax),
the learnable label-noise layer, and the label-cleaning network baseline.

The noise layer and the cleaning network only ever participate in
training; prediction always uses the bare classifier.
"""

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .rng import substream

WINDOW_RADIUS = 3
WINDOW_SIZE = 2 * WINDOW_RADIUS + 1

DEFAULT_CLASSES = ("O", "PER", "ORG", "LOC", "MISC")


class LabelSet:
    """Ordered class names with a stable index per class; O must be present."""

    def __init__(self, classes: Sequence[str] = DEFAULT_CLASSES):
        classes = tuple(classes)
        if len(classes) < 2:
            raise ValueError("LabelSet needs at least 2 classes")
        if "O" not in classes:
            raise ValueError("LabelSet must contain the null class O")
        if len(set(classes)) != len(classes):
            raise ValueError("LabelSet classes must be unique")
        self.classes = classes
        self.o_index = classes.index("O")
        self._by_name = {name: i for i, name in enumerate(classes)}

    @property
    def k(self):
        return len(self.classes)

    def index(self, name):
        try:
            return self._by_name[name]
        except KeyError:
            raise ValueError(f"unknown label {name!r}") from None

    def name(self, index):
        return self.classes[index]

    def encode(self, names):
        return np.array([self.index(n) for n in names], dtype=np.int64)

    def __eq__(self, other):
        return isinstance(other, LabelSet) and self.classes == other.classes

    def __repr__(self):
        return f"LabelSet({self.classes!r})"


@dataclass
class WindowExample:
    """One target token with its padded context window.

    Clean examples carry a trusted label ``y``; noisy ones carry the
    observed label ``z``.  Clean examples may additionally carry a ``z``
    produced by the same annotation process as the noisy data, which is
    what the noise-layer initialization consumes.
    """

    token_ids: np.ndarray
    clean_label: Optional[int] = None
    noisy_label: Optional[int] = None
    source: str = "clean"

    def __post_init__(self):
        self.token_ids = np.asarray(self.token_ids, dtype=np.int64)
        if self.token_ids.shape != (WINDOW_SIZE,):
            raise ValueError(f"window must have {WINDOW_SIZE} tokens")
        if self.source not in ("clean", "noisy"):
            raise ValueError(f"unknown source {self.source!r}")
        if self.source == "clean" and self.clean_label is None:
            raise ValueError("clean example needs a clean label")
        if self.source == "noisy" and self.noisy_label is None:
            raise ValueError("noisy example needs a noisy label")


def build_window(sentence, target_index, pad):
    """Slice of 2*RADIUS+1 items around ``target_index``, padded with ``pad``."""
    n = len(sentence)
    if n == 0:
        raise ValueError("cannot build a window over an empty sentence")
    if not 0 <= target_index < n:
        raise ValueError(f"target index {target_index} outside sentence of length {n}")
    window = []
    for pos in range(target_index - WINDOW_RADIUS, target_index + WINDOW_RADIUS + 1):
        window.append(sentence[pos] if 0 <= pos < n else pad)
    return window


def sentence_windows(token_ids, pad_id):
    """All windows of a sentence as an (n, WINDOW_SIZE) int array."""
    ids = np.asarray(token_ids, dtype=np.int64)
    n = ids.shape[0]
    padded = np.full(n + 2 * WINDOW_RADIUS, pad_id, dtype=np.int64)
    padded[WINDOW_RADIUS:WINDOW_RADIUS + n] = ids
    out = np.empty((n, WINDOW_SIZE), dtype=np.int64)
    for i in range(n):
        out[i] = padded[i:i + WINDOW_SIZE]
    return out


def _uniform_init(rng, shape, fan_in):
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class WindowClassifier:
    """Embedding lookup, BiLSTM encoder, dense ReLU, softmax over classes.

    The window representation is the concatenation of one forward and one
    backward LSTM state; ``pooling`` selects which step ("final" takes the
    state after the whole window, "center" the states at the target token).
    """

    def __init__(self, embedding_table, k, hidden_size, dense_size,
                 seed=0, trainable_embeddings=False, pooling="final",
                 dtype=np.float64):
        if pooling not in ("final", "center"):
            raise ValueError(f"unknown pooling {pooling!r}")
        embed = np.asarray(embedding_table, dtype=dtype)
        e = embed.shape[1]
        h = hidden_size
        self.k = k
        self.hidden_size = h
        self.dense_size = dense_size
        self.pooling = pooling
        self.trainable_embeddings = trainable_embeddings
        self.embedding = Tensor(embed, requires_grad=trainable_embeddings)
        def t(name, shape, fan_in):
            return Tensor(
                _uniform_init(substream(seed, "init", name), shape, fan_in).astype(dtype),
                requires_grad=True,
            )
        self.fw_in = t("fw_in", (e, 4 * h), e)
        self.fw_rec = t("fw_rec", (h, 4 * h), h)
        self.fw_bias = Tensor(np.zeros(4 * h, dtype=dtype), requires_grad=True)
        self.bw_in = t("bw_in", (e, 4 * h), e)
        self.bw_rec = t("bw_rec", (h, 4 * h), h)
        self.bw_bias = Tensor(np.zeros(4 * h, dtype=dtype), requires_grad=True)
        self.dense_w = t("dense_w", (2 * h, dense_size), 2 * h)
        self.dense_b = Tensor(np.zeros(dense_size, dtype=dtype), requires_grad=True)
        self.out_w = t("out_w", (dense_size, k), dense_size)
        self.out_b = Tensor(np.zeros(k, dtype=dtype), requires_grad=True)

    def parameters(self):
        params = [
            self.fw_in, self.fw_rec, self.fw_bias,
            self.bw_in, self.bw_rec, self.bw_bias,
            self.dense_w, self.dense_b, self.out_w, self.out_b,
        ]
        if self.trainable_embeddings:
            params.insert(0, self.embedding)
        return params

    def _pool_steps(self):
        if self.pooling == "center":
            return WINDOW_RADIUS, WINDOW_RADIUS
        return WINDOW_SIZE - 1, 0

    def features(self, token_ids):
        """BiLSTM window representation as a graph Tensor of shape (B, 2H)."""
        x = ad.embedding_lookup(self.embedding, np.atleast_2d(token_ids))
        hf = ad.lstm_sequence(x, self.fw_in, self.fw_rec, self.fw_bias)
        hb = ad.lstm_sequence(x, self.bw_in, self.bw_rec, self.bw_bias, reverse=True)
        step_f, step_b = self._pool_steps()
        return ad.concat([ad.take_time(hf, step_f), ad.take_time(hb, step_b)], axis=1)

    def probs(self, token_ids, features=None):
        """Class distributions as a graph Tensor of shape (B, k)."""
        feats = self.features(token_ids) if features is None else features
        hidden = ad.relu(ad.add(ad.matmul(feats, self.dense_w), self.dense_b))
        logits = ad.add(ad.matmul(hidden, self.out_w), self.out_b)
        return ad.softmax(logits, axis=-1)

    def base_forward(self, example):
        """Distribution over classes for a single window."""
        ids = example.token_ids if isinstance(example, WindowExample) else example
        return self.probs(np.atleast_2d(ids)).values[0]

    def infer_features(self, token_ids):
        """Graph-free replica of :meth:`features` for prediction paths."""
        from . import kernels
        ids = np.atleast_2d(token_ids)
        x = np.ascontiguousarray(self.embedding.values[ids])
        hf, _, _, _ = kernels.lstm_forward(
            x, self.fw_in.values, self.fw_rec.values, self.fw_bias.values)
        xr = np.ascontiguousarray(x[:, ::-1, :])
        hb, _, _, _ = kernels.lstm_forward(
            xr, self.bw_in.values, self.bw_rec.values, self.bw_bias.values)
        hb = hb[:, ::-1, :]
        step_f, step_b = self._pool_steps()
        return np.concatenate([hf[:, step_f, :], hb[:, step_b, :]], axis=1)

    def infer_probs(self, token_ids):
        """Graph-free replica of :meth:`probs`."""
        feats = self.infer_features(token_ids)
        hidden = np.maximum(feats @ self.dense_w.values + self.dense_b.values, 0.0)
        logits = hidden @ self.out_w.values + self.out_b.values
        shifted = logits - logits.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        return e / e.sum(axis=-1, keepdims=True)

    def predict(self, token_ids):
        """Predicted class per window; ties break toward the lowest index.

        The noise layer and the cleaning network never participate here.
        """
        return np.argmax(self.infer_probs(token_ids), axis=-1)

    def state_dict(self):
        names = ["embedding", "fw_in", "fw_rec", "fw_bias", "bw_in", "bw_rec",
                 "bw_bias", "dense_w", "dense_b", "out_w", "out_b"]
        return {name: getattr(self, name).values.copy() for name in names}

    def load_state(self, state):
        for name, values in state.items():
            getattr(self, name).values[...] = values


def theta_from_b(b):
    """Row-stochastic matrix from raw noise weights via row softmax."""
    b = np.asarray(b, dtype=np.float64)
    shifted = b - b.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class NoiseMatrix:
    """Learnable label-noise channel: row softmax of a k-by-k weight matrix.

    theta is always recomputed from the current weights, never cached.  A
    frozen constant channel can be supplied instead for controlled
    experiments; it has no trainable weights.
    """

    def __init__(self, b=None, k=None, frozen_theta=None, dtype=np.float64):
        if frozen_theta is not None:
            theta = np.asarray(frozen_theta, dtype=dtype)
            if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
                raise ValueError("frozen theta must be square")
            self.frozen_theta = theta
            self.logits = None
            self.k = theta.shape[0]
            return
        if b is None:
            if k is None:
                raise ValueError("need b, k, or frozen_theta")
            b = np.eye(k)
        b = np.asarray(b, dtype=dtype)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("noise weights must be square")
        if not np.isfinite(b).all():
            raise ValueError("noise weights must be finite")
        self.frozen_theta = None
        self.logits = Tensor(b.copy(), requires_grad=True)
        self.k = b.shape[0]

    @property
    def trainable(self):
        return self.frozen_theta is None

    def parameters(self):
        return [self.logits] if self.trainable else []

    def theta_tensor(self):
        if self.frozen_theta is not None:
            return Tensor(self.frozen_theta)
        return ad.softmax(self.logits, axis=-1)

    def theta(self):
        if self.frozen_theta is not None:
            return self.frozen_theta.copy()
        return theta_from_b(self.logits.values)

    def b_matrix(self):
        return None if self.logits is None else self.logits.values.copy()


def noisy_forward(probs, noise):
    """Distribution over observed noisy labels: p(z=j) = sum_i theta[i,j] p(y=i).

    ``probs`` is the classifier output (graph Tensor); gradients flow into
    the noise weights and the shared classifier parameters.
    """
    return ad.matmul(probs, noise.theta_tensor())


class CleaningNetwork:
    """Maps (window features, observed noisy label) to a cleaned label vector.

    The BiLSTM features are projected to a small space, concatenated with
    the one-hot noisy label, passed through a dense layer, added back onto
    the noisy label (skip connection), and clipped to [0, 1].
    """

    def __init__(self, feature_size, k, proj_size=30, seed=0, dtype=np.float64):
        self.k = k
        self.proj_size = proj_size
        def t(name, shape, fan_in):
            return Tensor(
                _uniform_init(substream(seed, "cleaner", name), shape, fan_in).astype(dtype),
                requires_grad=True,
            )
        self.proj_w = t("proj_w", (feature_size, proj_size), feature_size)
        self.proj_b = Tensor(np.zeros(proj_size, dtype=dtype), requires_grad=True)
        self.comb_w = t("comb_w", (proj_size + k, k), proj_size + k)
        self.comb_b = Tensor(np.zeros(k, dtype=dtype), requires_grad=True)

    def parameters(self):
        return [self.proj_w, self.proj_b, self.comb_w, self.comb_b]

    def forward(self, features, noisy_onehot):
        """Cleaned label vectors in [0, 1], shape (B, k)."""
        feats = features if isinstance(features, Tensor) else Tensor(features)
        onehot = noisy_onehot if isinstance(noisy_onehot, Tensor) else Tensor(noisy_onehot)
        projected = ad.add(ad.matmul(feats, self.proj_w), self.proj_b)
        combined = ad.concat([projected, onehot], axis=1)
        mapped = ad.add(ad.matmul(combined, self.comb_w), self.comb_b)
        return ad.clip(ad.add(mapped, onehot), 0.0, 1.0)

    def infer(self, features, noisy_onehot):
        """Graph-free replica of :meth:`forward`."""
        projected = features @ self.proj_w.values + self.proj_b.values
        combined = np.concatenate([projected, noisy_onehot], axis=1)
        mapped = combined @ self.comb_w.values + self.comb_b.values
        return np.clip(mapped + noisy_onehot, 0.0, 1.0)

    def state_dict(self):
        names = ["proj_w", "proj_b", "comb_w", "comb_b"]
        return {name: getattr(self, name).values.copy() for name in names}

    def load_state(self, state):
        for name, values in state.items():
            getattr(self, name).values[...] = values


def cleaning_forward(cleaner, features, noisy_onehot):
    """Cleaned label vector for given features and one-hot noisy labels."""
    return cleaner.forward(features, noisy_onehot)


def one_hot(labels, k, dtype=np.float64):
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.shape[0], k), dtype=dtype)
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out
