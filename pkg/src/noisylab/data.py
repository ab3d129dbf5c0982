"""Dataset preparation: clean subset sampling, noisy labeling, window
extraction, and tracked splits.

Splits count batch accesses so tests can assert which data each training
variant is allowed to read.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .conll import CorpusDocument
from .embeddings import build_vocab_words, load_embeddings, random_embeddings
from .gazetteer import annotate
from .model import LabelSet, sentence_windows
from .noise import NoiseChannelSpec, apply_channel
from .rng import substream


def sample_clean_subset(corpus: CorpusDocument, word_budget: int, seed: int):
    """Randomly pick whole sentences until the token budget is reached.

    Sentences keep their original corpus order inside both halves.
    Returns (clean subset, remainder).
    """
    if word_budget <= 0:
        raise ValueError("word budget must be positive")
    total = corpus.token_count
    if word_budget > total:
        raise ValueError(f"word budget {word_budget} exceeds corpus size {total}")
    rng = substream(seed, "clean-subset")
    order = rng.permutation(len(corpus.sentences))
    chosen = []
    count = 0
    for idx in order:
        chosen.append(int(idx))
        count += len(corpus.sentences[idx])
        if count >= word_budget:
            break
    chosen_set = set(chosen)
    clean = CorpusDocument(
        sentences=[corpus.sentences[i] for i in sorted(chosen_set)]
    )
    rest = CorpusDocument(
        sentences=[s for i, s in enumerate(corpus.sentences) if i not in chosen_set]
    )
    return clean, rest


@dataclass
class TrackedSplit:
    """Window examples of one split, with an access counter."""

    name: str
    token_ids: np.ndarray
    sentence_lengths: np.ndarray
    y: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    eval_only_y: Optional[np.ndarray] = None  # diagnostics, never for training
    reads: int = 0

    def __len__(self):
        return self.token_ids.shape[0]

    def take(self, indices, labels=None):
        """Batch of (token windows, labels); every call counts as one read."""
        self.reads += 1
        ids = self.token_ids[indices]
        if labels is None:
            return ids, None
        source = self.y if labels == "y" else self.z
        if source is None:
            raise ValueError(f"split {self.name!r} has no {labels} labels")
        return ids, source[indices]

    def sequences(self, which="y"):
        """Per-sentence label arrays (for entity-level scoring)."""
        flat = self.y if which == "y" else self.z
        return split_by_lengths(flat, self.sentence_lengths)


def split_by_lengths(flat, lengths):
    flat = np.asarray(flat)
    out = []
    start = 0
    for n in lengths:
        out.append(flat[start:start + int(n)])
        start += int(n)
    return out


@dataclass
class SplitDataset:
    """Clean data C, noisy data N, and the untouched dev/test splits."""

    clean: TrackedSplit
    noisy: TrackedSplit
    dev: TrackedSplit
    test: TrackedSplit
    label_set: LabelSet
    vocab: object
    embedding_table: np.ndarray

    @property
    def k(self):
        return self.label_set.k

    def reset_counters(self):
        for split in (self.clean, self.noisy, self.dev, self.test):
            split.reads = 0


def corpus_windows(corpus: CorpusDocument, vocab, name, label_set=None,
                   y_names=None, z=None, y_flat=None, eval_only_y=None):
    """Build a TrackedSplit of all token windows in corpus order."""
    rows = []
    lengths = []
    for sentence in corpus.sentences:
        ids = vocab.encode(sentence.tokens)
        rows.append(sentence_windows(ids, vocab.pad_id))
        lengths.append(len(sentence.tokens))
    token_ids = np.concatenate(rows) if rows else np.zeros((0, 7), dtype=np.int64)
    y = None
    if y_flat is not None:
        y = np.asarray(y_flat, dtype=np.int64)
    elif y_names is not None:
        y = label_set.encode(y_names)
    return TrackedSplit(
        name=name,
        token_ids=token_ids,
        sentence_lengths=np.asarray(lengths, dtype=np.int64),
        y=y,
        z=None if z is None else np.asarray(z, dtype=np.int64),
        eval_only_y=None if eval_only_y is None else np.asarray(eval_only_y, dtype=np.int64),
    )


def build_channel_spec(config, label_set) -> Optional[NoiseChannelSpec]:
    """Channel described by an experiment config, or None for gazetteer mode."""
    if config.noisy_source == "gazetteer":
        return None
    kind = config.channel_kind
    if kind == "uniform":
        return NoiseChannelSpec.uniform(config.channel_rho, k=label_set.k, seed=config.seed)
    if kind == "permutation":
        names = [n.strip() for n in config.channel_permutation.split(",")]
        perm = [label_set.index(n) for n in names]
        return NoiseChannelSpec.from_permutation(perm, seed=config.seed)
    if kind == "empirical":
        if config.channel_preset == "gazetteer-like":
            return NoiseChannelSpec.gazetteer_like(seed=config.seed)
        if config.channel_matrix_path:
            from .evaluation import parse_matrix_csv
            with open(config.channel_matrix_path, encoding="utf-8") as fh:
                _, matrix = parse_matrix_csv(fh.read())
            return NoiseChannelSpec.empirical(matrix, seed=config.seed)
        raise ValueError("empirical channel needs a preset or a matrix file")
    raise ValueError(f"unknown channel kind {kind!r}")


def prepare(config, train_corpus, dev_corpus, test_corpus, gazetteer=None) -> SplitDataset:
    """Assemble the full experiment dataset from labeled corpora.

    The clean subset C is sampled from the training corpus by token
    budget.  Noisy labels come either from a synthetic channel applied to
    the gold labels or from gazetteer annotation; the same process also
    produces noisy twins for C's tokens, which seed the noise-layer
    initialization.  ``noisy_scope`` selects whether N covers the
    remainder only or the whole training corpus.
    """
    label_set = config.label_set()
    for name, corpus in (("train", train_corpus), ("dev", dev_corpus), ("test", test_corpus)):
        if not corpus.labeled:
            raise ValueError(f"{name} corpus must be fully labeled")

    clean_corpus, rest_corpus = sample_clean_subset(
        train_corpus, config.clean_budget, seed=config.seed
    )
    noisy_corpus = train_corpus if config.noisy_scope == "all" else rest_corpus

    spec = build_channel_spec(config, label_set)
    if spec is None:
        if gazetteer is None:
            raise ValueError("gazetteer mode needs a gazetteer")
        noisy_z = label_set.encode(
            [lab for sent in annotate((s.tokens for s in noisy_corpus.sentences), gazetteer)
             for lab in sent]
        )
        clean_z = label_set.encode(
            [lab for sent in annotate((s.tokens for s in clean_corpus.sentences), gazetteer)
             for lab in sent]
        )
    else:
        noisy_y = label_set.encode(noisy_corpus.flat_labels())
        noisy_z = apply_channel(noisy_y, spec, stream="noisy")
        clean_y_flat = label_set.encode(clean_corpus.flat_labels())
        clean_z = apply_channel(clean_y_flat, spec, stream="clean-init")

    words = build_vocab_words(train_corpus.all_tokens())
    if config.embeddings_path:
        table, vocab = load_embeddings(config.embeddings_path)
    else:
        table, vocab = random_embeddings(words, config.embedding_dim, seed=config.seed)

    clean_split = corpus_windows(
        clean_corpus, vocab, "clean", label_set,
        y_names=clean_corpus.flat_labels(), z=clean_z,
    )
    noisy_split = corpus_windows(
        noisy_corpus, vocab, "noisy", label_set,
        z=noisy_z, eval_only_y=label_set.encode(noisy_corpus.flat_labels()),
    )
    dev_split = corpus_windows(dev_corpus, vocab, "dev", label_set,
                               y_names=dev_corpus.flat_labels())
    test_split = corpus_windows(test_corpus, vocab, "test", label_set,
                                y_names=test_corpus.flat_labels())
    return SplitDataset(
        clean=clean_split,
        noisy=noisy_split,
        dev=dev_split,
        test=test_split,
        label_set=label_set,
        vocab=vocab,
        embedding_table=table,
    )
