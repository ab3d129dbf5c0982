"""Word vectors and vocabulary.

Tables always end with two extra rows, PAD then UNK (both zero by
default).  Lookup is case-sensitive with a lowercase fallback before
falling through to UNK.
"""

import numpy as np

from .rng import substream


class Vocabulary:
    def __init__(self, words):
        self.words = list(words)
        self.pad_id = len(self.words)
        self.unk_id = len(self.words) + 1
        self._index = {w: i for i, w in enumerate(self.words)}

    @property
    def size(self):
        return len(self.words) + 2

    def lookup(self, word):
        idx = self._index.get(word)
        if idx is not None:
            return idx
        idx = self._index.get(word.lower())
        return idx if idx is not None else self.unk_id

    def encode(self, tokens):
        return [self.lookup(t) for t in tokens]


def load_embeddings(path, expected_dim=None):
    """Read "word v1 v2 ... vD" lines into (table, vocabulary).

    The table has PAD and UNK zero rows appended; the dimension is
    inferred from the first line unless ``expected_dim`` pins it.
    """
    words = []
    vectors = []
    dim = expected_dim
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split()
            word, fields = parts[0], parts[1:]
            if dim is None:
                dim = len(fields)
                if dim == 0:
                    raise ValueError(f"line {lineno}: no vector components")
            if len(fields) != dim:
                raise ValueError(
                    f"line {lineno}: expected {dim} components, got {len(fields)}"
                )
            try:
                vectors.append([float(v) for v in fields])
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric field") from None
            words.append(word)
    table = np.zeros((len(words) + 2, dim or 0), dtype=np.float64)
    if vectors:
        table[:len(words)] = np.asarray(vectors, dtype=np.float64)
    return table, Vocabulary(words)


def write_embeddings(path, words, table):
    """Inverse of :func:`load_embeddings` (PAD/UNK rows are not written)."""
    with open(path, "w", encoding="utf-8") as fh:
        for word, row in zip(words, np.asarray(table)):
            fh.write(word + " " + " ".join(repr(float(v)) for v in row) + "\n")


def build_vocab_words(token_iter):
    """Unique tokens in first-occurrence order."""
    seen = {}
    for token in token_iter:
        if token not in seen:
            seen[token] = None
    return list(seen)


def random_embeddings(words, dim, seed):
    """Seeded random table for runs without a vector file; PAD/UNK are zero."""
    vocab = Vocabulary(words)
    rng = substream(seed, "embeddings")
    table = np.zeros((vocab.size, dim), dtype=np.float64)
    table[:len(vocab.words)] = 0.5 * rng.standard_normal((len(vocab.words), dim))
    return table, vocab
