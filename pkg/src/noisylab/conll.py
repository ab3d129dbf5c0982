"""CoNLL-style corpus files: one token per line, whitespace-separated
columns with the tag last, blank line between sentences, -DOCSTART- lines
marking document boundaries."""

from dataclasses import dataclass, field
from typing import Optional

DOCSTART = "-DOCSTART-"


@dataclass
class Sentence:
    tokens: list
    labels: Optional[list] = None

    def __len__(self):
        return len(self.tokens)


@dataclass
class CorpusDocument:
    """Sentences plus the indices of sentences that open a new document."""

    sentences: list = field(default_factory=list)
    doc_starts: list = field(default_factory=list)

    @property
    def token_count(self):
        return sum(len(s) for s in self.sentences)

    @property
    def labeled(self):
        return bool(self.sentences) and all(
            s.labels is not None for s in self.sentences
        )

    def all_tokens(self):
        for s in self.sentences:
            yield from s.tokens

    def flat_labels(self):
        out = []
        for s in self.sentences:
            if s.labels is None:
                raise ValueError("corpus is not fully labeled")
            out.extend(s.labels)
        return out


def parse_conll(text, label_set=None) -> CorpusDocument:
    """Parse CoNLL text; tolerant of extra middle columns (POS, chunk).

    Lines with a single column are unlabeled tokens.  When ``label_set``
    is given, tags are validated and errors name the offending line.
    """
    corpus = CorpusDocument()
    tokens: list = []
    labels: list = []
    any_label = False
    pending_docstart = False

    def flush():
        nonlocal tokens, labels, any_label, pending_docstart
        if tokens:
            corpus.sentences.append(
                Sentence(tokens=tokens, labels=labels if any_label else None)
            )
            if pending_docstart:
                corpus.doc_starts.append(len(corpus.sentences) - 1)
                pending_docstart = False
        tokens, labels, any_label = [], [], False

    for lineno, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line:
            flush()
            continue
        if line.startswith(DOCSTART):
            flush()
            pending_docstart = True
            continue
        cols = line.split()
        token = cols[0]
        tag = cols[-1] if len(cols) > 1 else None
        if tag is not None and label_set is not None and tag not in label_set.classes:
            raise ValueError(f"line {lineno}: tag {tag!r} not in label set")
        tokens.append(token)
        labels.append(tag)
        if tag is not None:
            any_label = True
    flush()
    return corpus


def write_conll(corpus: CorpusDocument) -> str:
    """Serialize a corpus; inverse of :func:`parse_conll` for tokens, tags,
    sentence boundaries, and document boundaries."""
    doc_starts = set(corpus.doc_starts)
    lines = []
    for idx, sentence in enumerate(corpus.sentences):
        if idx in doc_starts:
            lines.append(f"{DOCSTART} O" if sentence.labels is not None else DOCSTART)
            lines.append("")
        for pos, token in enumerate(sentence.tokens):
            if sentence.labels is not None and sentence.labels[pos] is not None:
                lines.append(f"{token} {sentence.labels[pos]}")
            else:
                lines.append(token)
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")
