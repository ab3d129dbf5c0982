"""Gazetteer lookup annotation.

Surface forms (one or more tokens) map to entity classes.  Annotation is a
pure function of (corpus, gazetteer): longest match wins, conflicts between
classes for the same surface are resolved by a priority order at load time,
blocklisted surfaces and everything unmatched become O, and MISC is never
emitted because list lookup does not cover it.
"""

from typing import Iterable, Optional, Sequence

WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday",
            "Saturday", "Sunday")
MONTHS = ("January", "February", "March", "April", "May", "June", "July",
          "August", "September", "October", "November", "December")

# weekday and month names, both cased and lowercased
DEFAULT_BLOCKLIST = tuple(WEEKDAYS + MONTHS) + tuple(
    w.lower() for w in WEEKDAYS + MONTHS
)

DEFAULT_PRIORITY = ("PER", "LOC", "ORG")


class Gazetteer:
    """Deterministic surface-form lookup table with a class priority order."""

    def __init__(self, pairs: Iterable[tuple[str, str]],
                 priority: Sequence[str] = DEFAULT_PRIORITY,
                 blocklist: Optional[Iterable[str]] = None):
        self.priority = tuple(priority)
        block = DEFAULT_BLOCKLIST if blocklist is None else tuple(blocklist)
        self.blocklist = frozenset(tuple(b.split()) for b in block)
        self.entries: dict[tuple[str, ...], str] = {}
        self.max_len = 1
        for surface, cls in pairs:
            key = tuple(surface.split())
            if not key:
                continue
            if cls == "MISC":
                # not covered by lookup annotation
                continue
            current = self.entries.get(key)
            if current is None or self._rank(cls) < self._rank(current):
                self.entries[key] = cls
            self.max_len = max(self.max_len, len(key))

    def _rank(self, cls):
        try:
            return self.priority.index(cls)
        except ValueError:
            return len(self.priority)

    def lookup(self, tokens: Sequence[str]) -> Optional[str]:
        key = tuple(tokens)
        if key in self.blocklist:
            return None
        return self.entries.get(key)

    def __len__(self):
        return len(self.entries)

    @classmethod
    def load(cls, path, priority=DEFAULT_PRIORITY, blocklist_path=None):
        """Read "surface<TAB>CLASS" lines; blocklist file has one surface per line."""
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                if "\t" not in line:
                    raise ValueError(f"{path}:{lineno}: expected 'surface<TAB>CLASS'")
                surface, entity_class = line.rsplit("\t", 1)
                pairs.append((surface.strip(), entity_class.strip()))
        blocklist = None
        if blocklist_path is not None:
            blocklist = list(DEFAULT_BLOCKLIST) + load_blocklist(blocklist_path)
        return cls(pairs, priority=priority, blocklist=blocklist)


def load_blocklist(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def annotate_sentence(tokens: Sequence[str], gazetteer: Gazetteer) -> list[str]:
    """Labels for one sentence; greedy left-to-right, longest match first."""
    n = len(tokens)
    labels = ["O"] * n
    i = 0
    while i < n:
        matched = False
        for length in range(min(gazetteer.max_len, n - i), 0, -1):
            cls = gazetteer.lookup(tokens[i:i + length])
            if cls is not None:
                for j in range(i, i + length):
                    labels[j] = cls
                i += length
                matched = True
                break
        if not matched:
            i += 1
    return labels


def annotate(sentences: Iterable[Sequence[str]], gazetteer: Gazetteer) -> list[list[str]]:
    """Label every token of every sentence by gazetteer lookup."""
    return [annotate_sentence(list(tokens), gazetteer) for tokens in sentences]
