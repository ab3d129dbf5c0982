"""Bundled synthetic corpus generator and toy gazetteer.

Patterned news-like sentences over a fixed vocabulary of roughly 200
words.  Entity mentions are drawn from per-class lexicons; several
sentence patterns accept more than one entity class in the same slot, so
word identity (not context alone) is needed to classify well.  This keeps
the default test suite independent of licensed corpora and embeddings.
"""

from .conll import CorpusDocument, Sentence
from .rng import substream

PER_FIRST = (
    "Anira", "Boren", "Calder", "Doran", "Elvan", "Farin", "Galor", "Hesta",
    "Ilyan", "Joral", "Kessa", "Lorin", "Maren", "Nadir", "Olena", "Pavel",
    "Quirin", "Rasla", "Soren", "Talin", "Umbra", "Verin", "Wyla", "Zoran",
    "Amsel", "Brisa", "Corin", "Deshan", "Elira", "Fenn", "Gavric", "Halden",
    "Iska", "Jorven", "Kelda", "Lyron",
)
PER_LAST = (
    "Ashford", "Brennal", "Corvyn", "Draymont", "Ellerson", "Farwell",
    "Grenholm", "Havers", "Ingram", "Jassel", "Kimber", "Lanford",
)
LOC_NAMES = (
    "Valdoria", "Kethram", "Solmara", "Drevane", "Ostelle", "Quivar",
    "Branholm", "Telmas", "Ardenia", "Fenwick", "Grelthorpe", "Harnessa",
    "Ilvermoor", "Jondale", "Kellshire", "Lormont", "Mirevale", "Norvath",
    "Opaline", "Prestwick", "Quorline", "Rosmere", "Sendaria", "Thornby",
    "Ulverton", "Vexmoor", "Westhollow", "Yarvil", "Zelmora", "Aldgate",
    "Bexford", "Cranmoor", "Durnholm", "Eastvale", "Farrowdale", "Glenmere",
)
ORG_NAMES = (
    "Apexon", "Bravura", "Centrix", "Dynacore", "Everline", "Fabrinor",
    "Glowtech", "Helixia", "Ironvale", "Junctura", "Kronast", "Luminex",
    "Mercanta", "Novexis", "Orbitale", "Polariq", "Quantica", "Rivertrade",
    "Stellaron", "Tradewind", "Ultranova", "Vectorix", "Weldonix", "Xenovia",
    "Yieldcore", "Zephyrix", "Ambertide", "Boreastel", "Cindermark", "Dovetail",
)
ORG_SUFFIX = ("Group", "Holdings", "Labs", "Industries")
MISC_NAMES = (
    "Solstice", "Aurora", "Equinox", "Meridian", "Zenith", "Eclipse",
    "Torrent", "Cascade", "Beacon", "Vertex",
)
MISC_SUFFIX = ("Cup", "Games", "Fair", "Summit")

# sentence patterns; slots are (PER, ORG, LOC, MISC, PERORG, LOCORG)
TEMPLATES = (
    ("PERORG said the report would lift prices in LOC .", 3),
    ("PER met PER during talks in LOC .", 2),
    ("ORG shares rose after the quarterly results .", 3),
    ("officials from LOCORG visited LOC last week .", 2),
    ("the MISC opened in LOC on Friday .", 1),
    ("the MISC drew record crowds this year .", 1),
    ("analysts at ORG expect growth to slow .", 2),
    ("PER of ORG spoke about the deal .", 3),
    ("LOC markets fell while LOC stayed strong .", 1),
    ("the minister told PER that ORG would join .", 3),
    ("MISC results from LOC surprised the analysts .", 1),
    ("PERORG announced plans for a new plant in LOC .", 2),
    ("traders in LOC said ORG would cut output .", 2),
    ("the government of LOC backed the accord .", 1),
    ("a spokesman for PERORG declined to comment .", 2),
    ("prices fell for the third month running .", 3),
    ("the talks ended without a statement late on Friday .", 3),
    ("exports stayed weak despite the new accord .", 3),
    ("the report gave no figures for the quarter .", 3),
)


def _pick(rng, pool):
    return pool[int(rng.integers(0, len(pool)))]


def _fill_slot(slot, rng):
    """Tokens and labels for one template slot."""
    if slot == "PERORG":
        slot = "PER" if rng.random() < 0.5 else "ORG"
    if slot == "LOCORG":
        slot = "LOC" if rng.random() < 0.5 else "ORG"
    if slot == "PER":
        if rng.random() < 0.2:
            tokens = [_pick(rng, PER_FIRST), _pick(rng, PER_LAST)]
        else:
            tokens = [_pick(rng, PER_FIRST)]
        return tokens, ["PER"] * len(tokens)
    if slot == "ORG":
        if rng.random() < 0.3:
            tokens = [_pick(rng, ORG_NAMES), _pick(rng, ORG_SUFFIX)]
        else:
            tokens = [_pick(rng, ORG_NAMES)]
        return tokens, ["ORG"] * len(tokens)
    if slot == "LOC":
        return [_pick(rng, LOC_NAMES)], ["LOC"]
    if slot == "MISC":
        tokens = [_pick(rng, MISC_NAMES), _pick(rng, MISC_SUFFIX)]
        return tokens, ["MISC", "MISC"]
    raise ValueError(f"unknown slot {slot!r}")


SLOTS = ("PER", "ORG", "LOC", "MISC", "PERORG", "LOCORG")


_WEIGHTS = [w for _, w in TEMPLATES]
_CUMULATIVE = [sum(_WEIGHTS[:i + 1]) / sum(_WEIGHTS) for i in range(len(_WEIGHTS))]


def _pick_template(rng):
    r = rng.random()
    for template, edge in zip(TEMPLATES, _CUMULATIVE):
        if r < edge:
            return template[0]
    return TEMPLATES[-1][0]


def _make_sentence(rng):
    template = _pick_template(rng)
    tokens = []
    labels = []
    for piece in template.split():
        if piece in SLOTS:
            slot_tokens, slot_labels = _fill_slot(piece, rng)
            tokens.extend(slot_tokens)
            labels.extend(slot_labels)
        else:
            tokens.append(piece)
            labels.append("O")
    return Sentence(tokens=tokens, labels=labels)


def generate_corpus(seed, target_tokens) -> CorpusDocument:
    """Labeled corpus of at least ``target_tokens`` tokens (whole sentences)."""
    rng = substream(seed, "toy-corpus")
    corpus = CorpusDocument(doc_starts=[0])
    count = 0
    while count < target_tokens:
        sentence = _make_sentence(rng)
        corpus.sentences.append(sentence)
        count += len(sentence)
    return corpus


def generate_splits(seed, train_tokens=20_000, dev_tokens=2_500, test_tokens=2_500):
    """Train/dev/test corpora from independent substreams of one seed."""
    return (
        generate_corpus(substream(seed, "train").integers(0, 2**31), train_tokens),
        generate_corpus(substream(seed, "dev").integers(0, 2**31), dev_tokens),
        generate_corpus(substream(seed, "test").integers(0, 2**31), test_tokens),
    )


def toy_gazetteer_pairs(seed=0, coverage=0.75):
    """Gazetteer entries covering part of each entity lexicon.

    Includes full-name entries, a class conflict, and a blocklisted
    weekday trap; MISC is deliberately absent.
    """
    rng = substream(seed, "toy-gazetteer")

    def sample(pool, fraction):
        n = max(1, int(round(fraction * len(pool))))
        idx = rng.permutation(len(pool))[:n]
        return [pool[i] for i in sorted(idx)]

    pairs = []
    for name in sample(PER_FIRST, coverage):
        pairs.append((name, "PER"))
    for first in sample(PER_FIRST, 0.3):
        for last in sample(PER_LAST, 0.3):
            pairs.append((f"{first} {last}", "PER"))
    for name in sample(LOC_NAMES, coverage):
        pairs.append((name, "LOC"))
    for name in sample(ORG_NAMES, coverage):
        pairs.append((name, "ORG"))
        for suffix in ORG_SUFFIX:
            pairs.append((f"{name} {suffix}", "ORG"))
    # a surface listed under two classes (priority decides) and a weekday
    # that the blocklist must keep out
    pairs.append((LOC_NAMES[0], "PER"))
    pairs.append(("Friday", "PER"))
    return pairs


def gazetteer_file_text(pairs):
    return "".join(f"{surface}\t{cls}\n" for surface, cls in pairs)
