"""ADE corpus ingestion, de-duplication and cross-validation splits.

The corpus ships as two files: ``DRUG-AE.rel`` holds one pipe-delimited line
per annotated drug/adverse-effect relation (so a sentence with several
relations appears several times), and ``ADE-NEG.txt`` holds the sentences
without any relation.
"""

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import CorpusFormatError

POSITIVE = 1
NEGATIVE = 0


@dataclass(frozen=True)
class SentenceRecord:
    id: int
    pmid: str
    text: str
    label: int


@dataclass
class CorpusStats:
    raw_positive_lines: int = 0
    unique_positive: int = 0
    negative: int = 0
    conflicts_resolved: int = 0

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)


@dataclass(frozen=True)
class FoldSplit:
    fold_index: int
    train_ids: tuple = field(default=())
    dev_ids: tuple = field(default=())
    test_ids: tuple = field(default=())


def _lines(content):
    if isinstance(content, str):
        content = content.splitlines()
    for lineno, line in enumerate(content, start=1):
        yield lineno, line.rstrip("\r\n")


def parse_positive_file(content, source=None):
    """Parse ``DRUG-AE.rel`` lines (``PMID|sentence|AE|b|e|drug|b|e``).

    Only PMID and sentence are kept. Blank lines are skipped.
    """
    records = []
    for lineno, line in _lines(content):
        if not line.strip():
            continue
        fields = line.split("|")
        if len(fields) < 2:
            raise CorpusFormatError(
                "expected at least 2 pipe-separated fields", lineno, source)
        if len(fields) > 8:
            # sentence text containing '|': the six span fields are at the end
            text = "|".join(fields[1:-6])
        else:
            text = fields[1]
        text = text.strip()
        if not text:
            raise CorpusFormatError("empty sentence", lineno, source)
        records.append(SentenceRecord(len(records), fields[0].strip(), text, POSITIVE))
    return records


def parse_negative_file(content, source=None):
    """Parse ``ADE-NEG.txt`` lines (``PMID NEG sentence``)."""
    records = []
    for lineno, line in _lines(content):
        if not line.strip():
            continue
        parts = line.split(None, 2)
        if len(parts) < 2 or parts[1] != "NEG":
            raise CorpusFormatError("missing NEG marker in field 2", lineno, source)
        text = parts[2].strip() if len(parts) == 3 else ""
        if not text:
            raise CorpusFormatError("empty sentence", lineno, source)
        records.append(SentenceRecord(len(records), parts[0], text, NEGATIVE))
    return records


def renumber(records):
    return [replace(r, id=i) for i, r in enumerate(records)]


def corpus_stats(records):
    """Counts for a record list that is not de-duplicated."""
    n_pos = sum(1 for r in records if r.label == POSITIVE)
    return CorpusStats(raw_positive_lines=n_pos, unique_positive=n_pos,
                       negative=len(records) - n_pos)


def deduplicate(records):
    """Collapse records with identical raw text.

    The first occurrence of a text keeps its position; if the same text is
    seen with both labels the kept record becomes positive.
    """
    kept = {}
    order = []
    conflicted = set()
    raw_pos = 0
    for r in records:
        if r.label == POSITIVE:
            raw_pos += 1
        prev = kept.get(r.text)
        if prev is None:
            kept[r.text] = r
            order.append(r.text)
        elif prev.label != r.label:
            conflicted.add(r.text)
            if r.label == POSITIVE:
                kept[r.text] = replace(prev, label=POSITIVE, pmid=r.pmid)
    out = renumber([kept[t] for t in order])
    n_pos = sum(1 for r in out if r.label == POSITIVE)
    stats = CorpusStats(raw_positive_lines=raw_pos, unique_positive=n_pos,
                        negative=len(out) - n_pos, conflicts_resolved=len(conflicted))
    return out, stats


def load_corpus(pos_path, neg_path, dedup=True):
    """Read both distribution files; returns ``(records, stats)``."""
    with open(pos_path, encoding="utf-8") as fh:
        pos = parse_positive_file(fh, source=str(pos_path))
    with open(neg_path, encoding="utf-8") as fh:
        neg = parse_negative_file(fh, source=str(neg_path))
    records = renumber(pos + neg)
    if dedup:
        return deduplicate(records)
    return records, corpus_stats(records)


def write_records(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(f"{r.label}\t{r.pmid}\t{r.text}\n")


def read_records(path):
    """Read the tab-separated ``label, pmid, text`` layout written by
    :func:`write_records`."""
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in _lines(fh):
            if not line:
                continue
            parts = line.split("\t", 2)
            if len(parts) != 3 or parts[0] not in ("0", "1"):
                raise CorpusFormatError("expected 'label<TAB>pmid<TAB>text'",
                                        lineno, str(path))
            records.append(SentenceRecord(len(records), parts[1], parts[2], int(parts[0])))
    return records


def _dev_sample(ids, fraction, rng):
    if len(ids) == 0:
        return []
    ids = list(ids)
    rng.shuffle(ids)
    n = int(round(fraction * len(ids)))
    n = min(max(n, 1), len(ids) - 1) if len(ids) > 1 else 0
    return ids[:n]


def make_folds(records, k=10, dev_fraction=0.1, seed=0, stratify=True):
    """Split record ids into ``k`` folds, each with a dev slice of its
    training portion."""
    if k < 2:
        raise ValueError("k must be at least 2")
    if not 0 < dev_fraction < 1:
        raise ValueError("dev_fraction must lie in (0, 1)")
    if not records:
        raise ValueError("no records to split")
    rng = np.random.default_rng(seed)
    if stratify:
        groups = {}
        for r in records:
            groups.setdefault(r.label, []).append(r.id)
        groups = [groups[label] for label in sorted(groups)]
    else:
        groups = [[r.id for r in records]]
    for g in groups:
        if len(g) < k:
            raise ValueError(f"a class has {len(g)} members, fewer than k={k}")

    buckets = [[] for _ in range(k)]
    offset = 0
    for g in groups:
        g = list(g)
        rng.shuffle(g)
        for j, rid in enumerate(g):
            buckets[(offset + j) % k].append(rid)
        offset = (offset + len(g)) % k

    folds = []
    for f in range(k):
        test = set(buckets[f])
        fold_rng = np.random.default_rng([seed, f])
        dev = []
        for g in groups:
            rest = [rid for rid in g if rid not in test]
            dev.extend(_dev_sample(rest, dev_fraction, fold_rng))
        dev_set = set(dev)
        train = [r.id for r in records if r.id not in test and r.id not in dev_set]
        folds.append(FoldSplit(f, tuple(train), tuple(sorted(dev_set)),
                               tuple(sorted(test))))
    return folds
