"""Keyword-labelled synthetic corpus in the ADE distribution layout.

A sentence is positive iff it contains the keyword, so a working sentence
CNN should separate the classes almost perfectly.
"""

import os

import numpy as np

KEYWORD = "hepatotoxicity"
_ONSETS = ["b", "c", "d", "f", "g", "l", "m", "n", "p", "r", "s", "t", "v", "tr", "pl", "st"]
_VOWELS = ["a", "e", "i", "o", "u", "ia", "ou"]
_CODAS = ["", "n", "l", "s", "r", "x", "nd", "st"]


def filler_words(n, rng):
    words = set()
    while len(words) < n:
        k = rng.integers(2, 4)
        w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))]
                    for _ in range(k)) + _CODAS[rng.integers(len(_CODAS))]
        if w != KEYWORD:
            words.add(w)
    return sorted(words)


def _sentence(words, rng, length, keyword=None):
    toks = [words[i] for i in rng.integers(len(words), size=length)]
    # capitalise before inserting so the keyword keeps one surface form
    toks[0] = toks[0].capitalize()
    if keyword is not None:
        toks.insert(int(rng.integers(length + 1)), keyword)
    if rng.random() < 0.3:
        toks[int(rng.integers(len(toks)))] += ","
    return " ".join(toks) + "."


def synthetic_corpus(n=2000, positive_fraction=0.25, seed=0, min_len=6, max_len=18,
                     relations_max=3, n_words=400, keyword=KEYWORD):
    """Return ``(positive_lines, negative_lines)`` in ``DRUG-AE.rel`` and
    ``ADE-NEG.txt`` layout. Positive sentences are repeated 1 to
    ``relations_max`` times, as multi-relation sentences are in the real
    corpus; ``n`` counts unique sentences."""
    rng = np.random.default_rng(seed)
    words = filler_words(n_words, rng)
    n_pos = int(round(n * positive_fraction))
    seen = set()
    pos_lines, neg_lines = [], []
    while len(seen) < n:
        positive = len(seen) < n_pos
        length = int(rng.integers(min_len, max_len + 1))
        text = _sentence(words, rng, length, keyword if positive else None)
        if text in seen:
            continue
        seen.add(text)
        pmid = str(10000000 + len(seen))
        if positive:
            start = text.lower().find(keyword)
            for _ in range(int(rng.integers(1, relations_max + 1))):
                pos_lines.append(f"{pmid}|{text}|{keyword}|{start}|{start + len(keyword)}"
                                 f"|drugx|0|5")
        else:
            neg_lines.append(f"{pmid} NEG {text}")
    return pos_lines, neg_lines


def write_synthetic(directory, **kwargs):
    """Write ``DRUG-AE.rel`` and ``ADE-NEG.txt`` into ``directory``."""
    os.makedirs(directory, exist_ok=True)
    pos, neg = synthetic_corpus(**kwargs)
    pos_path = os.path.join(directory, "DRUG-AE.rel")
    neg_path = os.path.join(directory, "ADE-NEG.txt")
    with open(pos_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(pos) + "\n")
    with open(neg_path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(neg) + "\n")
    return pos_path, neg_path
