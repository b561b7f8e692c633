"""Sentence cleaning, tokenization, vocabulary and fixed-length encoding."""

import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

PAD = "<PAD>"
UNK = "<UNK>"
PAD_INDEX = 0
UNK_INDEX = 1
MAX_VOCAB = 20000

# clitics are split off the way Kim's sentence CNN preprocessing does it
_CLITICS = [
    (re.compile(r"'s"), " 's"),
    (re.compile(r"'ve"), " 've"),
    (re.compile(r"n't"), " n't"),
    (re.compile(r"'re"), " 're"),
    (re.compile(r"'d"), " 'd"),
    (re.compile(r"'ll"), " 'll"),
]
_NON_ALPHA = re.compile(r"[^A-Za-z]")
_SPACES = re.compile(r" +")


def clean_text(raw, lowercase=False):
    s = raw
    for pattern, repl in _CLITICS:
        s = pattern.sub(repl, s)
    s = _NON_ALPHA.sub(" ", s)
    s = _SPACES.sub(" ", s).strip()
    return s.lower() if lowercase else s


def tokenize(cleaned):
    return [t for t in cleaned.split(" ") if t]


def sentence_tokens(raw, lowercase=False):
    return tokenize(clean_text(raw, lowercase))


@dataclass(frozen=True)
class Vocabulary:
    """Token to index map; index 0 is PAD and 1 is UNK."""

    tokens: tuple = (PAD, UNK)
    max_content_size: int = MAX_VOCAB
    token_to_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.tokens[:2] != (PAD, UNK):
            raise ValueError("vocabulary must start with PAD and UNK")
        object.__setattr__(self, "token_to_index",
                           {t: i for i, t in enumerate(self.tokens)})
        if len(self.token_to_index) != len(self.tokens):
            raise ValueError("duplicate tokens in vocabulary")

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.token_to_index

    def index(self, token):
        return self.token_to_index.get(token, UNK_INDEX)

    @property
    def content_tokens(self):
        return self.tokens[2:]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for i, t in enumerate(self.tokens):
                fh.write(f"{t}\t{i}\n")

    @classmethod
    def load(cls, path):
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                token, _, idx = line.rpartition("\t")
                if not token or not idx.isdigit():
                    raise ValueError(f"{path}: line {lineno}: expected 'token<TAB>index'")
                pairs.append((int(idx), token))
        pairs.sort()
        if [i for i, _ in pairs] != list(range(len(pairs))):
            raise ValueError(f"{path}: indices are not dense from 0")
        return cls(tuple(t for _, t in pairs))


def build_vocabulary(token_lists, pretrained=None, max_size=MAX_VOCAB):
    """Rank tokens by frequency (ties lexicographic), keep the top
    ``max_size`` and drop those absent from ``pretrained``.

    ``pretrained`` is anything supporting ``in``; ``None`` keeps every
    ranked token.
    """
    counts = Counter()
    for tokens in token_lists:
        counts.update(tokens)
    counts.pop(PAD, None)
    counts.pop(UNK, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[:max_size]
    content = [t for t, _ in ranked if pretrained is None or t in pretrained]
    return Vocabulary((PAD, UNK, *content), max_size)


@dataclass(frozen=True)
class EncodedSentence:
    indices: np.ndarray
    true_length: int


def encode(tokens, vocab, max_len):
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.index(t) for t in tokens[:max_len]] or [UNK_INDEX]
    out = np.full(max_len, PAD_INDEX, dtype=np.int64)
    out[: len(ids)] = ids
    return EncodedSentence(out, len(ids))


def encode_batch(token_lists, vocab, max_len):
    """Stack encodings into a ``(n, max_len)`` index matrix."""
    out = np.full((len(token_lists), max_len), PAD_INDEX, dtype=np.int64)
    for row, tokens in enumerate(token_lists):
        out[row] = encode(tokens, vocab, max_len).indices
    return out


def choose_max_len(token_lists, cap=128, floor=1):
    longest = max((len(t) for t in token_lists), default=1)
    return max(min(longest, cap), floor, 1)
