"""Pretrained word-vector loading (GloVe text, word2vec binary) and
embedding-matrix assembly."""

import io
import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import EmbeddingFormatError
from .textprep import PAD_INDEX, UNK_INDEX

log = logging.getLogger(__name__)


@dataclass
class PretrainedLexicon:
    dim: int
    entries: dict = field(default_factory=dict)
    declared_count: int = None
    seen: int = 0
    skipped_lines: int = 0
    duplicates: int = 0

    def __len__(self):
        return len(self.entries)

    def __contains__(self, token):
        return token in self.entries

    def __getitem__(self, token):
        return self.entries[token]

    def coverage(self, vocab):
        content = vocab.content_tokens
        if not content:
            return 0.0
        return sum(1 for t in content if t in self.entries) / len(content)

    def restricted(self, keep):
        sub = {t: v for t, v in self.entries.items() if t in keep}
        return PretrainedLexicon(self.dim, sub)


def _parse_floats(fields, lineno):
    try:
        return np.array(fields, dtype=np.float64)
    except ValueError:
        raise EmbeddingFormatError("non-numeric vector component", lineno) from None


def load_glove_text(stream, keep=None):
    """Read ``token v1 ... vM`` lines.

    ``keep``, when given, restricts which tokens are materialised; every line
    is still checked for the right field count. ``seen`` counts all accepted
    entries whether kept or not.
    """
    if isinstance(stream, (bytes, bytearray)):
        stream = io.StringIO(stream.decode("utf-8"))
    elif isinstance(stream, str):
        stream = io.StringIO(stream)
    lex = None
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        fields = line.rstrip(" ").split(" ")
        if lex is None:
            if len(fields) < 2:
                raise EmbeddingFormatError("cannot infer dimension", lineno)
            lex = PretrainedLexicon(len(fields) - 1)
        dim = lex.dim
        if len(fields) != dim + 1:
            if len(fields) > dim + 1:
                # token with internal spaces; only accept the line if the
                # trailing fields are a well-formed vector
                _parse_floats(fields[-dim:], lineno)
                lex.skipped_lines += 1
                continue
            raise EmbeddingFormatError(
                f"expected {dim} vector components, got {len(fields) - 1}", lineno)
        token = fields[0]
        if keep is not None and token not in keep:
            lex.seen += 1
            continue
        vec = _parse_floats(fields[1:], lineno)
        lex.seen += 1
        if token in lex.entries:
            lex.duplicates += 1
            continue
        lex.entries[token] = vec
    if lex is None:
        raise EmbeddingFormatError("empty embedding file: cannot infer dimension")
    if lex.skipped_lines:
        log.warning("skipped %d GloVe lines with space-containing tokens", lex.skipped_lines)
    if lex.duplicates:
        log.warning("ignored %d duplicate GloVe tokens", lex.duplicates)
    return lex


def _read_header(stream):
    raw = stream.readline()
    parts = raw.split()
    try:
        count, dim = (int(p) for p in parts)
    except ValueError:
        raise EmbeddingFormatError("header must be two integers 'count dim'", 1) from None
    if count < 0 or dim <= 0:
        raise EmbeddingFormatError("header must be 'count dim' with dim > 0", 1)
    return count, dim


def load_word2vec_binary(stream, keep=None):
    """Read the word2vec C binary layout: ``count dim\\n`` then per entry the
    token, a space, and ``dim`` little-endian float32 values."""
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    count, dim = _read_header(stream)
    lex = PretrainedLexicon(dim, declared_count=count)
    width = 4 * dim
    for n in range(count):
        buf = bytearray()
        while True:
            ch = stream.read(1)
            if not ch:
                raise EmbeddingFormatError(
                    f"truncated file: expected {count} entries, received {n}")
            if ch == b" ":
                break
            if ch != b"\n" or buf:
                buf += ch
        raw = stream.read(width)
        if len(raw) < width:
            raise EmbeddingFormatError(
                f"truncated file: expected {count} entries, received {n}")
        token = buf.decode("utf-8", errors="replace")
        lex.seen += 1
        if keep is not None and token not in keep:
            continue
        if token in lex.entries:
            lex.duplicates += 1
            continue
        lex.entries[token] = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    if lex.duplicates:
        log.warning("ignored %d duplicate word2vec tokens", lex.duplicates)
    return lex


def save_glove_text(lexicon, stream):
    for token, vec in lexicon.entries.items():
        stream.write(token + " " + " ".join(repr(float(x)) for x in vec) + "\n")


def save_word2vec_binary(lexicon, stream):
    stream.write(f"{len(lexicon.entries)} {lexicon.dim}\n".encode("ascii"))
    for token, vec in lexicon.entries.items():
        stream.write(token.encode("utf-8") + b" ")
        stream.write(np.asarray(vec, dtype="<f4").tobytes())
        stream.write(b"\n")


def load_lexicon(path, fmt, keep=None):
    if fmt == "glove-text":
        with open(path, encoding="utf-8") as fh:
            return load_glove_text(fh, keep)
    if fmt == "word2vec-binary":
        with open(path, "rb") as fh:
            return load_word2vec_binary(fh, keep)
    raise ValueError(f"unknown embedding format {fmt!r}")


def random_lexicon(tokens, dim, rng, scale=0.25):
    """Uniform random vectors in ``[-scale, scale]`` for each token, in sorted
    token order so the result does not depend on set iteration."""
    tokens = sorted(set(tokens))
    values = rng.uniform(-scale, scale, size=(len(tokens), dim))
    return PretrainedLexicon(dim, dict(zip(tokens, values)))


def assemble_matrix(vocab, lexicon):
    """V x M float64 matrix: PAD and UNK rows zero, other rows copied from
    the lexicon."""
    matrix = np.zeros((len(vocab), lexicon.dim), dtype=np.float64)
    for i, token in enumerate(vocab.tokens):
        if i in (PAD_INDEX, UNK_INDEX):
            continue
        vec = lexicon.entries.get(token)
        if vec is None:
            raise EmbeddingFormatError(f"vocabulary token {token!r} missing from lexicon")
        matrix[i] = vec
    return matrix
