"""Numpy kernels and the two sentence-CNN graphs with analytic backprop.

All kernels work on batches: sequences are ``(B, L, C)`` arrays, sentence
vectors ``(B, F)``. Everything is float64.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckpointError, ShapeError

HUYNH = "huynh"
HUGHES = "hughes"
ARCHITECTURES = (HUYNH, HUGHES)

DEFAULT_FILTERS = {HUYNH: 300, HUGHES: 256}
DEFAULT_WINDOW = 5
POOL_WINDOW = 5
DROPOUT = 0.5

# layer programs; convN refers to params.conv_banks[N]
_PROGRAMS = {
    HUYNH: ("conv0", "relu", "gmax"),
    HUGHES: ("conv0", "relu", "conv1", "relu", "pool",
             "conv2", "relu", "conv3", "relu", "gmax"),
}
_PADDING = {HUYNH: "valid", HUGHES: "same"}
_N_BANKS = {HUYNH: 1, HUGHES: 4}


@dataclass
class ConvFilterBank:
    weights: np.ndarray  # (window, in_channels, filters)
    bias: np.ndarray  # (filters,)
    padding: str = "valid"

    @property
    def window(self):
        return self.weights.shape[0]

    @property
    def in_channels(self):
        return self.weights.shape[1]

    @property
    def out_channels(self):
        return self.weights.shape[2]

    def filter_norms(self):
        return np.sqrt((self.weights ** 2).sum(axis=(0, 1)))


@dataclass
class DenseHead:
    w: np.ndarray  # (F,)
    b: np.ndarray = field(default_factory=lambda: np.zeros(()))


@dataclass
class ModelParameters:
    architecture: str
    embedding: np.ndarray
    conv_banks: list
    head: DenseHead
    seed: int = None

    def tensors(self):
        """Named views of every trainable array, in a fixed order."""
        out = {"embedding": self.embedding}
        for i, bank in enumerate(self.conv_banks):
            out[f"conv{i}.weights"] = bank.weights
            out[f"conv{i}.bias"] = bank.bias
        out["head.w"] = self.head.w
        out["head.b"] = self.head.b
        return out

    def copy(self):
        return ModelParameters(
            self.architecture,
            self.embedding.copy(),
            [ConvFilterBank(b.weights.copy(), b.bias.copy(), b.padding)
             for b in self.conv_banks],
            DenseHead(self.head.w.copy(), self.head.b.copy()),
            self.seed,
        )

    def validate(self):
        if self.architecture not in ARCHITECTURES:
            raise ShapeError(f"unknown architecture {self.architecture!r}")
        if len(self.conv_banks) != _N_BANKS[self.architecture]:
            raise ShapeError(
                f"{self.architecture} expects {_N_BANKS[self.architecture]} conv banks, "
                f"got {len(self.conv_banks)}")
        if self.embedding.ndim != 2:
            raise ShapeError("embedding: expected a V x M matrix")
        channels = self.embedding.shape[1]
        for i, bank in enumerate(self.conv_banks):
            if bank.weights.ndim != 3 or bank.in_channels != channels:
                raise ShapeError(
                    f"conv{i}: expects {channels} input channels, weights have shape "
                    f"{bank.weights.shape}")
            if bank.bias.shape != (bank.out_channels,):
                raise ShapeError(f"conv{i}: bias shape {bank.bias.shape}")
            channels = bank.out_channels
        if self.head.w.shape != (channels,):
            raise ShapeError(f"head: expects {channels} coefficients, got {self.head.w.shape}")
        if np.shape(self.head.b) != ():
            raise ShapeError("head: intercept must be a scalar")

    def min_length(self):
        if self.architecture == HUYNH:
            return self.conv_banks[0].window
        return 1


def glorot_uniform(shape, fan_in, fan_out, rng):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def init_params(architecture, embedding, rng, filters=None, window=DEFAULT_WINDOW, seed=None):
    """Fresh parameters around a given V x M embedding matrix (copied)."""
    if architecture not in ARCHITECTURES:
        raise ValueError(f"unknown architecture {architecture!r}")
    filters = filters or DEFAULT_FILTERS[architecture]
    channels = embedding.shape[1]
    banks = []
    for _ in range(_N_BANKS[architecture]):
        weights = glorot_uniform((window, channels, filters),
                                 window * channels, window * filters, rng)
        banks.append(ConvFilterBank(weights, np.zeros(filters), _PADDING[architecture]))
        channels = filters
    head = DenseHead(glorot_uniform((filters,), filters, 1, rng), np.zeros(()))
    params = ModelParameters(architecture, np.array(embedding, dtype=np.float64, copy=True),
                             banks, head, seed)
    params.validate()
    return params


# -- kernels ---------------------------------------------------------------

@dataclass
class RowGrad:
    """Gradient for a subset of embedding rows."""
    rows: np.ndarray
    values: np.ndarray

    def dense(self, shape):
        out = np.zeros(shape)
        out[self.rows] = self.values
        return out


def embed_forward(indices, emb):
    return emb[indices]


def embed_backward(indices, grad):
    """Scatter-add ``grad`` (B, L, M) onto the rows named by ``indices``."""
    flat = np.asarray(indices).reshape(-1)
    rows, inverse = np.unique(flat, return_inverse=True)
    values = np.zeros((len(rows), grad.shape[-1]))
    np.add.at(values, inverse, grad.reshape(len(flat), -1))
    return RowGrad(rows, values)


def _same_pads(window):
    left = (window - 1) // 2
    return left, window - 1 - left


def conv1d_forward(x, weights, bias, padding="valid"):
    """``out[b, t, f] = bias[f] + sum_{i, c} xp[b, t + i, c] * weights[i, c, f]``
    where ``xp`` is ``x`` zero-padded for ``"same"`` mode."""
    window, channels, filters = weights.shape
    if x.shape[-1] != channels:
        raise ShapeError(f"conv: input has {x.shape[-1]} channels, filters expect {channels}")
    if padding == "same":
        left, right = _same_pads(window)
        xp = np.pad(x, ((0, 0), (left, right), (0, 0)))
    elif padding == "valid":
        if x.shape[1] < window:
            raise ShapeError(f"conv: valid mode needs length >= {window}, got {x.shape[1]}")
        xp = x
    else:
        raise ValueError(f"unknown padding {padding!r}")
    n_out = xp.shape[1] - window + 1
    cols = np.stack([xp[:, i:i + n_out, :] for i in range(window)], axis=2)
    out = cols.reshape(-1, window * channels) @ weights.reshape(window * channels, filters)
    out = out.reshape(x.shape[0], n_out, filters) + bias
    return out, (xp, weights, padding, x.shape[1])


def conv1d_backward(cache, grad):
    xp, weights, padding, length = cache
    window, channels, filters = weights.shape
    batch, n_out, _ = grad.shape
    g2 = grad.reshape(-1, filters)
    cols = np.stack([xp[:, i:i + n_out, :] for i in range(window)], axis=2)
    dweights = (cols.reshape(-1, window * channels).T @ g2).reshape(weights.shape)
    dbias = g2.sum(axis=0)
    dcols = (g2 @ weights.reshape(window * channels, filters).T).reshape(
        batch, n_out, window, channels)
    dxp = np.zeros_like(xp)
    for i in range(window):
        dxp[:, i:i + n_out, :] += dcols[:, :, i, :]
    if padding == "same":
        left, _ = _same_pads(window)
        dxp = dxp[:, left:left + length, :]
    return dxp, dweights, dbias


def relu_forward(x):
    mask = x > 0
    return np.where(mask, x, 0.0), mask


def relu_backward(mask, grad):
    return np.where(mask, grad, 0.0)


def maxpool1d_forward(x, window=POOL_WINDOW):
    """Non-overlapping max pooling along axis 1 (stride = window); a final
    partial window is pooled over what remains."""
    batch, length, channels = x.shape
    n_out = -(-length // window)
    padded = np.full((batch, n_out * window, channels), -np.inf)
    padded[:, :length] = x
    blocks = padded.reshape(batch, n_out, window, channels)
    arg = blocks.argmax(axis=2)
    out = np.take_along_axis(blocks, arg[:, :, None, :], axis=2)[:, :, 0, :]
    return out, (arg, length, window)


def maxpool1d_backward(cache, grad):
    arg, length, window = cache
    batch, n_out, channels = grad.shape
    blocks = np.zeros((batch, n_out, window, channels))
    np.put_along_axis(blocks, arg[:, :, None, :], grad[:, :, None, :], axis=2)
    return blocks.reshape(batch, n_out * window, channels)[:, :length]


def global_maxpool_forward(x):
    arg = x.argmax(axis=1)
    out = np.take_along_axis(x, arg[:, None, :], axis=1)[:, 0, :]
    return out, (arg, x.shape[1])


def global_maxpool_backward(cache, grad):
    arg, length = cache
    dx = np.zeros((grad.shape[0], length, grad.shape[1]))
    np.put_along_axis(dx, arg[:, None, :], grad[:, None, :], axis=1)
    return dx


def dropout(v, p=DROPOUT, mode="train", rng=None, mask=None):
    """Inverted dropout. Returns ``(out, mask)``; the mask already carries the
    ``1/(1-p)`` scale and is what the backward pass multiplies by."""
    if not 0 <= p < 1:
        raise ValueError("dropout probability must lie in [0, 1)")
    if mode == "infer" or p == 0:
        return v, np.ones_like(v)
    if mask is None:
        if rng is None:
            raise ValueError("train-mode dropout needs an rng or a mask")
        mask = (rng.random(v.shape) >= p) / (1.0 - p)
    return v * mask, mask


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def head_forward(v, w, b):
    z = v @ w + b
    return z, sigmoid(z)


def head_backward(v, w, dz):
    return np.outer(dz, w), v.T @ dz, np.asarray(dz.sum())


# -- whole model -----------------------------------------------------------

@dataclass
class ForwardCache:
    indices: np.ndarray
    steps: list
    v: np.ndarray
    dropout_mask: np.ndarray
    z: np.ndarray
    yhat: np.ndarray

    def decisions(self):
        """Discrete choices made by the forward pass (ReLU gates and max
        positions); two passes with equal decisions lie on the same linear
        piece of the network."""
        out = []
        for op, c in self.steps:
            if op == "relu":
                out.append(c)
            elif op in ("pool", "gmax"):
                out.append(c[0])
        return out


def model_forward(indices, params, mode="infer", rng=None, mask=None, p=DROPOUT):
    """Forward pass for a ``(B, L)`` index batch; returns ``(yhat, cache)``."""
    indices = np.atleast_2d(np.asarray(indices))
    if indices.max(initial=0) >= params.embedding.shape[0] or indices.min(initial=0) < 0:
        raise ShapeError("embedding: index out of range")
    if indices.shape[1] < params.min_length():
        raise ShapeError(f"conv0: sequence length {indices.shape[1]} is below "
                         f"the window {params.min_length()}")
    h = embed_forward(indices, params.embedding)
    steps = []
    for op in _PROGRAMS[params.architecture]:
        if op.startswith("conv"):
            bank = params.conv_banks[int(op[4:])]
            if h.shape[-1] != bank.in_channels:
                raise ShapeError(f"{op}: expects {bank.in_channels} channels, got {h.shape[-1]}")
            h, c = conv1d_forward(h, bank.weights, bank.bias, bank.padding)
        elif op == "relu":
            h, c = relu_forward(h)
        elif op == "pool":
            h, c = maxpool1d_forward(h)
        else:
            h, c = global_maxpool_forward(h)
        steps.append((op, c))
    v = h
    if v.shape[1] != params.head.w.shape[0]:
        raise ShapeError(f"head: expects {params.head.w.shape[0]} features, got {v.shape[1]}")
    vd, dmask = dropout(v, p, mode, rng, mask)
    z, yhat = head_forward(vd, params.head.w, params.head.b)
    return yhat, ForwardCache(indices, steps, vd, dmask, z, yhat)


def model_backward(cache, dz, params):
    """Gradients of ``sum(dz * z)`` with respect to every parameter tensor.

    The embedding gradient is a :class:`RowGrad` over the rows touched by the
    batch.
    """
    dz = np.asarray(dz, dtype=np.float64).reshape(-1)
    grads = {}
    dv, grads["head.w"], grads["head.b"] = head_backward(cache.v, params.head.w, dz)
    g = dv * cache.dropout_mask
    for op, c in reversed(cache.steps):
        if op.startswith("conv"):
            g, dw, db = conv1d_backward(c, g)
            grads[f"{op}.weights"] = dw
            grads[f"{op}.bias"] = db
        elif op == "relu":
            g = relu_backward(c, g)
        elif op == "pool":
            g = maxpool1d_backward(c, g)
        else:
            g = global_maxpool_backward(c, g)
    grads["embedding"] = embed_backward(cache.indices, g)
    return {name: grads[name] for name in params.tensors()}


def predict(indices, params, batch_size=256):
    """Inference-mode probabilities for an index matrix."""
    out = np.empty(len(indices))
    for start in range(0, len(indices), batch_size):
        yhat, _ = model_forward(indices[start:start + batch_size], params, mode="infer")
        out[start:start + batch_size] = yhat
    return out


# -- checkpoints -----------------------------------------------------------

_MAGIC = "adrcnn-checkpoint"


def save_checkpoint(path, params, extra=None):
    """JSON manifest on the first line, then each tensor as raw little-endian
    float64 values in manifest order."""
    tensors = params.tensors()
    manifest = {
        "format": _MAGIC,
        "version": 1,
        "architecture": params.architecture,
        "seed": params.seed,
        "paddings": [b.padding for b in params.conv_banks],
        "tensors": [{"name": n, "shape": list(np.shape(t))} for n, t in tensors.items()],
        "extra": extra or {},
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest, sort_keys=True).encode("utf-8") + b"\n")
        for t in tensors.values():
            fh.write(np.ascontiguousarray(t, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns ``(params, manifest)``."""
    with open(path, "rb") as fh:
        try:
            manifest = json.loads(fh.readline().decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"{path}: unreadable manifest ({exc})") from None
        if manifest.get("format") != _MAGIC:
            raise CheckpointError(f"{path}: not a model checkpoint")
        arrays = {}
        for entry in manifest["tensors"]:
            shape = tuple(entry["shape"])
            n = int(np.prod(shape, dtype=np.int64))
            raw = fh.read(8 * n)
            if len(raw) != 8 * n:
                raise CheckpointError(f"{path}: truncated tensor {entry['name']}")
            arrays[entry["name"]] = np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape)
        if fh.read(1):
            raise CheckpointError(f"{path}: trailing bytes after last tensor")
    arch = manifest["architecture"]
    paddings = manifest.get("paddings", [])
    n_banks = sum(1 for name in arrays if name.endswith(".weights"))
    try:
        banks = [ConvFilterBank(arrays[f"conv{i}.weights"], arrays[f"conv{i}.bias"],
                                paddings[i] if i < len(paddings) else _PADDING.get(arch, "valid"))
                 for i in range(n_banks)]
        params = ModelParameters(arch, arrays["embedding"], banks,
                                 DenseHead(arrays["head.w"], arrays["head.b"].reshape(())),
                                 manifest.get("seed"))
    except KeyError as exc:
        raise CheckpointError(f"{path}: missing tensor {exc}") from None
    try:
        params.validate()
    except ShapeError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
    return params, manifest
