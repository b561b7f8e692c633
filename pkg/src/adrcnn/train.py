"""Loss, Adam, max-norm constraint and the early-stopping training loop."""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import NonFiniteGradientError
from .neuralnet import RowGrad, model_backward, model_forward, predict

log = logging.getLogger(__name__)

PROB_EPS = 1e-12


@dataclass
class TrainConfig:
    epochs: int = 8
    batch_size: int = 50
    max_norm: float = 9.0
    eval_every: int = 10
    patience: int = 6
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    dropout: float = 0.5
    seed: int = 0

    def __post_init__(self):
        for name in ("epochs", "batch_size", "max_norm", "eval_every", "patience", "lr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def cross_entropy(yhat, y):
    """Mean negative log-likelihood of binary labels."""
    p = np.clip(np.asarray(yhat, dtype=np.float64), PROB_EPS, 1 - PROB_EPS)
    y = np.asarray(y, dtype=np.float64)
    return float(-np.mean(y * np.log(p) + (1 - y) * np.log(1 - p)))


def loss_grad_logit(yhat, y):
    """d(cross_entropy)/d(logit) for each example of the batch."""
    yhat = np.asarray(yhat, dtype=np.float64)
    return (yhat - np.asarray(y, dtype=np.float64)) / len(yhat)


@dataclass
class AdamState:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    u: dict = field(default_factory=dict)


def adam_step(params, grads, state, batch=None):
    """In-place bias-corrected Adam update of the arrays in ``params``.

    A :class:`RowGrad` gradient only updates (and only advances the moments
    of) the rows it names; bias correction uses the shared step count.
    """
    for name, g in grads.items():
        values = g.values if isinstance(g, RowGrad) else g
        if not np.all(np.isfinite(values)):
            raise NonFiniteGradientError(name, batch)
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, g in grads.items():
        p = params[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.u[name] = np.zeros_like(p)
        m, u = state.m[name], state.u[name]
        if isinstance(g, RowGrad):
            r = g.rows
            m[r] = state.beta1 * m[r] + (1 - state.beta1) * g.values
            u[r] = state.beta2 * u[r] + (1 - state.beta2) * g.values * g.values
            p[r] -= state.lr * (m[r] / bc1) / (np.sqrt(u[r] / bc2) + state.eps)
        else:
            m *= state.beta1
            m += (1 - state.beta1) * g
            u *= state.beta2
            u += (1 - state.beta2) * g * g
            p -= state.lr * (m / bc1) / (np.sqrt(u / bc2) + state.eps)


def max_norm_clip(banks, s=9.0):
    """Rescale each conv filter whose L2 norm exceeds ``s`` back onto the
    ball of radius ``s``. Biases are left alone."""
    if s <= 0:
        raise ValueError("max norm must be positive")
    for bank in banks:
        norms = bank.filter_norms()
        over = norms > s
        if over.any():
            bank.weights[:, :, over] *= s / norms[over]


def select_threshold(scores, labels):
    """Return ``(tau, f1)`` maximising F1 of the rule ``score >= tau`` over
    the distinct scores; ties on F1 go to the larger ``tau``."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    n_pos = int(labels.sum())
    if n_pos == 0:
        raise ValueError("threshold selection needs at least one positive label")
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], labels[order]
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]), len(s) - 1]
    tp = np.cumsum(y)[ends]
    fp = np.cumsum(1 - y)[ends]
    f1 = 2.0 * tp / (tp + fp + n_pos)
    best = int(np.argmax(f1))
    return float(s[ends[best]]), float(f1[best])


@dataclass
class EvalRecord:
    batch: int
    dev_loss: float
    dev_f1: float
    threshold: float
    patience: int

    def tsv(self):
        return (f"{self.batch}\t{self.dev_loss:.6f}\t{self.dev_f1:.6f}\t"
                f"{self.threshold:.6f}\t{self.patience}")


@dataclass
class Snapshot:
    params: object
    threshold: float
    dev_f1: float
    batch_index: int
    batches_trained: int = 0
    history: list = field(default_factory=list)

    def log_tsv(self):
        lines = ["batch\tdev_loss\tdev_f1\tthreshold\tpatience"]
        lines += [r.tsv() for r in self.history]
        return "\n".join(lines) + "\n"


def train_fold(train_x, train_y, dev_x, dev_y, params, config, log_stream=None):
    """Train ``params`` in place; return the best dev-F1 :class:`Snapshot`.

    Every ``eval_every`` batches the dev set is scored and the F1-optimal
    threshold chosen. Training stops after ``patience`` evaluations without a
    strict F1 improvement, or when the epochs run out.
    """
    train_y = np.asarray(train_y)
    dev_y = np.asarray(dev_y)
    if len(train_x) == 0 or len(dev_x) == 0:
        raise ValueError("train and dev sets must be non-empty")
    if dev_y.sum() < 1:
        raise ValueError("dev set has no positive example")
    rng = np.random.default_rng(config.seed)
    state = AdamState(config.lr, config.beta1, config.beta2, config.eps)
    tensors = params.tensors()
    best = None
    stale = 0
    batches = 0
    history = []

    def evaluate():
        nonlocal best, stale
        scores = predict(dev_x, params)
        tau, f1 = select_threshold(scores, dev_y)
        if best is None or f1 > best.dev_f1:
            best = Snapshot(params.copy(), tau, f1, batches)
            stale = 0
        else:
            stale += 1
        rec = EvalRecord(batches, cross_entropy(scores, dev_y), f1, tau, stale)
        history.append(rec)
        if log_stream is not None:
            log_stream.write(rec.tsv() + "\n")
        log.debug("eval %s", rec.tsv())
        return stale >= config.patience

    stop = False
    for _ in range(config.epochs):
        order = rng.permutation(len(train_x))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            yhat, cache = model_forward(train_x[idx], params, mode="train",
                                        rng=rng, p=config.dropout)
            grads = model_backward(cache, loss_grad_logit(yhat, train_y[idx]), params)
            adam_step(tensors, grads, state, batch=batches)
            max_norm_clip(params.conv_banks, config.max_norm)
            batches += 1
            if batches % config.eval_every == 0 and evaluate():
                stop = True
                break
        if stop:
            break
    if not history:
        evaluate()
    best.batches_trained = batches
    best.history = history
    return best
