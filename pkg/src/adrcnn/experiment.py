"""k-fold cross-validation experiments and report aggregation."""

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import corpus as corpus_mod
from .embeddings import assemble_matrix, load_lexicon, random_lexicon
from .errors import AdrCnnError, ExperimentError
from .metrics import METRIC_LABELS, METRIC_NAMES, evaluate
from .neuralnet import ARCHITECTURES, HUYNH, init_params, predict, save_checkpoint
from .textprep import build_vocabulary, choose_max_len, encode_batch, sentence_tokens
from .train import TrainConfig, train_fold

log = logging.getLogger(__name__)

EMBEDDING_FORMATS = ("glove-text", "word2vec-binary", "random")


@dataclass
class ExperimentConfig:
    architecture: str = HUYNH
    pos: str = None
    neg: str = None
    corpus: str = None
    embeddings: str = None
    embedding_format: str = "glove-text"
    embedding_dim: int = 300
    deduplicate: bool = True
    k: int = 10
    dev_fraction: float = 0.1
    stratify: bool = True
    filters: int = None
    window: int = 5
    max_len_cap: int = 128
    lowercase: bool = False
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
    seed: int = 42

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise ValueError(f"architecture must be one of {ARCHITECTURES}")
        if self.embedding_format not in EMBEDDING_FORMATS:
            raise ValueError(f"embedding_format must be one of {EMBEDDING_FORMATS}")
        if self.k < 2:
            raise ValueError("k must be at least 2")

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)

    def to_dict(self):
        return asdict(self)

    def train_config(self, seed):
        return TrainConfig(self.epochs, self.batch_size, self.max_norm, self.eval_every,
                           self.patience, self.lr, self.beta1, self.beta2, self.eps,
                           self.dropout, seed)

    def check_inputs(self):
        paths = [self.corpus] if self.corpus else [self.pos, self.neg]
        if self.embedding_format != "random":
            paths.append(self.embeddings)
        for p in paths:
            if not p:
                raise FileNotFoundError("corpus (or pos/neg) and embeddings paths are required")
            if not os.path.exists(p):
                raise FileNotFoundError(p)


@dataclass
class FoldResult:
    fold_index: int
    metrics: dict
    dev_f1: float
    threshold: float
    best_batch: int
    batches_trained: int
    pad_drift: float
    n_train: int
    n_dev: int
    n_test: int
    max_len: int
    vocab_size: int


@dataclass
class AggregateReport:
    mean: dict
    std: dict
    folds: list
    config: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def load_records(config):
    if config.corpus:
        records = corpus_mod.read_records(config.corpus)
        if config.deduplicate:
            records, _ = corpus_mod.deduplicate(records)
        return records
    records, _ = corpus_mod.load_corpus(config.pos, config.neg, dedup=config.deduplicate)
    return records


def fold_seeds(master_seed, fold_index):
    """Independent (init, train, embedding) seeds for one fold."""
    ss = np.random.SeedSequence([master_seed, fold_index])
    return [int(s) for s in ss.generate_state(3)]


@dataclass
class FoldTask:
    split: object
    labels: np.ndarray
    token_lists: list
    lexicon: object
    config: ExperimentConfig
    out_dir: str = None
    save_checkpoint: bool = False


def run_fold(task):
    """Train and test one fold. Returns ``(FoldResult, Snapshot)``."""
    cfg, split = task.config, task.split
    stage = "vocabulary"
    try:
        init_seed, train_seed, emb_seed = fold_seeds(cfg.seed, split.fold_index)
        train_tokens = [task.token_lists[i] for i in split.train_ids]
        lexicon = task.lexicon
        if lexicon is None:
            lexicon = random_lexicon((t for toks in train_tokens for t in toks),
                                     cfg.embedding_dim, np.random.default_rng(emb_seed))
        vocab = build_vocabulary(train_tokens, lexicon)
        stage = "embeddings"
        emb = assemble_matrix(vocab, lexicon)
        floor = cfg.window if cfg.architecture == HUYNH else 1
        max_len = choose_max_len(train_tokens, cfg.max_len_cap, floor)

        def arrays(ids):
            x = encode_batch([task.token_lists[i] for i in ids], vocab, max_len)
            return x, task.labels[list(ids)]

        train_x, train_y = arrays(split.train_ids)
        dev_x, dev_y = arrays(split.dev_ids)
        test_x, test_y = arrays(split.test_ids)
        stage = "train"
        params = init_params(cfg.architecture, emb, np.random.default_rng(init_seed),
                             filters=cfg.filters, window=cfg.window, seed=init_seed)
        snap = train_fold(train_x, train_y, dev_x, dev_y, params, cfg.train_config(train_seed))
        stage = "test"
        scores = predict(test_x, snap.params)
        report = evaluate(scores, test_y, snap.threshold)
        result = FoldResult(
            fold_index=split.fold_index,
            metrics=report.to_dict(),
            dev_f1=snap.dev_f1,
            threshold=snap.threshold,
            best_batch=snap.batch_index,
            batches_trained=snap.batches_trained,
            pad_drift=float(np.linalg.norm(snap.params.embedding[0])),
            n_train=len(split.train_ids),
            n_dev=len(split.dev_ids),
            n_test=len(split.test_ids),
            max_len=max_len,
            vocab_size=len(vocab),
        )
        if task.out_dir:
            stage = "output"
            base = os.path.join(task.out_dir, f"fold{split.fold_index}")
            with open(base + ".log.tsv", "w", encoding="utf-8") as fh:
                fh.write(snap.log_tsv())
        if task.out_dir and task.save_checkpoint:
            save_checkpoint(base + ".ckpt", snap.params, extra={
                "vocabulary": list(vocab.tokens),
                "max_len": max_len,
                "lowercase": cfg.lowercase,
                "threshold": snap.threshold,
                "fold_index": split.fold_index,
            })
        return result, snap
    except AdrCnnError as exc:
        raise ExperimentError(str(exc), split.fold_index, stage) from exc
    except (ValueError, FloatingPointError) as exc:
        raise ExperimentError(str(exc), split.fold_index, stage) from exc


def _run_fold_result(task):
    return run_fold(task)[0]


def prepare_tasks(config, out_dir=None, save_checkpoints=False):
    config.check_inputs()
    records = load_records(config)
    token_lists = [sentence_tokens(r.text, config.lowercase) for r in records]
    labels = np.array([r.label for r in records], dtype=np.int64)
    lexicon = None
    if config.embedding_format != "random":
        keep = {t for toks in token_lists for t in toks}
        lexicon = load_lexicon(config.embeddings, config.embedding_format, keep=keep)
    splits = corpus_mod.make_folds(records, config.k, config.dev_fraction, config.seed,
                                   config.stratify)
    return [FoldTask(s, labels, token_lists, lexicon, config, out_dir, save_checkpoints)
            for s in splits]


def run_experiment(config, jobs=1, fold_dir=None, save_checkpoints=False):
    """Cross-validate ``config``. Per-fold training logs (and checkpoints if
    asked) go to ``fold_dir``."""
    tasks = prepare_tasks(config, fold_dir, save_checkpoints)
    if fold_dir:
        os.makedirs(fold_dir, exist_ok=True)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_fold_result, tasks))
    else:
        results = [_run_fold_result(t) for t in tasks]
    return aggregate(results, config.to_dict())


def aggregate(fold_results, config=None):
    """Unweighted mean and (population) standard deviation over folds."""
    if not fold_results:
        raise ValueError("no fold results to aggregate")
    table = np.array([[fr.metrics[m] for m in METRIC_NAMES] for fr in fold_results])
    mean = dict(zip(METRIC_NAMES, (float(x) for x in table.mean(axis=0))))
    std = dict(zip(METRIC_NAMES, (float(x) for x in table.std(axis=0))))
    return AggregateReport(mean, std, [asdict(fr) for fr in fold_results], config or {})


def render_table(reports, labels):
    """Metrics as rows (accuracy first, AUROC last), one column per configuration, 3 d.p."""
    if len(reports) != len(labels):
        raise ValueError("one label per report")
    width = max(len(s) for s in METRIC_LABELS + ("Metric",))
    cols = [max(len(lbl), 5) for lbl in labels]
    lines = [" | ".join(["Metric".ljust(width)] + [lbl.rjust(w) for lbl, w in zip(labels, cols)])]
    lines.append("-+-".join(["-" * width] + ["-" * w for w in cols]))
    for name, label in zip(METRIC_NAMES, METRIC_LABELS):
        cells = [f"{r.mean[name]:.3f}".rjust(w) for r, w in zip(reports, cols)]
        lines.append(" | ".join([label.ljust(width)] + cells))
    return "\n".join(lines) + "\n"


def parse_table(text):
    """Inverse of :func:`render_table`: ``{column label: {metric: value}}``."""
    rows = [ln for ln in text.splitlines() if ln.strip()]
    header = [c.strip() for c in rows[0].split("|")]
    labels = header[1:]
    out = {lbl: {} for lbl in labels}
    by_label = dict(zip(METRIC_LABELS, METRIC_NAMES))
    for row in rows[2:]:
        cells = [c.strip() for c in row.split("|")]
        name = by_label[cells[0]]
        for lbl, cell in zip(labels, cells[1:]):
            out[lbl][name] = float(cell)
    return out


def write_outputs(report, out_dir, label="run"):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out_dir, "table.txt"), "w", encoding="utf-8") as fh:
        fh.write(render_table([report], [label]))
    with open(os.path.join(out_dir, "folds.csv"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", *METRIC_NAMES, "dev_f1", "threshold", "batches_trained"])
        for fr in report.folds:
            writer.writerow([fr["fold_index"], *(f"{fr['metrics'][m]:.6f}" for m in METRIC_NAMES),
                             f"{fr['dev_f1']:.6f}", f"{fr['threshold']:.6f}",
                             fr["batches_trained"]])
