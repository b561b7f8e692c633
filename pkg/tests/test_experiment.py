import io
import statistics
import struct

import numpy as np
import pytest

from adrcnn import experiment as ex
from adrcnn.corpus import load_corpus
from adrcnn.errors import ExperimentError, ShapeError
from adrcnn.metrics import METRIC_NAMES
from adrcnn.textprep import sentence_tokens

# small enough that a full 10-fold run takes a few seconds
TINY = dict(embedding_format="random", embedding_dim=32, filters=32, lr=0.01, batch_size=10,
            dev_fraction=0.2)


def fold_result(i, **metrics):
    full = {m: 0.5 for m in METRIC_NAMES}
    full.update(metrics)
    return ex.FoldResult(i, full, 0.0, 0.5, 0, 0, 0.0, 0, 0, 0, 0, 0)


def test_aggregate_single_fold():
    rep = ex.aggregate([fold_result(0, f1=0.42)])
    assert rep.mean["f1"] == 0.42
    assert all(v == 0.0 for v in rep.std.values())


def test_aggregate_two_folds():
    rep = ex.aggregate([fold_result(0, f1=0.8), fold_result(1, f1=0.6)])
    assert rep.mean["f1"] == pytest.approx(0.7, abs=1e-15)


def test_aggregate_random_reports_vs_fmean():
    rng = np.random.default_rng(0)
    folds = [fold_result(i, **{m: float(rng.random()) for m in METRIC_NAMES})
             for i in range(10)]
    rep = ex.aggregate(folds)
    for m in METRIC_NAMES:
        values = [f.metrics[m] for f in folds]
        assert abs(rep.mean[m] - statistics.fmean(values)) <= 1e-12
        assert abs(rep.std[m] - statistics.pstdev(values)) <= 1e-12
        assert min(values) <= rep.mean[m] <= max(values)


def test_aggregate_empty():
    with pytest.raises(ValueError):
        ex.aggregate([])


def _report(**means):
    return ex.AggregateReport({m: means.get(m, 0.0) for m in METRIC_NAMES}, {}, [])


def test_render_table_two_columns_row_order():
    a = _report(accuracy=0.9, precision=0.784, recall=0.8, f1=0.79, specificity=0.93,
                auroc=0.954)
    b = _report(accuracy=0.91, precision=0.8, recall=0.797, f1=0.798, specificity=0.94,
                auroc=0.96)
    text = ex.render_table([a, b], ["Glove 840B", "Pyysalo"])
    rows = text.splitlines()
    assert len(rows) == 2 + 6
    assert [r.split("|")[0].strip() for r in rows[2:]] == [
        "Accuracy", "Precision", "Recall", "F1-score", "Specificity", "AUROC"]
    assert all(len(r.split("|")) == 3 for r in rows[2:])
    assert "0.784" in rows[3]


def test_render_table_single_column_and_round_trip():
    rng = np.random.default_rng(1)
    rep = _report(**{m: float(rng.random()) for m in METRIC_NAMES})
    text = ex.render_table([rep], ["run"])
    assert len(text.splitlines()) == 8
    back = ex.parse_table(text)["run"]
    for m in METRIC_NAMES:
        assert back[m] == round(rep.mean[m], 3)


def test_render_table_label_mismatch():
    with pytest.raises(ValueError):
        ex.render_table([_report()], ["a", "b"])


def test_config_rejects_unknown_keys():
    with pytest.raises(ValueError, match="learning_rate"):
        ex.ExperimentConfig.from_dict({"learning_rate": 0.1})
    with pytest.raises(ValueError):
        ex.ExperimentConfig(architecture="resnet")


def test_fold_seeds_distinct_and_stable():
    seeds = [tuple(ex.fold_seeds(42, f)) for f in range(10)]
    assert len(set(seeds)) == 10
    assert seeds == [tuple(ex.fold_seeds(42, f)) for f in range(10)]


def test_synthetic_200_reaches_f1(synthetic_200):
    pos, neg = synthetic_200
    rep = ex.run_experiment(ex.ExperimentConfig(pos=pos, neg=neg, **TINY))
    assert rep.mean["f1"] >= 0.95
    assert len(rep.folds) == 10
    for fr in rep.folds:
        assert fr["n_train"] + fr["n_dev"] + fr["n_test"] == 200
        assert np.isfinite(fr["pad_drift"]) and fr["pad_drift"] >= 0.0


def test_run_experiment_deterministic_and_parallel(synthetic_200):
    pos, neg = synthetic_200
    cfg = ex.ExperimentConfig(pos=pos, neg=neg, k=3, epochs=2, **TINY)
    first = ex.run_experiment(cfg).to_json()
    assert ex.run_experiment(cfg).to_json() == first
    assert ex.run_experiment(cfg, jobs=2).to_json() == first


def test_no_dedup_uses_duplicated_corpus(synthetic_200):
    pos, neg = synthetic_200
    raw, stats = load_corpus(pos, neg, dedup=False)
    cfg = ex.ExperimentConfig(pos=pos, neg=neg, k=3, epochs=1, deduplicate=False, **TINY)
    rep = ex.run_experiment(cfg)
    total = sum(fr["n_train"] + fr["n_dev"] + fr["n_test"] for fr in rep.folds) / 3
    assert total == len(raw) == stats.raw_positive_lines + stats.negative
    assert len(raw) > 200


def test_fold_outputs_written(tmp_path, synthetic_200):
    pos, neg = synthetic_200
    cfg = ex.ExperimentConfig(pos=pos, neg=neg, k=2, epochs=1, **TINY)
    rep = ex.run_experiment(cfg, fold_dir=str(tmp_path / "folds"), save_checkpoints=True)
    ex.write_outputs(rep, str(tmp_path), "tiny")
    for name in ("report.json", "table.txt", "folds.csv", "folds/fold0.log.tsv",
                 "folds/fold1.ckpt"):
        assert (tmp_path / name).exists(), name
    assert (tmp_path / "folds/fold0.log.tsv").read_text().startswith("batch\tdev_loss")
    assert len((tmp_path / "folds.csv").read_text().splitlines()) == 3


def test_errors_carry_fold_and_stage(monkeypatch, synthetic_200):
    pos, neg = synthetic_200

    def boom(*args, **kwargs):
        raise ShapeError("conv0: broken")
    monkeypatch.setattr(ex, "train_fold", boom)
    with pytest.raises(ExperimentError) as err:
        ex.run_experiment(ex.ExperimentConfig(pos=pos, neg=neg, k=2, **TINY))
    assert err.value.fold == 0 and err.value.stage == "train"
    assert "conv0" in str(err.value)


def test_missing_inputs():
    with pytest.raises(FileNotFoundError):
        ex.ExperimentConfig(pos="/nope/a", neg="/nope/b", **TINY).check_inputs()
    with pytest.raises(FileNotFoundError):
        ex.ExperimentConfig(pos=__file__, neg=__file__).check_inputs()  # glove path unset


def _lexicon_lines(pos, neg, dim, seed=0):
    records, _ = load_corpus(pos, neg)
    tokens = sorted({t for r in records for t in sentence_tokens(r.text)})
    rng = np.random.default_rng(seed)
    return [(t, rng.uniform(-0.25, 0.25, size=dim)) for t in tokens]


@pytest.mark.parametrize("fmt", ["glove-text", "word2vec-binary"])
def test_pretrained_formats(tmp_path, synthetic_200, fmt):
    pos, neg = synthetic_200
    entries = _lexicon_lines(pos, neg, 16)
    path = tmp_path / "emb"
    if fmt == "glove-text":
        buf = io.StringIO()
        for t, v in entries:
            buf.write(t + " " + " ".join(repr(float(x)) for x in v) + "\n")
        path.write_text(buf.getvalue())
    else:
        raw = f"{len(entries)} 16\n".encode()
        for t, v in entries:
            raw += t.encode() + b" " + struct.pack("<16f", *v) + b"\n"
        path.write_bytes(raw)
    cfg = ex.ExperimentConfig(pos=pos, neg=neg, k=2, epochs=2, embeddings=str(path),
                              **{**TINY, "embedding_format": fmt})
    rep = ex.run_experiment(cfg)
    assert all(0.0 <= rep.mean[m] <= 1.0 for m in METRIC_NAMES)
    assert rep.config["embedding_format"] == fmt
