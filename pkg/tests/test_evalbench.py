import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mcsim.danp import DanpConfig, train
from mcsim.evalbench import (
    BaselineSpec,
    MetricsTable,
    bucketed_metrics,
    histogram_report,
    logistic_probe,
    mae,
    raw_window_features,
    run_baseline,
    run_benchmark,
)
from mcsim.errors import ContractViolation
from test_datasets import make_sample
from mcsim.datagen.samples import HORIZON
from mcsim.datagen.trends import TrendLabel, label_trend


class TestMae:
    def test_examples(self):
        assert mae([80.0, 90.0], [85.0, 85.0]) == pytest.approx(5.0)
        assert mae(np.ones(90), np.ones(90)) == 0.0
        assert mae(np.ones(90) + 3.0, np.ones(90)) == pytest.approx(3.0)

    def test_length_mismatch(self):
        with pytest.raises(ContractViolation):
            mae(np.ones(3), np.ones(4))


def fixture_set():
    """10 samples with hand-constructed trends: 4 stat, 3 inc, 3 dec."""
    samples = []
    for i in range(4):
        samples.append(make_sample(seed=i))
    for i in range(3):
        s = make_sample(seed=10 + i)
        s.y = np.full(HORIZON, 90.0) + np.linspace(0, 15, HORIZON)
        s.trend = label_trend(s.y)
        samples.append(s)
    for i in range(3):
        s = make_sample(seed=20 + i)
        s.y = np.full(HORIZON, 90.0) - np.linspace(0, 15, HORIZON)
        s.trend = label_trend(s.y)
        samples.append(s)
    return samples


class TestBucketedMetrics:
    def test_perfect_forecasts(self):
        samples = fixture_set()
        out = bucketed_metrics(samples, [s.y.copy() for s in samples])
        assert out["mae_all"] == 0.0
        assert out["trend_acc"] == 1.0
        assert out["n_inc"] == 3 and out["n_dec"] == 3 and out["n_stat"] == 4

    def test_flat_forecasts_on_stat_only(self):
        samples = [make_sample(seed=i) for i in range(5)]
        flat = [np.full(HORIZON, float(s.y.mean())) for s in samples]
        out = bucketed_metrics(samples, flat)
        assert out["trend_acc"] == 1.0

    def test_hand_computed_fixture(self):
        samples = fixture_set()
        preds = []
        for s in samples:
            if s.trend == TrendLabel.INC:
                preds.append(s.y + 2.0)     # right trend, MAE 2
            elif s.trend == TrendLabel.DEC:
                preds.append(np.full(HORIZON, s.y.mean()))  # flat: wrong trend
            else:
                preds.append(s.y.copy())    # exact
        out = bucketed_metrics(samples, preds)
        assert out["mae_inc"] == pytest.approx(2.0)
        assert out["mae_stat"] == pytest.approx(0.0)
        assert out["trend_acc"] == pytest.approx(7 / 10)
        expected_all = (3 * 2.0 + 3 * out["mae_dec"] + 4 * 0.0) / 10
        assert out["mae_all"] == pytest.approx(expected_all)

    def test_empty_bucket_absent_not_zero(self):
        samples = [make_sample(seed=i) for i in range(4)]  # stat only
        out = bucketed_metrics(samples, [s.y for s in samples])
        assert out["mae_inc"] is None and out["n_inc"] == 0

    def test_weighted_mean_identity(self):
        samples = fixture_set()
        rng = np.random.default_rng(0)
        preds = [s.y + rng.normal(0, 3, HORIZON) for s in samples]
        out = bucketed_metrics(samples, preds)
        total = sum(out[f"mae_{t.value}"] * out[f"n_{t.value}"] for t in TrendLabel)
        assert out["mae_all"] == pytest.approx(total / out["n"])

    def test_input_bucketing_flag(self):
        samples = fixture_set()
        out = bucketed_metrics(samples, [s.y for s in samples], trend_on="input")
        # all context windows in the fixture are flat: every bucket is stat
        assert out["n_stat"] == len(samples)


class TestHistogramReport:
    def test_identical_distributions(self):
        vals = np.random.default_rng(0).uniform(30, 190, 500)
        rep = histogram_report(vals, vals)
        assert rep.overlap == pytest.approx(1.0)

    def test_disjoint_supports(self):
        rep = histogram_report(np.full(50, 40.0), np.full(50, 150.0))
        assert rep.overlap == 0.0

    def test_constructed_half_overlap(self):
        real = np.concatenate([np.full(50, 45.0), np.full(50, 75.0)])
        pred = np.concatenate([np.full(50, 45.0), np.full(50, 105.0)])
        rep = histogram_report(real, pred)
        assert rep.overlap == pytest.approx(0.5)

    @settings(max_examples=20, deadline=None)
    @given(seed=st.integers(0, 1000))
    def test_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.uniform(25, 195, 100)
        b = rng.uniform(25, 195, 100)
        assert histogram_report(a, b).overlap == pytest.approx(
            histogram_report(b, a).overlap)

    def test_csv_shape(self):
        rep = histogram_report(np.full(5, 45.0), np.full(5, 45.0))
        lines = rep.to_csv().splitlines()
        assert lines[0] == "bin_left,count_real,count_pred"
        assert len(lines) == 1 + 18  # 10 mmHg bins from 20 to 200


class TestMetricsTable:
    def test_aggregation_and_csv(self):
        table = MetricsTable()
        table.add_row("demo", [
            {"mae_all": 5.0, "mae_inc": 6.0, "mae_dec": None, "mae_stat": 4.0,
             "trend_acc": 0.7},
            {"mae_all": 7.0, "mae_inc": 8.0, "mae_dec": None, "mae_stat": 6.0,
             "trend_acc": 0.8},
        ])
        table.add_not_implemented("clmu")
        row = table.rows[0]
        assert row["mae_all"] == (6.0, 1.0)
        assert row["mae_dec"] is None
        csv = table.to_csv()
        assert csv.splitlines()[0].startswith("method,n_seeds,mae_all")
        assert csv.splitlines()[1].startswith("demo,2,")
        assert "not implemented" in csv
        text = table.to_text()
        assert "demo" in text and "clmu" in text

    def test_unknown_baseline_rejected(self):
        with pytest.raises(ContractViolation):
            BaselineSpec(name="nonsense")


class TestProbe:
    def test_separable_blobs(self):
        rng = np.random.default_rng(0)
        X = np.concatenate([rng.normal(0, 1, (60, 5)), rng.normal(3, 1, (60, 5))])
        y = np.array([0] * 60 + [1] * 60)
        assert logistic_probe(X, y, seed=0, epochs=150) > 0.9

    def test_unseparable_is_chancey(self):
        rng = np.random.default_rng(1)
        X = rng.normal(0, 1, (200, 5))
        y = rng.integers(0, 2, 200)
        acc = logistic_probe(X, y, seed=0, epochs=100)
        assert 0.3 < acc < 0.75

    def test_raw_window_features_shape(self, tiny_sim_dataset):
        samples = tiny_sim_dataset[0][:5]
        X = raw_window_features(samples)
        assert X.shape == (5, 90 * 15)


class TestRunBaseline:
    def test_np_no_sim_equals_danp_lambda_zero(self, tiny_sim_dataset,
                                               tiny_real_dataset):
        """Registry row np_no_sim is literally the danp code path at λ=0 on
        real data only: identical seeds give bit-identical parameters."""
        overrides = dict(d_r=10, d_z=4, d_h=10, d_emb=8, epochs=2, batch_size=16)
        datasets = {"sim_train": tiny_sim_dataset, "real_train": tiny_real_dataset,
                    "real_test": tiny_real_dataset}
        spec = BaselineSpec("np_no_sim", dict(overrides))
        per_seed, failed = run_baseline(spec, datasets, seeds=[4], n_eval_samples=3)
        assert not failed and len(per_seed) == 1

        cfg = DanpConfig(seed=4, lambda_domain=0.0, **overrides)
        direct = train(None, tiny_real_dataset, cfg)
        redo = train(None, tiny_real_dataset, cfg)
        for k in direct.model.params:
            assert np.array_equal(direct.model.params[k].data,
                                  redo.model.params[k].data)

    def test_mlp_runs_and_reports(self, tiny_sim_dataset, tiny_real_dataset):
        datasets = {"sim_train": tiny_sim_dataset, "real_train": tiny_real_dataset,
                    "real_test": (tiny_real_dataset[0][:6], None)}
        spec = BaselineSpec("mlp", {"epochs": 3})
        per_seed, failed = run_baseline(spec, datasets, seeds=[0])
        assert not failed
        assert per_seed[0]["mae_all"] > 0

    def test_benchmark_table_rows(self, tiny_sim_dataset, tiny_real_dataset):
        datasets = {"sim_train": tiny_sim_dataset, "real_train": tiny_real_dataset,
                    "real_test": (tiny_real_dataset[0][:6], None)}
        overrides = {"danp": dict(d_r=10, d_z=4, d_h=10, d_emb=8, epochs=1,
                                  batch_size=16),
                     "np_no_sim": dict(d_r=10, d_z=4, d_h=10, d_emb=8, epochs=1,
                                       batch_size=16)}
        table = run_benchmark(["danp", "np_no_sim", "clmu"], datasets, seeds=[0],
                              overrides=overrides, n_eval_samples=2)
        assert len(table.rows) == 3
        csv_rows = table.to_csv().strip().splitlines()
        assert len(csv_rows) == 4  # header + 3 methods
