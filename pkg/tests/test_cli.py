import json
import subprocess
import sys

import numpy as np
import pytest

import mcsim.datagen as dg
from conftest import tiny_real_config, tiny_sim_config
from mcsim.cli import main
from mcsim.danp import save_model


def run_cli(args):
    return main(list(args))


class TestSimulateVerb:
    def test_writes_csv(self, tmp_path, capsys):
        out = tmp_path / "wave.csv"
        assert run_cli(["simulate", "--out", str(out), "--duration", "12"]) == 0
        header = out.read_text().splitlines()[0]
        assert header == "t,aop,lvp,qp"

    def test_validation_failure_machine_parseable(self, tmp_path, capsys):
        out = tmp_path / "wave.csv"
        code = run_cli(["simulate", "--out", str(out), "--hr", "500"])
        captured = capsys.readouterr()
        assert code != 0
        line = [l for l in captured.err.splitlines() if l.startswith("MCSIM-ERROR ")][0]
        payload = json.loads(line.split(" ", 1)[1])
        assert "error" in payload

    def test_unknown_verb_usage_and_nonzero_exit(self):
        proc = subprocess.run(
            [sys.executable, "-m", "mcsim.cli", "frobnicate"],
            capture_output=True, text=True)
        assert proc.returncode != 0
        assert "usage:" in proc.stderr


@pytest.fixture(scope="module")
def cli_config(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    cfg = {
        "sim": {k: v for k, v in tiny_sim_config(n_per_cell=3).__dict__.items()
                if k != "perturb"},
        "real": {k: v for k, v in tiny_real_config(n_per_cell=3).__dict__.items()
                 if k != "perturb"},
    }
    path = root / "gen.json"
    path.write_text(json.dumps(cfg))
    return path


class TestGenDataVerb:
    def test_deterministic_manifests(self, tmp_path, cli_config):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(["gen-data", "--out", str(out1), "--seed", "7",
                        "--config", str(cli_config)]) == 0
        assert run_cli(["gen-data", "--out", str(out2), "--seed", "7",
                        "--config", str(cli_config)]) == 0
        for name in ("sim_train", "real_train", "real_test"):
            m1 = json.loads((out1 / name / "manifest.json").read_text())
            m2 = json.loads((out2 / name / "manifest.json").read_text())
            assert m1["records_sha256"] == m2["records_sha256"]


class TestPredictVerb:
    def test_json_on_stdout(self, tmp_path, capsys, tiny_model, tiny_sim_dataset):
        model_dir = tmp_path / "model"
        save_model(model_dir, tiny_model.model)
        bank_dir = tmp_path / "bank"
        samples, manifest = tiny_sim_dataset
        dg.write_dataset(bank_dir, samples, manifest)
        req = {
            "context": [[float(v) for v in row] for row in samples[0].x.values],
            "future_pl": [int(p) for p in samples[0].pl],
            "n_samples": 5,
        }
        req_path = tmp_path / "req.json"
        req_path.write_text(json.dumps(req))
        code = run_cli(["predict", "--model", str(model_dir), "--bank",
                        str(bank_dir), "--request", str(req_path)])
        out = capsys.readouterr().out
        assert code == 0
        payload = json.loads(out)
        assert len(payload["mean"]) == 90
        assert payload["trend"] in ("inc", "dec", "stat")
        assert np.all(np.asarray(payload["q10"]) <= np.asarray(payload["q90"]))

    def test_invalid_request_rejected(self, tmp_path, capsys, tiny_model,
                                      tiny_sim_dataset):
        model_dir = tmp_path / "model"
        save_model(model_dir, tiny_model.model)
        bank_dir = tmp_path / "bank"
        dg.write_dataset(bank_dir, *tiny_sim_dataset)
        req_path = tmp_path / "req.json"
        req_path.write_text(json.dumps({
            "context": [[0.0] * 7] * 90,
            "future_pl": [5] * 89,   # one short
        }))
        code = run_cli(["predict", "--model", str(model_dir), "--bank",
                        str(bank_dir), "--request", str(req_path)])
        captured = capsys.readouterr()
        assert code != 0
        assert "MCSIM-ERROR" in captured.err


class TestEvalVerb:
    def test_two_method_csv(self, tmp_path, capsys, tiny_sim_dataset,
                            tiny_real_dataset):
        data_dir = tmp_path / "data"
        dg.write_dataset(data_dir / "sim_train", *tiny_sim_dataset)
        dg.write_dataset(data_dir / "real_train", *tiny_real_dataset)
        dg.write_dataset(data_dir / "real_test",
                         tiny_real_dataset[0][:6],
                         _manifest_for(tiny_real_dataset[0][:6]))
        overrides = {"methods": {
            "danp": dict(d_r=10, d_z=4, d_h=10, d_emb=8, epochs=1, batch_size=16),
            "np_no_sim": dict(d_r=10, d_z=4, d_h=10, d_emb=8, epochs=1,
                              batch_size=16),
        }}
        cfg_path = tmp_path / "eval.json"
        cfg_path.write_text(json.dumps(overrides))
        out_dir = tmp_path / "out"
        code = run_cli(["eval", "--data", str(data_dir), "--out", str(out_dir),
                        "--methods", "danp,np_no_sim", "--seeds", "0",
                        "--config", str(cfg_path)])
        assert code == 0
        rows = (out_dir / "metrics.csv").read_text().strip().splitlines()
        assert len(rows) == 3  # header + 2 methods
        assert (out_dir / "histogram.csv").exists()


def _manifest_for(samples):
    import hashlib

    from mcsim.datagen.dataset import _encode_records, compute_channel_stats

    counts_d = {}
    counts_t = {}
    for s in samples:
        counts_d[str(s.domain)] = counts_d.get(str(s.domain), 0) + 1
        counts_t[s.trend.value] = counts_t.get(s.trend.value, 0) + 1
    return dg.DatasetManifest(
        version=1, seed=0, generator="slice", n_samples=len(samples),
        counts_by_domain=counts_d, counts_by_trend=counts_t,
        channel_stats=compute_channel_stats(samples),
        records_sha256=hashlib.sha256(_encode_records(samples)).hexdigest(),
    )
