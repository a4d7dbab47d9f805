import csv
import json
import math

import pytest

from geoopinion import outputs
from geoopinion.cli import main
from geoopinion.config import PRESETS, ConfigError, load_config


def test_preset_with_override():
    cfg = load_config(preset="paper-core", overrides={"p_L": 1.0})
    assert cfg.p_L == 1.0
    assert (cfg.n, cfg.delta, cfg.alpha, cfg.b, cfg.epsilon, cfg.gamma) == (1000, 8.0, 2.0, 1.5, 1.5, 1.5)


def test_vaccine_preset():
    cfg = load_config(preset="paper-vaccine")
    assert cfg.beliefs.probs == [0.69, 0.31]
    assert (cfg.p_L, cfg.p_R) == (0.35, 0.75)
    assert PRESETS["paper-core"]["p_L"] == 0.0  # preset dicts not mutated


def test_negative_gamma_names_key():
    with pytest.raises(ConfigError) as exc:
        load_config(preset="paper-core", overrides={"gamma": -1})
    assert exc.value.key == "gamma"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"gama": 1.5}))
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.key == "gama"
    path.write_text(json.dumps({"beliefs": {"sd": 0.5}}))
    with pytest.raises(ConfigError) as exc:
        load_config(path)
    assert exc.value.key == "beliefs.sd"


def test_bad_json(tmp_path):
    path = tmp_path / "c.json"
    path.write_text("{nope")
    with pytest.raises(ConfigError):
        load_config(path)


def test_effective_lambda_fraction_of_diameter():
    cfg = load_config(preset="paper-core", overrides={"lambda_mode": "diameter_fraction", "lambda_value": 0.1})
    assert cfg.effective_lambda() == pytest.approx(0.1, rel=1e-12)
    cfg = load_config(
        preset="paper-core",
        overrides={"domain": {"triangles": [[0, 0, 1, 0, 0, 1]]}, "lambda_value": 0.1},
    )
    assert cfg.effective_lambda() == pytest.approx(math.sqrt(2) / 10)
    cfg = load_config(overrides={"lambda_mode": "absolute", "lambda_value": 0.37})
    assert cfg.model_params().lam == 0.37


def test_file_preset_and_domain(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(
        json.dumps({"preset": "paper-vaccine", "n": None, "domain": {"triangles": [[0, 0, 1, 0, 0, 1]], "rates": [400]}})
    )
    cfg = load_config(path)
    assert cfg.p_R == 0.75 and cfg.n is None
    assert cfg.model_params().domain.rates == (400.0,)


def test_float_formatting_round_trips():
    for x in (0.1, 1 / 3, 2.519842099789746, 1e-300, -0.0):
        assert float(outputs.fmt(x)) == x


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_outputs_and_manifest_round_trip(tmp_path):
    out1 = tmp_path / "a"
    argv = ["simulate", "--preset", "paper-core", "--n", "150", "--seed", "3", "--out", str(out1), "--emit-edges", "0"]
    assert main(argv) == 0
    manifest = json.loads((out1 / "manifest.json").read_text())
    assert manifest["status"] == "converged"
    rows = read_csv(out1 / "beliefs.csv")
    assert len(rows) == 150 * (manifest["stop_step"] + 1)
    edges = outputs.read_edges(out1 / "edges_step0.csv", 150)
    steps = read_csv(out1 / "steps.csv")
    assert float(steps[0]["mean_in_degree"]) == edges.edge_count / 150
    for name, digest in manifest["artifacts"].items():
        assert outputs.sha256(out1 / name) == digest

    out2 = tmp_path / "b"
    assert main(["simulate", "--config", str(out1 / "manifest.json"), "--out", str(out2)]) == 0
    assert (out1 / "beliefs.csv").read_bytes() == (out2 / "beliefs.csv").read_bytes()
    assert (out1 / "steps.csv").read_bytes() == (out2 / "steps.csv").read_bytes()


def test_simulate_max_steps_status(tmp_path):
    assert main(["simulate", "--preset", "paper-core", "--n", "100", "--max-steps", "1", "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "max_steps_reached"


def test_config_error_exit_code(tmp_path, capsys):
    assert main(["simulate", "--preset", "paper-core", "--set", "gamma=-1", "--out", str(tmp_path)]) == 1
    assert "gamma" in capsys.readouterr().err
    assert main(["simulate", "--preset", "nope", "--out", str(tmp_path)]) == 1


def test_io_error_exit_code(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["simulate", "--preset", "paper-core", "--n", "20", "--out", str(blocker / "sub")]) == 2


def test_ensemble_rows_and_ci_json(tmp_path):
    argv = ["ensemble", "--preset", "paper-core", "--n", "80", "--seeds", "3", "--grid", "reach=0,0.5,1", "--out", str(tmp_path)]
    assert main(argv) == 0
    rows = read_csv(tmp_path / "ensemble.csv")
    assert len(rows) == 9
    assert list(rows[0])[:3] == ["cell_id", "reach", "seed"]
    report = json.loads((tmp_path / "transitions_ci.json").read_text())
    assert len(report["cells"]) == 3
    assert len(report["cells"][0]["transitions"]) == 4


def test_ensemble_empty_grid_single_cell(tmp_path):
    assert main(["ensemble", "--preset", "paper-vaccine", "--n", "80", "--seeds", "2", "--out", str(tmp_path)]) == 0
    rows = read_csv(tmp_path / "ensemble.csv")
    assert {r["cell_id"] for r in rows} == {"0"}


def test_gridsearch_single_cell(tmp_path):
    argv = ["gridsearch", "--preset", "paper-core", "--n", "100", "--alpha", "2", "--delta", "8", "--seeds", "1", "--out", str(tmp_path)]
    assert main(argv) == 0
    rows = read_csv(tmp_path / "gridsearch.csv")
    assert len(rows) == 1
    assert list(rows[0]) == ["alpha", "delta", "gamma", "mean_in_degree", "mean_clustering"]


def test_gridsearch_default_and_appendix_axes(tmp_path):
    assert main(["gridsearch", "--preset", "paper-core", "--n", "30", "--seeds", "1", "--out", str(tmp_path / "d")]) == 0
    assert len(read_csv(tmp_path / "d" / "gridsearch.csv")) == 100
    argv = ["gridsearch", "--preset", "paper-core", "--n", "30", "--seeds", "1", "--alpha", "2", "--delta", "8",
            "--gamma", "1.1", "--gamma", "2.0", "--out", str(tmp_path / "g")]
    assert main(argv) == 0
    assert [r["gamma"] for r in read_csv(tmp_path / "g" / "gridsearch.csv")] == ["1.1", "2.0"]
