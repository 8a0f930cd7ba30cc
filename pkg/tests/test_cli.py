import csv
import json
import math
from pathlib import Path

import numpy as np
import pytest

from bhvar import checks, cli, fock, runs
from bhvar.config import ConfigError, parse_config

MINIMAL = """
model: {M: 3, U: 1.0, T: 1.0}
scheme: dnls
initial:
  z: [1.0, [0.0, 0.5], 0.2]
"""


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.integrator.dt == 1e-3 and cfg.integrator.method == "rk4"
    assert cfg.params.M == 3


def test_json_document_accepted():
    doc = json.dumps({"model": {"M": 2, "U": 0}, "scheme": "dnls", "initial": {"z": [1, 0]}})
    assert parse_config(doc).scheme == "dnls"


def test_sum_without_N_names_key():
    text = MINIMAL.replace("scheme: dnls", "scheme: sum").replace("z:", "xi:")
    with pytest.raises(ConfigError, match=r"initial\.N") as info:
        parse_config(text)
    assert info.value.line == 4


def test_exact_over_cap_fails_before_run(monkeypatch):
    text = "model: {M: 8, U: 1.0}\nscheme: exact\ninitial: {N: 12, preset: {name: localized}}\n"
    with pytest.raises(fock.CapacityError, match="dimension"):
        parse_config(text)
    monkeypatch.setenv("BHVAR_DIM_CAP", "100000")
    assert parse_config(text).scheme == "exact"


def test_unknown_key_rejected_with_line():
    text = MINIMAL + "integrator: {dt: 0.01, stepz: 3}\n"
    with pytest.raises(ConfigError, match=r"integrator\.stepz.*line 6"):
        parse_config(text)


def test_bad_value_and_scheme_mismatch():
    with pytest.raises(ConfigError, match=r"integrator\.dt"):
        parse_config(MINIMAL + "integrator: {dt: -1}\n")
    with pytest.raises(ConfigError, match=r"initial\.f.*dnls"):
        parse_config(MINIMAL.replace("z: [1.0, [0.0, 0.5], 0.2]", "f: [[1], [1], [1]]"))
    with pytest.raises(ConfigError, match=r"initial\.z.*length"):
        parse_config(MINIMAL.replace("0.2]", "0.2, 0.1]"))
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("model: {M: 3\n")


def _run(tmp_path, text):
    cfg = parse_config(text + f"outputs: {{dir: '{tmp_path}'}}\n")
    return runs.run_evolution(cfg), tmp_path / "trajectory.csv"


def test_rabi_preset(tmp_path):
    text = """
model: {M: 2, U: 0.0, T: 1.0}
scheme: dnls
initial: {preset: {name: localized, site: 1}}
integrator: {t_end: 10.0, record_every: 50}
"""
    summary, path = _run(tmp_path, text)
    header, data = read_csv(path)
    assert header == ["time", "energy", "N_bar", "site_1", "site_2"]
    t = data[:, 0]
    assert np.max(np.abs(data[:, 3] - np.cos(t) ** 2)) <= 1e-8
    assert np.max(np.abs(data[:, 4] - np.sin(t) ** 2)) <= 1e-8
    assert summary["status"] == "ok"
    assert json.loads((tmp_path / "summary.json").read_text())["drift"]["N_bar"] <= 1e-8


@pytest.mark.parametrize("scheme,extra", [("dnls", ""), ("sum", "N: 4, "), ("gutzwiller", "n_max: 20, "), ("exact", "N: 3, ")])
def test_plane_wave_preset_constant_densities(tmp_path, scheme, extra):
    text = f"""
model: {{M: 3, U: 1.5, T: 1.0}}
scheme: {scheme}
initial: {{{extra}preset: {{name: plane_wave, k: 1}}}}
integrator: {{t_end: 2.0, record_every: 100}}
"""
    _, path = _run(tmp_path, text)
    header, data = read_csv(path)
    sites = data[:, [header.index(f"site_{j}") for j in (1, 2, 3)]]
    assert np.max(np.abs(sites - sites[0])) <= 1e-8
    if scheme == "gutzwiller":
        assert header[-3:] == ["I_1", "I_2", "I_3"]


def test_t_end_zero_single_row(tmp_path):
    _, path = _run(tmp_path, MINIMAL + "integrator: {t_end: 0}\n")
    header, data = read_csv(path)
    assert data.shape == (1, len(header))
    assert data[0, 0] == 0.0
    assert data[0, 2] == pytest.approx(1.0 + 0.25 + 0.04)


def test_csv_byte_identical_and_17_digits(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir(), b.mkdir()
    text = MINIMAL + "integrator: {t_end: 0.5, record_every: 10}\n"
    _, pa = _run(a, text)
    _, pb = _run(b, text)
    assert pa.read_bytes() == pb.read_bytes()
    line = pa.read_text().splitlines()[2]
    assert line.split(",")[0] == "%.17g" % 0.01


def test_exact_matches_sum_for_N1(tmp_path):
    # one boson: the exact dynamics is linear and equals the SU(M) flow
    common = "model: {M: 3, U: 2.0}\ninitial: {N: 1, xi: [0.6, [0, 0.8], 0]}\nintegrator: {t_end: 1.0, record_every: 100}\n"
    (tmp_path / "e").mkdir()
    (tmp_path / "s").mkdir()
    _, pe = _run(tmp_path / "e", common + "scheme: exact\n")
    _, ps = _run(tmp_path / "s", common + "scheme: sum\n")
    assert np.max(np.abs(read_csv(pe)[1] - read_csv(ps)[1])) <= 1e-10


def test_nonfinite_run_reported(tmp_path):
    # strongly attractive DNLS with a huge step blows up
    text = "model: {M: 2, U: -1.0e6}\nscheme: dnls\ninitial: {z: [30, 0]}\nintegrator: {dt: 0.5, t_end: 50}\n"
    summary, path = _run(tmp_path, text)
    assert summary["status"] == "failed"
    assert summary["error"]["last_good_time"] >= 0
    assert path.exists()


def test_cli_evolve_and_sweep(tmp_path, capsys):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(MINIMAL + f"integrator: {{t_end: 0.1, record_every: 10}}\noutputs: {{dir: '{tmp_path / 'out'}'}}\n")
    assert cli.main(["evolve", "--config", str(cfg)]) == 0
    assert (tmp_path / "out" / "trajectory.csv").exists()
    assert cli.main(["evolve", "--config", str(cfg), "--sweep", "model.U=0,2"]) == 0
    assert (tmp_path / "out" / "run_001" / "summary.json").exists()
    s = json.loads((tmp_path / "out" / "run_001" / "summary.json").read_text())
    assert s["U"] == 2.0


def test_cli_config_error_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(MINIMAL.replace("scheme: dnls", "scheme: sum"))
    assert cli.main(["evolve", "--config", str(cfg)]) == 2
    assert "initial" in capsys.readouterr().err


def test_cli_verify_scope_and_usage(tmp_path, capsys):
    report = tmp_path / "r.json"
    assert cli.main(["verify", "--scope", "cats", "--report", str(report)]) == 0
    data = json.loads(report.read_text())
    assert data["passed"] and data["n_checks"] == 4
    assert {"name", "anchor", "residual", "tolerance", "passed"} <= set(data["checks"][0])
    with pytest.raises(SystemExit) as info:
        cli.main(["verify", "--scope", ""])
    assert info.value.code == 2


def test_verify_nonzero_on_failure(monkeypatch, capsys):
    bad = checks.Check("always_fails", "cats", "deliberate failure", 0.0, lambda: 1.0)
    monkeypatch.setattr(checks, "REGISTRY", checks.REGISTRY + [bad])
    assert cli.main(["verify", "--scope", "cats"]) == 1


def test_identity_suite_algebra_residuals():
    rep = checks.run_identity_suite("algebra")
    assert rep["passed"]
    tight = [c for c in rep["checks"] if c["tolerance"] <= 1e-10]
    assert all(c["residual"] <= 1e-10 for c in tight)
    with pytest.raises(ValueError):
        checks.run_identity_suite("")


def test_cli_cat_weights_dual(tmp_path, capsys):
    (tmp_path / "cat.yaml").write_text(f"cat: {{M: 3, N: 3}}\noutput: '{tmp_path / 'cat.json'}'\n")
    assert cli.main(["cat", "--config", str(tmp_path / "cat.yaml")]) == 0
    rep = json.loads((tmp_path / "cat.json").read_text())
    assert rep["gram_residual"] == 0 and len(rep["cats"]) == 3
    assert all(c["out_of_class_weight"] <= 1e-12 for c in rep["cats"])

    (tmp_path / "w.yaml").write_text(f"weights: {{z: [{math.sqrt(2)}, {math.sqrt(2)}]}}\noutput: '{tmp_path / 'w.json'}'\n")
    assert cli.main(["weights", "--config", str(tmp_path / "w.yaml")]) == 0
    rep = json.loads((tmp_path / "w.json").read_text())
    assert rep["abs_weights"][4] == pytest.approx(0.4420031841663186, abs=1e-15)
    assert abs(rep["total"] - 1) <= 1e-12

    (tmp_path / "d.yaml").write_text(f"dual: {{z: [1, 1], xi: [0.6, 0.8], N: 3}}\noutput: '{tmp_path / 'd.json'}'\n")
    assert cli.main(["dual", "--config", str(tmp_path / "d.yaml")]) == 0
    rep = json.loads((tmp_path / "d.json").read_text())
    assert np.allclose(np.array(rep["glauber"]["v"])[:, 0], [0, math.sqrt(2)], atol=1e-15)
    assert rep["suM"]["duality_residual"] <= 1e-12


def test_shipped_configs_parse():
    root = Path(__file__).resolve().parents[1] / "configs"
    kinds = {"cat": "cat", "weights": "weights", "dual": "dual"}
    for path in sorted(root.iterdir()):
        kind = kinds.get(path.stem, "evolve")
        parse_config(path.read_text(), kind)
