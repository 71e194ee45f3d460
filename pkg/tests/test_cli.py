import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spheremass import cli
from spheremass.modified_ricci_flow import FlowDivergenceError


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def scenario(**kw):
    cfg = {"schema_version": 1, "metric": {"family": "round"}, "n": 32}
    cfg.update(kw)
    return cfg


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def run(tmp_path, command, cfg, *extra):
    out = tmp_path / command
    code = cli.main([command, "--config", write_config(tmp_path, cfg), "--out", str(out), "--quiet", *extra])
    return code, out


def test_round_flow(tmp_path):
    code, out = run(tmp_path, "flow", scenario())
    assert code == 0
    header, rows = read_csv(out / "trace.csv")
    assert header == ["t", "K_star", "M_sup_sq", "area_error"]
    assert all(float(r[2]) < 1e-20 for r in rows)
    manifest = json.loads((out / "manifest.json").read_text())
    for files in manifest["files"].values():
        for f in files:
            assert (out / f).exists()
    assert set(manifest["wall_clock_seconds"]) == {"flow"}


def test_ellipsoid_flow_tail(tmp_path):
    code, out = run(tmp_path, "flow", scenario(metric={"family": "ellipsoid", "axes": [1, 1, 0.8]}, n=64))
    assert code == 0
    _, rows = read_csv(out / "trace.csv")
    kstar = np.array([float(r[1]) for r in rows])
    tail = kstar[len(kstar) // 2 :]
    assert np.all(np.diff(tail) > 0)
    # full precision survives the round trip through text
    assert all(format(float(x), ".17g") == x for r in rows for x in r)
    fit = json.loads((out / "decay_fit.json").read_text())
    assert fit["decay_fit"]["rate"] > 0


def test_malformed_config_exit_1(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["flow", "--config", str(path)]) == 1
    diag = json.loads(capsys.readouterr().err)
    assert diag["exit_code"] == 1 and diag["error"] == "ConfigError"
    for bad in (
        {"schema_version": 2},
        scenario(n=33),
        scenario(metric={"family": "torus"}),
        scenario(flow={"t_end": -1}),
        scenario(extension={"H": 0}),
        scenario(typo=1),
    ):
        assert cli.main(["flow", "--config", write_config(tmp_path, bad), "--quiet"]) == 1
    assert cli.main(["flow"]) == 1


def test_extend_schwarzschild(tmp_path):
    code, out = run(tmp_path, "extend", scenario(extension={"H": 2**0.5, "T": 100}))
    assert code == 0
    report = json.loads((out / "mass_report.json").read_text())
    assert abs(report["adm_estimate"] - 0.25) < 1e-4
    assert report["rigidity"]["triggered"]
    header, rows = read_csv(out / "leaf_masses.csv")
    assert header == ["t", "m_H", "min_u", "max_u", "min_leaf_H"]
    assert all(abs(float(r[1]) - 0.25) < 1e-6 for r in rows)
    summary = json.loads((out / "asphericity.json").read_text())
    assert summary["limit"] == 0.0 and (out / summary["partial_series_csv_path"]).exists()


def test_extend_inadmissible_exit_3(tmp_path, capsys):
    cfg = scenario(extension={"H": 1.8, "rbar": {"family": "rotsym_power", "c": 20.0, "p": 4}})
    code, out = run(tmp_path, "extend", cfg)
    assert code == 3
    report = json.loads((out / "admissibility.json").read_text())
    assert not report["admissible"] and "failure" in report
    assert json.loads(capsys.readouterr().err)["exit_code"] == 3
    code, _ = run(tmp_path, "check", cfg)
    assert code == 3


def test_flow_failure_exit_2(tmp_path, monkeypatch):
    def diverge(*args, **kwargs):
        raise FlowDivergenceError("synthetic")

    cli._cached_flow.cache_clear()
    monkeypatch.setattr(cli, "run_flow", diverge)
    code, _ = run(tmp_path, "flow", scenario(n=48))
    assert code == 2
    cli._cached_flow.cache_clear()


def test_battery_rows_and_determinism(tmp_path):
    cfg = {
        "schema_version": 1,
        "scenarios": [
            {"id": "round", "metric": {"family": "round"}, "n": 32, "extension": {"H": 1.9, "T": 50}},
            {
                "id": "ellipsoid",
                "metric": {"family": "ellipsoid", "axes": [1, 1, 0.8]},
                "n": 32,
                "extension": {"H": 1.8, "T": 50, "rbar": {"family": "rotsym_power", "c": 0.05, "p": 4}},
            },
        ],
    }
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        code = cli.main(["battery", "--config", write_config(tmp_path, cfg), "--out", str(out), "--quiet", "--jobs", "2"])
        assert code == 0
        outputs.append(out)
    header, rows = read_csv(outputs[0] / "summary.csv")
    assert [r[0] for r in rows] == ["round", "ellipsoid"]
    assert header[:6] == ["id", "m_H_sigma", "m_aS", "e_term", "adm_estimate", "slack"]
    data_files = sorted(p.relative_to(outputs[0]) for p in outputs[0].rglob("*") if p.is_file() and p.name != "manifest.json")
    assert len(data_files) > 10
    for rel in data_files:
        assert (outputs[0] / rel).read_bytes() == (outputs[1] / rel).read_bytes()


def test_battery_empty_exit_1(tmp_path):
    code = cli.main(["battery", "--config", write_config(tmp_path, {"schema_version": 1, "scenarios": []}), "--quiet"])
    assert code == 1


def test_rotsym_command(tmp_path):
    code, out = run(tmp_path, "rotsym", {"schema_version": 1, "profile": {"kind": "powerlaw_approach", "m_inf": 0.25, "p": 3}})
    assert code == 0
    info = json.loads((out / "rotsym.json").read_text())
    assert info["decay"]["passes"] and info["C0"] > 0
    table = tmp_path / "profile.csv"
    r = np.linspace(1, 50, 60)
    table.write_text("r,m_H\n" + "\n".join(f"{a:.17g},{b:.17g}" for a, b in zip(r, 0.1 * (1 - r**-2))))
    code, out = run(tmp_path, "rotsym", {"schema_version": 1, "profile": {"kind": "table", "csv": "profile.csv"}})
    assert code == 0
    code, _ = run(tmp_path, "rotsym", {"schema_version": 1, "profile": {"kind": "table", "csv": "missing.csv"}})
    assert code == 1


coords = st.floats(0.5, 2.0)
metrics = st.one_of(
    st.just({"family": "round"}),
    st.builds(lambda a, c: {"family": "ellipsoid", "axes": [a, a, c]}, coords, coords),
    st.builds(lambda xs: {"family": "warped", "coefficients": [1.0] + xs}, st.lists(st.floats(-0.2, 0.2), max_size=3)),
)
rbars = st.one_of(
    st.just({"family": "zero"}),
    st.builds(lambda c, p: {"family": "rotsym_power", "c": c, "p": p}, st.floats(0, 1), st.floats(3.5, 8)),
    st.builds(lambda c, p: {"family": "separable", "c": c, "p": p, "angular": [1.0, 0.0, 0.5]}, st.floats(0, 1), st.floats(3.5, 8)),
)


@settings(max_examples=50, deadline=None)
@given(metrics, rbars, st.integers(8, 256).map(lambda k: 2 * k), st.floats(0.5, 1.99), st.floats(10, 1000))
def test_config_round_trip(metric, rbar, n, H, T):
    raw = {
        "schema_version": 1,
        "id": "s",
        "metric": metric,
        "n": n,
        "flow": {"t_end": 20.0, "sample_dt": 0.002, "truncation_threshold": 1e-14},
        "extension": {"rbar": rbar, "H": H, "T": T, "alpha": 0.5, "ds": 1e-3},
        "output_dir": "out",
    }
    cfg = cli.ScenarioConfig.from_dict(raw)
    dumped = cfg.to_dict()
    assert json.loads(json.dumps(dumped)) == dumped
    assert cli.ScenarioConfig.from_dict(json.loads(json.dumps(dumped))) == cfg
    assert dumped == raw
