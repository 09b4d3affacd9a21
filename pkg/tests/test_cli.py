import json

import numpy as np
import pytest

from dlrboltz.cli import (
    Problem,
    compare,
    format_table,
    initial_field,
    main,
    parse_config,
    read_dump,
    read_snapshot,
    relative_errors,
    run_experiment,
    spec_from_dict,
    write_dump,
)
from dlrboltz.errors import ConfigError, ContractError
from dlrboltz.moments import compute_moments_full
from dlrboltz.solver import Method

SMALL = {"grid": {"n_x": 20, "n_v": 8, "L_v": 3.0}, "t_final": 0.005, "snapshot_every": 2}
# fine enough in velocity to resolve the initial Maxwellians' moments
RESOLVED = {"grid": {"n_x": 20}, "t_final": 0.005}


def _write(tmp_path, doc, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_defaults_follow_problem():
    spec = spec_from_dict({"problem": "ShockTube", "eps": 1e-6})
    s = spec.solver
    assert (s.xgrid.n_x, s.vgrid.n_v, s.vgrid.L_v, s.xgrid.bc) == (100, 32, 8.4, "neumann")
    assert s.rank == 20 and s.dt == 1e-4 and s.lam is None and s.method is Method.DLR_XL
    sine = spec_from_dict({"problem": "Sine"}).solver
    assert sine.rank == 6 and sine.dt == 1e-3 and sine.xgrid.bc == "periodic"
    assert spec_from_dict({"problem": "Sine", "eps": 1e-6}).solver.rank == 10
    bgk = spec_from_dict({"problem": "BgkSine"})
    assert bgk.is_bgk and bgk.solver.vgrid.d_v == 1 and bgk.solver.lam == 1.0


@pytest.mark.parametrize(
    "doc, field",
    [
        ({}, "problem"),
        ({"problem": "Vortex"}, "problem"),
        ({"problem": "Sine", "bogus": 1}, "bogus"),
        ({"problem": "Sine", "dt": "fast"}, "dt"),
        ({"problem": "Sine", "dt": 0.01}, "dt"),  # CFL
        ({"problem": "Sine", "grid": {"n_v": 7}}, "grid.n_v"),
        ({"problem": "Sine", "grid": {"bc": "wall"}}, "grid.bc"),
        ({"problem": "Sine", "grid": {"d_v": 1}}, "grid.d_v"),
        ({"problem": "Sine", "method": "Magic"}, "method"),
        ({"problem": "Sine", "lambda": "big"}, "lambda"),
        ({"problem": "Sine", "truncation": {"mode": "adaptive"}}, "truncation.mode"),
        ({"problem": "Sine", "truncation": {"mode": "threshold"}}, "truncation.value"),
        ({"problem": "Sine", "snapshot_every": 0}, "snapshot_every"),
        ({"problem": "Custom"}, "initial"),
    ],
)
def test_config_errors_name_the_field(doc, field):
    with pytest.raises(ConfigError) as info:
        spec_from_dict(doc)
    assert info.value.field == field


def test_parse_config_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        parse_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_initial_data_moments():
    spec = spec_from_dict({"problem": "Sine", **RESOLVED})
    m = compute_moments_full(initial_field(spec), spec.solver.vgrid)
    x = spec.solver.xgrid.x
    np.testing.assert_allclose(m.rho, (2 + np.sin(2 * np.pi * x)) / 3, rtol=1e-6)
    np.testing.assert_allclose(m.u[:, 0], 0.2, atol=1e-6)
    np.testing.assert_allclose(m.T, (3 + np.cos(2 * np.pi * x)) / 4, rtol=1e-5)
    shock = spec_from_dict({"problem": "ShockTube", **RESOLVED})
    ms = compute_moments_full(initial_field(shock), shock.solver.vgrid)
    assert ms.rho[0] == pytest.approx(1.0, rel=1e-6) and ms.rho[-1] == pytest.approx(0.125, rel=1e-6)


def test_custom_problem_fields():
    doc = {"problem": "Custom", **RESOLVED, "initial": {"rho": [1.0] * 20, "u1": 0.1, "T": 0.9}}
    spec = spec_from_dict(doc)
    m = compute_moments_full(initial_field(spec), spec.solver.vgrid)
    np.testing.assert_allclose(m.u[:, 0], 0.1, atol=1e-6)
    with pytest.raises(ConfigError) as info:
        initial_field(spec_from_dict({**doc, "initial": {"rho": [1.0, 2.0]}}))
    assert info.value.field == "initial.rho"


def test_run_writes_outputs(tmp_path):
    cfg = _write(tmp_path, {"problem": "Sine", "rank": 3, **SMALL, "output_dir": "out",
                            "dump_full": True})
    spec = parse_config(cfg)
    assert spec.output_dir == tmp_path / "out"
    manifest = run_experiment(spec)
    out = tmp_path / "out"
    snaps = sorted(p.name for p in out.glob("snapshot_*.csv"))
    assert snaps == ["snapshot_000000.csv", "snapshot_000002.csv", "snapshot_000004.csv",
                     "snapshot_000005.csv"]
    assert (out / "snapshot_000000.csv").read_text().splitlines()[0] == "x,rho,u1,u2,T"
    ranks = (out / "ranks.csv").read_text().splitlines()
    assert ranks[0] == "step,t,rank_before_trunc,rank_after_trunc,augmented" and len(ranks) == 6
    data = json.loads((out / "manifest.json").read_text())
    assert data["config"]["rank"] == 3 and data["config"]["lambda"] > 0
    assert data["collision_calls"] == 5 * 9 == manifest.collision_calls
    assert len(data["ledger"]) == 4
    f, n_v, d_v = read_dump(out / "final.bin")
    assert f.shape == (20, 64) and (n_v, d_v) == (8, 2)


def test_snapshot_precision_roundtrip(tmp_path):
    spec = spec_from_dict({"problem": "Sine", "method": "FullTensor", **SMALL,
                           "output_dir": str(tmp_path / "a")})
    run_experiment(spec)
    snap = read_snapshot(tmp_path / "a" / "snapshot_000000.csv")
    m = compute_moments_full(initial_field(spec), spec.solver.vgrid)
    np.testing.assert_array_equal(snap["rho"], m.rho)


def test_dump_format(tmp_path):
    f = np.arange(12.0).reshape(3, 4)
    write_dump(tmp_path / "f.bin", f, 2, 2)
    raw = (tmp_path / "f.bin").read_bytes()
    assert raw[:4] == b"DLRK" and len(raw) == 32 + 12 * 8
    g, n_v, d_v = read_dump(tmp_path / "f.bin")
    np.testing.assert_array_equal(g, f)
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ContractError):
        read_dump(tmp_path / "bad.bin")


def test_relative_errors():
    assert relative_errors(np.array([3.0, 4.0]), np.array([3.0, 4.0])) == (0.0, 0.0)
    l2, linf = relative_errors(np.array([3.0, 4.0]), np.array([3.0, 5.0]))
    assert l2 == pytest.approx(0.2) and linf == pytest.approx(0.25)
    # zero reference falls back to absolute error
    assert relative_errors(np.zeros(2), np.array([0.0, 0.5])) == (0.5, 0.5)


def test_compare_runs(tmp_path):
    base = {"problem": "Sine", **SMALL}
    run_experiment(spec_from_dict({**base, "method": "FullTensor", "output_dir": str(tmp_path / "f")}))
    run_experiment(spec_from_dict({**base, "rank": 4, "output_dir": str(tmp_path / "d")}))
    rows = compare(tmp_path / "f", tmp_path / "d")
    assert [r["t"] for r in rows] == [0.0, 0.002, 0.004, 0.005]
    assert all(0 <= r["rho_l2"] < 1e-2 for r in rows)
    assert "rho_linf" in format_table(rows)
    assert all(v == 0 for r in compare(tmp_path / "f", tmp_path / "f") for k, v in r.items() if k != "t")
    run_experiment(spec_from_dict({**base, "snapshot_every": 5, "output_dir": str(tmp_path / "g")}))
    with pytest.raises(ContractError):
        compare(tmp_path / "f", tmp_path / "g")
    with pytest.raises(ContractError):
        compare(tmp_path / "f", tmp_path / "empty")


def test_bkw_and_bgk_runs():
    bkw = run_experiment(spec_from_dict({"problem": "BkwHomogeneous", "grid": {"n_v": 16},
                                         "rank": 1, "dt": 0.01, "t_final": 0.05}))
    assert bkw.collision_calls == 5
    assert bkw.diagnostics["bkw_linf_error"][-1]["error"] < 1e-3
    bgk = run_experiment(spec_from_dict({"problem": "BgkSine", "eps": 1e-6, "rank": 3,
                                         "grid": {"n_x": 20}, "t_final": 0.005}))
    assert bgk.collision_calls == 0 and len(bgk.rank_history) == 5
    assert spec_from_dict({"problem": "BkwHomogeneous"}).problem is Problem.BKW


def test_main_run_and_compare(tmp_path, capsys):
    cfg = _write(tmp_path, {"problem": "Sine", "rank": 3, **SMALL, "output_dir": "out"})
    assert main(["--threads", "1", "run", str(cfg)]) == 0
    assert "Sine / DlrXL" in capsys.readouterr().out
    assert main(["compare", str(tmp_path / "out"), str(tmp_path / "out"), "--json"]) == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["t"] == 0.0


def test_main_reports_config_errors(tmp_path, capsys):
    cfg = _write(tmp_path, {"problem": "Sine", "dt": -1})
    assert main(["run", str(cfg)]) == 2
    assert "dt:" in capsys.readouterr().err


def test_main_modes_check(capsys):
    assert main(["--seed", "3", "modes", "--check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 5 and "FAIL" not in out
    assert main(["modes", "--n-v", "8"]) == 0


def _fake_run(directory, x, rho):
    directory.mkdir()
    table = np.column_stack([x, rho, np.zeros_like(x), np.zeros_like(x), np.ones_like(x)])
    np.savetxt(directory / "snapshot_000000.csv", table, delimiter=",",
               header="x,rho,u1,u2,T", comments="", fmt="%.17g")


def test_compare_constant_offset(tmp_path):
    x = (np.arange(50) + 0.5) / 50
    rho = (2 + np.sin(2 * np.pi * x)) / 3
    delta = 1e-3
    _fake_run(tmp_path / "a", x, rho)
    _fake_run(tmp_path / "b", x, rho + delta)
    row = compare(tmp_path / "a", tmp_path / "b")[0]
    assert abs(row["rho_linf"] - delta / np.abs(rho).max()) <= 1e-14
    assert row["u1_linf"] == 0.0 and row["T_l2"] == 0.0
    _fake_run(tmp_path / "c", x[:-1], rho[:-1])
    with pytest.raises(ContractError):
        compare(tmp_path / "a", tmp_path / "c")


def test_compare_full_tensor_first_order_self_convergence(tmp_path):
    base = {"problem": "Sine", "method": "FullTensor", "grid": {"n_x": 20, "n_v": 8, "L_v": 3.0},
            "t_final": 0.008}
    for k, dt in enumerate((2e-3, 1e-3, 5e-4)):
        run_experiment(spec_from_dict({**base, "dt": dt, "snapshot_every": 2**k,
                                       "output_dir": str(tmp_path / f"r{k}")}))
    coarse = compare(tmp_path / "r1", tmp_path / "r0")[-1]
    fine = compare(tmp_path / "r2", tmp_path / "r1")[-1]
    assert coarse["t"] == fine["t"] == 0.008
    ratio = coarse["rho_l2"] / fine["rho_l2"]
    assert 1.6 < ratio < 2.4


def test_identical_runs_are_bitwise_reproducible(tmp_path):
    doc = {"problem": "Sine", "rank": 3, **SMALL}
    for name in ("a", "b"):
        run_experiment(spec_from_dict({**doc, "output_dir": str(tmp_path / name)}))
    for snap in sorted((tmp_path / "a").glob("snapshot_*.csv")):
        assert snap.read_bytes() == (tmp_path / "b" / snap.name).read_bytes()
    assert (tmp_path / "a" / "ranks.csv").read_bytes() == (tmp_path / "b" / "ranks.csv").read_bytes()
