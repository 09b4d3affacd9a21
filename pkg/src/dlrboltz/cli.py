"""Experiment drivers, output files and the ``dlrboltz`` command line.

A run is described by a small JSON document::

    {"problem": "Sine", "eps": 1.0, "method": "DlrXL",
     "grid": {"n_x": 100, "n_v": 32, "L_v": 8.4},
     "truncation": {"mode": "fixed"}, "output_dir": "runs/sine"}

Everything omitted falls back to the defaults in :func:`parse_config`.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import enum
import json
import struct
import sys
import time
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .collision import CollisionOperator, build_kernel_modes, lommel_integral
from .errors import ConfigError, ContractError, DomainError, IntegrationError
from .grid import SpatialGrid, VelocityGrid
from .lowrank import LowRankState, evaluate_full, from_full
from .moments import (
    MacroFields,
    bkw_profile,
    compute_moments_full,
    compute_moments_lowrank,
    maxwellian,
    maxwellian_bgk_1v,
)
from .solver import Method, SolverConfig, make_stepper

DUMP_MAGIC = b"DLRK"
DUMP_VERSION = 1
DUMP_HEADER = struct.Struct("<4s4i12x")  # 32 bytes
SNAPSHOT_HEADER = ["x", "rho", "u1", "u2", "T"]
RANK_HEADER = ["step", "t", "rank_before_trunc", "rank_after_trunc", "augmented"]


class Problem(str, enum.Enum):
    SINE = "Sine"
    SHOCK_TUBE = "ShockTube"
    BKW = "BkwHomogeneous"
    BGK_SINE = "BgkSine"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class ExperimentSpec:
    """A problem, its solver configuration and where to write results.

    ``initial`` holds the moment fields of a ``Custom`` problem (keys
    ``rho``, ``u1``, ``u2``, ``T``; scalars or per-cell lists). For the BGK
    model the velocity grid is one-dimensional and only ``rho`` and ``u1``
    are used.
    """

    problem: Problem
    solver: SolverConfig
    snapshot_every: int = 100
    output_dir: Path | None = None
    initial: dict | None = None
    bkw_t0: float = 2.0
    dump_full: bool = False

    def __post_init__(self):
        object.__setattr__(self, "problem", Problem(self.problem))
        if self.snapshot_every < 1:
            raise ConfigError("must be >= 1", "snapshot_every")
        d_v = self.solver.vgrid.d_v
        if self.is_bgk and d_v != 1:
            raise ConfigError("the BGK problem needs d_v = 1", "grid.d_v")
        if not self.is_bgk and d_v != 2:
            raise ConfigError("Boltzmann problems need d_v = 2", "grid.d_v")
        if self.problem is Problem.CUSTOM and not self.initial:
            raise ConfigError("a Custom problem needs initial moment fields", "initial")

    @property
    def is_bgk(self) -> bool:
        if self.problem is Problem.BGK_SINE:
            return True
        return self.problem is Problem.CUSTOM and self.solver.vgrid.d_v == 1


@dataclass
class RunManifest:
    config: dict
    version: str
    wall_clock: float = 0.0
    rank_history: list = field(default_factory=list)
    collision_calls: int = 0
    ledger: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (Path, enum.Enum)):
        return obj.value if isinstance(obj, enum.Enum) else str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def package_version() -> str:
    try:
        return metadata.version("dlrboltz")
    except metadata.PackageNotFoundError:
        return "unknown"


# --------------------------------------------------------------------- config


def default_rank(problem: Problem, eps: float) -> int:
    if problem is Problem.SHOCK_TUBE:
        return 14 if eps > 1e-4 else 20
    if problem is Problem.SINE:
        return 6 if eps >= 1e-2 else 10
    return 6


_DEFAULT_DT = {
    Problem.SINE: 1e-3,
    Problem.SHOCK_TUBE: 1e-4,
    Problem.BKW: 1e-2,
    Problem.BGK_SINE: 1e-3,
    Problem.CUSTOM: 1e-3,
}

_KNOWN_KEYS = {
    "problem", "eps", "lambda", "dt", "t_final", "rank", "method", "sxl_tol",
    "truncation", "grid", "collision", "snapshot_every", "output_dir",
    "initial", "bkw_t0", "dump_full",
}


def _get(doc, key, kind, default, path=None):
    path = path or key
    if key not in doc or doc[key] is None:
        return default
    value = doc[key]
    try:
        if kind is float and isinstance(value, bool):
            raise TypeError
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", path) from None


def _enum(kind, value, path):
    try:
        return kind(value)
    except ValueError:
        allowed = ", ".join(m.value for m in kind)
        raise ConfigError(f"unknown value {value!r} (allowed: {allowed})", path) from None


def spec_from_dict(doc: dict, base_dir: Path | None = None) -> ExperimentSpec:
    """Resolve a parsed JSON document into an :class:`ExperimentSpec`."""
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", "<root>")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError("unknown field", unknown[0])
    if "problem" not in doc:
        raise ConfigError("missing required field", "problem")
    problem = _enum(Problem, doc["problem"], "problem")
    eps = _get(doc, "eps", float, 1.0)
    method = _enum(Method, doc.get("method", Method.DLR_XL.value), "method")

    grid = doc.get("grid") or {}
    if not isinstance(grid, dict):
        raise ConfigError("must be an object", "grid")
    bgk = problem is Problem.BGK_SINE
    d_v = _get(grid, "d_v", int, 1 if bgk else 2, "grid.d_v")
    n_x_default = 1 if problem is Problem.BKW else 100
    bc_default = "neumann" if problem is Problem.SHOCK_TUBE else "periodic"
    try:
        xgrid = SpatialGrid(
            n_x=_get(grid, "n_x", int, n_x_default, "grid.n_x"),
            bc=grid.get("bc", bc_default),
        )
        vgrid = VelocityGrid(
            n_v=_get(grid, "n_v", int, 32, "grid.n_v"),
            L_v=_get(grid, "L_v", float, 8.4, "grid.L_v"),
            d_v=d_v,
        )
    except ConfigError as exc:
        if exc.field and not exc.field.startswith("grid."):
            raise ConfigError(str(exc).split(": ", 1)[-1], f"grid.{exc.field}") from None
        raise

    lam = doc.get("lambda", "auto")
    if isinstance(lam, str):
        if lam.lower() != "auto":
            raise ConfigError(f"expected a number or 'auto', got {lam!r}", "lambda")
        lam = None
    else:
        lam = _get(doc, "lambda", float, None)
    if bgk:
        lam = 1.0

    trunc = doc.get("truncation") or {"mode": "fixed"}
    mode = trunc.get("mode", "fixed") if isinstance(trunc, dict) else None
    if mode not in ("fixed", "threshold"):
        raise ConfigError(f"mode must be 'fixed' or 'threshold', got {mode!r}", "truncation.mode")
    threshold = None
    if mode == "threshold":
        if "value" not in trunc:
            raise ConfigError("threshold mode needs a value", "truncation.value")
        threshold = _get(trunc, "value", float, None, "truncation.value")

    collision = doc.get("collision") or {}
    R = _get(collision, "R", float, None, "collision.R")

    rank = _get(doc, "rank", int, default_rank(problem, eps))
    if problem is Problem.BKW:
        rank = min(rank, xgrid.n_x, vgrid.size)
    solver = SolverConfig(
        xgrid=xgrid,
        vgrid=vgrid,
        eps=eps,
        lam=lam,
        dt=_get(doc, "dt", float, _DEFAULT_DT[problem]),
        t_final=_get(doc, "t_final", float, 0.1),
        rank=rank,
        method=method,
        sxl_tol=_get(doc, "sxl_tol", float, 0.01),
        threshold=threshold,
        R=R,
    )
    out = doc.get("output_dir")
    if out is not None:
        out = Path(out)
        if base_dir is not None and not out.is_absolute():
            out = base_dir / out
    return ExperimentSpec(
        problem=problem,
        solver=solver,
        snapshot_every=_get(doc, "snapshot_every", int, 100),
        output_dir=out,
        initial=doc.get("initial"),
        bkw_t0=_get(doc, "bkw_t0", float, 2.0),
        dump_full=bool(doc.get("dump_full", False)),
    )


def parse_config(path) -> ExperimentSpec:
    """Read a JSON config file; relative output paths resolve against its folder."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"no such file {path}", "<file>") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}", "<file>") from None
    return spec_from_dict(doc, base_dir=path.parent)


def config_echo(spec: ExperimentSpec) -> dict:
    """Every resolved parameter of a run, as plain JSON values."""
    s = spec.solver
    return {
        "problem": spec.problem.value,
        "eps": s.eps,
        "lambda": s.lam,
        "dt": s.dt,
        "t_final": s.t_final,
        "n_steps": s.n_steps,
        "rank": s.rank,
        "method": s.method.value,
        "sxl_tol": s.sxl_tol,
        "truncation": {"mode": "fixed"} if s.threshold is None
        else {"mode": "threshold", "value": s.threshold},
        "grid": {
            "n_x": s.xgrid.n_x, "x_min": s.xgrid.x_min, "x_max": s.xgrid.x_max,
            "bc": s.xgrid.bc, "n_v": s.vgrid.n_v, "L_v": s.vgrid.L_v, "d_v": s.vgrid.d_v,
        },
        "collision": {"R": s.R},
        "snapshot_every": spec.snapshot_every,
        "bkw_t0": spec.bkw_t0 if spec.problem is Problem.BKW else None,
    }


# ------------------------------------------------------------- initial data


def _field(values, n_x, name):
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full(n_x, float(arr))
    if arr.shape != (n_x,):
        raise ConfigError(f"needs {n_x} values, got shape {arr.shape}", f"initial.{name}")
    return arr


def initial_moments(spec: ExperimentSpec):
    """``(rho, u, T)`` of the initial equilibrium; ``u`` has shape ``(n_x, d_v)``."""
    x = spec.solver.xgrid.x
    n_x = x.size
    d_v = spec.solver.vgrid.d_v
    if spec.problem is Problem.SINE:
        rho = (2 + np.sin(2 * np.pi * x)) / 3
        u = np.tile([0.2, 0.0], (n_x, 1))
        T = (3 + np.cos(2 * np.pi * x)) / 4
    elif spec.problem is Problem.SHOCK_TUBE:
        left = x <= 0.5
        rho = np.where(left, 1.0, 0.125)
        u = np.zeros((n_x, 2))
        T = np.where(left, 1.0, 0.25)
    elif spec.problem is Problem.BGK_SINE:
        rho = (2 + np.sin(2 * np.pi * x)) / 3
        u = np.full((n_x, 1), 0.2)
        T = np.ones(n_x)
    elif spec.problem is Problem.BKW:
        rho = np.ones(n_x)
        u = np.zeros((n_x, 2))
        T = np.ones(n_x)
    else:
        init = spec.initial
        if "rho" not in init:
            raise ConfigError("missing required field", "initial.rho")
        rho = _field(init["rho"], n_x, "rho")
        comps = [_field(init.get("u1", 0.0), n_x, "u1")]
        if d_v == 2:
            comps.append(_field(init.get("u2", 0.0), n_x, "u2"))
        u = np.stack(comps, axis=1)
        T = _field(init.get("T", 1.0), n_x, "T")
    return rho, u, T


def initial_field(spec: ExperimentSpec) -> np.ndarray:
    vgrid = spec.solver.vgrid
    rho, u, T = initial_moments(spec)
    if spec.problem is Problem.BKW:
        return np.tile(bkw_profile(vgrid, spec.bkw_t0), (spec.solver.xgrid.n_x, 1))
    if spec.is_bgk:
        return maxwellian_bgk_1v(rho, u[:, 0], vgrid)
    return maxwellian(rho, u, T, vgrid)


# -------------------------------------------------------------------- output


def _moments(state, vgrid) -> MacroFields:
    if isinstance(state, LowRankState):
        return compute_moments_lowrank(state)
    return compute_moments_full(state, vgrid)


def _dense(state):
    return evaluate_full(state) if isinstance(state, LowRankState) else state


def write_snapshot(path, x, m: MacroFields):
    u2 = m.u[:, 1] if m.d_v > 1 else np.zeros_like(m.rho)
    table = np.column_stack([x, m.rho, m.u[:, 0], u2, m.T])
    np.savetxt(path, table, delimiter=",", header=",".join(SNAPSHOT_HEADER),
               comments="", fmt="%.17g")


def read_snapshot(path) -> dict:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(SNAPSHOT_HEADER)}


def write_dump(path, f, n_v: int, d_v: int):
    """Flat binary: 32-byte header then little-endian float64 samples, x-major."""
    f = np.ascontiguousarray(f, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(DUMP_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, f.shape[0], n_v, d_v))
        fh.write(f.tobytes(order="C"))


def read_dump(path):
    """Inverse of :func:`write_dump`; returns ``(f, n_v, d_v)``."""
    raw = Path(path).read_bytes()
    magic, version, n_x, n_v, d_v = DUMP_HEADER.unpack_from(raw)
    if magic != DUMP_MAGIC or version != DUMP_VERSION:
        raise ContractError(f"{path} is not a version-{DUMP_VERSION} dump")
    f = np.frombuffer(raw, dtype="<f8", offset=DUMP_HEADER.size)
    return f.reshape(n_x, n_v**d_v).copy(), n_v, d_v


def conserved_totals(m: MacroFields, xgrid: SpatialGrid) -> dict:
    dx = xgrid.dx
    return {
        "mass": float(m.rho.sum() * dx),
        "momentum": [float(c) for c in m.momentum.sum(axis=0) * dx],
        "energy": float(m.E.sum() * dx),
    }


# ---------------------------------------------------------------------- runs


def run_experiment(spec: ExperimentSpec) -> RunManifest:
    """Step a problem to ``t_final``, writing snapshots and a manifest.

    Solver failures surface as :class:`IntegrationError` carrying the index
    of the failing step.
    """
    cfg = spec.solver
    xg, vg = cfg.xgrid, cfg.vgrid
    f0 = initial_field(spec)
    if cfg.lam is None:
        cfg = cfg.resolve_lambda(compute_moments_full(f0, vg).rho)
    op = None
    if not spec.is_bgk:
        op = CollisionOperator(vg, R=cfg.R)
    if cfg.method.low_rank:
        state = from_full(f0, None if cfg.threshold is not None else cfg.rank, xg, vg,
                          threshold=cfg.threshold)
    else:
        state = f0
    step = make_stepper(cfg, op, bgk=spec.is_bgk)
    resolved = dataclasses.replace(spec, solver=cfg)
    manifest = RunManifest(config=config_echo(resolved), version=package_version())

    out = spec.output_dir
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)

    def record(n, t, state):
        m = _moments(state, vg)
        manifest.ledger.append({"step": n, "t": t, **conserved_totals(m, xg)})
        if out is not None:
            name = f"snapshot_{n:06d}.csv"
            write_snapshot(out / name, xg.x, m)
            manifest.snapshots.append({"step": n, "t": t, "file": name})
        if spec.problem is Problem.BKW:
            exact = bkw_profile(vg, spec.bkw_t0 + t / cfg.eps)
            err = float(np.abs(_dense(state) - exact[None, :]).max())
            manifest.diagnostics.setdefault("bkw_linf_error", []).append(
                {"step": n, "t": t, "error": err})

    n_steps = cfg.n_steps
    record(0, 0.0, state)
    start = time.perf_counter()
    for n in range(1, n_steps + 1):
        try:
            state, report = step(state)
        except (IntegrationError, DomainError, FloatingPointError) as exc:
            raise IntegrationError(str(exc), step=n) from exc
        t = n * cfg.dt
        if report is not None:
            manifest.collision_calls += report.collision_calls
            if cfg.method.low_rank:
                manifest.rank_history.append({
                    "step": n, "t": t,
                    "rank_before_trunc": report.rank_before_trunc,
                    "rank_after_trunc": report.rank_after_trunc,
                    "augmented": report.augmented,
                })
        if n % spec.snapshot_every == 0 or n == n_steps:
            record(n, t, state)
    manifest.wall_clock = time.perf_counter() - start
    if op is not None and cfg.method is not Method.FULL_TENSOR:
        manifest.diagnostics["collision_calls_per_step"] = (
            manifest.collision_calls / max(n_steps, 1))

    if out is not None:
        if manifest.rank_history:
            with open(out / "ranks.csv", "w", newline="") as fh:
                writer = csv.DictWriter(fh, fieldnames=RANK_HEADER)
                writer.writeheader()
                for row in manifest.rank_history:
                    writer.writerow({**row, "t": repr(float(row["t"]))})
        if spec.dump_full:
            write_dump(out / "final.bin", _dense(state), vg.n_v, vg.d_v)
        (out / "manifest.json").write_text(manifest.to_json())
    return manifest


# ------------------------------------------------------------------ compare


def _snapshot_files(directory: Path):
    """``{t: path}`` for the snapshots of a run, times taken from its manifest."""
    directory = Path(directory)
    files = sorted(directory.glob("snapshot_*.csv"))
    if not files:
        raise ContractError(f"no snapshots in {directory}")
    manifest = directory / "manifest.json"
    if manifest.exists():
        entries = json.loads(manifest.read_text()).get("snapshots", [])
        times = {e["file"]: float(e["t"]) for e in entries}
    else:
        times = {}
    # without a manifest the step index stands in for the time
    return {round(times.get(p.name, int(p.stem.split("_")[1])), 12): p for p in files}


def relative_errors(ref, other):
    """``(relative L2, relative Linf)`` of ``other`` against ``ref``.

    A reference that is identically zero turns both into absolute errors.
    """
    diff = other - ref
    l2 = np.linalg.norm(ref)
    linf = np.max(np.abs(ref))
    return (float(np.linalg.norm(diff) / (l2 if l2 > 0 else 1.0)),
            float(np.max(np.abs(diff)) / (linf if linf > 0 else 1.0)))


def compare(run_a, run_b) -> list[dict]:
    """Per-snapshot relative L2 / Linf differences of ``rho``, ``u1``, ``T``.

    ``run_a`` is the reference. Snapshots are matched by time, so runs with
    different time steps compare as long as they share output times; both
    need the same spatial grid.
    """
    fa, fb = _snapshot_files(run_a), _snapshot_files(run_b)
    if set(fa) != set(fb):
        raise ContractError("runs have different snapshot times")
    rows = []
    for t in sorted(fa):
        a, b = read_snapshot(fa[t]), read_snapshot(fb[t])
        if a["x"].shape != b["x"].shape or not np.allclose(a["x"], b["x"], rtol=0, atol=1e-12):
            raise ContractError(f"spatial grids differ at t = {t}")
        row = {"t": t}
        for q in ("rho", "u1", "T"):
            row[f"{q}_l2"], row[f"{q}_linf"] = relative_errors(a[q], b[q])
        rows.append(row)
    return rows


def format_table(rows) -> str:
    cols = [f"{q}_{n}" for q in ("rho", "u1", "T") for n in ("l2", "linf")]
    lines = ["  ".join(f"{c:>10}" for c in ["t"] + cols)]
    for row in rows:
        cells = [f"{row['t']:>10.4g}"] + [f"{row[c]:>10.3e}" for c in cols]
        lines.append("  ".join(cells))
    return "\n".join(lines)


# ------------------------------------------------------------- modes check


def check_kernel_modes(n_v=32, L_v=8.4, R=None, seed=0, n_pairs=20):
    """Self-test of the kernel table and operator; returns ``[(name, ok, detail)]``."""
    from scipy.special import j0

    rng = np.random.default_rng(seed)
    modes = build_kernel_modes(n_v, L_v, R)
    R = modes.R
    results = []
    sym = max(abs(v - modes.gain.get((q, p), v)) for (p, q), v in modes.gain.items())
    results.append(("gain table symmetric", sym <= 1e-12, f"max asymmetry {sym:.2e}"))
    g00 = modes.gain[(0, 0)]
    results.append(("beta(0, 0) = pi R^2", abs(g00 - np.pi * R**2) <= 1e-12 * np.pi * R**2,
                    f"{g00:.15g} vs {np.pi * R**2:.15g}"))
    nodes, weights = np.polynomial.legendre.leggauss(64)
    xi = 0.5 * R * (nodes + 1.0)
    worst = 0.0
    for _ in range(n_pairs):
        a, b = rng.uniform(0.0, 3.0, size=2)
        exact = float(lommel_integral(a, b, R))
        quad = 0.5 * R * np.sum(weights * xi * j0(a * xi) * j0(b * xi))
        worst = max(worst, abs(exact - quad) / max(abs(quad), 1e-300))
    results.append(("closed form matches quadrature", worst <= 1e-10, f"max rel err {worst:.2e}"))

    vg = VelocityGrid(n_v, L_v, 2)
    op = CollisionOperator(vg, modes=modes)
    v1, v2 = vg.component(0), vg.component(1)
    f = np.zeros(vg.size)
    for _ in range(3):
        c = rng.uniform(-1.5, 1.5, size=2)
        T = rng.uniform(0.9, 1.6)
        f += rng.uniform(0.2, 1.0) * np.exp(-((v1 - c[0])**2 + (v2 - c[1])**2) / (2 * T)) / (2 * np.pi * T)
    q = op.quadratic(f)
    rho = f.sum() * vg.weight
    mass = abs(q.sum() * vg.weight) / rho
    results.append(("mass conserved", mass <= 1e-12, f"|int Q| / rho = {mass:.2e}"))
    M = maxwellian([1.0], [[0.0, 0.0]], [1.0], vg)[0]
    floor = float(np.abs(op.quadratic(M)).max() / M.max())
    results.append(("Maxwellian annihilated", floor <= 1e-5, f"|Q(M, M)| / |M| = {floor:.2e}"))
    return results


# ---------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dlrboltz", description=__doc__.splitlines()[0])
    parser.add_argument("--threads", type=int, default=None,
                        help="cap the BLAS thread pool at N threads")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized self-checks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run the experiment described by a JSON config")
    p_run.add_argument("config", type=Path)
    p_run.add_argument("--output-dir", type=Path, default=None,
                       help="override the output directory of the config")

    p_cmp = sub.add_parser("compare", help="error metrics between two run directories")
    p_cmp.add_argument("dir_a", type=Path, help="reference run")
    p_cmp.add_argument("dir_b", type=Path)
    p_cmp.add_argument("--json", action="store_true", help="print machine-readable JSON")

    p_modes = sub.add_parser("modes", help="kernel-mode utilities")
    p_modes.add_argument("--check", action="store_true", help="run the self-test")
    p_modes.add_argument("--n-v", type=int, default=32)
    p_modes.add_argument("--L-v", type=float, default=8.4)
    p_modes.add_argument("--R", type=float, default=None)
    return parser


def _dispatch(args) -> int:
    if args.command == "run":
        spec = parse_config(args.config)
        if args.output_dir is not None:
            spec = dataclasses.replace(spec, output_dir=args.output_dir)
        manifest = run_experiment(spec)
        last = manifest.ledger[-1]
        print(f"{spec.problem.value} / {spec.solver.method.value}: "
              f"{spec.solver.n_steps} steps in {manifest.wall_clock:.2f} s, "
              f"mass {last['mass']:.15g}, collision calls {manifest.collision_calls}")
        if spec.output_dir is not None:
            print(f"wrote {spec.output_dir}")
        return 0
    if args.command == "compare":
        rows = compare(args.dir_a, args.dir_b)
        print(json.dumps(rows, indent=2) if args.json else format_table(rows))
        return 0
    if args.command == "modes":
        if not args.check:
            modes = build_kernel_modes(args.n_v, args.L_v, args.R)
            print(f"n_v={modes.n_v} L={modes.L} R={modes.R:.6g} "
                  f"pairs={modes.pair_k.size} unique gain keys={len(modes.gain)}")
            return 0
        ok = True
        for name, passed, detail in check_kernel_modes(args.n_v, args.L_v, args.R, seed=args.seed):
            ok &= passed
            print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        return 0 if ok else 1
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads is not None:
            from threadpoolctl import threadpool_limits

            with threadpool_limits(limits=args.threads):
                return _dispatch(args)
        return _dispatch(args)
    except (ConfigError, ContractError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, DomainError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
