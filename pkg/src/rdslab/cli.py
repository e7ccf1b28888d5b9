"""Command-line experiment runner.

Every subcommand wraps one library operation.  Settings come from an
optional JSON config and flags, flags winning.  Results go to stdout as CSV,
or with ``--out DIR`` to ``DIR/<experiment>.csv`` and ``.json`` (``.svg`` for
``geometry``).  CSV columns, in order::

    experiment,parameter,estimate,half_width,replicas,seed

Exit codes: 0 success, 1 ``verify`` found a failing property, 2 invalid
configuration (nothing written), 3 runtime failure such as an overflow or an
exhausted search (nothing written).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, fields

import numpy as np

from .doublewell import DoubleWellSystem, doublewell_point_attractor, unit_grid
from .errors import ConfigError, RdsError
from .lab import (EstimateWithCI, absorption_search, connectivity_report, epsilon_components,
                  hausdorff_semidist, membership_probability, pullback_orbit, weak_attraction_probability)
from .noise import derive_seed
from .phase import discrete_attractor_estimate
from .properties import run_all
from .svg import space_svg
from .systems import TriangleSystem

EXPERIMENTS = ("geometry", "orbit", "membership", "attractor", "weak-attract", "absorption",
               "doublewell", "verify")
CSV_COLUMNS = ("experiment", "parameter", "estimate", "half_width", "replicas", "seed")
MAX_SEED = 2**63 - 1


@dataclass
class ExperimentConfig:
    experiment: str = ""
    seed: int = 0
    replicas: int | None = None
    n: int | None = None
    r: int | None = None
    horizon: float | None = None
    epsilons: list | None = None
    resolution: int = 4
    z_window: int | None = None
    delta: float = 0.2
    r_max: int = 4
    radius: float = 2.0**-6
    system: str | None = None
    samples: int = 10_000
    out: str | None = None


# per-experiment values for fields left unset
DEFAULTS = {
    "orbit": {"r": 2, "horizon": 50.0},
    "membership": {"n": 100, "replicas": 100_000},
    "attractor": {"n": 200, "replicas": 1, "z_window": 64, "epsilons": [0.4]},
    "weak-attract": {"r": 2, "horizon": 15.0, "replicas": 1000, "system": "continuous"},
    "absorption": {"horizon": 200.0, "replicas": 200},
    "doublewell": {"horizon": 20.0},
}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _is_real(v) -> bool:
    return (_is_int(v) or isinstance(v, float)) and math.isfinite(v)


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return data


def validate(cfg: ExperimentConfig) -> ExperimentConfig:
    if cfg.experiment not in EXPERIMENTS:
        raise ConfigError(f"experiment must be one of {', '.join(EXPERIMENTS)}")
    for key, value in DEFAULTS.get(cfg.experiment, {}).items():
        if getattr(cfg, key) is None:
            setattr(cfg, key, value)
    if cfg.system is None:
        cfg.system = "discrete"
    if not _is_int(cfg.seed) or not 0 <= cfg.seed <= MAX_SEED:
        raise ConfigError("seed must be an integer in [0, 2**63)")
    checks = [
        ("replicas", cfg.replicas, _is_int, lambda v: v >= 1, ">= 1"),
        ("n", cfg.n, _is_int, lambda v: v >= 1, ">= 1"),
        ("r", cfg.r, _is_int, lambda v: 0 <= v <= 10, "in 0..10"),
        ("horizon", cfg.horizon, _is_real, lambda v: v >= 0, ">= 0"),
        ("resolution", cfg.resolution, _is_int, lambda v: v >= 1, ">= 1"),
        ("z_window", cfg.z_window, _is_int, lambda v: 1 <= v <= 1000, "in 1..1000"),
        ("delta", cfg.delta, _is_real, lambda v: 0 < v <= 1, "in (0, 1]"),
        ("r_max", cfg.r_max, _is_int, lambda v: 0 <= v <= 10, "in 0..10"),
        ("radius", cfg.radius, _is_real, lambda v: v > 0, "> 0"),
        ("samples", cfg.samples, _is_int, lambda v: v >= 1, ">= 1"),
    ]
    for name, value, typ, ok, msg in checks:
        if value is not None and not (typ(value) and ok(value)):
            raise ConfigError(f"{name} must be {msg}, got {value!r}")
    if cfg.epsilons is not None:
        if (not isinstance(cfg.epsilons, list) or not cfg.epsilons
                or not all(_is_real(e) and e > 0 for e in cfg.epsilons)):
            raise ConfigError("epsilons must be a non-empty list of positive numbers")
        cfg.epsilons = sorted(float(e) for e in cfg.epsilons)
    if cfg.system not in ("discrete", "continuous"):
        raise ConfigError("system must be 'discrete' or 'continuous'")
    if cfg.experiment == "membership" and cfg.replicas < 100:
        raise ConfigError("membership needs at least 100 replicas")
    if cfg.system == "discrete" and cfg.horizon is not None and cfg.horizon != int(cfg.horizon):
        raise ConfigError("the discrete system needs a whole-phase horizon")
    return cfg


# ---------------------------------------------------------------------------
# experiments: each returns (csv rows, json payload)

def _row(cfg, parameter, estimate, half_width=0.0, replicas=1):
    return (cfg.experiment, parameter, float(estimate), float(half_width), int(replicas), cfg.seed)


def _estimate_json(e: EstimateWithCI) -> dict:
    return {"mean": e.mean, "half_width": e.half_width, "replicas": e.replicas}


def _triangle(cfg) -> TriangleSystem:
    if cfg.z_window is None:
        return TriangleSystem(discrete=cfg.system == "discrete")
    return TriangleSystem(discrete=cfg.system == "discrete", z_window=cfg.z_window)


def run_orbit(cfg):
    system = _triangle(cfg)
    path = system.sample_path(cfg.seed)
    K = system.bounded_set(cfg.r, cfg.resolution, cfg.z_window)
    h = cfg.horizon
    cps = np.arange(0, int(h) + 1) if system.discrete else np.linspace(0.0, h, 51)
    steps = pullback_orbit(system, path, K, h, cps)
    rows = [_row(cfg, f"t={s.time:g}", s.semidist) for s in steps]
    return rows, {"system": system.name, "points": len(K),
                  "orbit": [{"time": s.time, "semidist": s.semidist} for s in steps]}


def run_membership(cfg):
    est = membership_probability(cfg.n, cfg.replicas, cfg.seed)
    rows = [_row(cfg, f"n={cfg.n}", est.mean, est.half_width, est.replicas)]
    return rows, {"n": cfg.n, "estimate": _estimate_json(est), "lower": est.lower}


def run_attractor(cfg):
    counts = np.zeros((cfg.replicas, len(cfg.epsilons)), dtype=np.int64)
    sizes = []
    for i in range(cfg.replicas):
        seed = cfg.seed if cfg.replicas == 1 else int(derive_seed(cfg.seed, i))
        path = TriangleSystem(discrete=True).sample_path(seed)
        est = discrete_attractor_estimate(path, cfg.n, cfg.z_window)
        counts[i] = connectivity_report(est, cfg.epsilons).component_counts
        sizes.append(len(est))
    rows, per_eps = [], []
    for j, eps in enumerate(cfg.epsilons):
        split = EstimateWithCI.from_successes(counts[:, j] >= 2)
        rows.append(_row(cfg, f"mean_components@eps={eps:g}", counts[:, j].mean(), 0.0, cfg.replicas))
        rows.append(_row(cfg, f"disconnected@eps={eps:g}", split.mean, split.half_width, cfg.replicas))
        per_eps.append({"epsilon": eps, "component_counts": counts[:, j].tolist(),
                        "disconnected": _estimate_json(split)})
    return rows, {"n": cfg.n, "z_window": cfg.z_window, "points": sizes, "epsilons": per_eps}


def run_weak(cfg):
    system = _triangle(cfg)
    est = weak_attraction_probability(system, cfg.r, cfg.horizon, cfg.radius, cfg.replicas, cfg.seed,
                                      cfg.resolution)
    rows = [_row(cfg, f"r={cfg.r};radius={cfg.radius:g};horizon={cfg.horizon:g}", est.mean,
                 est.half_width, est.replicas)]
    return rows, {"system": system.name, "r": cfg.r, "radius": cfg.radius, "horizon": cfg.horizon,
                  "estimate": _estimate_json(est)}


def run_absorption(cfg):
    system = _triangle(cfg)
    plan = absorption_search(system, cfg.delta, cfg.r_max, cfg.horizon, cfg.replicas, cfg.seed,
                             resolution=cfg.resolution)
    rows = [_row(cfg, f"n={e.n};r={e.r};t_n={e.t_n:g}", e.success_rate, 0.0, cfg.replicas)
            for e in plan.entries]
    entries = [{"n": e.n, "r": e.r, "t_n": e.t_n, "success_rate": e.success_rate, "radius": e.radius,
                "target": t, "points": len(e.K)} for e, t in zip(plan.entries, plan.target)]
    return rows, {"system": system.name, "delta": cfg.delta, "entries": entries}


def run_doublewell(cfg):
    dw = DoubleWellSystem()
    eps_set = 2.0 * dw.grid_step
    set_count, _ = epsilon_components(dw.attractor(), eps_set)
    point = doublewell_point_attractor(unit_grid(101), cfg.horizon)
    point_count, _ = epsilon_components(point, 0.5)
    gap = float(np.minimum(point.x, 1.0 - point.x).max())
    onto = hausdorff_semidist(dw.attractor(), dw.phi(None, 0.5, dw.attractor()))
    rows = [_row(cfg, f"set_components@eps={eps_set:g}", set_count),
            _row(cfg, "point_components@eps=0.5", point_count),
            _row(cfg, "point_gap_to_{0,1}", gap),
            _row(cfg, "set_onto_semidist@t=0.5", onto)]
    return rows, {"set_components": set_count, "point_components": point_count,
                  "point_gap": gap, "onto_semidist": onto, "horizon": cfg.horizon}


def run_verify(cfg):
    results = run_all(cfg.samples, cfg.seed)
    rows = [_row(cfg, f"{r.suite}:{r.name}", r.worst, r.tol, r.samples) for r in results]
    payload = {"passed": all(r.passed for r in results),
               "properties": [{"suite": r.suite, "name": r.name, "passed": r.passed, "worst": r.worst,
                               "tol": r.tol, "samples": r.samples} for r in results]}
    return rows, payload


RUNNERS = {
    "orbit": run_orbit,
    "membership": run_membership,
    "attractor": run_attractor,
    "weak-attract": run_weak,
    "absorption": run_absorption,
    "doublewell": run_doublewell,
    "verify": run_verify,
}


# ---------------------------------------------------------------------------
# output

def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def json_text(cfg: ExperimentConfig, payload: dict) -> str:
    doc = {"config": {k: v for k, v in asdict(cfg).items() if k != "out"}, "result": payload}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _write_all(out_dir: str, files: dict[str, str]):
    """Write every file or none: stage in temporaries, then rename."""
    os.makedirs(out_dir, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.")
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, os.path.join(out_dir, name)))
    except BaseException:
        for tmp, _ in staged:
            os.unlink(tmp)
        raise
    for tmp, final in staged:
        os.replace(tmp, final)


def execute(cfg: ExperimentConfig, stdout=None) -> int:
    """Run a validated config; returns the exit code."""
    stdout = stdout or sys.stdout
    if cfg.experiment == "geometry":
        files = {"geometry.svg": space_svg()}
        status = 0
    else:
        rows, payload = RUNNERS[cfg.experiment](cfg)
        stem = cfg.experiment.replace("-", "_")
        files = {f"{stem}.csv": csv_text(rows), f"{stem}.json": json_text(cfg, payload)}
        status = 0
        if cfg.experiment == "verify":
            for r in run_rows_table(payload):
                print(r, file=stdout)
            status = 0 if payload["passed"] else 1
    if cfg.out:
        _write_all(cfg.out, files)
    elif cfg.experiment == "geometry":
        stdout.write(files["geometry.svg"])
    elif cfg.experiment != "verify":
        stdout.write(files[f"{cfg.experiment.replace('-', '_')}.csv"])
    return status


def run_rows_table(payload) -> list[str]:
    out = []
    for p in payload["properties"]:
        mark = "PASS" if p["passed"] else "FAIL"
        out.append(f"{mark}  {p['suite']:<6} {p['name']:<28} worst={p['worst']:.3e} tol={p['tol']:.1e}")
    out.append("all properties pass" if payload["passed"] else "some properties FAIL")
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--seed", type=int)
    common.add_argument("--replicas", type=int)
    common.add_argument("--n", type=int, help="noise window length")
    common.add_argument("--r", type=int, help="bounded-set level (height <= 2**r)")
    common.add_argument("--horizon", type=float)
    common.add_argument("--epsilon", type=float, action="append", help="repeatable")
    common.add_argument("--out", help="output directory (default: CSV to stdout)")

    parser = argparse.ArgumentParser(prog="rdslab", description="Random triangle-chain attractor experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="run the experiment named in --config")
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(args) -> ExperimentConfig:
    data = load_config(args.config) if args.config else {}
    if args.command == "run":
        if "experiment" not in data:
            raise ConfigError("'run' needs a config naming its experiment")
    elif data.get("experiment", args.command) != args.command:
        raise ConfigError(f"config is for {data['experiment']!r}, not {args.command!r}")
    else:
        data["experiment"] = args.command
    for key in ("seed", "replicas", "n", "r", "horizon", "out"):
        if getattr(args, key) is not None:
            data[key] = getattr(args, key)
    if args.epsilon:
        data["epsilons"] = list(args.epsilon)
    return validate(ExperimentConfig(**data))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return execute(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RdsError, OverflowError) as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
