"""Batch front door: config-driven experiments with CSV/JSON/SVG outputs.

Usage: projlab <command> --config path.json [--set key=value]... [--out dir]

Commands: gen, cover, sweep, incidence, decouple.  All outputs are
byte-identical across reruns with the same resolved config and seed; the
PROJLAB_THREADS environment variable caps worker threads without
affecting the output bytes.  Exit codes: 0 ok, 2 invalid config,
3 infeasible experiment.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import covering as covering_mod
from . import fourier, incidence, projection
from .curve import named_curve
from .dyadic import dyadic_level
from .errors import InfeasibleError, ProjLabError
from .fractal import cantor_1d, full_grid, product_set, save_csv
from .svgplot import line_plot

DEFAULTS = {
    "gen": {
        "curve": "model",
        "generator": "cantor3d",
        "ratio": 1 / 3,
        "depth": 4,
        "seed": 0,
    },
    "cover": {
        "curve": "model",
        "generator": "cantor1d",
        "ratio": 1 / 3,
        "depth": 6,
        "s": 0.8,
        "epsilon": 1.0,
        "min_level": 0,
        "seed": 0,
    },
    "sweep": {
        "curve": "model",
        "ratio": 1 / 3,
        "depth": 4,
        "s": 1.0,
        "theta_grid": 256,
        "margin": 0.1,
        "seed": 0,
    },
    "incidence": {
        "curve": "model",
        "s": 0.5,
        "t": 0.5,
        "deltas": [2.0**-4, 2.0**-5, 2.0**-6],
        "epsilon": 0.1,
        "n_seeds": 1,
        "seed": 0,
    },
    "decouple": {
        "curve": "model",
        "t": 0.5,
        "deltas": [2.0**-4, 2.0**-5, 2.0**-6],
        "n_seeds": 5,
        "seed": 0,
    },
}

COMMANDS = tuple(DEFAULTS)


class ConfigError(ValueError):
    pass


def threads() -> int:
    try:
        return max(1, int(os.environ.get("PROJLAB_THREADS", "1")))
    except ValueError:
        return 1


def resolve_config(command: str, raw: dict) -> dict:
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {COMMANDS}")
    cfg = dict(DEFAULTS[command])
    unknown = set(raw) - set(cfg) - {"command"}
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg.update({k: v for k, v in raw.items() if k != "command"})
    cfg["command"] = command
    # shared validation
    if cfg["curve"] not in ("model", "helix", "greatcircle"):
        raise ConfigError(f"unknown curve {cfg['curve']!r}")
    for key in ("s", "t"):
        if key in cfg and not (0.0 < float(cfg[key]) <= 1.0):
            raise ConfigError(f"{key} must lie in (0, 1], got {cfg[key]}")
    if "deltas" in cfg:
        try:
            for d in cfg["deltas"]:
                dyadic_level(float(d))
        except ProjLabError as exc:
            raise ConfigError(f"bad deltas: {exc}") from exc
    if "theta_grid" in cfg and int(cfg["theta_grid"]) < 2:
        raise ConfigError("theta_grid must be at least 2")
    if "seed" in cfg:
        cfg["seed"] = int(cfg["seed"])
    return cfg


def _write(path: Path, text: str) -> None:
    path.write_text(text, newline="\n")


def _summary_json(cfg: dict, results: dict) -> str:
    return json.dumps({"config": cfg, **results}, sort_keys=True, indent=2) + "\n"


def _build_set(cfg: dict):
    gen = cfg.get("generator", "cantor3d")
    ratio, depth = float(cfg["ratio"]), int(cfg["depth"])
    if gen == "cantor3d":
        c = cantor_1d(ratio, depth)
        return product_set(c, c, c)
    if gen == "cantor1d":
        return cantor_1d(ratio, depth)
    if gen == "grid1d":
        return full_grid(depth)
    raise ConfigError(f"unknown generator {gen!r}")


def run_gen(cfg: dict, out: Path) -> dict:
    pset = _build_set(cfg)
    save_csv(pset, out / "gen.csv")
    vals = pset.values
    svg = line_plot(
        vals[:, 0][:4096],
        vals[:, 1][:4096] if pset.ambient_dim > 1 else np.zeros(min(len(pset), 4096)),
        title=f"{cfg['generator']} cells (first two coordinates)",
        xlabel="x",
        ylabel="y",
    ).replace('stroke="#1f77b4" stroke-width="1.5"', 'stroke="none"')
    _write(out / "gen.svg", svg)
    return {
        "cells": len(pset),
        "delta": pset.delta,
        "nominal_dim": pset.nominal_dim,
    }


def run_cover(cfg: dict, out: Path) -> dict:
    pset = _build_set(cfg)
    cov = covering_mod.greedy_cover(
        pset, float(cfg["s"]), float(cfg["epsilon"]), int(cfg["min_level"])
    )
    rep = covering_mod.validate_covering(cov)
    _write(out / "cover.json", covering_mod.covering_to_json(cov) + "\n")
    levels = sorted(cov.levels)
    counts = [len(cov.levels[k]) for k in levels]
    rows = ["level,cubes"] + [f"{k},{c}" for k, c in zip(levels, counts)]
    _write(out / "cover.csv", "\n".join(rows) + "\n")
    _write(
        out / "cover.svg",
        line_plot(levels, counts, "covering cubes per level", "level k", "#cubes"),
    )
    return {
        "budget_value": rep.budget_value,
        "worst_condition3_ratio": rep.worst_condition3_ratio,
        "cover_ok": rep.cover_ok,
        "cube_count": cov.cube_count(),
    }


def run_sweep(cfg: dict, out: Path) -> dict:
    pset = _build_set({**cfg, "generator": "cantor3d"})
    curve = named_curve(cfg["curve"])
    n = int(cfg["theta_grid"])
    s, margin = float(cfg["s"]), float(cfg["margin"])
    r_min, r_max = projection._auto_fit_range(pset.delta)

    def one(i):
        theta = i / n
        fit = projection.box_dimension(
            projection.project_line(pset, curve, theta), r_min, r_max
        )
        return projection.SweepRow(
            theta=theta,
            est_dim=fit.slope,
            r2=fit.r2,
            below_s=bool(fit.slope < s - margin),
        )

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        rows = list(pool.map(one, range(n)))

    flagged = [r.theta for r in rows if r.below_s]
    exc_fit = 0.0
    if flagged:
        k_theta = max(3, math.ceil(math.log2(n)))
        idx = np.unique(np.round(np.array(flagged) * 2**k_theta).astype(np.int64))
        from .fractal import PointSet

        exc_set = PointSet(1, 2.0**-k_theta, idx[:, None], nominal_dim=1.0)
        try:
            exc_fit = projection.box_dimension(exc_set, 4 * exc_set.delta, 0.25).slope
        except ProjLabError:
            exc_fit = 0.0
    lines = ["theta,est_dim,r2,below_s"]
    for r in rows:
        lines.append(f"{r.theta!r},{r.est_dim!r},{r.r2!r},{str(r.below_s).lower()}")
    _write(out / "sweep.csv", "\n".join(lines) + "\n")
    _write(
        out / "sweep.svg",
        line_plot(
            [r.theta for r in rows],
            [r.est_dim for r in rows],
            f"projected dimension vs theta (s={s})",
            "theta",
            "est_dim",
            flags=[r.below_s for r in rows],
        ),
    )
    alpha = pset.nominal_dim
    return {
        "s": s,
        "alpha": alpha,
        "bound": projection.theorem_bound(s, alpha),
        "exceptional_fraction": len(flagged) / n,
        "exceptional_dim_fit": exc_fit,
    }


def run_incidence(cfg: dict, out: Path) -> dict:
    curve = named_curve(cfg["curve"])
    s, t, eps = float(cfg["s"]), float(cfg["t"]), float(cfg["epsilon"])
    cells = [
        (float(d), int(cfg["seed"]) + j)
        for d in cfg["deltas"]
        for j in range(int(cfg["n_seeds"]))
    ]

    def one(cell):
        delta, seed = cell
        spec = incidence.IncidenceSpec(delta=delta, s=s, t=t, seed=seed, curve=cfg["curve"])
        c = incidence.random_admissible_config(spec)
        rep = incidence.verify_incidence_bound(c, curve, epsilon=eps)
        return delta, seed, rep

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        results = list(pool.map(one, cells))

    lines = ["delta,seed,lhs,rhs,fitted_C,heavy_count,theta_count"]
    for delta, seed, rep in results:
        lines.append(
            f"{delta!r},{seed},{rep.lhs!r},{rep.rhs!r},{rep.fitted_c!r},"
            f"{rep.heavy_count},{rep.theta_count}"
        )
    _write(out / "incidence.csv", "\n".join(lines) + "\n")
    per_delta = {}
    for delta, _, rep in results:
        per_delta.setdefault(delta, []).append(rep.fitted_c)
    ds = sorted(per_delta)
    means = [float(np.mean(per_delta[d])) for d in ds]
    _write(
        out / "incidence.svg",
        line_plot(
            [math.log2(1 / d) for d in ds],
            means,
            f"fitted_C vs scale (s={s}, t={t})",
            "log2(1/delta)",
            "fitted_C",
        ),
    )
    all_c = [rep.fitted_c for _, _, rep in results]
    return {
        "max_fitted_C": max(all_c),
        "min_fitted_C": min(all_c),
        "cross_scale_ratio": max(means) / min(means) if means else 1.0,
        "ceiling_ok": bool(max(all_c) <= incidence.FITTED_C_CEILING),
    }


def run_decouple(cfg: dict, out: Path) -> dict:
    curve = named_curve(cfg["curve"])
    t = float(cfg["t"])
    cells = [
        (float(d), int(cfg["seed"]) + j)
        for d in cfg["deltas"]
        for j in range(int(cfg["n_seeds"]))
    ]
    geos = {}
    for d in sorted({c[0] for c in cells}):
        geos[d] = fourier.build_geometry(curve, d)

    def one(cell):
        delta, seed = cell
        geo = geos[delta]
        caps = fourier.tspacing_subsample(geo, t, seed)
        g = fourier.random_cap_function(geo, caps, seed=seed + 10000)
        rep = fourier.decoupling_ratio(g, caps, geo)
        return delta, seed, rep

    with ThreadPoolExecutor(max_workers=threads()) as pool:
        results = list(pool.map(one, cells))

    lines = ["delta,t,seed,lhs,rhs,ratio"]
    for delta, seed, rep in results:
        lines.append(f"{delta!r},{t!r},{seed},{rep.lhs!r},{rep.rhs!r},{rep.ratio!r}")
    _write(out / "decouple.csv", "\n".join(lines) + "\n")
    per_delta = {}
    for delta, _, rep in results:
        per_delta.setdefault(delta, []).append(rep.ratio)
    ds = sorted(per_delta)
    means = [float(np.mean(per_delta[d])) for d in ds]
    if len(ds) >= 2:
        slope = float(
            np.polyfit([math.log2(1 / d) for d in ds], np.log2(means), 1)[0]
        )
    else:
        slope = 0.0
    _write(
        out / "decouple.svg",
        line_plot(
            [math.log2(1 / d) for d in ds],
            means,
            f"decoupling ratio vs scale (t={t})",
            "log2(1/delta)",
            "mean ratio",
        ),
    )
    return {
        "max_ratio": max(r.ratio for _, _, r in results),
        "fitted_exponent": slope,
    }


RUNNERS = {
    "gen": run_gen,
    "cover": run_cover,
    "sweep": run_sweep,
    "incidence": run_incidence,
    "decouple": run_decouple,
}


def run(command: str, raw_config: dict, out_dir) -> int:
    """Execute one command; returns the process exit code."""
    try:
        cfg = resolve_config(command, raw_config)
    except (ConfigError, ProjLabError, ValueError, TypeError) as exc:
        print(json.dumps({"error": {"kind": "config", "message": str(exc)}}))
        return 2
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        results = RUNNERS[command](cfg, out)
    except InfeasibleError as exc:
        print(json.dumps({"error": {"kind": "infeasible", "message": str(exc)}}))
        return 3
    except ProjLabError as exc:
        print(json.dumps({"error": {"kind": "config", "message": str(exc)}}))
        return 2
    _write(out / f"{command}_summary.json", _summary_json(cfg, results))
    return 0


def _parse_set(pairs):
    out = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, value = pair.split("=", 1)
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="projlab", description="fractal projection / incidence / decoupling lab"
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE",
        help="override a config key (JSON-parsed value)",
    )
    parser.add_argument("--out", default="projlab-out", help="output directory")
    args = parser.parse_args(argv)
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(json.dumps({"error": {"kind": "config", "message": str(exc)}}))
            return 2
    try:
        raw.update(_parse_set(args.set))
    except ConfigError as exc:
        print(json.dumps({"error": {"kind": "config", "message": str(exc)}}))
        return 2
    return run(args.command, raw, args.out)


if __name__ == "__main__":
    sys.exit(main())
