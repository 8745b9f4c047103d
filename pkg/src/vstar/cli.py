"""``vstar`` command line.

Subcommands: ``constants``, ``analytics``, ``phase-grid``, ``simulate``,
``fit``, ``ttc``.  Settings resolve as built-in defaults, then an optional
``--config`` JSON file (a run manifest also works), then explicit flags.
Data files go only to the paths named on the command line; each one gets a
``<path>.manifest.json`` alongside it.

Exit codes: 0 success, 2 usage, 3 domain, 4 I/O, 5 resource.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

from . import atv, tails, theory
from .chain import Regime
from .errors import DomainError, ResourceError, VStarError
from .manifest import RunManifest, load_config, manifest_path

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DOMAIN = 3
EXIT_IO = 4
EXIT_RESOURCE = 5


class UsageError(VStarError):
    pass


DEFAULTS: dict[str, dict[str, Any]] = {
    "constants": {"json": False, "out": None},
    "analytics": {"sigma": None, "k_th": None, "json": False, "out": None},
    "phase-grid": {
        "out": None, "sigma_min": 0.2, "sigma_max": 4.0, "k_min": -3.0, "k_max": 4.0,
        "n_sigma": 200, "n_k": 200, "mark_critical": False, "threads": 1,
    },
    "simulate": {
        "sigma": None, "table1": False, "n": 1_000_000, "t": 15, "w0": 20_000.0,
        "sigma_low": 0.1, "k_th": 2.5, "seed": None, "chunk_size": atv.DEFAULT_CHUNK,
        "threads": 1, "full_scale": False, "out": None, "snapshot": None, "snapshot_csv": None,
    },
    "fit": {
        "snapshot": None, "report": None, "rank_csv": None, "floor": tails.DEFAULT_FLOOR,
        "window": list(tails.DEFAULT_WINDOW), "sigma": None, "k_th": None,
    },
    "ttc": {"json": False, "out": None},
}  # fmt: skip


def _build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    p = argparse.ArgumentParser(prog="vstar", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--config", help="JSON config file or run manifest", default=S)

    sp = sub.add_parser("constants", help="the four critical constants")
    common(sp)
    sp.add_argument("--json", action="store_true", default=S)
    sp.add_argument("--out", default=S, help="also write the JSON record here")

    sp = sub.add_parser("analytics", help="p, beta_eff, alpha and regime at one (sigma, k_th)")
    common(sp)
    sp.add_argument("--sigma", type=float, default=S)
    sp.add_argument("--k-th", dest="k_th", type=float, default=S)
    sp.add_argument("--json", action="store_true", default=S)
    sp.add_argument("--out", default=S)

    sp = sub.add_parser("phase-grid", help="write the (sigma, k_th) phase grid as CSV")
    common(sp)
    sp.add_argument("--out", default=S)
    sp.add_argument("--sigma-min", dest="sigma_min", type=float, default=S)
    sp.add_argument("--sigma-max", dest="sigma_max", type=float, default=S)
    sp.add_argument("--k-min", dest="k_min", type=float, default=S)
    sp.add_argument("--k-max", dest="k_max", type=float, default=S)
    sp.add_argument("--n-sigma", dest="n_sigma", type=int, default=S)
    sp.add_argument("--n-k", dest="n_k", type=int, default=S)
    sp.add_argument("--mark-critical", dest="mark_critical", action="store_true", default=S,
                    help="add sigma columns at sqrt(pi/2) and sqrt(2 pi)")
    sp.add_argument("--threads", type=int, default=S)

    sp = sub.add_parser("simulate", help="run the ATV survival game and write bucket counts")
    common(sp)
    sp.add_argument("--sigma", type=float, default=S)
    sp.add_argument("--table1", action="store_true", default=S, help="run the nine reference volatilities")
    sp.add_argument("--n", type=int, default=S)
    sp.add_argument("--t", type=int, default=S)
    sp.add_argument("--w0", type=float, default=S)
    sp.add_argument("--sigma-low", dest="sigma_low", type=float, default=S)
    sp.add_argument("--k-th", dest="k_th", type=float, default=S)
    sp.add_argument("--seed", type=int, default=S)
    sp.add_argument("--chunk-size", dest="chunk_size", type=int, default=S)
    sp.add_argument("--threads", type=int, default=S)
    sp.add_argument("--full-scale", dest="full_scale", action="store_true", default=S, help="n = 10^7")
    sp.add_argument("--out", default=S, help="bucket table CSV")
    sp.add_argument("--snapshot", default=S, help="binary wealth snapshot (single sigma only)")
    sp.add_argument("--snapshot-csv", dest="snapshot_csv", default=S)

    sp = sub.add_parser("fit", help="fit the wealth tail of a snapshot")
    common(sp)
    sp.add_argument("snapshot", nargs="?", default=S)
    sp.add_argument("--report", default=S, help="fit report JSON")
    sp.add_argument("--rank-csv", dest="rank_csv", default=S)
    sp.add_argument("--floor", type=float, default=S)
    sp.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), default=S)
    sp.add_argument("--sigma", type=float, default=S, help="overlay theory at this sigma")
    sp.add_argument("--k-th", dest="k_th", type=float, default=S)

    sp = sub.add_parser("ttc", help="time-to-criticality table")
    common(sp)
    sp.add_argument("--json", action="store_true", default=S)
    sp.add_argument("--out", default=S)
    return p


def _resolve(command: str, ns: argparse.Namespace) -> dict[str, Any]:
    flags = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    cfg = dict(DEFAULTS[command])
    if getattr(ns, "config", None):
        try:
            loaded = load_config(ns.config)
        except (OSError, json.JSONDecodeError) as exc:
            raise OSError(f"cannot read config {ns.config}: {exc}") from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(loaded)
    cfg.update(flags)
    return cfg


def _require(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + k.replace("_", "-") for k in missing))


def _finish(command: str, cfg: dict, outputs: list[str], seeds: list[int] | None = None, manifest: RunManifest | None = None) -> None:
    if not outputs:
        return
    m = manifest or RunManifest(command, cfg)
    m.seeds = seeds or []
    m.finish(outputs)
    m.write(manifest_path(outputs[0]))


def _write_json(path: str, obj: Any) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(x: float | None) -> str:
    return "none" if x is None else f"{x:.10g}"


# --- commands ------------------------------------------------------------------


def cmd_constants(cfg: dict) -> int:
    c = theory.four_constants()
    record = c.as_dict()
    record["rounded"] = {
        "sigma_star": f"{c.sigma_star:.4f}",
        "sigma_star_th": f"{c.sigma_star_th:.4f}",
        "z_star": f"{c.z_star:.4f}",
        "k_star_th": f"{c.k_star_th:.2f}",
    }
    if cfg["json"]:
        print(json.dumps(record, sort_keys=True))
    else:
        print(f"sigma_star    = {c.sigma_star!r}  (~{record['rounded']['sigma_star']})")
        print(f"sigma_star_th = {c.sigma_star_th!r}  (~{record['rounded']['sigma_star_th']})")
        print(f"z_star        = {c.z_star!r}  (~{record['rounded']['z_star']})")
        print(f"k_star_th     = {c.k_star_th!r}  (~{record['rounded']['k_star_th']})")
        print(f"sigma_star / sigma_star_th = {c.sigma_star / c.sigma_star_th!r}")
    if cfg["out"]:
        _write_json(cfg["out"], record)
        _finish("constants", cfg, [cfg["out"]])
    return EXIT_OK


def cmd_analytics(cfg: dict) -> int:
    _require(cfg, "sigma", "k_th")
    try:
        params = theory.VStarParams(cfg["sigma"], cfg["k_th"])
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    d = theory.derive(params)
    record = {"sigma": params.sigma, "k_th": params.k_th, "z": d.z, "p": d.p,
              "beta_eff": d.beta_eff, "alpha": d.alpha, "regime": d.regime.value}  # fmt: skip
    if cfg["json"]:
        print(json.dumps(record, sort_keys=True))
    else:
        for k in ("sigma", "k_th", "z", "p", "beta_eff", "alpha"):
            print(f"{k:<9}= {_fmt(record[k])}")
        print(f"regime   = {record['regime']}")
    if cfg["out"]:
        _write_json(cfg["out"], record)
        _finish("analytics", cfg, [cfg["out"]])
    return EXIT_OK


def cmd_phase_grid(cfg: dict) -> int:
    _require(cfg, "out")
    spec = theory.PhaseGridSpec(
        sigma_min=cfg["sigma_min"], sigma_max=cfg["sigma_max"], k_min=cfg["k_min"], k_max=cfg["k_max"],
        n_sigma=cfg["n_sigma"], n_k=cfg["n_k"], mark_critical=bool(cfg["mark_critical"]),
    )  # fmt: skip
    manifest = RunManifest("phase-grid", cfg)
    grid = theory.phase_grid(spec, workers=int(cfg["threads"]))
    grid.to_csv(cfg["out"])
    _finish("phase-grid", cfg, [cfg["out"]], manifest=manifest)
    regimes = [c.regime for c in grid.cells]
    print(f"wrote {len(grid.cells)} cells to {cfg['out']} "
          f"({regimes.count(Regime.SUPERCRITICAL)} super, {regimes.count(Regime.SUBCRITICAL)} sub)")  # fmt: skip
    return EXIT_OK


def cmd_simulate(cfg: dict) -> int:
    _require(cfg, "seed", "out")
    if cfg["full_scale"]:
        cfg["n"] = 10_000_000
    if cfg["table1"]:
        sigmas = list(atv.TABLE1_SIGMAS)
        if cfg["snapshot"] or cfg["snapshot_csv"]:
            raise UsageError("--snapshot needs a single --sigma, not --table1")
    else:
        _require(cfg, "sigma")
        sigmas = [cfg["sigma"]]
    manifest = RunManifest("simulate", cfg)
    cfgs = [
        atv.SimConfig(n=cfg["n"], t=cfg["t"], sigma_high=s, seed=cfg["seed"], w0=cfg["w0"],
                      sigma_low=cfg["sigma_low"], k_th=cfg["k_th"], chunk_size=cfg["chunk_size"])
        for s in sigmas
    ]  # fmt: skip
    tables = []
    outputs = [cfg["out"]]
    for c in cfgs:
        snap = atv.simulate(c, threads=cfg["threads"])
        tables.append(atv.bucketize(snap, sigma=c.sigma_high))
        if cfg["snapshot"]:
            snap.dump(cfg["snapshot"])
            outputs.append(cfg["snapshot"])
        if cfg["snapshot_csv"]:
            snap.to_csv(cfg["snapshot_csv"])
            outputs.append(cfg["snapshot_csv"])
    atv.buckets_to_csv(tables, cfg["out"])
    _finish("simulate", cfg, outputs, seeds=[c.seed for c in cfgs], manifest=manifest)
    for t in tables:
        f = t.fractions()
        ratio = "inf" if math.isinf(t.ratio) else f"{t.ratio:.1f}"
        print(f"sigma={t.sigma:.2f} bankrupt={f['bankrupt']:.4f} heavy={f['heavy_loss']:.4f} "
              f"mid={f['mid']:.4f} >20k={f['gt_20k']:.4f} >1M={t.count_above(1e6)} "
              f">10M={t.count_above(1e7)} ratio={ratio}")  # fmt: skip
    return EXIT_OK


def cmd_fit(cfg: dict) -> int:
    _require(cfg, "snapshot", "report")
    manifest = RunManifest("fit", cfg)
    snap = atv.WealthSnapshot.load(cfg["snapshot"])
    curve = tails.rank_curve(snap, floor=cfg["floor"])
    window = tuple(float(x) for x in cfg["window"])
    fits = []
    for method in tails.METHODS:
        fit = tails.fit_tail(curve, method, window)
        entry = fit.as_dict()
        try:
            entry["plateau"] = tails.tail_stability(curve, method).plateau
        except DomainError:
            entry["plateau"] = False
        fits.append(entry)
    report: dict[str, Any] = {
        "snapshot": str(cfg["snapshot"]),
        "n": snap.n,
        "n_above_floor": len(curve),
        "floor": curve.floor,
        "fits": fits,
    }
    if cfg["sigma"] is not None and cfg["k_th"] is not None:
        params = theory.VStarParams(cfg["sigma"], cfg["k_th"])
        alpha = theory.power_law_exponent(params)
        report["theory_alpha"] = alpha
        if alpha is None:
            report["overlay_notice"] = f"overlay omitted: sigma={params.sigma}, k_th={params.k_th} is not supercritical"
            print(report["overlay_notice"])
        else:
            j, k = tails.window_ranks(len(curve), window)
            v_range = (float(curve.wealth[k]), float(curve.wealth[j]))
            report["overlay"] = [list(pt) for pt in tails.theory_overlay(params, v_range)]
    _write_json(cfg["report"], report)
    outputs = [cfg["report"]]
    if cfg["rank_csv"]:
        curve.to_csv(cfg["rank_csv"])
        outputs.append(cfg["rank_csv"])
    _finish("fit", cfg, outputs, seeds=[snap.seed_used], manifest=manifest)
    for f in fits:
        print(f"{f['method']:<16} alpha_hat={f['alpha_hat']:.4f} +/- {f['stderr']:.4f} "
              f"n_tail={f['n_tail']} plateau={f['plateau']}")  # fmt: skip
    return EXIT_OK


def cmd_ttc(cfg: dict) -> int:
    rows = theory.ttc_table()
    if cfg["json"]:
        print(json.dumps(rows))
    else:
        print(f"{'sigma':>6}  {'T* (years)':>14}  {'T*':>12}  {'T*_th (years)':>14}  {'T*_th':>12}")
        for r in rows:
            print(f"{r['sigma']:>6.0%}  {r['t_star_years']:>14.6g}  {r['t_star']:>12}  "
                  f"{r['t_star_th_years']:>14.6g}  {r['t_star_th']:>12}")  # fmt: skip
    if cfg["out"]:
        _write_json(cfg["out"], rows)
        _finish("ttc", cfg, [cfg["out"]])
    return EXIT_OK


COMMANDS = {
    "constants": cmd_constants,
    "analytics": cmd_analytics,
    "phase-grid": cmd_phase_grid,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "ttc": cmd_ttc,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        cfg = _resolve(ns.command, ns)
        return COMMANDS[ns.command](cfg)
    except UsageError as exc:
        print(f"vstar {ns.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ResourceError, MemoryError) as exc:
        print(f"vstar {ns.command}: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"vstar {ns.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DomainError, atv.SweepError) as exc:
        print(f"vstar {ns.command}: domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
