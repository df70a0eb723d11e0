"""Command-line entry point: ``hybridnoc <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from dataclasses import replace
from pathlib import Path

from . import dse
from . import photonic as ph
from . import sim as simulator
from .config import load_config
from .electrical import sweep_router_configs
from .energy import account, snake_designs, static_power_summary
from .errors import HybridNocError
from .experiment import ExperimentPlan, atomic_write, load_manifest, run_plan
from .selector import load_traffic_csv, routing_tables, select
from .topology import VARIANTS, build, resource_summary
from .traffic import PatternSpec, generate, read_trace, trace_to_matrix

_LENGTH = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(mm|m)?\s*$")


def length_arg(text: str) -> float:
    """Length in metres from ``70mm``, ``0.07m`` or a bare number of millimetres."""
    m = _LENGTH.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"invalid length {text!r} (use e.g. 70mm or 0.07m)")
    value = float(m.group(1))
    if value <= 0:
        raise argparse.ArgumentTypeError(f"length must be positive, got {text!r}")
    return value if m.group(2) == "m" else value * 1e-3


def _emit(args, name: str, text: str):
    if args.out is None:
        sys.stdout.write(text)
    else:
        atomic_write(Path(args.out) / name, text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_dse(args, cfg) -> int:
    tech, grid = cfg.photonic, cfg.dse
    inj = args.injection if args.injection is not None else grid.injection_rate
    if args.grid:
        grid = replace(grid, injection_rate=inj)
        configs = list(dse.enumerate_grid(grid, tech))
        results = dse.run_grid(grid, tech, workers=args.workers or 1)
        summary = dse.summarize(results, configs)
        if not summary.optima:
            print("error: every design point in the grid is infeasible", file=sys.stderr)
            return 3
        _emit(args, "dse_grid.csv", dse.results_to_csv(results))
        optima = [summary.optima[k] for k in sorted(summary.optima)]
        _emit(args, "dse_optima.csv", dse.results_to_csv(optima))
        print(f"evaluated {summary.evaluated} points, {summary.infeasible} infeasible",
              file=sys.stderr)
        return 0
    if args.E is None or args.S is None:
        print("error: --E and --S are required", file=sys.stderr)
        return 2
    if args.trend:
        rows = dse.compare_vs_electrical(grid.lengths, args.E, args.S, tech, cfg.electrical, inj)
        trend = dse.trend_table(grid.lengths, args.E, args.S, tech, inj)
        out = []
        for t, c in zip(trend, rows):
            if t.result is None:
                out.append((f"{t.length * 1e3:g}", "", "", "", f"{c.electrical_pj:.6g}", t.error))
                continue
            r = t.result
            out.append((f"{t.length * 1e3:g}", f"{r.config.data_rate / 1e9:g}", r.config.waveguides,
                        f"{r.total:.6g}", f"{c.electrical_pj:.6g}", ""))
        if all(t.result is None for t in trend):
            print("error: no feasible design at any length", file=sys.stderr)
            return 3
        _emit(args, f"dse_trend_E{args.E}_S{args.S}.csv",
              _csv(("L_mm", "D_lambda_Gbps", "W", "photonic_pJ", "electrical_pJ", "error"), out))
        return 0
    if args.L is None:
        print("error: --L is required for a single design point", file=sys.stderr)
        return 2
    best = dse.find_optimum(args.L, args.E, args.S, tech, inj, grid.data_rates)
    _emit(args, "dse_point.csv", dse.results_to_csv([best]))
    return 0


def cmd_router_sweep(args, cfg) -> int:
    inj = args.injection if args.injection is not None else cfg.dse.injection_rate
    rows = [(r.config.label, r.config.flit_size, f"{r.config.clock / 1e9:g}", r.config.buffer_depth,
             f"{r.dynamic_pj:.6g}", f"{r.leakage_pj:.6g}", f"{r.energy_per_bit:.6g}")
            for r in sweep_router_configs(cfg.electrical, inj, cfg.mesh.hop_length)]
    _emit(args, "router_sweep.csv",
          _csv(("config", "flit_bits", "clock_GHz", "buffer_flits", "dynamic_pJ", "leakage_pJ",
                "total_pJ"), rows))
    return 0


def _variant_summary(cfg, k, s) -> dict:
    layout = build(cfg.mesh, k, s)
    designs = snake_designs(layout, cfg.photonic, cfg.selection.total_links, cfg.dse.injection_rate)
    res = designs[0].result
    geo = ph.derive_geometry(res.config, cfg.photonic)
    summary = resource_summary(layout, 2 * res.config.waveguides, geo.wavelengths_per_waveguide,
                               res.config.data_rate)
    static = static_power_summary(layout, designs)
    return {
        "K": k, "S": s, "waveguides": summary.waveguides,
        "avg_wavelengths_per_waveguide": round(summary.avg_wavelengths_per_waveguide, 4),
        "length_per_waveguide_mm": round(summary.length_per_waveguide * 1e3, 4),
        "addon_routers": summary.addon_routers, "mrrs": summary.mrrs,
        "data_rate_Gbps": summary.data_rate / 1e9,
        "laser_W": static.laser, "trimming_W": static.trimming, "leakage_W": static.leakage,
    }


def cmd_topo(args, cfg) -> int:
    if args.all:
        rows = [_variant_summary(cfg, k, s) for k, s in VARIANTS]
        header = list(rows[0])
        _emit(args, "variants.csv", _csv(header, [[r[h] for h in header] for r in rows]))
        return 0
    layout = build(cfg.mesh, args.K, args.S)
    data = layout.to_dict()
    data["resources"] = _variant_summary(cfg, args.K, args.S)
    _emit(args, f"topo_K{args.K}_S{args.S}.json", json.dumps(data, indent=2) + "\n")
    return 0


def _traffic(args, cfg):
    """Trace (or None) and traffic matrix from --trace, --matrix or --pattern."""
    n = cfg.mesh.routers
    if getattr(args, "trace", None):
        trace = read_trace(args.trace, n)
        return trace, trace_to_matrix(trace, n)
    if getattr(args, "matrix", None):
        return None, load_traffic_csv(args.matrix, n)
    name = args.pattern or "FCP-center"
    e = cfg.experiment
    rate = e.mfm_rate if name.startswith("MFM") else e.rate
    trace = generate(PatternSpec.named(name, rate=rate, duration=e.duration, seed=e.seed), cfg.mesh)
    return trace, trace_to_matrix(trace, n)


def cmd_select(args, cfg) -> int:
    layout = build(cfg.mesh, args.K, args.S)
    _, matrix = _traffic(args, cfg)
    sel = select(layout, matrix, cfg.selection.constraints(args.K), cfg.costs())
    sel.check_constraints()
    _emit(args, f"selection_K{args.K}_S{args.S}.json", sel.to_json() + "\n")
    if args.tables and args.out is not None:
        tables = routing_tables(layout, sel)
        atomic_write(Path(args.out) / f"routing_K{args.K}_S{args.S}.json",
                     json.dumps(tables.to_dict()) + "\n")
    return 0


def cmd_sim(args, cfg) -> int:
    trace, matrix = _traffic(args, cfg)
    if trace is None:
        print("error: sim needs --trace or --pattern", file=sys.stderr)
        return 2
    costs = cfg.costs()
    if args.K is None:
        layout, selection, designs = build(cfg.mesh, 1, 1), None, None
        tables = routing_tables(layout, [], costs)
        tag = "baseline"
    else:
        layout = build(cfg.mesh, args.K, args.S)
        selection = select(layout, matrix, cfg.selection.constraints(args.K), costs)
        tables = routing_tables(layout, selection)
        designs = snake_designs(layout, cfg.photonic, cfg.selection.total_links,
                                cfg.dse.injection_rate)
        tag = f"K{args.K}_S{args.S}"
    report = simulator.run(layout, selection, tables, trace, cfg.sim)
    energy = account(report, selection, designs, cfg.electrical, cfg.sim, mesh=cfg.mesh)
    if args.out is None:
        print(json.dumps({"sim": report.summary(), "energy": energy.metrics()}, indent=2,
                         sort_keys=True))
    else:
        _emit(args, f"sim_{tag}.json", report.to_json() + "\n")
        _emit(args, f"latency_{tag}.csv", report.latencies_csv())
        _emit(args, f"energy_{tag}.json", energy.to_json() + "\n")
    return 0


def cmd_experiment(args, cfg) -> int:
    if args.manifest:
        cfg = load_manifest(args.manifest)
        if args.seed is not None:
            cfg = replace(cfg, experiment=replace(cfg.experiment, seed=args.seed))
    out = Path(args.out or "results")
    plan = ExperimentPlan(cfg, out)
    rows = run_plan(plan, args.workers)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"{len(rows)} cells, {failed} failed; results in {out / 'results.csv'}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hybridnoc", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--out", help="output directory (default: stdout for single results)")
    common.add_argument("--seed", type=int, help="traffic generator seed (overrides the config)")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("dse", parents=[common], help="photonic link design-space exploration")
    d.add_argument("--L", type=length_arg, help="waveguide length, e.g. 70mm")
    d.add_argument("--E", type=int, help="logical links")
    d.add_argument("--S", type=int, help="stride")
    d.add_argument("--injection", type=float)
    d.add_argument("--trend", action="store_true", help="optimum versus length")
    d.add_argument("--grid", action="store_true", help="full design grid")
    d.add_argument("--workers", type=int)
    d.set_defaults(func=cmd_dse)

    r = sub.add_parser("router-sweep", parents=[common], help="electrical router configurations")
    r.add_argument("--injection", type=float)
    r.set_defaults(func=cmd_router_sweep)

    t = sub.add_parser("topo", parents=[common], help="snake layout and resources")
    t.add_argument("--K", type=int, default=1)
    t.add_argument("--S", type=int, default=1)
    t.add_argument("--all", action="store_true", help="summary of every variant")
    t.set_defaults(func=cmd_topo)

    for name, func, help_ in (("select", cmd_select, "greedy logical-link selection"),
                              ("sim", cmd_sim, "simulate and account one configuration")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--K", type=int, default=None if name == "sim" else 1)
        s.add_argument("--S", type=int, default=1)
        src = s.add_mutually_exclusive_group()
        src.add_argument("--trace")
        src.add_argument("--pattern")
        if name == "select":
            src.add_argument("--matrix", help="CSV with src,dst,volume")
            s.add_argument("--tables", action="store_true", help="also write routing tables")
        s.set_defaults(func=func)

    e = sub.add_parser("experiment", parents=[common], help="sweep variants and patterns")
    e.add_argument("--workers", type=int)
    e.add_argument("--manifest", help="replay the configuration recorded in a manifest")
    e.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, experiment=replace(cfg.experiment, seed=args.seed))
        return args.func(args, cfg)
    except HybridNocError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
