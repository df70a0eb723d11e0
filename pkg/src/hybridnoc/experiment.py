"""Batch sweeps over (K, S, pattern): layout, link design, selection,
simulation and energy accounting for every cell, plus plain-mesh baselines."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from . import sim as simulator
from .config import Config, config_from_dict
from .energy import account, snake_designs, static_power_summary
from .errors import ConfigurationError, HybridNocError
from .selector import routing_tables, select
from .topology import build
from .traffic import PatternSpec, generate, trace_to_matrix

BASELINE = None  # variant marker for the plain mesh

ROW_FIELDS = (
    "pattern", "K", "S", "status", "packets", "active_links",
    "mean_latency", "p95_latency", "latency_ratio",
    "dynamic_J", "static_J", "total_J", "dynamic_pJ_per_bit", "total_pJ_per_bit",
    "photonic_dynamic_J", "photonic_static_W", "dynamic_ratio", "total_ratio", "error",
)


def atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def pattern_spec(name: str, cfg: Config) -> PatternSpec:
    e = cfg.experiment
    rate = e.mfm_rate if name.startswith("MFM") else e.rate
    return PatternSpec.named(name, rate=rate, duration=e.duration, seed=e.seed)


@dataclass(frozen=True)
class ExperimentPlan:
    config: Config
    out_dir: Path

    def __post_init__(self):
        for k, s in self.config.experiment.variants:
            build(self.config.mesh, k, s)  # raises LayoutError
        for name in self.config.experiment.patterns:
            pattern_spec(name, self.config)

    def cells(self) -> list[tuple[str, int | None, int | None]]:
        e = self.config.experiment
        out = []
        for name in e.patterns:
            if e.baseline:
                out.append((name, BASELINE, BASELINE))
            out += [(name, k, s) for k, s in e.variants]
        return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


def _cell_name(pattern: str, k, s) -> str:
    return f"{pattern}__{'baseline' if k is None else f'K{k}_S{s}'}"


def run_cell(config_dict: dict, pattern: str, k, s, out_dir: str | None = None) -> dict:
    """Run one cell; failures are reported in the row instead of raised."""
    cfg = config_from_dict(config_dict)
    row = {f: None for f in ROW_FIELDS}
    row.update(pattern=pattern, K=k, S=s)
    try:
        mesh = cfg.mesh
        trace = generate(pattern_spec(pattern, cfg), mesh)
        costs = cfg.costs()
        if k is None:
            layout, selection, designs = build(mesh, 1, 1), None, None
            tables = routing_tables(layout, [], costs)
        else:
            layout = build(mesh, k, s)
            designs = snake_designs(layout, cfg.photonic, cfg.selection.total_links,
                                    cfg.experiment.injection_rate)
            selection = select(layout, trace_to_matrix(trace, mesh.routers),
                               cfg.selection.constraints(k), costs)
            selection.check_constraints()
            tables = routing_tables(layout, selection)
        report = simulator.run(layout, selection, tables, trace, cfg.sim)
        energy = account(report, selection, designs, cfg.electrical, cfg.sim, mesh=mesh)
        row.update(
            status="ok", packets=report.packets_injected,
            mean_latency=report.mean_latency, p95_latency=report.percentile(95),
            dynamic_J=energy.dynamic, static_J=energy.static, total_J=energy.total,
            dynamic_pJ_per_bit=energy.dynamic_pj_per_bit,
            total_pJ_per_bit=energy.total_pj_per_bit,
        )
        if k is not None:
            row.update(active_links=len(selection.active),
                       photonic_dynamic_J=energy.photonic_dynamic,
                       photonic_static_W=static_power_summary(layout, designs).total)
        if out_dir is not None:
            base = Path(out_dir) / "cells" / _cell_name(pattern, k, s)
            atomic_write(base.with_suffix(".sim.json"), report.to_json())
            atomic_write(base.with_suffix(".energy.json"), energy.to_json())
            if selection is not None:
                atomic_write(base.with_suffix(".selection.json"), selection.to_json())
    except HybridNocError as exc:
        row.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    return row


def _add_ratios(rows: list[dict]):
    base = {r["pattern"]: r for r in rows if r["K"] is None and r["status"] == "ok"}
    for r in rows:
        b = base.get(r["pattern"])
        if b is None or r["status"] != "ok":
            continue
        for key, col in (("mean_latency", "latency_ratio"), ("dynamic_J", "dynamic_ratio"),
                         ("total_J", "total_ratio")):
            if b[key]:
                r[col] = r[key] / b[key]


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_FIELDS)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in ROW_FIELDS])
    return buf.getvalue()


def _sha(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def manifest(plan: ExperimentPlan) -> dict:
    cfg = plan.config
    traces = {name: _sha(generate(pattern_spec(name, cfg), cfg.mesh).to_text())
              for name in cfg.experiment.patterns}
    return {
        "version": __version__,
        "config": cfg.to_dict(),
        "config_sha256": cfg.digest(),
        "trace_sha256": traces,
        "cells": [[p, k, s] for p, k, s in plan.cells()],
    }


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> list[dict]:
    """Execute every cell; the returned rows follow plan order."""
    cfg_dict = plan.config.to_dict()
    cells = plan.cells()
    out = str(plan.out_dir)
    n = workers if workers is not None else plan.config.experiment.workers
    args = [(cfg_dict, p, k, s, out) for p, k, s in cells]
    if n <= 1:
        rows = [run_cell(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=n) as pool:
            rows = list(pool.map(run_cell, *zip(*args)))
    _add_ratios(rows)
    atomic_write(plan.out_dir / "manifest.json", json.dumps(manifest(plan), indent=2, sort_keys=True))
    atomic_write(plan.out_dir / "results.csv", rows_to_csv(rows))
    return rows


def load_manifest(path: str | Path) -> Config:
    data = json.loads(Path(path).read_text())
    cfg = config_from_dict(data["config"])
    if cfg.digest() != data.get("config_sha256"):
        raise ConfigurationError("manifest configuration hash mismatch")
    return cfg


__all__ = ["ExperimentPlan", "ROW_FIELDS", "atomic_write", "load_manifest", "manifest",
           "pattern_spec", "rows_to_csv", "run_cell", "run_plan"]
