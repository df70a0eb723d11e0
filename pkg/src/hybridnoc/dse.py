"""Exhaustive design-space exploration of MWMR link parameters.

The search is deliberately brute force: every (D_lambda, W) admissible for a
given (L, E, S) is evaluated with the closed-form link model and the minimum
energy per bit is kept.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from . import photonic as ph
from .electrical import ElectricalCoefficients, electrical_chain_energy_per_bit
from .errors import (
    ConfigurationError, HybridNocError, InfeasibleDesignError, NoFeasibleDesignError,
)

CSV_HEADER = ("L_mm", "E", "S", "D_lambda_Gbps", "W",
              "laser_pJ", "trim_pJ", "lkg_pJ", "dyn_pJ", "total_pJ")

DEFAULT_LENGTHS = tuple(round(0.0025 * k, 4) for k in range(1, 65))


@dataclass(frozen=True)
class DseGrid:
    data_rates: Sequence[float] = ph.DATA_RATES
    logical_links: Sequence[int] = ph.LOGICAL_LINK_COUNTS
    lengths: Sequence[float] = DEFAULT_LENGTHS  # m
    strides: Sequence[int] = ph.STRIDES
    injection_rate: float = 0.1

    def validate(self):
        for name in ("data_rates", "logical_links", "lengths", "strides"):
            if not len(getattr(self, name)):
                raise ConfigurationError(f"design grid axis {name!r} is empty")


@dataclass(frozen=True)
class DseResult:
    config: ph.MwmrLinkConfig
    tuning: ph.ModulatorTuning
    breakdown: ph.PowerBreakdown

    @property
    def total(self) -> float:
        return self.breakdown.total_pj

    def csv_row(self) -> tuple:
        c, e = self.config, self.breakdown.energy_per_bit_components
        return (
            f"{c.length_mm:g}", c.logical_links, c.stride, f"{c.data_rate / 1e9:g}",
            c.waveguides,
            *(f"{e[k]:.6g}" for k in ("laser", "mrr_heating", "leakage", "dynamic", "total")),
        )


def waveguide_range(data_rate: float, logical_links: int,
                    tech: ph.PhotonicTechParams) -> range:
    n_channels = round(tech.aggregate_waveguide_rate / data_rate)
    per_link = round(tech.logical_link_rate / data_rate)
    links_per_wg = min(tech.max_links_per_waveguide, n_channels // per_link)
    return range(math.ceil(logical_links / links_per_wg), n_channels + 1)


def _sites_ok(length: float, stride: int, tech: ph.PhotonicTechParams) -> bool:
    try:
        ph.sites_for(length, stride, tech.hop_length)
    except ConfigurationError:
        return False
    return True


def enumerate_grid(grid: DseGrid, tech: ph.PhotonicTechParams) -> Iterator[ph.MwmrLinkConfig]:
    """All admissible configs in lexicographic (L, E, S, D_lambda, W) order."""
    grid.validate()
    for length in sorted(grid.lengths):
        for e in sorted(grid.logical_links):
            for s in sorted(grid.strides):
                if not _sites_ok(length, s, tech):
                    continue
                for d in sorted(grid.data_rates):
                    for w in waveguide_range(d, e, tech):
                        yield ph.MwmrLinkConfig(d, e, w, length, s, grid.injection_rate)


def evaluate(cfg: ph.MwmrLinkConfig, tech: ph.PhotonicTechParams) -> DseResult:
    tuning = ph.optimize_modulator(cfg, tech)
    return DseResult(cfg, tuning, ph.energy_per_bit(cfg, tech, tuning))


def _rank(result: DseResult) -> tuple:
    # ties favour fewer waveguides, then the slower wavelength rate
    return (result.total, result.config.waveguides, result.config.data_rate)


def find_optimum(length: float, logical_links: int, stride: int,
                 tech: ph.PhotonicTechParams, injection_rate: float = 0.1,
                 data_rates: Iterable[float] = ph.DATA_RATES,
                 waveguides: Iterable[int] | None = None) -> DseResult:
    """Minimum-energy (D_lambda, W) for a link of fixed length, link count and stride."""
    ph.sites_for(length, stride, tech.hop_length)
    best = None
    for d in data_rates:
        ws = waveguide_range(d, logical_links, tech)
        if waveguides is not None:
            ws = [w for w in waveguides if w in ws]
        for w in ws:
            cfg = ph.MwmrLinkConfig(d, logical_links, w, length, stride, injection_rate)
            try:
                result = evaluate(cfg, tech)
            except InfeasibleDesignError:
                continue
            if best is None or _rank(result) < _rank(best):
                best = result
    if best is None:
        raise NoFeasibleDesignError(
            f"no feasible design for L={length} m, E={logical_links}, S={stride}"
        )
    return best


@dataclass
class TrendRow:
    length: float
    result: DseResult | None = None
    error: str | None = None

    @property
    def feasible(self) -> bool:
        return self.result is not None


def trend_table(lengths: Sequence[float], logical_links: int, stride: int,
                tech: ph.PhotonicTechParams, injection_rate: float = 0.1) -> list[TrendRow]:
    if not len(lengths):
        raise ConfigurationError("trend table needs at least one length")
    rows = []
    for length in lengths:
        try:
            rows.append(TrendRow(length, find_optimum(length, logical_links, stride, tech,
                                                      injection_rate)))
        except HybridNocError as exc:
            rows.append(TrendRow(length, error=str(exc)))
    return rows


def count_inversions(values: Sequence[float]) -> int:
    """Number of adjacent decreases in ``values``."""
    return sum(1 for a, b in zip(values, values[1:]) if b < a)


@dataclass
class ComparisonRow:
    length: float
    photonic_pj: float | None
    electrical_pj: float
    error: str | None = None

    @property
    def photonic_wins(self) -> bool:
        return self.photonic_pj is not None and self.photonic_pj < self.electrical_pj


def compare_vs_electrical(lengths: Sequence[float], logical_links: int, stride: int,
                          tech: ph.PhotonicTechParams, coef: ElectricalCoefficients,
                          injection_rate: float = 0.1) -> list[ComparisonRow]:
    rows = []
    for row in trend_table(lengths, logical_links, stride, tech, injection_rate):
        elec = electrical_chain_energy_per_bit(row.length, coef, injection_rate,
                                               tech.hop_length)
        photonic = row.result.total if row.result else None
        rows.append(ComparisonRow(row.length, photonic, elec, row.error))
    return rows


def crossover_index(rows: Sequence[ComparisonRow]) -> int | None:
    """Index of the first length at which photonics beats the electrical chain."""
    for i, row in enumerate(rows):
        if row.photonic_wins:
            return i
    return None


def _evaluate_many(args) -> list[DseResult | None]:
    configs, tech = args
    out = []
    for cfg in configs:
        try:
            out.append(evaluate(cfg, tech))
        except InfeasibleDesignError:
            out.append(None)
    return out


def run_grid(grid: DseGrid, tech: ph.PhotonicTechParams, workers: int = 1,
             chunk: int = 2000) -> list[DseResult | None]:
    """Evaluate every admissible config; ``None`` marks infeasible points.

    Results follow enumeration order regardless of ``workers``.
    """
    configs = list(enumerate_grid(grid, tech))
    chunks = [(configs[i:i + chunk], tech) for i in range(0, len(configs), chunk)]
    if workers <= 1:
        parts = map(_evaluate_many, chunks)
        return [r for part in parts for r in part]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return [r for part in pool.map(_evaluate_many, chunks) for r in part]


@dataclass
class GridSummary:
    evaluated: int = 0
    infeasible: int = 0
    optima: dict = field(default_factory=dict)  # (L, E, S) -> DseResult


def summarize(results: Iterable[DseResult | None], configs: Iterable[ph.MwmrLinkConfig]) -> GridSummary:
    summary = GridSummary()
    for cfg, res in zip(configs, results):
        summary.evaluated += 1
        if res is None:
            summary.infeasible += 1
            continue
        key = (cfg.length, cfg.logical_links, cfg.stride)
        best = summary.optima.get(key)
        if best is None or _rank(res) < _rank(best):
            summary.optima[key] = res
    return summary


def results_to_csv(results: Iterable[DseResult | None]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for res in results:
        if res is not None:
            writer.writerow(res.csv_row())
    return buf.getvalue()
