"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line; the lines are repeated in the pytest
terminal summary under "acceptance criteria".
"""

import itertools
import os
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest

from hybridnoc import dse, reference, sim
from hybridnoc import photonic as ph
from hybridnoc.config import parse_config
from hybridnoc.electrical import ElectricalCoefficients, electrical_chain_energy_per_bit
from hybridnoc.energy import snake_designs, static_power_summary
from hybridnoc.experiment import ExperimentPlan, run_plan
from hybridnoc.selector import (
    HybridCosts, SelectionConstraints, TrafficMatrix, hybrid_costs, marginal_gain, routing_tables,
    select, weighted_latency,
)
from hybridnoc.topology import VARIANTS, MeshSpec, build, candidates, resource_summary
from hybridnoc.traffic import SHIPPED_PATTERNS, Packet, PatternSpec, Trace, generate, trace_to_matrix

TECH = ph.PhotonicTechParams()
MESH = MeshSpec()


def test_photonic_latency(verdict):
    lat = ph.link_latency(160, TECH)
    slope = (ph.link_latency(160, TECH) - ph.link_latency(10, TECH)) / 150
    ok = abs(lat - 775.2) < 1e-9 and abs(lat - reference.LONGEST_PATH_LATENCY_PS) <= 0.5 \
        and abs(slope - 4.67) < 1e-9
    verdict(1, ok, f"link_latency(160 mm) = {lat:.3f} ps, slope {slope:.6f} ps/mm")


def test_trimming_closed_forms(verdict):
    full = ph.trimming_power_per_ring(TECH, "full_fsr")
    reshuffle = ph.trimming_power_per_ring(TECH, "bit_reshuffle", 64)
    totals = {ph.trimming_power(ph.MwmrLinkConfig(d, 16, 16, 0.07, 1), TECH) for d in ph.DATA_RATES}
    ok = (abs(full - 2e-3) < 1e-15
          and abs(reshuffle - 31.25e-6) < 1e-15
          and abs(reshuffle / reference.RESHUFFLE_TRIM_PER_RING_W - 1) <= 0.01
          and len(totals) == 1)
    verdict(2, ok, f"full-FSR {full * 1e3:.3f} mW/ring, reshuffle {reshuffle * 1e6:.2f} uW/ring, "
                   f"{len(totals)} distinct per-waveguide total(s) across D")


def test_mrr_heating_component(verdict):
    values = [ph.energy_per_bit(ph.MwmrLinkConfig(d, 16, 6, 0.07, 1, 0.1), TECH)
              .energy_per_bit_components["mrr_heating"] for d in (8e9, 16e9, 32e9)]
    rel = abs(values[0] - reference.PUBLISHED_MRR_HEATING_PJ) / reference.PUBLISHED_MRR_HEATING_PJ
    ok = abs(values[0] - 3.28125) < 1e-12 and rel <= 0.05 and len(set(values)) == 1
    verdict(3, ok, f"MRR heating {values[0]:.4f} pJ/bit ({rel:.1%} from published), "
                   f"identical across D: {len(set(values)) == 1}")


def test_table6_regression(verdict):
    t0 = time.perf_counter()
    mismatches = []
    for row in reference.VARIANT_RESOURCES:
        lay = build(MESH, row.K, row.S)
        res = resource_summary(lay, row.waveguides // row.K, row.avg_wavelengths,
                               row.data_rate_gbps * 1e9)
        got = (res.addon_routers, Fraction(res.length_per_waveguide).limit_denominator(1000), res.mrrs)
        want = (row.addon_routers, Fraction(row.length_m).limit_denominator(1000), row.mrrs)
        if got != want:
            mismatches.append((row.K, row.S, got, want))
    elapsed = time.perf_counter() - t0
    ok = not mismatches and elapsed < 1 and len(reference.VARIANT_RESOURCES) == 14
    verdict(4, ok, f"{14 - len(mismatches)}/14 variants exact in {elapsed * 1e3:.0f} ms {mismatches or ''}")


def test_dse_shape(verdict):
    best = dse.find_optimum(0.07, 16, 1, TECH)
    d_ok = best.config.data_rate == 16e9 and 4 <= best.config.waveguides <= 8
    at16 = {w: dse.find_optimum(0.07, 16, 1, TECH, data_rates=(16e9,), waveguides=(w,)).total
            for w in (4, 32)}
    by_rate = {d: dse.find_optimum(0.07, 16, 1, TECH, data_rates=(d,)).total for d in (2e9, 32e9)}
    u_shape = best.total < min(at16.values()) and best.total < min(by_rate.values())
    laser = ph.energy_per_bit(ph.MwmrLinkConfig(16e9, 16, 6, 0.07, 1), TECH) \
        .energy_per_bit_components["laser"]
    laser_ok = reference.PUBLISHED_LASER_D16_PJ / 2 <= laser <= reference.PUBLISHED_LASER_D16_PJ * 2
    worst = 0
    for e, s in itertools.product((16, 32), ph.STRIDES):
        rows = [r for r in dse.trend_table(dse.DEFAULT_LENGTHS, e, s, TECH) if r.feasible]
        worst = max(worst, dse.count_inversions([r.result.config.data_rate for r in rows]),
                    dse.count_inversions([r.result.config.waveguides for r in rows]))
    t0 = time.perf_counter()
    results = dse.run_grid(dse.DseGrid(), TECH, workers=min(4, os.cpu_count() or 1))
    grid_s = time.perf_counter() - t0
    ok = d_ok and u_shape and laser_ok and worst <= 1 and grid_s < 600
    verdict(5, ok, f"optimum D={best.config.data_rate / 1e9:g} Gb/s W={best.config.waveguides} "
                   f"{best.total:.3f} pJ/bit; U-shape {u_shape}; laser {laser:.2f} pJ/bit; "
                   f"max trend inversions {worst}; grid of {len(results)} in {grid_s:.0f} s")


def _within_budgets(links, cons):
    peak = lambda values: max(Counter(values).values(), default=0)
    return (peak(c.direction for c in links) <= cons.snake_links
            and peak(c.source for c in links) <= cons.node_links
            and peak(c.destination for c in links) <= cons.node_links)


def _subset_best(lay, traffic, cons, costs):
    cands = candidates(lay)
    return min(weighted_latency(hybrid_costs(lay.mesh, list(sub), costs), traffic)
               for r in range(len(cands) + 1) for sub in itertools.combinations(cands, r)
               if _within_budgets(sub, cons))


def _argmax_audit(sel, traffic, lay, cons, costs):
    """Each accepted link was the top feasible candidate at its step."""
    active = []
    for step in sel.log:
        if not step.accepted:
            continue
        scored = [(marginal_gain(c, active, traffic, lay, costs), c) for c in candidates(lay)
                  if c not in active and _within_budgets(active + [c], cons)]
        top = max(g for g, _ in scored)
        first = min(c for g, c in scored if abs(g - top) <= 1e-12)
        if abs(step.gain - top) > 1e-12 or step.candidate != first:
            return False
        active.append(step.candidate)
    return active == sel.active


def test_selector_correctness(verdict):
    small = MeshSpec(3, 3)
    lay = build(small, 1, 3)
    rng = np.random.default_rng(2024)
    costs = HybridCosts()
    audited = optimal = 0
    for _ in range(150):
        pairs = []
        while len(pairs) < 2:
            s, d = rng.integers(0, 9, 2)
            if s != d:
                pairs.append((int(s), int(d), int(rng.integers(1, 20))))
        traffic = TrafficMatrix.from_pairs(9, pairs)
        cons = SelectionConstraints(int(rng.integers(1, 4)), int(rng.integers(1, 3)), 1)
        sel = select(lay, traffic, cons, costs)
        greedy = weighted_latency(hybrid_costs(small, sel.active, costs), traffic)
        best = _subset_best(lay, traffic, cons, costs)
        if best > greedy + 1e-12 or not _argmax_audit(sel, traffic, lay, cons, costs):
            verdict(6, False, f"3x3 instance {pairs} failed the oracle or audit")
        audited += 1
        optimal += abs(greedy - best) <= 1e-12
    checked = 0
    for name in SHIPPED_PATTERNS:
        matrix = trace_to_matrix(generate(PatternSpec.named(name), MESH))
        for k, s in VARIANTS:
            sel = select(build(MESH, k, s), matrix, SelectionConstraints(32, 4, k))
            sel.check_constraints()
            checked += 1
    verdict(6, audited == 150 and checked == 70,
            f"{audited} 3x3 instances audited ({optimal} subset-optimal); "
            f"budgets hold on {checked} 8x8 selections")


def test_simulator_oracle(verdict):
    t0 = time.perf_counter()
    lay = build(MESH, 1, 1)
    pool = {(c.source, c.destination): c for c in candidates(lay)}
    express = [pool[p] for p in ((0, 63), (63, 0), (7, 56), (56, 7), (24, 39), (40, 15))]
    pkts = [Packet(i, 40 * i, s, d, 1)
            for i, (s, d) in enumerate((s, d) for s in range(64) for d in range(64) if s != d)]
    trace = Trace(pkts, 64)
    exact = True
    for links in ([], express):
        tables = routing_tables(lay, links)
        report = sim.run(lay, links, tables, trace)
        want = [sim.idle_latency(tables, p.src, p.dst) for p in pkts]
        want_cost = [int(tables.cost[p.src, p.dst]) + 1 for p in pkts]
        exact &= report.latencies == want == want_cost and report.conservation_ok()
    conserved = 0
    for name in SHIPPED_PATTERNS:
        tr = generate(PatternSpec.named(name), MESH)
        base = sim.run(lay, None, routing_tables(lay, []), tr)
        sel = select(lay, trace_to_matrix(tr))
        hyb = sim.run(lay, sel, routing_tables(lay, sel), tr)
        conserved += base.conservation_ok() and hyb.conservation_ok()
    elapsed = time.perf_counter() - t0
    verdict(7, exact and conserved == 5 and elapsed < 60,
            f"idle latency exact on 2x{len(pkts)} pairs: {exact}; conservation "
            f"{conserved}/5 patterns; {elapsed:.0f} s")


@pytest.fixture(scope="module")
def full_sweep(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    t0 = time.perf_counter()
    rows = run_plan(ExperimentPlan(parse_config(""), out), workers=min(4, os.cpu_count() or 1))
    return rows, time.perf_counter() - t0


def test_directional_properties(verdict, full_sweep):
    rows, elapsed = full_sweep
    failed = [r for r in rows if r["status"] != "ok"]
    fcp = {(r["K"], r["S"]): r for r in rows if r["pattern"] == "FCP-center"}
    ratio = fcp[(1, 1)]["mean_latency"] / fcp[(None, None)]["mean_latency"]
    static = {ks: static_power_summary(build(MESH, *ks), snake_designs(build(MESH, *ks), TECH)).total
              for ks in ((8, 4), (2, 1))}
    coef = ElectricalCoefficients()
    s1 = dse.find_optimum(0.16, 16, 1, TECH, 0.1).total
    elec = electrical_chain_energy_per_bit(0.16, coef, 0.1)
    long_lengths = (0.12, 0.14, 0.16)
    s2_wins = all(dse.find_optimum(length, 16, s, TECH, 0.1).total
                  < electrical_chain_energy_per_bit(length, coef, 0.1)
                  for s in (2, 4, 8) for length in long_lengths)
    ok = (not failed and len(rows) == 75 and ratio <= 0.6 and static[(8, 4)] < static[(2, 1)]
          and s1 > elec and s2_wins and elapsed < 300)
    verdict(8, ok, f"FCP-center K1S1 latency ratio {ratio:.2f}; static K8S4 {static[(8, 4)]:.3f} W "
                   f"vs K2S1 {static[(2, 1)]:.3f} W; S=1 at 160 mm {s1:.1f} vs electrical "
                   f"{elec:.1f} pJ/bit; S>=2 below electrical at long lengths {s2_wins}; "
                   f"sweep {len(rows)} cells in {elapsed:.0f} s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
