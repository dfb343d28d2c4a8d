"""Acceptance criteria, one test each, printing a single PASS/FAIL line per criterion.

Run alone with ``python3 -m pytest tests/test_acceptance.py -s`` or
``python3 tests/test_acceptance.py``.
"""

import math
import sys
import time
import warnings

import numpy as np
import pytest

from resonance_atlas.cases import case_N, case_T
from resonance_atlas.errors import GridTooCoarse
from resonance_atlas.phase_graph import (Edge, band_width, build_phase_graph, edge_integrals,
                                         enumerate_directed_cycles, hamiltonian_flow_check)
from resonance_atlas.potential import AnalyticTerm, InteractionSpec, PotentialSpec, ProblemConfig
from resonance_atlas.semiclassics import (Rect, crossing_constants, cycle_amplitude,
                                          cycle_constants, find_resonance_candidates)
from resonance_atlas.spectral import (DilationContour, Disk, build_dilated_operator,
                                      classify_resonances, compute_spectrum, verify_band_empty)

SS = math.pi / math.sqrt(2)


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
    return emit


def _case_T_objects():
    g = build_phase_graph(case_T())
    return g, enumerate_directed_cycles(g)


def test_criterion_1_graph_topology(say):
    t0 = time.perf_counter()
    gT = build_phase_graph(case_T())
    cT = enumerate_directed_cycles(gT)
    gN = build_phase_graph(case_N())
    cN = enumerate_directed_cycles(gN)
    elapsed = time.perf_counter() - t0
    ok = len(cT) == 1 and cT[0].is_pr and len(cN) == 0 and elapsed < 1.0
    say(1, ok, f"case T cycles={len(cT)} (pr={sum(c.is_pr for c in cT)}), "
               f"case N cycles={len(cN)}, {elapsed:.3f}s")
    assert ok


def test_criterion_2_quadrature_ode_duality(say):
    worst = 0.0
    n = 0
    for cfg in (case_T(), case_N()):
        for e in build_phase_graph(cfg).edges:
            worst = max(worst, hamiltonian_flow_check(e))
            n += 1
    V = PotentialSpec.of(AnalyticTerm("linear", 1.0))
    t, a = edge_integrals(Edge(1, 1, 0.0, 1.0, 0, 1, "b", V=V, E0=1.0), 1e-12)
    ok = n > 0 and worst < 1e-6 and abs(t - 1) < 1e-9 and abs(a - 2 / 3) < 1e-9
    say(2, ok, f"{n} edges, max flow residual {worst:.2e}; linear edge time err "
               f"{abs(t - 1):.1e}, action err {abs(a - 2 / 3):.1e}")
    assert ok


def test_criterion_3_constants(say):
    g, _ = _case_T_objects()
    cd = crossing_constants(g.vertices[g.crossing_indices()[0]], g.config)
    err = abs(abs(cd.sigma_plus * cd.sigma_minus) - SS)
    conj = abs(cd.sigma_plus.conjugate() - cd.sigma_minus)
    hs = [1e-1, 1e-2, 1e-3, 1e-4]
    om = max(abs(abs(cd.h_pow_minus_omega(s, h, 1.0)) - 1) for h in hs for s in (1, -1))
    ok = err < 1e-9 and conj <= 2 * np.finfo(float).eps * abs(cd.sigma_minus) and om < 1e-12
    say(3, ok, f"||s+s-| - pi/sqrt2| = {err:.1e}, |conj(s+) - s-| = {conj:.1e}, "
               f"max ||h^-w| - 1| = {om:.1e}")
    assert ok


def test_criterion_4_amplitude_laws(say):
    g, cyc = _case_T_objects()
    c = cyc[0]
    S = abs(cycle_constants(g, c).sigma_product)
    hs = np.geomspace(1e-4, 1e-1, 13)
    slope_err = 0.0
    plateau_spread = 0.0
    plateau_vs_ss = 0.0
    for nu in (0.6, 1.0, 1.5):
        logs = [math.log(abs(cycle_amplitude(g, c, 0.53, h, nu))) for h in hs]
        fit = np.polyfit(np.log(hs), logs, 1)
        slope_err = max(slope_err, abs(fit[0] - (2 * nu - 1)))
        M = (2 * nu - 1) / c.time
        plat = np.array([abs(cycle_amplitude(g, c, 0.5 - 1j * M * h * math.log(1 / h), h, nu))
                         for h in hs])
        plateau_spread = max(plateau_spread, float(np.ptp(plat) / plat.mean()))
        plateau_vs_ss = max(plateau_vs_ss, float(np.max(np.abs(plat - SS)) / SS))
    ok = slope_err < 1e-8 and plateau_spread < 1e-10 and plateau_vs_ss < 1e-10 and \
        abs(S - SS) < 1e-12
    say(4, ok, f"max slope error {slope_err:.1e}, plateau spread {plateau_spread:.1e}, "
               f"plateau vs |s+s-| {plateau_vs_ss:.1e}")
    assert ok


def test_criterion_5_contradiction_mechanism(say):
    g, cyc = _case_T_objects()
    c = cyc[0]
    hs = np.geomspace(1e-3, 1e-1, 21)
    worst_ratio = 0.0
    worst_exp = 0.0
    for nu in (0.6, 0.75, 1.0, 1.5):
        M = (2 * nu - 1) / c.time
        vals = np.array([abs(cycle_amplitude(g, c, 0.5 - 0.9j * M * h * math.log(1 / h), h, nu))
                         for h in hs])
        bound = SS * hs ** (0.1 * (2 * nu - 1))
        worst_ratio = max(worst_ratio, float(np.max(vals / bound)))
        slope = np.polyfit(np.log(hs), np.log(vals), 1)[0]
        target = 0.1 * (2 * nu - 1)
        worst_exp = max(worst_exp, abs(slope - target) / target)
    ok = worst_ratio <= 1 + 1e-12 and worst_exp < 0.02
    say(5, ok, f"max |C| / bound = {worst_ratio:.12f}, decay exponent rel. error {worst_exp:.1e}")
    assert ok


def test_criterion_6_candidate_roots(say):
    g, cyc = _case_T_objects()
    T = cyc[0].time
    details = []
    ok = True
    for h in (0.02, 0.01):
        res = find_resonance_candidates(g, h, Rect(0.3, 0.7, -0.3, 0.0))
        lower = (h / T) * (math.log(1 / h) - math.log(SS)) - 1e-8
        depth_ok = all(-z.imag >= lower for z in res.roots)
        gaps = np.diff([z.real for z in res.roots])
        sp_err = float(np.max(np.abs(gaps / (2 * math.pi * h / T) - 1))) if len(gaps) else math.inf
        this = depth_ok and sp_err < 0.01 and res.consistent and res.winding > 0
        ok &= this
        details.append(f"h={h}: {len(res.roots)} roots, winding {res.winding}, "
                       f"spacing err {sp_err:.1e}, depth ok {depth_ok}")
    say(6, ok, "; ".join(details))
    assert ok


@pytest.fixture(scope="module")
def band_reports():
    h_list = [0.05, 0.03, 0.02]
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarse)
        cfgT = case_T()
        gT = build_phase_graph(cfgT)
        M_T = band_width(enumerate_directed_cycles(gT), cfgT.nu).M_value
        repT = verify_band_empty(cfgT, h_list, M_T, 0.9, theta=0.3, L=12.0, N=1600)
        repN = verify_band_empty(case_N(), h_list, 5.0, 0.9, theta=0.3, L=12.0, N=1600)
    return repT, repN, time.perf_counter() - t0


def test_criterion_7_band_verification(say, band_reports):
    repT, repN, elapsed = band_reports

    def fmt(rep):
        return ", ".join(f"h={v.h}: margin {v.margin:.4f}" + ("" if v.empty else " VIOLATED")
                         for v in rep.verdicts)

    viol = [f"h={v.h} z={z.real:.6f}{z.imag:+.6f}j at {abs(z - 0.5) / v.radius:.5f} of the radius"
            for v in repT.verdicts + repN.verdicts for z in v.violations]
    ok = repT.empty and repN.empty and elapsed < 600
    say(7, ok, f"case T [{fmt(repT)}]; case N (M=5) [{fmt(repN)}]; {elapsed:.0f}s"
               + (f"; violations: {'; '.join(viol)}" if viol else ""))
    assert ok


def test_criterion_8_spectral_sanity(say):
    theta = 0.3
    free = ProblemConfig(PotentialSpec(), PotentialSpec(), InteractionSpec(), E0=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridTooCoarse)
        op = build_dilated_operator(free, DilationContour(theta), 0.05, 12.0, 400)
        vals = np.linalg.eigvals(op.block(1, 1).toarray())
        low = vals[np.argsort(np.abs(vals))][:50]
        ray_err = float(np.max(np.abs(np.angle(low) + 2 * theta)))

        cfg = case_T()
        r1 = PotentialSpec.of(AnalyticTerm("sech2", 0.7))
        sa = cfg.replace(W=InteractionSpec(cfg.W.r0, r1))
        op0 = build_dilated_operator(sa, DilationContour(0.0), 0.05)
        real_res = float(np.max(np.abs(compute_spectrum(op0, Disk(0.5, 0.2)).values.imag)))

        h = 0.05
        tol = 1e-4 * h
        w = Disk(0.5, 0.15)
        base = classify_resonances(cfg, h, w, theta, 0.35, N=1600, class_tol=tol)
        fine = classify_resonances(cfg, h, w, theta, 0.35, N=2400, class_tol=tol)
    rb, rf = base.resonances(), fine.resonances()
    idx = [i for i, c in enumerate(base.classes) if c == "resonance"]
    th_shift = max(base.theta_shift[i] for i in idx) if idx else math.inf
    box_shift = max(base.box_shift[i] for i in idx) if idx else math.inf
    n_shift = max(min(abs(z - u) for u in rf) for z in rb) if rb and rf else math.inf
    ok = (ray_err < 1e-3 and real_res < 1e-10 and len(rb) == len(rf) > 0
          and th_shift < tol and n_shift < 1e-5 and box_shift < 1e-5)
    say(8, ok, f"free ray err {ray_err:.1e} rad, theta=0 max|Im| {real_res:.1e}, "
               f"case T h=0.05 resonances {len(rb)}->{len(rf)} under N->1.5N, "
               f"theta shift {th_shift:.1e} (<{tol:.0e}), N shift {n_shift:.1e}, "
               f"L shift {box_shift:.1e}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
