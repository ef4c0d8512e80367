"""Acceptance criteria 1-12, one PASS/FAIL line each (see the terminal summary)."""

import math
import time
import warnings

import numpy as np
import pytest

from halfline4nls.cli import derivative_relation_errors, jump_ratios, make_profile
from halfline4nls.forcing import forcing_Llambda, trace_value
from halfline4nls.fractional import TimeSignal, frac_integral
from halfline4nls.ibvp import (ContractionError, SolveParams, build_forcing_config, determinant, entries,
                               mass_balance, picard_solve)
from halfline4nls.norms import RATIO_KINDS, estimate_ratio_suite
from halfline4nls.oscillatory import b0_quadrature, mellin_check
from halfline4nls.propagator import GridSpec, trace_time
from halfline4nls.reference import FDGrid, cn_solve
from halfline4nls.special import PoleError, gamma


def interior(grid, xmax=20.0):
    return (grid.x >= 0) & (grid.x <= xmax)


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def test_c01_b0_identity(report):
    t0 = time.perf_counter()
    err = abs(b0_quadrature() - (-(1j ** 1.75) / math.pi * gamma(1.25)))
    el = time.perf_counter() - t0
    ok = report(1, "B(0) identity", err <= 1e-8 and el < 5, f"error {err:.2e} (<= 1e-8), {el:.2f} s (< 5 s)")
    assert ok


def test_c02_mellin_identity(report):
    t0 = time.perf_counter()
    errs = {}
    for lam in (0.05, 0.1, 0.2, 0.25, 0.3, 0.35):
        pair = mellin_check(lam)
        errs[lam] = abs(pair.lhs - pair.rhs) / abs(pair.rhs)
    el = time.perf_counter() - t0
    worst = max(errs.values())
    ok = report(2, "Mellin identity", worst <= 1e-5 and el < 60,
                f"max relative error {worst:.2e} (<= 1e-5) over 6 lambdas, {el:.1f} s (< 60 s)")
    assert ok


def test_c03_trace_values(report):
    # the error is governed by truncating the slowly decaying field to the
    # box, so one refinement step doubles L together with nx and nt
    grids = (GridSpec(40.0, 512, 1.0, 257), GridSpec(80.0, 1024, 1.0, 513))
    lines, ok = [], abs(trace_value(0.0) - 1) <= 1e-10
    for lam in (-1.0, 0.0, 0.25, 1 / 3):
        e = []
        for g in grids:
            gs = TimeSignal(g.t**3 * np.cos(2 * g.t), g.dt)
            u = forcing_Llambda(gs, lam, g)
            e.append(float(np.max(np.abs(u.samples[:, g.i0] - trace_value(lam) * gs.samples))))
        halves = e[1] <= 0.5 * e[0] or e[1] < 1e-8
        ok = ok and e[0] <= 1e-3 and halves
        lines.append(f"lam={lam:.3g}: {e[0]:.1e} -> {e[1]:.1e}")
    ok = report(3, "trace values", ok, "; ".join(lines) + f"; |a(0) - 1| = {abs(trace_value(0.0) - 1):.1e}")
    assert ok


def test_c04_jump_identity_as_stated(report):
    # stated: left limit -(iM/2) I_{-3/4} f, right limit +(iM/2) I_{-3/4} f
    errs = []
    for nx, nt in ((512, 257), (1024, 513)):
        left, right = jump_ratios(GridSpec(20.0, nx, 1.0, nt))
        errs.append(max(abs(left + 1), abs(right - 1)))
    ok = report(4, "jump identity (signs as stated)", errs[0] <= 5e-2 and errs[1] < errs[0],
                f"relative error {errs[0]:.2e} -> {errs[1]:.2e} (<= 5e-2, decreasing)")
    assert ok


def test_c04_jump_identity_signs_reversed(report):
    errs = []
    for nx, nt in ((512, 257), (1024, 513)):
        left, right = jump_ratios(GridSpec(20.0, nx, 1.0, nt))
        errs.append(max(abs(left - 1), abs(right + 1)))
    ok = report(4, "jump identity (left +iM/2, right -iM/2)", errs[0] <= 5e-2 and errs[1] < errs[0],
                f"relative error {errs[0]:.2e} -> {errs[1]:.2e} (<= 5e-2, decreasing)")
    assert ok


GRID_C5 = GridSpec(40.0, 512, 1.0, 257)


def test_c05_derivative_relation_as_stated(report):
    errs = derivative_relation_errors(GRID_C5, signed=False)
    ok = report(5, "L^-k g = d_x^k L^0 I_{k/4} g (as stated)", max(errs.values()) <= 5e-2,
                ", ".join(f"k={k}: {e:.2e}" for k, e in errs.items()) + " (<= 5e-2, 2 < |x| < 10)")
    assert ok


def test_c05_derivative_relation_with_sign(report):
    errs = derivative_relation_errors(GRID_C5, signed=True)
    ok = report(5, "L^-k g = (-1)^k d_x^k L^0 I_{k/4} g", max(errs.values()) <= 5e-2,
                ", ".join(f"k={k}: {e:.2e}" for k, e in errs.items()) + " (<= 5e-2, 2 < |x| < 10)")
    assert ok


def test_c06_semigroup(report):
    errs, dts = [], []
    for n in (129, 257, 513):
        f = TimeSignal.from_function(lambda t: np.sin(3 * t) * t, 1.0, n)
        a = frac_integral(frac_integral(f, 0.5), 0.5).samples
        errs.append(float(np.max(np.abs(a - frac_integral(f, 1.0).samples))))
        dts.append(f.dt)
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    C = max(e / d**2 for e, d in zip(errs, dts))
    ok = report(6, "fractional semigroup", min(orders) >= 1.8,
                f"sup errors {', '.join(f'{e:.1e}' for e in errs)}; orders {orders[0]:.2f}, {orders[1]:.2f} "
                f"(>= 1.8); C = {C:.1e}")
    assert ok


def test_c07_manufactured_linear(report):
    g = GridSpec(80.0, 512, 1.0, 257)
    data, exact = make_profile("manufactured-linear", g)
    t0 = time.perf_counter()
    u, _ = picard_solve(data, build_forcing_config(), SolveParams())
    el = time.perf_counter() - t0
    m = interior(g)
    err = rel_l2(u.samples[:, m], exact.samples[:, m])
    d0 = float(np.max(np.abs(trace_time(u, 0.0, 0, side="right").samples - data.f.samples)))
    d1 = float(np.max(np.abs(trace_time(u, 0.0, 1, side="right").samples - data.g.samples)))
    ok = report(7, "manufactured linear IBVP", err <= 1e-4 and d0 <= 1e-4 and d1 <= 1e-4 and el < 120,
                f"interior L2 {err:.1e}, plug-back u {d0:.1e}, u_x {d1:.1e} (<= 1e-4), {el:.1f} s (< 120 s)")
    assert ok


def _nonlinear_distance(nx, nt, amp=0.3):
    g = GridSpec(80.0, nx, 1.0, nt)
    data, _ = make_profile("manufactured-linear", g, amp)
    u, diag = picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0))
    # finite differences need a finer mesh than the spectral solver; 10 FD
    # cells per spectral cell, twice the time levels, nodes aligned
    fg = FDGrid(240.0, int(round(240.0 / (g.dx / 10))), 1.0, 2 * nt - 1)
    with warnings.catch_warnings():
        warnings.simplefilter("error", RuntimeWarning)
        r = cn_solve(data, 1.0, fg)
    m = interior(g)
    idx = np.round(g.x[m] / fg.h).astype(int)
    return rel_l2(r.samples[::2, idx], u.samples[:, m]), diag


def test_c08_nonlinear_cross_validation(report):
    t0 = time.perf_counter()
    d1, diag = _nonlinear_distance(512, 257)
    d2, _ = _nonlinear_distance(1024, 513)
    el = time.perf_counter() - t0
    contracting = max(diag.ratios[1:]) <= 0.5
    ok = report(8, "nonlinear cross-validation", d1 <= 1e-2 and d2 < d1 and contracting and el < 600,
                f"distance {d1:.1e} -> {d2:.1e} (<= 1e-2, decreasing), max ratio {max(diag.ratios):.3f}, "
                f"{el:.0f} s (< 600 s)")
    assert ok


def test_c09_contraction(report):
    g = GridSpec(80.0, 256, 1.0, 129)
    data, _ = make_profile("manufactured-linear", g, 0.3)
    _, diag = picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0))
    small_ok = diag.converged and max(diag.ratios[1:]) <= 0.5
    scan = {}
    for amp in (0.3, 1.0, 2.0, 4.0):
        data, _ = make_profile("manufactured-linear", g, amp)
        try:
            _, d = picard_solve(data, build_forcing_config(), SolveParams(lam_nl=1.0, max_iters=15))
            scan[amp] = f"max ratio {max(d.ratios):.2f}"
        except ContractionError:
            scan[amp] = "lost"
    lost = [a for a, v in scan.items() if v == "lost"]
    ok = report(9, "contraction behaviour", small_ok and bool(lost) and scan[0.3] != "lost",
                f"ratios after it. 2 <= {max(diag.ratios[1:]):.3f} (<= 0.5); amplitude scan "
                + ", ".join(f"{a}: {v}" for a, v in scan.items()))
    assert ok


def test_c10_mass_balance(report):
    g = GridSpec(80.0, 512, 1.0, 257)
    data, _ = make_profile("manufactured-linear", g)
    u, _ = picard_solve(data, build_forcing_config(), SolveParams())
    res = mass_balance(u)
    wide = GridSpec(256.0, 8192, 1.0, 513)
    wdata, _ = make_profile("manufactured-linear", wide)
    cn = [cn_solve(wdata, 0.0, FDGrid(180.0, nx, 1.0, nt)).mass_balance()
          for nx, nt in ((1440, 129), (2880, 257), (5760, 513))]
    orders = [math.log2(cn[i] / cn[i + 1]) for i in range(2)]
    ok = report(10, "mass balance", res <= 1e-3 and min(orders) >= 1.8,
                f"linear solve residual {res:.1e} (<= 1e-3); reference solver {', '.join(f'{c:.1e}' for c in cn)}, "
                f"orders {orders[0]:.2f}, {orders[1]:.2f}")
    assert ok


def test_c11_determinant(report):
    det = abs(determinant(0.0, 1 / 3))
    cfg = build_forcing_config(0.0, 1 / 3, det_floor=1e-6)
    diag = max(abs(determinant(l, l)) for l in (-2.5, -0.5, 0.0, 0.1, 0.25, 1 / 3, 0.45))
    a_poles = all(_raises(trace_value, lam) for lam in (1.0, -3.0, 5.0))
    b_poles = all(_raises(lambda v: entries(v)[1], lam) for lam in (2.0, -2.0, 6.0))
    regular = not any(_raises(entries, lam) for lam in (-1.0, -0.5, 0.0, 0.25, 1 / 3, 0.5))
    ok = report(11, "determinant admissibility", det > 1e-6 and diag < 1e-12 and a_poles and b_poles and regular,
                f"|det A(0,1/3)| = {det:.3f} (> 1e-6), max |det A(l,l)| = {diag:.1e}, "
                f"poles at 1-4Z: {a_poles}, at 2-4Z: {b_poles}, regular elsewhere: {regular}")
    assert ok and cfg.detA == determinant(0.0, 1 / 3)


def _raises(fn, lam):
    try:
        fn(lam)
    except PoleError:
        return True
    return False


def test_c12_ratio_suites(report):
    growth = {kind: estimate_ratio_suite(kind)["growth"][0] for kind in RATIO_KINDS}
    worst = max(growth, key=growth.get)
    ok = report(12, "estimate-ratio suites", max(growth.values()) <= 1.10,
                f"max growth {growth[worst]:.3f} ({worst}) over {len(growth)} kinds (<= 1.10)")
    assert ok
