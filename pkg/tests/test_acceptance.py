"""End-to-end acceptance checks, one test per criterion.

Each test prints a PASS/FAIL line (also collected into the terminal summary)
and then asserts.
"""
import random
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from superosc import NodeSpec, PrecisionContext, synthesize
from superosc.cli import vanishing_perturbation
from superosc.prolate import alternating, build_prolate, smallest_eigenpair
from superosc.scaling import SweepConfig, geometric_grid, sweep_N, sweep_dx
from superosc.slit import SlitWindow, truncate_and_transform
from superosc.synth import (
    inner_product,
    local_wavelength,
    maximal_superoscillation,
    parseval_norm_sq,
    position_norm_sq,
)

# fixed from the pre-build Simpson/closed-form run (above-cutoff fraction 0.957)
FRACTION_THRESHOLD = 0.5


def report(number, name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({name}): {detail}"
    print(line)
    ACCEPTANCE_LINES.append((number, line))
    return ok


def ten_alternating():
    ctx = PrecisionContext.auto(10, 0.05)
    return NodeSpec.equispaced(10, ctx.mpf("0.05") * 2, alternating(10), "pi", 1, ctx)


def test_criterion_1_interpolation_exactness():
    t0 = time.perf_counter()
    nodes = ten_alternating()
    w = synthesize(nodes)
    res = w.interpolation_residual()
    dt = time.perf_counter() - t0
    ok = res < 1e-20 * max(abs(a) for a in nodes.amps) and dt < 10
    assert report(1, "interpolation exactness", ok,
                  f"max residual {float(res):.3e} at {w.ctx.bits} bits, {dt:.2f} s")


def test_criterion_2_norm_three_way():
    t0 = time.perf_counter()
    ctx = PrecisionContext.auto(5, 0.05)
    w = synthesize(NodeSpec.equispaced(5, "0.1", alternating(5), "pi", 1, ctx))
    q = w.norm_sq
    par = parseval_norm_sq(w)
    pos = position_norm_sq(w, half_width=1000 * w.nodes.lambda_min)
    dt = time.perf_counter() - t0
    dev = max(abs(par / q - 1), abs(pos / q - 1), abs(pos / par - 1))
    ok = dev < 1e-8 and dt < 30
    assert report(2, "norm three-way agreement", ok, f"max relative deviation {float(dev):.3e}, {dt:.1f} s")


@pytest.mark.slow
def test_criterion_3_polynomial_scaling():
    grid = geometric_grid(0.2, 0.02, 6)
    exps = {}
    for n in (2, 3, 4):
        rep = sweep_dx(SweepConfig("fixed_N_vary_dx", n, grid))
        exps[n] = rep.exponent if rep.complete else None
    ok = all(e is not None and abs(e / (2 * (n - 1)) - 1) < 0.1 for n, e in exps.items())
    detail = ", ".join(f"N={n}: {e:.3f} (expect {2 * (n - 1)})" for n, e in exps.items())
    assert report(3, "polynomial scaling", ok, detail)


@pytest.mark.slow
def test_criterion_4_exponential_scaling():
    t0 = time.perf_counter()
    rep = sweep_N(SweepConfig("fixed_dx_vary_N", 0.1, list(range(4, 17)), max_bits=2048))
    dt = time.perf_counter() - t0
    agree = abs(rep.gamma_front / rep.gamma_back - 1)
    ok = rep.complete and rep.gamma > 0 and rep.fit.r2 > 0.999 and agree < 0.1
    assert report(4, "exponential scaling", ok,
                  f"gamma {rep.gamma:.4f}, R2 {rep.fit.r2:.7f}, halves {rep.gamma_front:.4f}/"
                  f"{rep.gamma_back:.4f}, max bits {max(rep.bits_used)}, {dt:.1f} s")


def test_criterion_5_maximal_amplitude_identity():
    t0 = time.perf_counter()
    geo = ten_alternating().with_amps(None)
    w = maximal_superoscillation(geo)
    s, v = smallest_eigenpair(build_prolate(geo))
    mp = w.ctx.mp
    vn = mp.sqrt(mp.fsum(x * x for x in v))
    dev = max(abs(a / (mp.sqrt(s) * vk / vn) - 1) for a, vk in zip(w.nodes.amps, v))
    dt = time.perf_counter() - t0
    ok = dev < 1e-10 and dt < 60
    assert report(5, "maximal amplitude identity", ok, f"max relative deviation {float(dev):.3e}, {dt:.2f} s")


def test_criterion_6_self_acceleration():
    t0 = time.perf_counter()
    w = synthesize(ten_alternating())
    r = truncate_and_transform(SlitWindow.create(w, w.nodes.xs[0], w.nodes.xs[-1]))
    dt = time.perf_counter() - t0
    ok = (r.expectation_abs_p > r.p_max and r.fraction_above_cutoff > FRACTION_THRESHOLD and dt < 120)
    assert report(6, "self-acceleration", ok,
                  f"<|p|> {r.expectation_abs_p:.4f} vs p_max {r.p_max:.4f}, fraction above "
                  f"{r.fraction_above_cutoff:.4f}, {dt:.1f} s")


def test_criterion_7_minimality():
    t0 = time.perf_counter()
    w = synthesize(ten_alternating())
    mp = w.ctx.mp
    rng = random.Random(7)
    worst = mp.zero
    minimal = True
    for _ in range(100):
        g = vanishing_perturbation(w, rng)
        gn = mp.sqrt(abs(inner_product(g, g)))
        worst = max(worst, abs(inner_product(w, g)) / (mp.sqrt(w.norm_sq) * gn))
        total = mp.re(inner_product(w.kernels + g, w.kernels + g))
        minimal = minimal and total >= w.norm_sq * (1 - 1e-20)
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and minimal and dt < 60
    assert report(7, "minimality", ok, f"max |<psi,g>|/(|psi||g|) {float(worst):.3e}, "
                  f"norm never decreased: {minimal}, {dt:.1f} s")


def test_criterion_8_local_wavelength():
    w = synthesize(ten_alternating())
    nodes = w.nodes
    dx = nodes.xs[1] - nodes.xs[0]
    lam = local_wavelength(w, (nodes.xs[0], nodes.xs[-1]))
    rel = abs(lam / (2 * dx) - 1)
    ok = rel < 0.05 and lam < nodes.lambda_min / 10
    assert report(8, "local wavelength", ok,
                  f"zero-crossing wavelength {float(lam):.5f} vs 2dx {float(2 * dx):.3f} "
                  f"({float(rel) * 100:.1f}% off), lambda_min/10 = {float(nodes.lambda_min / 10):.3f}")
