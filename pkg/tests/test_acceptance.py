"""Acceptance suite: one test per headline criterion, each printing a
PASS/FAIL line (pytest -s shows them inline)."""

import json
import random
import subprocess
import sys
import time

import numpy as np
import pytest

from spraylab.evaluate import (
    BatchEvaluator,
    Point,
    is_zero,
    points_to_arrays,
    sample_points,
)
from spraylab.expression import parse, simplify, to_string
from spraylab.forms import semi_basic_one_form
from spraylab.geodesics import (
    convergence_order,
    integrate,
    projective_factor,
    trace_compare,
)
from spraylab.involutivity import run_cartan_suite
from spraylab.metrizability import (
    check_conditions,
    euler_poincare,
    obstruction,
    recover_finsler,
)
from spraylab.presets import get_preset
from spraylab.spray import (
    Spray,
    curvature,
    identity_suite,
    projective_transform,
)

from gen import derivative_oracle_ok, random_expression, random_polynomial

EUCLID2 = "sqrt(y1^2+y2^2)"


def _report(name: str, ok: bool, detail: str = ""):
    line = f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f" ({detail})"
    print(line)
    assert ok, line


def test_criterion_1_involutivity_counts():
    """dim g1 = n^2 and dim g2 = n^2(n+1)/2 with the Cartan equality, for
    n in {2,3,4}, 10 random points per spray, under 5 seconds."""
    start = time.time()
    sprays = {
        2: [get_preset(p).build() for p in
            ("flat2", "anderson-thompson", "yang(0.5)", "riemannian")],
        3: [get_preset("flat3").build(),
            projective_transform(get_preset("flat3").build(),
                                 parse("0.5*sqrt(y1^2+y2^2+y3^2)", 3))],
        4: [Spray.from_strings(4, ["0"] * 4),
            projective_transform(Spray.from_strings(4, ["0"] * 4),
                                 parse("0.5*sqrt(y1^2+y2^2+y3^2+y4^2)", 4))],
    }
    expected = {2: (4, 6), 3: (9, 18), 4: (16, 40)}
    ok = True
    for n, bunch in sprays.items():
        g1, g2 = expected[n]
        prefix = tuple(n * (n - j) for j in range(1, n + 1))
        for spray in bunch:
            for rep in run_cartan_suite(spray, n_points=10, seed=42):
                ok = ok and rep.dim_g1 == g1 and rep.dim_g2 == g2
                ok = ok and rep.prefix_dims[:n] == prefix
                ok = ok and rep.cartan_sum == rep.dim_g2 and rep.involutive
    elapsed = time.time() - start
    _report("1 involutivity counts", ok and elapsed < 5.0, f"{elapsed:.2f}s")


def test_criterion_2_structural_identities():
    """Phi = i_S R, [J,Phi] = 3R, [J,J] = 0, [J,h] = 0, [C,h] = 0,
    h^2 = h, [h,h]/2 = R on all four presets, tol 1e-9, under 30 s."""
    start = time.time()
    samples = sample_points(2, 50, seed=42)
    ok = True
    worst = ""
    for preset in ("flat2", "anderson-thompson", "yang(0.5)", "riemannian"):
        spray = get_preset(preset).build()
        for name, verdict in identity_suite(spray, samples, tol=1e-9).items():
            if not verdict.is_zero:
                ok = False
                worst = f"{preset}/{name}: {verdict.describe()}"
    elapsed = time.time() - start
    _report("2 structural identities", ok and elapsed < 30.0,
            worst or f"{elapsed:.2f}s")


def test_criterion_3_necessity_roundtrip():
    """theta = d_J|y| passes all six verdicts against S_flat - 2P*C for
    P = lambda|y|, lambda in {0, 0.5}; F and P recovered to 1e-9."""
    samples = sample_points(2, 50, seed=42)
    flat = get_preset("flat2").build()
    F = parse(EUCLID2, 2)
    theta = euler_poincare(F, 2, samples)
    _, ys = points_to_arrays(samples)
    norms = np.linalg.norm(ys, axis=1)
    ok = True
    for lam in (0.0, 0.5):
        spray = projective_transform(flat, parse(f"{lam}*{EUCLID2}", 2), samples) \
            if lam else flat
        rep = check_conditions(spray, theta=theta, samples=samples, tol=1e-9)
        ok = ok and rep.passed
        rec = recover_finsler(spray, theta, samples, tol=1e-9)
        f_vals = BatchEvaluator([rec.F]).at_points(samples)[:, 0]
        p_vals = BatchEvaluator([rec.P]).at_points(samples)[:, 0]
        ok = ok and float(np.max(np.abs(f_vals - norms))) < 1e-9
        ok = ok and float(np.max(np.abs(p_vals - lam * norms))) < 1e-9
    _report("3 necessity round-trip", ok)


def test_criterion_4_obstruction():
    """d_R theta = 0 identically for n = 2, for flat sprays, and for the
    Yang preset with a condition-satisfying theta; the generic path and
    the Bianchi sum agree whenever the differential conditions hold."""
    samples2 = sample_points(2, 50, seed=42)
    samples3 = sample_points(3, 50, seed=42)
    rng = random.Random(11)
    ok = True

    # n = 2: structural vanishing for arbitrary spray/theta
    at = get_preset("anderson-thompson").build()
    for _ in range(5):
        theta = semi_basic_one_form(
            2, [random_polynomial(rng, 2, 3) for _ in range(2)])
        obs = obstruction(at, theta, samples2)
        ok = ok and obs.d_r_verdict.level == "symbolic"

    # flat sprays: any theta
    flat3 = get_preset("flat3").build()
    for _ in range(5):
        theta = semi_basic_one_form(
            3, [random_polynomial(rng, 3, 3) for _ in range(3)])
        obs = obstruction(flat3, theta, samples3)
        ok = ok and obs.d_r_verdict.is_zero and obs.bianchi_verdict.is_zero
        ok = ok and obs.consistent

    # Yang preset with the condition-satisfying candidate
    yang = get_preset("yang(0.5)").build()
    theta2 = euler_poincare(parse(EUCLID2, 2), 2, samples2)
    rep = check_conditions(yang, theta=theta2, samples=samples2)
    ok = ok and rep.passed and rep.obstruction.d_r_verdict.is_zero
    ok = ok and rep.obstruction.consistent

    # a curved isotropic case where both paths are non-trivially zero
    yang3 = projective_transform(flat3, parse("0.5*sqrt(y1^2+y2^2+y3^2)", 3),
                                 samples3)
    theta3 = euler_poincare(parse("sqrt(y1^2+y2^2+y3^2)", 3), 3, samples3)
    rep3 = check_conditions(yang3, theta=theta3, samples=samples3)
    ok = ok and curvature(yang3).R != {} and rep3.passed
    ok = ok and rep3.obstruction.d_r_verdict.is_zero
    ok = ok and rep3.obstruction.bianchi_verdict.is_zero and rep3.obstruction.consistent
    _report("4 curvature obstruction", ok)


def test_criterion_5_negative_controls():
    """anderson-thompson with F = |y| fails d_h with a witness;
    projective_factor(flat2, anderson-thompson) fails at y = (1,1);
    theta = x1 dx1 fails rank and positivity on flat2."""
    samples = sample_points(2, 50, seed=42)
    flat = get_preset("flat2").build()
    at = get_preset("anderson-thompson").build()

    rep = check_conditions(at, finsler=parse(EUCLID2, 2), samples=samples)
    ok = (not rep.passed) and (not rep.d_h.is_zero) and rep.d_h.witness is not None

    witness = Point((0.0, 0.0), (1.0, 1.0))
    eq = projective_factor(flat, at, [witness] + samples)
    ok = ok and not eq.vertical_parallel and eq.witness is not None
    eq_exact = projective_factor(flat, at, [witness])
    ok = ok and eq_exact.witness == witness

    from spraylab.expression import ZERO

    theta = semi_basic_one_form(2, [parse("x1", 2), ZERO])
    rep2 = check_conditions(flat, theta=theta, samples=samples)
    ok = ok and (not rep2.rank.passed) and rep2.positivity.status == "fail"
    _report("5 negative controls", ok)


def test_criterion_6_geodesic_layer():
    """RK4 order within [3.5, 4.5] on anderson-thompson; flat2 and
    yang(0.5) traces within 1e-4 after arclength reparametrization at
    step 1e-3; P = 0.5|y| recovered with relative error < 1e-8."""
    at = get_preset("anderson-thompson").build()
    flat = get_preset("flat2").build()
    yang = get_preset("yang(0.5)").build()

    orders = convergence_order(at, [0, 0], [1, 1], 1.0, base_steps=50, levels=3)
    ok = all(3.5 <= p <= 4.5 for p in orders)

    a = integrate(flat, [0, 0], [1, 0], 1.0, 1000)
    b = integrate(yang, [0, 0], [1, 0], 1.0, 1000)
    dist = trace_compare(a, b)
    ok = ok and min(a.arclength()[-1], b.arclength()[-1]) >= 0.5
    ok = ok and dist < 1e-4

    samples = sample_points(2, 50, seed=42)
    eq = projective_factor(flat, yang, samples)
    _, ys = points_to_arrays(samples)
    expected = 0.5 * np.linalg.norm(ys, axis=1)
    rel = np.max(np.abs(np.array(eq.p_values) - expected) / expected)
    ok = ok and eq.passed and rel < 1e-8
    _report("6 geodesic layer", ok,
            f"orders={['%.2f' % p for p in orders]}, dist={dist:.2e}, relP={rel:.2e}")


def test_criterion_7_expression_layer():
    """500 generated ASTs pass the finite-difference derivative oracle
    (relative error < 1e-5) and the parse/print round-trip."""
    from spraylab.expression import diff, var_x, var_y

    rng = random.Random(2024)
    points = sample_points(2, 10, seed=7)
    checked_total = 0
    ok = True
    for _ in range(500):
        e = random_expression(rng, 2, 5)
        v = rng.choice([var_x(1), var_x(2), var_y(1), var_y(2)])
        checked, failures = derivative_oracle_ok(e, diff(e, v), v, points, 1e-5)
        checked_total += checked
        ok = ok and failures == 0
        rt = parse(to_string(e), 2)
        ok = ok and simplify(rt) == simplify(e)
    _report("7 expression layer", ok and checked_total >= 3000,
            f"{checked_total} oracle points")


def test_criterion_8_cli_determinism():
    """Two identical CLI invocations produce byte-identical JSON."""
    cmd = [sys.executable, "-m", "spraylab.cli", "metrizable",
           "--preset", "yang(0.5)", "--seed", "42", "--samples", "50"]
    a = subprocess.run(cmd, capture_output=True, check=True)
    b = subprocess.run(cmd, capture_output=True, check=True)
    ok = a.stdout == b.stdout and len(a.stdout) > 0
    json.loads(a.stdout)  # valid JSON
    _report("8 CLI determinism", ok, f"{len(a.stdout)} bytes")
