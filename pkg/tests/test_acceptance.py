"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the verdict lines are
printed even when pytest captures output.
"""

import math
import time

import numpy as np
import pytest
from scipy.special import comb, logsumexp

from conftest import LOG_THREE_HALVES, random_irreducible
from sftlab.convex import ess_strict_convexity_check, eval_L, grad_L, kink_scan, log_mgf
from sftlab.ldp import ball_log_probability, finite_n_mgf, gartner_audit, pushforward
from sftlab.pressure import gateaux_check, pressure_direct, pressure_spectral, variational_value
from sftlab.rate import RateFunctionHandle, duality_audit, level2_rate
from sftlab.schauder import CylinderBasis, lemma14_span_check, perturbation_condition
from sftlab.sft import FailureCertificate, MarkovMeasure, Potential, Sft, ergodic_approximation, mixture, parry_measure

SUITE_SEED = 20240601


def verdict(capsys, number, ok, detail, elapsed, budget=None):
    """Print the verdict line and fail the test when the criterion fails."""
    within = budget is None or elapsed < budget
    passed = bool(ok) and within
    limit = "" if budget is None else f" (limit {budget:g} s)"
    with capsys.disabled():
        print(f"\n{'PASS' if passed else 'FAIL'} criterion {number}: {detail}; {elapsed:.2f} s{limit}")
    assert ok, detail
    assert within, f"runtime {elapsed:.2f} s exceeds {budget} s"


def random_suite(count=20, max_alphabet=4, max_depth=3, seed=SUITE_SEED):
    rng = np.random.default_rng(seed)
    suite = []
    for _ in range(count):
        sft = random_irreducible(rng, max_alphabet)
        suite.append((sft, Potential.random(sft, int(rng.integers(1, max_depth + 1)), rng)))
    return suite


def bounded_scaled_gaps(scaled):
    """``n |gap|`` is bounded when the later half never exceeds twice the
    earlier half; returns the reported constant and the verdict."""
    scaled = np.asarray(scaled)
    half = len(scaled) // 2
    c = float(scaled.max())
    return c, bool(np.isfinite(c)) and scaled[half:].max() <= 2.0 * scaled[:half].max() + 1e-9


def test_variational_principle(capsys):
    start = time.perf_counter()
    worst = 0.0
    for sft, f in random_suite():
        report = pressure_spectral(sft, f)
        worst = max(worst, abs(report.pressure - variational_value(report.equilibrium_states[0], f)))
    elapsed = time.perf_counter() - start
    verdict(capsys, 1, worst <= 1e-9, f"max |P - h - mu(f)| = {worst:.2e} over 20 shifts", elapsed, 5)


def test_pressure_routes_agree(capsys):
    start = time.perf_counter()
    constants, ok = [], True
    ns = range(8, 21)
    for sft, f in random_suite():
        p = pressure_spectral(sft, f, equilibria=False).pressure
        c, bounded = bounded_scaled_gaps([n * abs(pressure_direct(sft, f, n) - p) for n in ns])
        constants.append(c)
        ok &= bounded
    elapsed = time.perf_counter() - start
    verdict(capsys, 2, ok, f"n |P_n - P| bounded on n = 8..20, C = {max(constants):.4g}", elapsed, 30)


def test_finite_mgf_identity(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(SUITE_SEED + 1)
    constants, ok = [], True
    ns = range(8, 41)
    for sft, f in random_suite():
        g = Potential.random(sft, int(rng.integers(1, 4)), rng)
        limit = pressure_spectral(sft, f + g, equilibria=False).pressure - pressure_spectral(sft, f, equilibria=False).pressure
        c, bounded = bounded_scaled_gaps([n * abs(finite_n_mgf(sft, f, g, n) - limit) for n in ns])
        constants.append(c)
        ok &= bounded
    exact = 0.0
    for m in (2, 3, 4):
        sft = Sft.full_shift(m)
        f, g = Potential.random(sft, 1, rng), Potential.random(sft, 1, rng)
        limit = pressure_spectral(sft, f + g, equilibria=False).pressure - pressure_spectral(sft, f, equilibria=False).pressure
        exact = max(exact, max(abs(finite_n_mgf(sft, f, g, n) - limit) for n in ns))
    elapsed = time.perf_counter() - start
    ok &= exact <= 1e-12
    verdict(capsys, 3, ok, f"n |gap| <= C = {max(constants):.4g} on n = 8..40; full-shift depth-1 gap {exact:.1e}", elapsed, 5)


def test_gradient_against_differences(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(SUITE_SEED + 2)
    step = 1e-5
    worst = 0.0
    for dim in (1, 2, 3):
        sft = random_irreducible(rng, 3)
        lm = log_mgf(sft, Potential.random(sft, 2, rng), [Potential.random(sft, int(rng.integers(1, 3)), rng) for _ in range(dim)])
        for _ in range(50):
            t = rng.uniform(-3.0, 3.0, dim)
            g = grad_L(lm, t)
            fd = np.array([(eval_L(lm, t + step * e) - eval_L(lm, t - step * e)) / (2 * step) for e in np.eye(dim)])
            worst = max(worst, float(np.linalg.norm(g - fd) / max(np.linalg.norm(g), 1.0)))
    elapsed = time.perf_counter() - start
    verdict(capsys, 4, worst <= 1e-6, f"max relative error {worst:.2e} over 150 points", elapsed, 30)


def interior_means(lm, axis):
    """Gradients of L over a grid of tilts; they fill the interior of the mean set."""
    return [grad_L(lm, np.array([a, b])) for a in axis for b in axis]


def test_duality(capsys):
    start = time.perf_counter()
    coin = Sft.full_shift(2)
    h1 = RateFunctionHandle(coin, Potential.constant(coin, 0.0), [Potential.indicator(coin, ["1"])])
    grid = np.round(np.arange(0.05, 0.951, 0.05), 2)
    a1 = duality_audit(h1, grid)
    # a shift with a forbidden 2-word and two depth-2 directions
    sft = Sft([[1, 1, 0], [0, 1, 1], [1, 1, 1]])
    base = Potential.from_table(sft, 2, {"00": 0.3, "12": -0.4, "21": 0.2}, default=0.0)
    dirs = [Potential.cylinder(sft, "01"), Potential.cylinder(sft, "22")]
    h2 = RateFunctionHandle(sft, base, dirs)
    points = interior_means(h2.log_mgf, np.linspace(-1.0, 1.0, 5))
    a2 = duality_audit(h2, points)
    elapsed = time.perf_counter() - start
    gap = max(a1.max_gap, a2.max_gap)
    ok = a1.max_gap <= 1e-6 and a2.max_gap <= 1e-6 and len(a1.rows) == 19 and len(a2.rows) == 25
    verdict(capsys, 5, ok, f"max |dual - primal| = {gap:.2e} on 19 + 25 points", elapsed, 60)


def test_analytic_conjugate(capsys):
    start = time.perf_counter()
    coin = Sft.full_shift(2)
    h = RateFunctionHandle(coin, Potential.constant(coin, 0.0), [Potential.indicator(coin, ["1"])])
    analytic = math.log(2) + 0.75 * math.log(0.75) + 0.25 * math.log(0.25)
    value = h.dual(0.75)
    # Legendre transform of L(t) = log((1 + e^t) / 2) by brute force on a fine grid
    t = np.arange(-300000, 300001) * 1e-4
    oracle = float(np.max(0.75 * t - (np.logaddexp(0.0, t) - math.log(2))))
    elapsed = time.perf_counter() - start
    ok = abs(value - analytic) <= 1e-8 and abs(oracle - analytic) <= 1e-8
    verdict(capsys, 6, ok, f"I(0.75) = {value:.12f}, analytic {analytic:.12f}, grid oracle {oracle:.12f}", elapsed)


def test_dichotomy_signature(capsys):
    start = time.perf_counter()
    # irreducible side
    coin = Sft.full_shift(2)
    zero = Potential.constant(coin, 0.0)
    one = Potential.indicator(coin, ["1"])
    gateaux = gateaux_check(coin, zero, [one, Potential.cylinder(coin, "01")])
    h = RateFunctionHandle(coin, zero, [one])
    xs = np.linspace(0.1, 0.9, 9)
    cert = ess_strict_convexity_check(h.dual, [(a, b) for a in xs for b in xs if a < b])
    irreducible_ok = bool(gateaux) and cert.passed and cert.min_margin > 0

    # two components: full 2-shift on 0, 1 and full 3-shift on 2, 3, 4
    union = Sft.disjoint_union(Sft.full_shift(2), Sft.full_shift(3))
    base = Potential.constant(union, 0.0)
    g = Potential.indicator(union, ["0", "1"])
    kinks = kink_scan(union, base, g, (-2.0, 2.0), 41)
    kink_ok = len(kinks) == 1 and abs(kinks[0] - LOG_THREE_HALVES) <= 1e-9
    at_kink = pressure_spectral(union, base + LOG_THREE_HALVES * g)
    nonunique = not at_kink.unique and len(at_kink.equilibrium_states) == 2
    hu = RateFunctionHandle(union, base, [g])
    affine = max(abs(hu.dual(x) - x * LOG_THREE_HALVES) for x in np.linspace(0.0, 1.0, 11))
    balanced = mixture([parry_measure(union, component=c) for c in union.components], [0.5, 0.5])
    failure = ergodic_approximation(union, balanced, 1e-3)
    cert_ok = isinstance(failure, FailureCertificate) and failure.bound >= 0.5 - 1e-9
    elapsed = time.perf_counter() - start
    ok = irreducible_ok and kink_ok and nonunique and affine <= 1e-9 and cert_ok
    detail = (
        f"2-shift gateaux {bool(gateaux)}, convexity margin {cert.min_margin:.3e}; "
        f"union kink {kinks}, {len(at_kink.equilibrium_states)} equilibria, "
        f"affine error {affine:.1e}, certificate {getattr(failure, 'bound', None)}"
    )
    verdict(capsys, 7, ok, detail, elapsed, 30)


def random_markov(rng, sft):
    p = sft.transitions * rng.exponential(size=sft.transitions.shape)
    return p / p.sum(axis=1, keepdims=True)


def test_level2_zero_set(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(SUITE_SEED + 3)
    sft = Sft([[1, 1, 0], [0, 1, 1], [1, 1, 1]])
    f = Potential.random(sft, 1, rng)
    report = pressure_spectral(sft, f)
    mu_f = report.equilibrium_states[0]
    at_equilibrium = level2_rate(f, mu_f, report.pressure)
    rates = []
    while len(rates) < 50:
        p = random_markov(rng, sft)
        if np.max(np.abs(p - mu_f.transition)) < 1e-2:
            continue
        rates.append(level2_rate(f, MarkovMeasure.from_transition(sft, p), report.pressure))
    elapsed = time.perf_counter() - start
    ok = abs(at_equilibrium) <= 1e-10 and min(rates) >= 1e-4
    verdict(capsys, 8, ok, f"rate at mu_f {at_equilibrium:.1e}; min over 50 others {min(rates):.3e}", elapsed, 10)


def binomial_ball(n, x, delta):
    k = np.arange(n + 1)
    inside = np.abs(k / n - x) <= delta + 1e-12
    if not inside.any():
        return -math.inf
    return (float(logsumexp(np.log(comb(n, k[inside])))) - n * math.log(2)) / n


def test_gartner_route(capsys):
    start = time.perf_counter()
    coin = Sft.full_shift(2)
    zero = Potential.constant(coin, 0.0)
    one = Potential.indicator(coin, ["1"])
    report = gartner_audit(coin, zero, zero, [one], range(8, 21), [0.6, 0.75, 0.9], 0.02, method="enumerate")
    # the enumerated balls are binomial tails
    pl = pushforward(coin, zero, [one], 20)
    binom = max(abs(ball_log_probability(pl, x, 0.02, method="enumerate") - binomial_ball(20, x, 0.02)) for x in (0.6, 0.75, 0.9))
    elapsed = time.perf_counter() - start
    worst = max(fit["discrepancy"] for fit in report.fits)
    ok = report.passed and binom <= 1e-12
    verdict(capsys, 9, ok, f"max slope discrepancy {worst:.3f} <= tol {report.tolerance:.3f}; binomial check {binom:.1e}", elapsed, 60)


def test_schauder_stage(capsys):
    start = time.perf_counter()
    rng = np.random.default_rng(SUITE_SEED + 4)
    systems = [Sft.full_shift(2), Sft.golden_mean(), Sft.full_shift(3)]
    bases = {(i, k): CylinderBasis(s, k) for i, s in enumerate(systems) for k in range(1, 5) if s.word_count(k) <= 81}
    worst = 0.0
    for _ in range(100):
        i = int(rng.integers(len(systems)))
        k = int(rng.integers(1, 5))
        while (i, k) not in bases:
            k -= 1
        f = Potential.random(systems[i], int(rng.integers(1, k + 1)), rng)
        b = bases[(i, k)]
        worst = max(worst, float(np.max(np.abs(b.reconstruct(b.coordinates(f)).values - f.lift(k).values))))

    # on the 2-shift at depth 2 the coordinate functionals are
    # f -> (f(0.) + f(1.)) / 2 (norm 1) and three differences of two values (norm 2)
    b2 = CylinderBasis(systems[0], 2)
    cases = [([0.1, 0.2, 0.05, 0.1], 0.8), ([0.2, 0.2, 0.1, 0.1], 1.0), ([0.5, 0.0, 0.0, 0.0], 0.5), ([0.0, 0.3, 0.3, 0.0], 1.2)]
    perturbation_ok = all(
        abs(perturbation_condition(b2, hs)[0] - total) <= 1e-12 and perturbation_condition(b2, hs)[1] == (total < 1.0)
        for hs, total in cases
    )

    b3 = CylinderBasis(systems[0], 3)
    w = [b3.element(j) for j in range(4)]
    wt = [b3.element(j) for j in range(4, 8)]
    # independent h: the combinations stay in W + (W~ minus 0)
    forward = lemma14_span_check(w, wt, [w[0] + w[1], w[2], w[3] - w[0]], [wt[0], wt[1] + wt[2], wt[3]], rng=rng)
    # independent f but dependent h: the inclusion must fail
    backward = lemma14_span_check(w, wt, w[:3], [wt[0], wt[0], wt[1]], rng=rng)
    lemma_ok = (
        forward.independent and forward.inclusion_holds and forward.consistent and forward.trials == 200
        and backward.f_independent and not backward.independent and not backward.inclusion_holds and backward.consistent
    )
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and perturbation_ok and lemma_ok
    detail = (
        f"reconstruction residual {worst:.1e}; perturbation sums match {perturbation_ok}; "
        f"forward {forward.inclusion_holds}, backward violations {backward.violations}/200"
    )
    verdict(capsys, 10, ok, detail, elapsed, 10)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
