import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import LOG_THREE_HALVES, random_irreducible
from sftlab.errors import InputError, ResourceLimitError
from sftlab.perron import perron, period, stationary_vector
from sftlab.pressure import (
    directional_derivatives,
    gateaux_check,
    pressure_direct,
    pressure_spectral,
    variational_value,
)
from sftlab.sft import MarkovMeasure, Potential, Sft, bernoulli, entropy, expectation, is_ergodic
from sftlab.transfer import log_path_sum, log_periodic_sum, transfer_matrix

PHI = (1 + math.sqrt(5)) / 2


# Perron data


def test_perron_primitive():
    m = np.array([[1.0, 1.0], [1.0, 0.0]])
    pd = perron(m)
    assert pd.root == pytest.approx(PHI, abs=1e-13)
    assert np.allclose(m @ pd.right, pd.root * pd.right, atol=1e-12)
    assert np.allclose(pd.left @ m, pd.root * pd.left, atol=1e-12)
    assert pd.left @ pd.right == pytest.approx(1.0)


def test_perron_periodic_falls_back():
    m = np.array([[0.0, 2.0], [0.5, 0.0]])
    assert period(m > 0) == 2
    pd = perron(m)
    assert pd.root == pytest.approx(1.0, abs=1e-13)
    assert pd.method == "eig"


def test_stationary_vector():
    p = np.array([[0.9, 0.1], [0.5, 0.5]])
    pi = stationary_vector(p)
    assert np.allclose(pi, [5 / 6, 1 / 6], atol=1e-15)


# transfer matrices and exact sums


def test_transfer_matrix_pattern(golden, rng):
    f = Potential.random(golden, 3, rng)
    tm = transfer_matrix(f)
    assert tm.entries.shape == (3, 3)
    assert np.array_equal(tm.entries > 0, tm.adjacency.astype(bool))


def test_transfer_state_cap():
    f = Potential.constant(Sft.full_shift(4), 0.0).lift(7)
    with pytest.raises(ResourceLimitError):
        transfer_matrix(f, state_cap=100)


@given(st.integers(0, 10**6))
def test_periodic_dp_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    sft = random_irreducible(rng, 3)
    k = int(rng.integers(1, 4))
    f = Potential.random(sft, k, rng)
    n = int(rng.integers(k, 8))
    direct = pressure_direct(sft, f, n, method="enumerate")
    dp = pressure_direct(sft, f, n, method="transfer")
    assert dp == pytest.approx(direct, abs=1e-12)


def test_log_path_sum_counts_paths(golden):
    # 1^T M^n 1 over symbol pairs counts admissible (n+1)-words
    z = Potential.constant(golden, 0.0)
    assert math.exp(log_path_sum(z, 6)) == pytest.approx(golden.word_count(7))


# pressure examples


@pytest.mark.parametrize("m", [2, 3, 4])
def test_full_shift_zero_potential(m):
    s = Sft.full_shift(m)
    z = Potential.constant(s, 0.0)
    for n in (3, 7):
        assert pressure_direct(s, z, n) == pytest.approx(math.log(m), abs=1e-14)
    report = pressure_spectral(s, z)
    assert report.pressure == pytest.approx(math.log(m), abs=1e-13)
    assert report.unique


@pytest.mark.parametrize("t", [-2.0, 0.3, 1.7])
def test_binomial_pressure(two_shift, t):
    f = t * Potential.indicator(two_shift, ["1"])
    expected = math.log(1 + math.exp(t))
    for n in (5, 11, 30):
        assert pressure_direct(two_shift, f, n) == pytest.approx(expected, abs=1e-13)
    report = pressure_spectral(two_shift, f)
    assert report.pressure == pytest.approx(expected, abs=1e-13)
    mu = report.equilibrium_state
    q = math.exp(t) / (1 + math.exp(t))
    assert np.allclose(mu.transition, [[1 - q, q], [1 - q, q]], atol=1e-12)


def test_golden_mean_pressure(golden):
    z = Potential.constant(golden, 0.0)
    assert pressure_spectral(golden, z).pressure == pytest.approx(math.log(PHI), abs=1e-13)
    fib = [0, 1]
    while len(fib) < 25:
        fib.append(fib[-1] + fib[-2])
    for n in range(8, 21):
        # F(n+2) admissible words, all with zero Birkhoff sum
        assert pressure_direct(golden, z, n) == pytest.approx(math.log(fib[n + 2]) / n, abs=1e-14)
    gaps = [n * abs(pressure_direct(golden, z, n) - math.log(PHI)) for n in range(8, 21)]
    assert gaps[-1] == pytest.approx(math.log(PHI**2 / math.sqrt(5)), abs=1e-6)


def test_direct_transfer_route_beyond_cap(two_shift):
    f = 0.4 * Potential.indicator(two_shift, ["1"])
    with pytest.raises(ResourceLimitError):
        pressure_direct(two_shift, f, 30, cap=1000, method="enumerate")
    assert pressure_direct(two_shift, f, 30, cap=1000) == pytest.approx(math.log(1 + math.exp(0.4)), abs=1e-13)


def test_direct_rejects_short_n(two_shift):
    with pytest.raises(InputError):
        pressure_direct(two_shift, Potential.from_table(two_shift, 3, {}, default=0.0), 2)


def test_union_zero_potential(union):
    z = Potential.constant(union, 0.0)
    report = pressure_spectral(union, z)
    assert report.pressure == pytest.approx(math.log(3), abs=1e-13)
    assert sorted(v for _, v in report.per_component) == pytest.approx([math.log(2), math.log(3)], abs=1e-13)
    assert report.unique
    mu = report.equilibrium_state
    assert mu.stationary[:2].sum() == 0.0
    assert gateaux_check(union, z, [Potential.indicator(union, [0, 1])])


def test_union_kink_potential(union):
    g = Potential.indicator(union, [0, 1])
    f = LOG_THREE_HALVES * g
    report = pressure_spectral(union, f)
    assert report.pressure == pytest.approx(math.log(3), abs=1e-13)
    assert not report.unique and len(report.equilibrium_states) == 2
    with pytest.raises(InputError):
        report.equilibrium_state
    left, right = directional_derivatives(union, f, g, report)
    assert (left, right) == (pytest.approx(0.0, abs=1e-13), pytest.approx(1.0, abs=1e-13))
    cert = gateaux_check(union, f, [Potential.constant(union, 0.0), g])
    assert not cert and cert.witness == 1


def test_zero_direction(two_shift, rng):
    f = Potential.random(two_shift, 2, rng)
    assert directional_derivatives(two_shift, f, Potential.constant(two_shift, 0.0)) == (0.0, 0.0)


def test_unique_state_directional_derivatives(golden, rng):
    f = Potential.random(golden, 2, rng)
    g = Potential.random(golden, 3, rng)
    left, right = directional_derivatives(golden, f, g)
    assert left == right
    mu = pressure_spectral(golden, f).equilibrium_state
    assert left == pytest.approx(expectation(mu, g))
    # one-sided difference quotients bracket the derivative
    h = 1e-6
    p = lambda t: pressure_spectral(golden, f + t * g, equilibria=False).pressure
    assert (p(h) - p(-h)) / (2 * h) == pytest.approx(left, abs=1e-7)


def test_pressure_report_serializes(union):
    d = pressure_spectral(union, LOG_THREE_HALVES * Potential.indicator(union, [0, 1])).to_dict()
    assert d["unique"] is False and len(d["equilibrium_states"]) == 2


# invariants


@given(st.integers(0, 10**6))
def test_variational_residual_and_ergodicity(seed):
    rng = np.random.default_rng(seed)
    sft = random_irreducible(rng)
    f = Potential.random(sft, int(rng.integers(1, 4)), rng)
    report = pressure_spectral(sft, f)
    for mu in report.equilibrium_states:
        assert abs(variational_value(mu, f) - report.pressure) <= 1e-9
        assert is_ergodic(mu)


@given(st.integers(0, 10**6))
def test_random_measures_are_suboptimal(seed):
    rng = np.random.default_rng(seed)
    sft = random_irreducible(rng, 3)
    f = Potential.random(sft, 2, rng)
    pressure = pressure_spectral(sft, f).pressure
    p = sft.transitions * rng.random(sft.transitions.shape)
    p /= p.sum(axis=1, keepdims=True)
    mu = MarkovMeasure.from_transition(sft, p)
    assert entropy(mu) + expectation(mu, f) <= pressure + 1e-12


@given(st.integers(0, 10**6))
def test_pressure_convex_in_t(seed):
    rng = np.random.default_rng(seed)
    sft = random_irreducible(rng, 3)
    f = Potential.random(sft, 2, rng)
    g = Potential.random(sft, 2, rng)
    ts = np.linspace(-3, 3, 13)
    p = np.array([pressure_spectral(sft, f + t * g, equilibria=False).pressure for t in ts])
    assert (p[:-2] - 2 * p[1:-1] + p[2:]).min() >= -1e-9


def test_pressure_on_periodic_shift():
    s = Sft([[0, 1], [1, 0]])
    f = Potential.from_table(s, 1, {"0": 1.0, "1": -0.5})
    report = pressure_spectral(s, f)
    assert report.pressure == pytest.approx(0.25, abs=1e-13)
    assert variational_value(report.equilibrium_state, f) == pytest.approx(0.25, abs=1e-13)
