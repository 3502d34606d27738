import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from thermodiff.analytic import (
    RateMethod,
    bound_report,
    gaussian_entropy,
    rate_block,
    rate_conditional,
    rate_exact,
    variance_classical,
    variance_quantum,
    variance_total,
)
from thermodiff.errors import (
    GridPointError,
    IndexBelowOne,
    NegativeIndex,
    NegativeTime,
    NonPositiveDt,
    NonPositiveVariance,
)
from thermodiff.units import derive_scales, make_params


def quadrature_entropy(variance):
    """-int g log g for a centred Gaussian, by adaptive quadrature."""
    sigma = math.sqrt(variance)

    def integrand(x):
        logg = -(x * x) / (2 * variance) - 0.5 * math.log(2 * math.pi * variance)
        return -math.exp(logg) * logg

    value, _ = integrate.quad(integrand, -40 * sigma, 40 * sigma, points=[0.0], limit=200)
    return value


@pytest.mark.parametrize("t, expected", [(0, 0.25), (1, 1.25), (2, 4.25)])
def test_variance_quantum(unit_scales, t, expected):
    assert variance_quantum(unit_scales, t) == expected


def test_variance_classical(unit_scales, electron_params):
    assert variance_classical(unit_scales, 0) == 0
    assert variance_classical(unit_scales, 2) == 2
    si = derive_scales(electron_params)
    assert variance_classical(si, 1e-9) == pytest.approx(1.15767636069605894e-13, rel=1e-12)


def test_variance_total_examples(unit_scales):
    b = variance_total(unit_scales, 0)
    assert (b.quantum_static, b.quantum_drift, b.classical, b.total) == (0.25, 0, 0, 0.25)
    b = variance_total(unit_scales, 1)
    assert (b.quantum_static, b.quantum_drift, b.classical, b.total) == (0.25, 1, 1, 2.25)
    assert variance_total(unit_scales, 3).total == pytest.approx(12.25, rel=1e-12)


@pytest.mark.parametrize("fn", [variance_quantum, variance_classical, variance_total])
def test_negative_time(unit_scales, fn):
    with pytest.raises(NegativeTime):
        fn(unit_scales, -0.1)


@given(st.floats(1e-3, 1e3), st.floats(1e-3, 1e3), st.just(0.0) | st.floats(1e-300, 1e3))
def test_variance_factorisation(temperature, mass, t):
    s = derive_scales(make_params("natural", temperature, mass))
    b = variance_total(s, t)
    assert b.total == pytest.approx(b.quantum_static + b.quantum_drift + b.classical, rel=1e-12)
    assert b.total == pytest.approx((s.dx0 + s.dp * t / mass) ** 2, rel=1e-12)
    assert min(b.quantum_static, b.quantum_drift, b.classical) >= 0
    assert (b.classical == 0) == (t == 0)


def test_gaussian_entropy_unit_argument():
    assert gaussian_entropy(1 / (2 * math.pi * math.e)) == pytest.approx(0, abs=1e-15)


@pytest.mark.parametrize("variance", [0.25, 2.25])
def test_gaussian_entropy_matches_quadrature(variance):
    assert abs(gaussian_entropy(variance) - quadrature_entropy(variance)) <= 1e-6


def test_gaussian_entropy_frozen_values():
    assert gaussian_entropy(0.25) == pytest.approx(0.725791352644727, abs=1e-12)
    assert gaussian_entropy(2.25) == pytest.approx(1.824403641312837, abs=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_gaussian_entropy_rejects(bad):
    with pytest.raises(NonPositiveVariance):
        gaussian_entropy(bad)


@given(st.floats(1e-200, 1e200))
def test_entropy_log_scaling(v):
    assert gaussian_entropy(4 * v) - gaussian_entropy(v) == pytest.approx(math.log(2), abs=1e-12)


def test_rate_conditional_examples(unit_scales):
    p = rate_conditional(unit_scales, 0, 1e-6)
    assert p.method is RateMethod.CONDITIONAL
    # ln(1 + 2e-6) / 1e-6 expanded to third order
    assert p.rate == pytest.approx(2 - 2e-6 + (8 / 3) * 1e-12, rel=1e-14)
    assert rate_conditional(unit_scales, 0, 0.5).rate == pytest.approx(1.3862943611198906, rel=1e-14)


def test_rate_conditional_vanishes_with_n(unit_scales):
    rates = [rate_conditional(unit_scales, n, 0.1).rate for n in (0, 10, 10**3, 10**6, 10**9)]
    assert all(a > b for a, b in zip(rates, rates[1:]))
    assert rates[-1] < 1e-7


def test_rate_block_examples(unit_scales):
    assert rate_block(unit_scales, 1, 1e-6).rate == rate_conditional(unit_scales, 0, 1e-6).rate
    assert rate_block(unit_scales, 1000, 1e-6).rate == pytest.approx(1.998002662673056, rel=1e-12)
    assert rate_block(unit_scales, 5, 0.1).rate == pytest.approx(1.3862943611198906, rel=1e-12)


def test_rate_validation(unit_scales):
    with pytest.raises(NonPositiveDt):
        rate_conditional(unit_scales, 0, 0.0)
    with pytest.raises(NegativeIndex):
        rate_conditional(unit_scales, -1, 0.1)
    with pytest.raises(IndexBelowOne):
        rate_block(unit_scales, 0, 0.1)
    with pytest.raises(NonPositiveDt):
        rate_block(unit_scales, 1, -1.0)


def test_rate_exact(unit_scales, electron_params):
    assert rate_exact(unit_scales).rate == 2
    assert rate_exact(derive_scales(make_params("natural", 2.5, 1))).rate == 5
    assert rate_exact(derive_scales(electron_params)).rate == pytest.approx(7.85522035243238e13, rel=1e-12)
    assert rate_exact(unit_scales).method is RateMethod.EXACT


@given(st.integers(1, 2000), st.floats(1e-9, 1.0))
def test_telescoping_identity(n, dt):
    s = derive_scales(make_params("natural", 1, 1))
    total = math.fsum(rate_conditional(s, j, dt).rate * dt for j in range(n))
    assert total == pytest.approx(rate_block(s, n, dt).rate * n * dt, rel=1e-10)


def test_telescoping_matches_entropy_differences(unit_scales):
    # The closed forms against differences of the Gaussian entropies of the chain.
    dt = 0.05
    h = [gaussian_entropy(unit_scales.containment_width(n * dt) ** 2) for n in range(6)]
    for n in range(5):
        assert rate_conditional(unit_scales, n, dt).rate == pytest.approx((h[n + 1] - h[n]) / dt, rel=1e-10)
        if n:
            assert rate_block(unit_scales, n, dt).rate == pytest.approx((h[n] - h[0]) / (n * dt), rel=1e-10)


def test_universal_upper_bound():
    rng = np.random.default_rng(11)
    for temperature, mass in [(1, 1), (0.01, 30), (400, 0.002)]:
        s = derive_scales(make_params("natural", temperature, mass))
        limit = s.dp / (s.mass * s.dx0)
        ns = rng.integers(0, 10**6, 10_000)
        dts = np.exp(rng.uniform(math.log(1e-12), math.log(10), 10_000))
        for n, dt in zip(ns.tolist(), dts.tolist()):
            assert rate_conditional(s, n, dt).rate <= limit * (1 + 1e-12)
            if n:
                assert rate_block(s, n, dt).rate <= limit * (1 + 1e-12)


@pytest.mark.parametrize("elapsed", [1e-2, 1e-4, 1e-6])
def test_block_converges_from_below(unit_scales, elapsed):
    r = unit_scales.rate_exact
    gap = r - rate_block(unit_scales, 1, elapsed).rate
    assert 0 <= gap <= r**2 * elapsed / 2


def test_block_decreasing_in_elapsed_time(unit_scales):
    rates = [rate_block(unit_scales, 1, e).rate for e in np.geomspace(1e-9, 1e3, 50)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_small_dt_keeps_ordering(unit_scales):
    # log1p keeps the bound intact where log(1 + x) would round to zero
    for dt in (1e-12, 1e-15, 1e-18):
        rate = rate_conditional(unit_scales, 0, dt).rate
        assert rate == pytest.approx(2.0, rel=1e-9)
        assert rate <= 2.0 * (1 + 1e-12)


def test_bound_report(unit_scales):
    [row] = bound_report(unit_scales, [(0, 1e-8)])
    assert 0 <= row.gap_conditional <= 1e-7
    assert row.rate_block is None and row.gap_block is None

    [row] = bound_report(unit_scales, [(10**6, 1e-3)])
    assert row.gap_conditional == pytest.approx(2.0, abs=1e-3)
    assert row.gap_block == pytest.approx(2 - math.log(2001) / 1000, rel=1e-12)


def test_bound_report_errors_carry_index(unit_scales):
    with pytest.raises(GridPointError) as info:
        bound_report(unit_scales, [(1, 1e-3), (2, 0.0)])
    assert info.value.index == 1
    assert isinstance(info.value.cause, NonPositiveDt)
    with pytest.raises(ValueError):
        bound_report(unit_scales, [])


@settings(max_examples=50)
@given(st.lists(st.tuples(st.integers(0, 10**6), st.floats(1e-9, 0.1)), min_size=1, max_size=20))
def test_bound_report_gaps_nonnegative(grid):
    s = derive_scales(make_params("natural", 1, 1))
    for row in bound_report(s, grid):
        assert row.gap_conditional >= -1e-12 * row.rate_exact
        assert row.gap_block is None or row.gap_block >= -1e-12 * row.rate_exact
