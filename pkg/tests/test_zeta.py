import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from selberg_spectrum import oracle, spectrum, zeta
from selberg_spectrum.zeta import EvalPoint

LAMBDA_3_7 = 0.046971881824686460
LOG_EPS3 = 0.96242365011920689


@pytest.fixture(scope="module")
def tiny():
    return spectrum.build_table(3.5)


def test_eval_point_validation():
    with pytest.raises(zeta.ZetaError):
        EvalPoint(0.9, 0.0, 0.0)
    with pytest.raises(zeta.ZetaError):
        EvalPoint(0.0, 0.0, 10.0)


def test_phi_empty_sum(tiny):
    assert zeta.phi(EvalPoint(0.7, 3.0, 6.0), tiny) == 0


def test_phi_single_term(tiny):
    for s in (complex(0.6, 0), complex(0.9, 5.5), complex(2.0, -40)):
        want = LAMBDA_3_7 * cmath.exp(-2 * s * LOG_EPS3)
        got = zeta.phi(EvalPoint(s.real, s.imag, 7.0), tiny)
        assert abs(got - want) <= 1e-13 * abs(want)


def test_phi_requires_coverage(tiny):
    with pytest.raises(zeta.ZetaError, match="does not cover"):
        zeta.phi(EvalPoint(0.9, 0, 100.0), tiny)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(-500, 500), st.floats(7.0, 9.0e5))
def test_phi_conjugate_symmetry(small_table, sigma, t, x):
    a = zeta.phi(EvalPoint(sigma, t, x), small_table)
    b = zeta.phi(EvalPoint(sigma, -t, x), small_table)
    assert abs(a - b.conjugate()) <= 1e-12 * max(1.0, abs(a))


def test_phi_many_matches_phi(small_table):
    ts = np.linspace(-20, 20, 9)
    many = zeta.phi_many(0.8, ts, 1e4, small_table)
    for t, v in zip(ts, many):
        assert abs(v - zeta.phi(EvalPoint(0.8, t, 1e4), small_table)) <= 1e-10 * abs(v)


def test_log_deriv_series_rejects_strip(small_table):
    for sigma in (0.5, 0.9, 1.0):
        with pytest.raises(zeta.ZetaError):
            zeta.log_deriv_series(sigma, 0.0, small_table)


def test_log_deriv_series_symmetry_and_tail(small_table):
    a, tail_a = zeta.log_deriv_series(1.25, 10.0, small_table)
    b, _ = zeta.log_deriv_series(1.25, -10.0, small_table)
    assert abs(a - b.conjugate()) <= 1e-13 * abs(a)
    tails = [zeta.log_deriv_series(1.25, 10.0, small_table.truncated(X))[1] for X in (101, 301, 1001)]
    assert tails[0] > tails[1] > tails[2] > 0
    # 1.15 + 1 - 2 sigma >= 0 means the envelope integral diverges
    assert zeta.log_deriv_series(1.05, 0.0, small_table)[1] == math.inf


def test_single_entry_mean(tiny):
    T, x, sigma = 50.0, 7.0, 0.7
    r = zeta.square_integral_mean(sigma, T, x, tiny)
    want = (T - 1) / T * (LAMBDA_3_7 * math.exp(-2 * sigma * LOG_EPS3)) ** 2
    assert r.mean == pytest.approx(want, rel=1e-13)
    assert r.offdiagonal == 0


def test_square_integral_rejects(small_table):
    with pytest.raises(zeta.ZetaError):
        zeta.square_integral_mean(0.9, 1.0, 100.0, small_table)
    with pytest.raises(zeta.ZetaError):
        zeta.square_integral_mean(0.9, 10.0, 1e7, small_table)


@pytest.mark.parametrize("sigma", [0.6, 0.75, 0.9])
@pytest.mark.parametrize("T", [10.0, 100.0])
@pytest.mark.parametrize("x", [1e2, 1e4])
def test_mean_matches_quadrature(small_table, sigma, T, x):
    r = zeta.square_integral_mean(sigma, T, x, small_table)
    q = oracle.quad_square_integral(sigma, T, x, small_table)
    assert abs(r.mean - q) <= 1e-6 * q
    assert r.mean == r.diagonal + r.offdiagonal
    assert r.mean >= -1e-9


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 1.5), st.floats(1.001, 1e5), st.floats(7.0, 9.0e5))
def test_mean_nonnegative(small_table, sigma, T, x):
    r = zeta.square_integral_mean(sigma, T, x, small_table)
    assert r.mean >= -1e-9
    assert r.mean == r.diagonal + r.offdiagonal


def test_pair_integral_hermitian():
    rng = np.random.default_rng(2)
    theta = rng.uniform(-3, 3, 500)
    T = 137.5
    a = zeta.pair_integral(theta, T)
    b = zeta.pair_integral(-theta, T)
    assert np.all(np.abs(a - np.conj(b)) <= 1e-12 * np.maximum(np.abs(a), 1e-300))
    assert np.all(np.abs((a + b).imag) <= 1e-12 * np.abs(a + b) + 1e-15)


def test_pair_integral_against_closed_form():
    T = 40.0
    for theta in (1e-9, 1e-3, 0.05, 1.3):
        naive = (cmath.exp(-2j * T * theta) - cmath.exp(-2j * theta)) / (-2j * theta)
        tol = 1e-6 if theta < 1e-6 else 1e-12
        assert abs(zeta.pair_integral(theta, T) - naive) <= tol * abs(naive)
    assert zeta.pair_integral(0.0, T) == pytest.approx(T - 1)


def test_threads_do_not_change_result(small_table):
    a = zeta.square_integral_mean(0.8, 200.0, 9e5, small_table, threads=1, tile=64)
    b = zeta.square_integral_mean(0.8, 200.0, 9e5, small_table, threads=4, tile=64)
    assert a == b


def test_c_constant_single_term(tiny):
    partial, tail = zeta.c_constant(1.0, N=3, table=spectrum.build_table(4))
    assert partial == pytest.approx(0.10811152642546320, rel=1e-13)


def test_c_constant_rejects():
    with pytest.raises(zeta.ZetaError):
        zeta.c_constant(0.75)
    with pytest.raises(zeta.ZetaError):
        zeta.c_constant(0.9, N=2)
    with pytest.raises(zeta.ZetaError):
        zeta.c_constant(0.9, N=500, table=spectrum.build_table(400))


def test_c_constant_monotone(small_table):
    parts = [zeta.c_constant(0.9, N=N, table=small_table) for N in (10, 100, 500, 1000)]
    vals = [p for p, _ in parts]
    assert vals == sorted(vals)
    tails = [t for _, t in parts]
    assert tails == sorted(tails, reverse=True)
    # Cauchy differences bounded by the reported tail
    assert vals[-1] - vals[1] <= tails[1]


def test_li():
    assert zeta.li(2.0) == 0
    assert zeta.li(10.0) == pytest.approx(5.1204357246698052, abs=1e-8)
    xs = np.geomspace(2.01, 1e9, 50)
    vals = [zeta.li(x) for x in xs]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    with pytest.raises(zeta.ZetaError):
        zeta.li(1.5)


def test_prime_geodesic_count_examples():
    assert zeta.prime_geodesic_count(6.0) == 0
    assert zeta.prime_geodesic_count(7.0) == 1
    with pytest.raises(zeta.ZetaError):
        zeta.prime_geodesic_count(4.0)


def test_prime_geodesic_count_steps(small_table):
    xs = np.geomspace(5, 9e5, 200)
    counts = [zeta.prime_geodesic_count(x, table=small_table) for x in xs]
    assert all(a <= b for a, b in zip(counts, counts[1:]))


def test_prime_geodesic_count_excludes_powers():
    # n = 7: (1, 45, j=1) is primitive, (3, 5, j=2) is the square of n = 3
    t = spectrum.build_table(8)
    x = math.exp(2 * spectrum.log_eps(7)) + 1e-6
    from selberg_spectrum import qforms
    want = sum(qforms.class_number(c.D) for e in t.entries for c in e.components if c.j == 1)
    assert zeta.prime_geodesic_count(x, table=t) == want


def test_growth_exponent_single_entry(tiny):
    slope, means = zeta.growth_exponent(0.9, [1e3, 1e4, 1e5, 1e6], tiny, x_rule=lambda T: 7.0)
    assert abs(slope) <= 0.05
    with pytest.raises(zeta.ZetaError):
        zeta.growth_exponent(0.9, [10, 10, 20], tiny, x_rule=lambda T: 7.0)
