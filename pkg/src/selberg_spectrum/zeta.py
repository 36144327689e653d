"""The smoothed explicit-formula sum phi_s(x), its exact mean square over [1, T],
the limiting constant C(sigma) and prime geodesic counting."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate
from scipy.special import expi

from .spectrum import SpectrumTable, build_table, UNITY, WeightMode


class ZetaError(ValueError):
    pass


@dataclass(frozen=True)
class EvalPoint:
    sigma: float
    t: float
    x: float

    def __post_init__(self):
        if not self.x > 0:
            raise ZetaError("x must be positive")
        if not self.sigma > 0:
            raise ZetaError("sigma must be positive")


def cutoff(x: float) -> float:
    """X = x^(1/2) + x^(-1/2); n < X  <=>  eps(n)^2 < x."""
    r = math.sqrt(x)
    return r + 1.0 / r


def _require(table: SpectrumTable, x: float) -> float:
    X = cutoff(x)
    if not table.covers(X):
        raise ZetaError(f"spectrum table (X={table.X:g}) does not cover x={x:g} (needs X >= {X:g})")
    return X


def smoothed_coefficients(table: SpectrumTable, x: float):
    """(log_eps, m * Lambda(n, x)) over the traces n < X."""
    X = _require(table, x)
    _, m, L, lb = table.arrays(X)
    w = m * lb * -np.expm1(2.0 * L - math.log(x))
    return L, w


def phi(p: EvalPoint, table: SpectrumTable) -> complex:
    L, w = smoothed_coefficients(table, p.x)
    if L.size == 0:
        return 0j
    terms = w * np.exp(-2.0 * p.sigma * L) * np.exp(-2j * p.t * L)
    return complex(math.fsum(terms.real), math.fsum(terms.imag))


def phi_many(sigma: float, ts, x: float, table: SpectrumTable) -> np.ndarray:
    """phi at sigma + i t for an array of t (used by quadrature and plots)."""
    L, w = smoothed_coefficients(table, x)
    ts = np.asarray(ts, dtype=float)
    if L.size == 0:
        return np.zeros(ts.shape, dtype=complex)
    a = w * np.exp(-2.0 * sigma * L)
    return np.exp(-2j * np.multiply.outer(ts, L)) @ a


def multiplicity_envelope(table: SpectrumTable, exponent: float = 1.15) -> float:
    """Smallest C with m(n) <= C n^exponent over the table."""
    n, m, _, _ = table.arrays()
    return float(np.max(m / n**exponent)) if n.size else 0.0


def log_deriv_series(sigma: float, t: float, table: SpectrumTable, exponent: float = 1.15):
    """Truncated Dirichlet series sum_{n<X} m(n) Lambda(n) eps(n)^(-2s), sigma > 1.

    Returns (value, tail_estimate). The tail estimate integrates the fitted envelope
    C n^exponent * 2.4 log n * (n-1)^(-2 sigma) beyond the table; it is heuristic
    (the envelope constant is empirical) and infinite when that integral diverges.
    """
    if not sigma > 1:
        raise ZetaError("log_deriv_series needs sigma > 1 (the series diverges otherwise)")
    _, m, L, lb = table.arrays()
    terms = m * lb * np.exp(-2.0 * sigma * L) * np.exp(-2j * t * L)
    value = complex(math.fsum(terms.real), math.fsum(terms.imag))
    if exponent + 1 - 2 * sigma >= 0:
        return value, math.inf
    C = multiplicity_envelope(table, exponent)
    start = max(math.floor(table.X), 3)
    f = lambda y: C * y**exponent * 2.4 * math.log(y) * (y - 1.0) ** (-2.0 * sigma)
    # f is decreasing past its maximum; integrate from start - 1 to dominate the sum
    tail, _ = integrate.quad(f, start - 1, math.inf, limit=200)
    return value, float(tail)


def pair_integral(theta, T: float):
    """int_1^T exp(-2 i t theta) dt, written as exp(-i theta (T+1)) sin(theta (T-1))/theta.

    The sine ratio is evaluated through sinc, so small theta loses nothing.
    """
    theta = np.asarray(theta, dtype=float)
    return np.exp(-1j * theta * (T + 1.0)) * (T - 1.0) * np.sinc(theta * (T - 1.0) / math.pi)


@dataclass(frozen=True)
class SquareIntegralResult:
    mean: float
    diagonal: float
    offdiagonal: float
    T: float
    x: float
    sigma: float

    def as_dict(self) -> dict:
        return asdict(self)


def _offdiag_tile(args) -> float:
    a, L, T, i0, i1, j0, j1 = args
    theta = np.subtract.outer(L[i0:i1], L[j0:j1])
    # combined (n1, n2) + (n2, n1) term: 2 a1 a2 Re int_1^T e^{-2it theta} dt
    block = np.cos(theta * (T + 1.0)) * ((T - 1.0) * np.sinc(theta * (T - 1.0) / math.pi))
    block *= np.multiply.outer(a[i0:i1], a[j0:j1])
    if i0 == j0:
        block = np.triu(block, k=1)
    return 2.0 * float(np.sum(block))


def square_integral_mean(sigma: float, T: float, x: float, table: SpectrumTable,
                         threads: int = 1, tile: int = 1024) -> SquareIntegralResult:
    """(1/T) int_1^T |phi_{sigma+it}(x)|^2 dt in closed form.

    Tile sums are combined with fsum, so the result does not depend on the thread count.
    """
    if not T > 1:
        raise ZetaError("T must exceed 1")
    L, w = smoothed_coefficients(table, x)
    a = w * np.exp(-2.0 * sigma * L)
    K = a.size
    diagonal = (T - 1.0) / T * math.fsum(a * a)
    jobs = [(a, L, T, i0, min(i0 + tile, K), j0, min(j0 + tile, K))
            for i0 in range(0, K, tile) for j0 in range(i0, K, tile)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sums = list(pool.map(_offdiag_tile, jobs))
    else:
        sums = [_offdiag_tile(j) for j in jobs]
    offdiagonal = math.fsum(sums) / T
    return SquareIntegralResult(diagonal + offdiagonal, diagonal, offdiagonal, float(T), float(x), float(sigma))


def _second_moment_envelope(n, m) -> float:
    """Smallest C with sum_{k<=y} m(k)^2 <= C y^3 / log(y)^2 at every tabulated y."""
    M2 = np.cumsum(m * m)
    return float(np.max(M2 * np.log(n) ** 2 / n**3))


def c_constant(sigma: float, weight: WeightMode = UNITY, N: int = 10_000,
               table: SpectrumTable | None = None):
    """Partial sum of C(sigma) = sum_{n>=3} m(n)^2 Lambda(n)^2 eps(n)^(-4 sigma) up to N.

    Returns (partial, tail_bound). The tail bound is heuristic: it extrapolates the
    fitted second-moment envelope sum m^2 <= C y^3/log^2 y past N and applies partial
    summation against the decreasing weight Lambda(y)^2 eps(y)^(-4 sigma).
    """
    if not sigma > 0.75:
        raise ZetaError("C(sigma) diverges for sigma <= 3/4")
    if N < 3:
        raise ZetaError("N must be at least 3")
    if table is None:
        table = build_table(N + 1, weight)
    if table.X <= N:
        raise ZetaError(f"table (X={table.X:g}) does not reach N={N}")
    n, m, L, lb = table.arrays(N + 0.5)
    terms = m * m * lb * lb * np.exp(-4.0 * sigma * L)
    partial = math.fsum(terms)
    C = _second_moment_envelope(n, m)

    def neg_dg(y):
        Ly = math.acosh(y / 2.0)
        e2 = math.exp(-2.0 * Ly)
        lam = 2.0 * Ly / (1.0 - e2)
        # d/dy of Lambda^2 eps^(-4 sigma), with dL/dy = 1/sqrt(y^2 - 4)
        dlam = (2.0 * (1.0 - e2) - 2.0 * Ly * 2.0 * e2) / (1.0 - e2) ** 2
        dL = 1.0 / math.sqrt(y * y - 4.0)
        g = lam * lam * math.exp(-4.0 * sigma * Ly)
        dg = g * (2.0 * dlam / lam - 4.0 * sigma) * dL
        return -dg

    tail, _ = integrate.quad(lambda y: C * y**3 / math.log(y) ** 2 * neg_dg(y), float(N), math.inf, limit=400)
    return partial, float(tail)


def li(x: float) -> float:
    """int_2^x dt / log t."""
    if x < 2:
        raise ZetaError("li is defined here for x >= 2")
    return float(expi(math.log(x)) - expi(math.log(2.0)))


def prime_geodesic_count(x: float, weight: WeightMode = UNITY, table: SpectrumTable | None = None) -> float:
    """Weighted number of primitive classes with N(gamma) < x (j = 1 components)."""
    if not x > 4:
        raise ZetaError("prime_geodesic_count needs x > 4")
    X = cutoff(x)
    if table is None:
        table = build_table(max(X, 3.5), weight)
    _require(table, x)
    total = 0
    for e in table.entries:
        if e.n >= X:
            break
        if math.exp(2.0 * e.log_eps) >= x:
            continue
        total += sum(c.lam * c.h for c in e.components if c.j == 1)
    return float(total)


def growth_exponent(sigma: float, Ts, table: SpectrumTable, x_rule=lambda T: T**3, threads: int = 1):
    """Least-squares slope of log mean-square against log T; returns (slope, means)."""
    Ts = sorted(set(float(T) for T in Ts))
    if len(Ts) < 3:
        raise ZetaError("growth_exponent needs at least three distinct T")
    means = [square_integral_mean(sigma, T, x_rule(T), table, threads=threads).mean for T in Ts]
    slope = float(np.polyfit(np.log(Ts), np.log(means), 1)[0])
    return slope, means
