"""Exact integer arithmetic: square roots, Kronecker symbols, Pell units, L(1, chi_D)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma, erfc, exp1
from sympy import factorint


class PellError(ValueError):
    pass


class LTruncationError(ArithmeticError):
    pass


def isqrt(n: int) -> tuple[int, bool]:
    """Return ``(floor(sqrt(n)), is_perfect_square)``."""
    if n < 0:
        raise ValueError("isqrt of a negative number")
    r = math.isqrt(n)
    return r, r * r == n


def is_discriminant(D: int) -> bool:
    return D >= 5 and D % 4 in (0, 1) and not isqrt(D)[1]


def check_discriminant(D: int) -> None:
    if not is_discriminant(D):
        raise PellError(f"{D} is not a positive non-square discriminant (D >= 5, D = 0,1 mod 4)")


def kronecker(D: int, m: int) -> int:
    """Kronecker symbol (D/m) for m >= 1."""
    if m <= 0:
        raise ValueError("kronecker: m must be positive")
    if m == 1:
        return 1
    if D % 2 == 0 and m % 2 == 0:
        return 0
    v = (m & -m).bit_length() - 1
    m >>= v
    k = 1
    if v % 2 and D % 8 in (3, 5):
        k = -1
    # Jacobi symbol (D/m) for odd m
    a = D % m
    while a:
        while a % 2 == 0:
            a //= 2
            if m % 8 in (3, 5):
                k = -k
        a, m = m, a
        if a % 4 == 3 and m % 4 == 3:
            k = -k
        a %= m
    return k if m == 1 else 0


@lru_cache(maxsize=8)
def _spf_sieve(size: int) -> np.ndarray:
    spf = np.zeros(size + 1, dtype=np.int64)
    for p in range(2, math.isqrt(size) + 1):
        if spf[p] == 0:
            block = spf[p * p :: p]
            block[block == 0] = p
    idx = np.arange(size + 1, dtype=np.int64)
    spf[spf == 0] = idx[spf == 0]
    spf.flags.writeable = False
    return spf


def smallest_prime_factors(M: int) -> np.ndarray:
    size = 1 << max(10, (M - 1).bit_length())
    return _spf_sieve(size)


def _powmod(base: np.ndarray, exp: np.ndarray, mod: np.ndarray) -> np.ndarray:
    r = np.ones_like(base)
    b = base % mod
    e = exp.copy()
    while np.any(e > 0):
        odd = (e & 1).astype(bool)
        r = np.where(odd, (r * b) % mod, r)
        b = (b * b) % mod
        e >>= 1
    return r


def kronecker_table(D: int, M: int) -> np.ndarray:
    """Array ``chi`` with ``chi[m] = (D/m)`` for 1 <= m <= M; ``chi[0] = 0``.

    Built from the values at primes by complete multiplicativity.
    Requires M < 3e9 so that products stay inside int64.
    """
    spf = smallest_prime_factors(M)[: M + 1]
    idx = np.arange(M + 1, dtype=np.int64)
    primes = idx[(spf == idx) & (idx >= 2)]
    at_prime = np.zeros(M + 1, dtype=np.int64)
    odd = primes[primes > 2]
    if odd.size:
        r = _powmod(np.full(odd.shape, D, dtype=np.int64) % odd, (odd - 1) // 2, odd)
        at_prime[odd] = np.where(r == 0, 0, np.where(r == 1, 1, -1))
    if M >= 2:
        at_prime[2] = kronecker(D, 2)
    chi = np.ones(M + 1, dtype=np.int64)
    chi[0] = 0
    rem = idx.copy()
    active = np.nonzero(rem > 1)[0]
    while active.size:
        p = spf[rem[active]]
        chi[active] *= at_prime[p]
        rem[active] //= p
        active = active[rem[active] > 1]
    return chi


def square_divisors(n: int) -> list[int]:
    """All u >= 1 with u^2 | n^2 - 4, ascending."""
    if n < 3:
        raise ValueError("square_divisors needs n >= 3")
    N = n * n - 4
    # n^2 - 4 = (n - 2)(n + 2); factor the two small pieces
    fac: dict[int, int] = {}
    for part in (n - 2, n + 2):
        for p, e in factorint(part).items():
            fac[p] = fac.get(p, 0) + e
    us = [1]
    for p, e in fac.items():
        us = [u * p**k for u in us for k in range(e // 2 + 1)]
    us.sort()
    assert all(N % (u * u) == 0 for u in us)
    return us


@dataclass(frozen=True)
class PellSolution:
    """Unit (t + u sqrt(D))/2 of norm 1, the j-th power of the fundamental one."""

    t: int
    u: int
    D: int
    j: int = 1

    def __post_init__(self):
        if self.t * self.t - self.D * self.u * self.u != 4:
            raise PellError(f"({self.t}, {self.u}) does not solve t^2 - {self.D} u^2 = 4")


def pell_compose(t1: int, u1: int, t2: int, u2: int, D: int) -> tuple[int, int]:
    """Product of (t1 + u1 sqrt D)/2 and (t2 + u2 sqrt D)/2 in (t, u) form."""
    t = t1 * t2 + D * u1 * u2
    u = t1 * u2 + u1 * t2
    if t % 2 or u % 2:
        raise PellError("parity violation in unit composition")
    return t // 2, u // 2


def pell_fundamental(D: int, max_steps: int = 10_000_000) -> PellSolution:
    """Fundamental solution of t^2 - D u^2 = 4 from the continued fraction of (P0 + sqrt D)/2.

    P0 is the largest integer below sqrt(D) with P0 = D (mod 2), so the expansion is
    purely periodic and its convergents p/q give units (2p - q P0 + q sqrt D)/2.
    """
    check_discriminant(D)
    s = math.isqrt(D)
    P0 = s if (s - D) % 2 == 0 else s - 1
    P, Q = P0, 2
    p_prev, p = 0, 1
    q_prev, q = 1, 0
    for _ in range(max_steps):
        a = (P + s) // Q
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        t, u = 2 * p - q * P0, q
        norm = t * t - D * u * u
        if norm == 4:
            return PellSolution(t, u, D, 1)
        if norm == -4:
            t2, u2 = pell_compose(t, u, t, u, D)
            return PellSolution(t2, u2, D, 1)
        P = a * Q - P
        Q = (D - P * P) // Q
    raise PellError(f"continued fraction for D={D} did not close within {max_steps} steps")


def pell_power(base: PellSolution, k: int) -> PellSolution:
    if base.j != 1:
        raise PellError("pell_power expects the fundamental solution")
    if k < 1:
        raise ValueError("k must be positive")
    t, u = 2, 0
    bt, bu = base.t, base.u
    e = k
    # square-and-multiply on (t, u) pairs; (2, 0) is the identity
    while e:
        if e & 1:
            t, u = pell_compose(t, u, bt, bu, base.D)
        e >>= 1
        if e:
            bt, bu = pell_compose(bt, bu, bt, bu, base.D)
    return PellSolution(t, u, base.D, k)


def log_unit(sol: PellSolution) -> float:
    """log((t + u sqrt D)/2), safe for t far beyond float range."""
    t, u = sol.t, sol.u
    shift = max(t.bit_length() - 64, 0)
    if shift:
        tf = float(t >> shift)
        uf = float(u >> shift)
        return math.log(tf + uf * math.sqrt(sol.D)) + (shift - 1) * math.log(2.0)
    # t + u sqrt(D) suffers no cancellation; the small-t case is plain float math
    return math.log((t + u * math.sqrt(sol.D)) / 2.0)


def dirichlet_L1(D: int, tol: float = 1e-10, max_terms: int = 50_000_000) -> float:
    """L(1, chi_D) = sum_{n>=1} (D/n)/n.

    One full period is summed directly. The tail sum_{n>D} is rewritten by partial
    summation as sum_r S(r) sum_{k>=1} 1/((kD+r)(kD+r+1)), with S the periodic
    character partial sum (S(D) = 0), and the inner sums are closed via digamma.
    What remains is floating-point rounding, which is estimated and compared to tol.
    """
    check_discriminant(D)
    if D > max_terms:
        raise LTruncationError(f"period {D} exceeds the term budget {max_terms}")
    chi = kronecker_table(D, D)[1:].astype(float)
    n = np.arange(1, D + 1, dtype=float)
    head = math.fsum(chi / n)
    S = np.cumsum(chi)
    weights = (digamma(1.0 + (n + 1.0) / D) - digamma(1.0 + n / D)) / D
    tail = math.fsum(S * weights)
    value = head + tail
    rounding = 64 * np.finfo(float).eps * (math.log(D) + 1.0 + float(np.abs(S).max()) / D)
    if rounding > tol:
        raise LTruncationError(f"tolerance {tol:g} below rounding floor {rounding:.2e} for D={D}")
    return value


def fundamental_part(D: int) -> tuple[int, int]:
    """Split D = d0 * f^2 with d0 a fundamental discriminant."""
    check_discriminant(D)
    core, f = 1, 1
    for p, e in factorint(D).items():
        f *= p ** (e // 2)
        if e % 2:
            core *= p
    if core % 4 != 1:
        if f % 2:
            raise PellError(f"{D} has no fundamental decomposition")
        core *= 4
        f //= 2
    return core, f


def sqrt_d0_L1(d0: int) -> float:
    """sqrt(d0) * L(1, chi_d0) for a fundamental d0 > 1 via the theta-function identity

        sqrt(d0) L(1, chi) = sum_n chi(n) [sqrt(d0)/n erfc(n sqrt(pi/d0)) + E1(pi n^2/d0)],

    truncated where both kernels drop below 1e-16 (n > 3.4 sqrt(d0)).
    """
    M = int(3.4 * math.sqrt(d0)) + 10
    chi = kronecker_table(d0, M)[1:]
    nz = np.nonzero(chi)[0]
    n = (nz + 1).astype(float)
    c = chi[nz].astype(float)
    root = math.sqrt(d0)
    kernel = root / n * erfc(n * math.sqrt(math.pi / d0)) + exp1(math.pi * n * n / d0)
    return float(np.dot(c, kernel))


def sqrt_D_L1(D: int) -> float:
    """sqrt(D) * L(1, chi_D) through the primitive character of the fundamental part."""
    d0, f = fundamental_part(D)
    value = sqrt_d0_L1(d0) * f
    for p in factorint(f):
        value *= 1.0 - kronecker(d0, p) / p
    return value
