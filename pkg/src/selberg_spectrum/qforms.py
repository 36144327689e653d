"""Indefinite binary quadratic forms: reduction, rho-cycles, narrow class numbers,
and the form <-> hyperbolic matrix correspondence."""
from __future__ import annotations

import math
from typing import NamedTuple

from . import arith
from .arith import PellSolution


class FormError(ValueError):
    pass


class QuadForm(NamedTuple):
    """a x^2 + b x y + c y^2."""

    a: int
    b: int
    c: int

    @property
    def D(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    def is_primitive(self) -> bool:
        return math.gcd(self.a, self.b, self.c) == 1


Matrix = tuple[tuple[int, int], tuple[int, int]]


def discriminant(Q: QuadForm) -> int:
    return Q.b * Q.b - 4 * Q.a * Q.c


def _check_form(Q: QuadForm) -> int:
    D = discriminant(Q)
    if D <= 0 or arith.isqrt(D)[1]:
        raise FormError(f"{tuple(Q)} is not indefinite with non-square discriminant")
    return D


def apply_transform(Q: QuadForm, g) -> QuadForm:
    """The form (x, y) -> Q((x, y) . g) for g in SL2(Z)."""
    (p, q), (r, s) = g
    if p * s - q * r != 1:
        raise FormError(f"transform {g} does not have determinant 1")
    a, b, c = Q
    # (x, y) . g = (p x + r y, q x + s y)
    return QuadForm(
        a * p * p + b * p * q + c * q * q,
        2 * a * p * r + b * (p * s + q * r) + 2 * c * q * s,
        a * r * r + b * r * s + c * s * s,
    )


def is_reduced(Q: QuadForm) -> bool:
    """0 < b < sqrt(D) and sqrt(D) - b < 2|a| < sqrt(D) + b (exact integer tests)."""
    D = discriminant(Q)
    if D <= 0:
        return False
    s, square = arith.isqrt(D)
    if square:
        return False
    a2 = 2 * abs(Q.a)
    return 0 < Q.b <= s and a2 >= s + 1 - Q.b and a2 <= s + Q.b


def _neighbor_b(b: int, c: int, s: int, D: int) -> int:
    m = 2 * abs(c)
    if abs(c) > s:
        # -|c| < b' <= |c|
        r = (-b) % m
        return r - m if r > abs(c) else r
    # sqrt(D) - 2|c| < b' < sqrt(D): the largest value <= s in the class -b mod 2|c|
    return s - ((s + b) % m)


def _rho(Q: QuadForm, s: int, D: int) -> QuadForm:
    a, b, c = Q
    b2 = _neighbor_b(b, c, s, D)
    return QuadForm(c, b2, (b2 * b2 - D) // (4 * c))


def rho_transform(Q: QuadForm, s: int | None = None) -> Matrix:
    """The SL2(Z) matrix g with apply_transform(Q, g) == rho(Q)."""
    D = discriminant(Q)
    s = math.isqrt(D) if s is None else s
    b2 = _neighbor_b(Q.b, Q.c, s, D)
    delta = (b2 + Q.b) // (2 * Q.c)
    return ((0, 1), (-1, delta))


def rho_step(Q: QuadForm) -> QuadForm:
    """Right neighbour [c, b', c'] of a reduced form, again reduced."""
    if not is_reduced(Q):
        raise FormError(f"{tuple(Q)} is not reduced")
    D = discriminant(Q)
    return _rho(Q, math.isqrt(D), D)


def reduce(Q: QuadForm, max_steps: int = 100_000) -> QuadForm:
    D = _check_form(Q)
    s = math.isqrt(D)
    for _ in range(max_steps):
        if is_reduced(Q):
            return Q
        Q = _rho(Q, s, D)
    raise FormError(f"reduction of {tuple(Q)} did not terminate")


def reduced_forms(D: int) -> list[QuadForm]:
    """Every primitive reduced form of discriminant D, both signs of a."""
    arith.check_discriminant(D)
    s = math.isqrt(D)
    out = []
    for b in range(s - ((s - D) % 2), 0, -2):
        N = (D - b * b) // 4  # = -a c > 0
        lo = max(1, (s + 2 - b) // 2)
        hi = (s + b) // 2
        for a in range(lo, hi + 1):
            if N % a == 0:
                c = N // a
                for sa in (a, -a):
                    Q = QuadForm(sa, b, -c if sa > 0 else c)
                    if Q.is_primitive():
                        out.append(Q)
    out.sort()
    return out


def cycles(D: int) -> list[list[QuadForm]]:
    """Partition of the reduced forms of discriminant D into rho-cycles."""
    forms = reduced_forms(D)
    s = math.isqrt(D)
    seen: set[QuadForm] = set()
    out = []
    for start in forms:
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        Q = _rho(start, s, D)
        while Q != start:
            if Q in seen:
                raise FormError(f"rho is not a permutation at D={D}")
            cyc.append(Q)
            seen.add(Q)
            Q = _rho(Q, s, D)
        out.append(cyc)
    return out


def class_number(D: int) -> int:
    """Narrow class number h(D): the number of rho-cycles of reduced forms."""
    return len(cycles(D))


def class_number_via_formula(D: int, tol: float | None = None) -> float:
    """sqrt(D) L(1, chi_D) / log eps_1(D) as a float."""
    if tol is None:
        # rounding is certain once the error is below half the spacing for h <= 1e6
        tol = 1e-10
    L = arith.dirichlet_L1(D, tol=tol)
    return math.sqrt(D) * L / arith.log_unit(arith.pell_fundamental(D))


def class_number_analytic(D: int, log_eps1: float | None = None, slack: float = 1e-4) -> int:
    """h(D) rounded from the analytic class number formula.

    Uses the rapidly convergent theta-series value of L(1, chi) so large D are cheap.
    Raises when the float value is not within ``slack`` of an integer.
    """
    if log_eps1 is None:
        log_eps1 = arith.log_unit(arith.pell_fundamental(D))
    value = arith.sqrt_D_L1(D) / log_eps1
    h = round(value)
    if h < 1 or abs(value - h) > slack * max(1.0, value):
        raise FormError(f"analytic class number at D={D} not certified: {value!r}")
    return h


def form_to_matrix(Q: QuadForm, sol: PellSolution) -> Matrix:
    a, b, c = Q
    if discriminant(Q) != sol.D:
        raise FormError("form and Pell solution have different discriminants")
    t, u = sol.t, sol.u
    if (t + b * u) % 2:
        raise FormError("parity violation: t + b u must be even")
    return (((t + b * u) // 2, -c * u), (a * u, (t - b * u) // 2))


def matrix_to_form(g: Matrix) -> tuple[QuadForm, int, int]:
    (g11, g12), (g21, g22) = g
    if g11 * g22 - g12 * g21 != 1:
        raise FormError(f"{g} is not in SL2(Z)")
    t = g11 + g22
    if abs(t) <= 2:
        raise FormError(f"{g} is not hyperbolic")
    u = math.gcd(g21, g11 - g22, g12)
    Q = QuadForm(g21 // u, (g11 - g22) // u, -g12 // u)
    if (t * t - 4) != u * u * discriminant(Q):
        raise FormError("inconsistent discriminant in matrix_to_form")
    return Q, t, u
