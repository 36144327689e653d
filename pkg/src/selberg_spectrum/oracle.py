"""Brute-force references for the fast paths.

Nothing here calls into arith/qforms/spectrum/zeta beyond their plain data types;
budgets that run out produce INCONCLUSIVE, never a guessed answer.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .arith import PellSolution
from .qforms import QuadForm


class OracleError(RuntimeError):
    pass


class _Inconclusive:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INCONCLUSIVE"

    def __bool__(self):
        return False


INCONCLUSIVE = _Inconclusive()


@dataclass(frozen=True)
class OracleBudget:
    max_u: int = 100_000
    # bound on |a| and |c| of the forms visited by the equivalence search
    max_entry: int = 10_000
    max_nodes: int = 2_000_000
    quad_tol: float = 1e-11
    max_intervals: int = 4_000_000

    def __post_init__(self):
        if min(self.max_u, self.max_entry, self.max_nodes, self.max_intervals) <= 0 or not self.quad_tol > 0:
            raise ValueError("oracle budgets must be positive")


def brute_pell(D: int, budget: OracleBudget = OracleBudget()):
    """Smallest u >= 1 with D u^2 + 4 a square, by scanning u upward."""
    chunk = 1 << 14
    safe_int64 = D * budget.max_u**2 + 4 < 2**62
    for lo in range(1, budget.max_u + 1, chunk):
        hi = min(lo + chunk, budget.max_u + 1)
        if safe_int64:
            u = np.arange(lo, hi, dtype=np.int64)
            v = D * u * u + 4
            r = np.floor(np.sqrt(v.astype(float))).astype(np.int64)
            hit = np.zeros(u.shape, dtype=bool)
            for d in (-1, 0, 1):
                hit |= (r + d) * (r + d) == v
            idx = np.nonzero(hit)[0]
            if idx.size:
                uu = int(u[idx[0]])
                t = math.isqrt(D * uu * uu + 4)
                return PellSolution(t, uu, D, 1)
        else:
            for uu in range(lo, hi):
                v = D * uu * uu + 4
                t = math.isqrt(v)
                if t * t == v:
                    return PellSolution(t, uu, D, 1)
    return INCONCLUSIVE


def _neighbours(f):
    a, b, c = f
    yield (c, -b, a)              # S
    yield (a, b + 2 * a, a + b + c)   # T
    yield (a, b - 2 * a, a - b + c)   # T^-1


def _search(start, budget: OracleBudget, targets=None):
    """Breadth-first orbit of ``start`` inside |a|, |c| <= max_entry.

    Returns (visited set, complete flag). Stops early once every target is seen.
    """
    B = budget.max_entry
    start = tuple(start)
    seen = {start}
    queue = deque([start])
    remaining = set(targets) - seen if targets is not None else None
    while queue:
        if remaining is not None and not remaining:
            return seen, True
        if len(seen) > budget.max_nodes:
            return seen, False
        f = queue.popleft()
        for g in _neighbours(f):
            if abs(g[0]) <= B and abs(g[2]) <= B and g not in seen:
                seen.add(g)
                queue.append(g)
                if remaining is not None:
                    remaining.discard(g)
    return seen, True


def brute_equivalent(Q1: QuadForm, Q2: QuadForm, budget: OracleBudget = OracleBudget()):
    """True when Q2 is reached from Q1; False means 'not within budget';
    INCONCLUSIVE when the node budget ran out first."""
    if Q1.b**2 - 4 * Q1.a * Q1.c != Q2.b**2 - 4 * Q2.a * Q2.c:
        return False
    seen, complete = _search(Q1, budget, targets={tuple(Q2)})
    if tuple(Q2) in seen:
        return True
    return False if complete else INCONCLUSIVE


def sufficient_entry_bound(D: int) -> int:
    """|a|, |c| bound under which neighbouring reduced forms stay connected.

    Between consecutive reduced forms the outer coefficients stay below
    max(sqrt(D), D/4) in absolute value.
    """
    return max(D // 4, math.isqrt(D)) + 1


def _reduced_forms_brute(D: int) -> list[tuple[int, int, int]]:
    out = []
    b = 1
    while b * b < D:
        if (b * b - D) % 4 == 0:
            N = (D - b * b) // 4
            for A in range(1, N + 1):
                if N % A:
                    continue
                # sqrt(D) - b < 2A < sqrt(D) + b, squared out
                if D >= (2 * A + b) ** 2:
                    continue
                if 2 * A - b > 0 and (2 * A - b) ** 2 >= D:
                    continue
                C = N // A
                for a, c in ((A, -C), (-A, C)):
                    if math.gcd(math.gcd(a, b), c) == 1:
                        out.append((a, b, c))
        b += 1
    return sorted(out)


def brute_class_number(D: int, budget: OracleBudget | None = None):
    if budget is None:
        budget = OracleBudget(max_entry=sufficient_entry_bound(D))
    if budget.max_entry < sufficient_entry_bound(D):
        return INCONCLUSIVE
    forms = _reduced_forms_brute(D)
    unassigned = set(forms)
    classes = 0
    for f in forms:
        if f not in unassigned:
            continue
        seen, complete = _search(f, budget)
        if not complete:
            return INCONCLUSIVE
        unassigned -= seen
        classes += 1
    return classes if classes else INCONCLUSIVE


def brute_multiplicity(n: int, budget: OracleBudget | None = None, _h_cache: dict | None = None):
    """Sum over u in U(n) of h(D)/j with brute Pell units and brute class numbers."""
    if n < 3:
        raise ValueError("n must be >= 3")
    N = n * n - 4
    total = Fraction(0)
    u = 1
    while u * u <= N:
        if N % (u * u) == 0 and (N // (u * u)) % 4 in (0, 1):
            D = N // (u * u)
            pell_budget = OracleBudget(max_u=u) if budget is None else budget
            base = brute_pell(D, pell_budget)
            if base is INCONCLUSIVE:
                return INCONCLUSIVE
            t1, u1 = base.t, base.u
            t, uu, j = t1, u1, 1
            while t < n:
                t, uu = (t * t1 + D * uu * u1) // 2, (t * u1 + uu * t1) // 2
                j += 1
            if (t, uu) != (n, u):
                return INCONCLUSIVE
            if _h_cache is not None and D in _h_cache:
                h = _h_cache[D]
            else:
                h = brute_class_number(D)
                if _h_cache is not None:
                    _h_cache[D] = h
            if h is INCONCLUSIVE:
                return INCONCLUSIVE
            total += Fraction(h, j)
        u += 1
    return total


def _coefficients(sigma: float, x: float, table):
    rows = []
    X = math.sqrt(x) + 1.0 / math.sqrt(x)
    if table.X < X:
        raise OracleError("table does not cover the requested x")
    for e in table.entries:
        if e.n >= X:
            break
        n = e.n
        eps = (n + math.sqrt(n * n - 4.0)) / 2.0
        lam = 2.0 * math.log(eps) / (1.0 - eps**-2) * (1.0 - eps * eps / x)
        rows.append((2.0 * math.log(eps), float(e.m) * lam * eps ** (-2.0 * sigma)))
    freq = np.array([r[0] for r in rows])
    amp = np.array([r[1] for r in rows])
    return freq, amp


def quad_square_integral(sigma: float, T: float, x: float, table, budget: OracleBudget = OracleBudget()) -> float:
    """(1/T) int_1^T |phi|^2 dt by adaptive Simpson on panels shorter than a
    quarter period of the highest frequency present."""
    if not T > 1:
        raise OracleError("T must exceed 1")
    freq, amp = _coefficients(sigma, x, table)
    if freq.size == 0:
        return 0.0

    def f(t):
        z = np.exp(-1j * np.multiply.outer(t, freq)) @ amp
        return z.real**2 + z.imag**2

    top = float(freq.max() - freq.min()) if freq.size > 1 else 0.0
    width = (T - 1.0) if top == 0 else min(T - 1.0, 0.5 * math.pi / top)
    panels = max(1, math.ceil((T - 1.0) / width))
    edges = np.linspace(1.0, T, panels + 1)
    a, b = edges[:-1], edges[1:]
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    tol_density = budget.quad_tol * T / (T - 1.0)
    pieces = []
    used = panels
    while a.size:
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = (m - a) / 6.0 * (fa + 4 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4 * frm + fb)
        err = left + right - whole
        ok = np.abs(err) <= 15.0 * tol_density * (b - a)
        pieces.append(left[ok] + right[ok] + err[ok] / 15.0)
        keep = ~ok
        used += 2 * int(keep.sum())
        if used > budget.max_intervals:
            raise OracleError("adaptive Simpson exceeded its subdivision budget")
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        flm, frm = flm[keep], frm[keep]
        left, right = left[keep], right[keep]
        a, m, b, fa, fm, fb, whole = (
            np.concatenate([a, m]), np.concatenate([lm[keep], rm[keep]]), np.concatenate([m, b]),
            np.concatenate([fa, fm]), np.concatenate([flm, frm]), np.concatenate([fm, fb]),
            np.concatenate([left, right]),
        )
    total = math.fsum(np.concatenate(pieces)) if pieces else 0.0
    return total / T
