"""Length spectrum of SL2(Z): exact trace multiplicities and the spectrum cache."""
from __future__ import annotations

import math
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import arith, qforms
from .arith import PellSolution

CACHE_MAGIC = "# selberg-spectrum v1"
CACHE_HEADER = "n,m_num,m_den,log_eps,lambda_bar,components"
# reduced-form cycles up to here, certified analytic class numbers above
CYCLE_LIMIT = 100_000

LOG_EPS1_MIN = math.acosh(1.5)  # log eps_1(5), the smallest narrow unit


class SpectrumError(RuntimeError):
    pass


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class WeightMode:
    """unity (modular group), index:<k> (subgroup upper bound) or table:<path> (lambda(D))."""

    kind: str = "unity"
    k: int = 1
    table: dict = field(default_factory=dict, compare=False, hash=False)
    spec: str = "unity"

    @property
    def is_bound(self) -> bool:
        return self.kind == "index"

    def weight(self, D: int) -> Fraction:
        if self.kind == "unity":
            return Fraction(1)
        if self.kind == "index":
            return Fraction(self.k)
        try:
            return self.table[D]
        except KeyError:
            raise WeightError(f"weight table {self.spec!r} has no entry for D={D}") from None


UNITY = WeightMode()


def index_bound(k: int) -> WeightMode:
    if k < 1:
        raise WeightError("index bound must be >= 1")
    return WeightMode("index", k=k, spec=f"index:{k}")


def read_weight_table(path) -> dict[int, Fraction]:
    """CSV of ``D,lambda`` lines; ``#`` starts a comment; an optional ``D,lambda`` header."""
    table: dict[int, Fraction] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise WeightError(f"cannot read weight table {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.replace(" ", "").lower() == "d,lambda":
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            if len(parts) != 2:
                raise ValueError("expected two fields")
            D, lam = int(parts[0]), Fraction(parts[1])
        except ValueError as exc:
            raise WeightError(f"{path}:{lineno}: {exc}: {raw!r}") from None
        if lam < 0:
            raise WeightError(f"{path}:{lineno}: negative weight {lam}")
        if D in table:
            raise WeightError(f"{path}:{lineno}: duplicate D={D}")
        table[D] = lam
    return table


def parse_weight(spec: str) -> WeightMode:
    if spec == "unity":
        return UNITY
    if spec.startswith("index:"):
        try:
            k = int(spec[len("index:"):])
        except ValueError:
            raise WeightError(f"bad index weight {spec!r}") from None
        return index_bound(k)
    if spec.startswith("table:"):
        path = spec[len("table:"):]
        return WeightMode("table", table=read_weight_table(path), spec=spec)
    raise WeightError(f"unknown weight spec {spec!r}")


def log_eps(n: int) -> float:
    """log eps(n) with eps(n) = (n + sqrt(n^2 - 4))/2."""
    return math.acosh(n / 2.0)


def eps(n: int) -> float:
    return math.exp(log_eps(n))


def lambda_bar(n: int) -> float:
    L = log_eps(n)
    return 2.0 * L / -math.expm1(-2.0 * L)


def lambda_bar_x(n: int, x: float) -> float:
    """Smoothed weight Lambda(n) (1 - eps(n)^2 / x); negative past the cutoff."""
    return lambda_bar(n) * (1.0 - math.exp(2.0 * log_eps(n)) / x)


def u_set(n: int) -> list[tuple[int, int]]:
    N = n * n - 4
    out = []
    for u in arith.square_divisors(n):
        D = N // (u * u)
        if D % 4 in (0, 1):
            out.append((u, D))
    return out


def fundamental_from_trace(n: int, u: int, D: int) -> tuple[PellSolution, int]:
    """The fundamental unit of D and the j with eps_1(D)^j = (n + u sqrt D)/2.

    Candidate roots come from floating j-th roots of eps(n), largest j first;
    each is confirmed by exact integer powering.
    """
    if u * u * D != n * n - 4:
        raise SpectrumError(f"(n={n}, u={u}) is not a solution for D={D}")
    L = log_eps(n)
    jmax = int(L / LOG_EPS1_MIN + 1e-9) + 1
    for j in range(jmax, 1, -1):
        r = math.exp(L / j)
        t = round(r + 1.0 / r)
        if t < 3:
            continue
        q, rem = divmod(t * t - 4, D)
        if rem:
            continue
        uu, exact = arith.isqrt(q)
        if not exact:
            continue
        base = PellSolution(t, uu, D, 1)
        p = arith.pell_power(base, j)
        if (p.t, p.u) == (n, u):
            return base, j
    return PellSolution(n, u, D, 1), 1


def j_index(n: int, u: int, D: int) -> int:
    base, j = fundamental_from_trace(n, u, D)
    p = arith.pell_power(base, j)
    if (p.t, p.u) != (n, u):
        raise SpectrumError(f"no power of the fundamental unit of D={D} has trace {n}")
    return j


@lru_cache(maxsize=None)
def class_number_for(D: int, log_eps1: float) -> int:
    if D <= CYCLE_LIMIT:
        return qforms.class_number(D)
    return qforms.class_number_analytic(D, log_eps1)


@dataclass(frozen=True)
class Component:
    u: int
    D: int
    j: int
    h: int
    lam: Fraction

    @property
    def value(self) -> Fraction:
        return self.lam * self.h / self.j

    def encode(self) -> str:
        return f"{self.u}:{self.D}:{self.j}:{self.h}:{self.lam}"

    @classmethod
    def decode(cls, text: str) -> "Component":
        u, D, j, h, lam = text.split(":")
        return cls(int(u), int(D), int(j), int(h), Fraction(lam))


@dataclass(frozen=True)
class SpectrumEntry:
    n: int
    m: Fraction
    components: tuple[Component, ...]
    log_eps: float
    lambda_bar: float

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)


def multiplicity(n: int, weight: WeightMode = UNITY) -> tuple[Fraction, tuple[Component, ...]]:
    """m(n) = sum over u in U(n) of lambda(D) h(D) / j, exactly."""
    if n < 3:
        raise ValueError("multiplicity needs n >= 3")
    comps = []
    L = log_eps(n)
    for u, D in u_set(n):
        j = j_index(n, u, D)
        h = class_number_for(D, L / j)
        comps.append(Component(u, D, j, h, weight.weight(D)))
    m = sum((c.value for c in comps), Fraction(0))
    return m, tuple(comps)


def make_entry(n: int, weight: WeightMode = UNITY) -> SpectrumEntry:
    try:
        m, comps = multiplicity(n, weight)
    except (WeightError, SpectrumError, qforms.FormError, arith.PellError) as exc:
        raise SpectrumError(f"n={n}: {exc}") from exc
    return SpectrumEntry(n, m, comps, log_eps(n), lambda_bar(n))


def _entries_chunk(args) -> list[SpectrumEntry]:
    ns, weight = args
    return [make_entry(n, weight) for n in ns]


def trace_range(X: float) -> range:
    """Integers 3 <= n < X."""
    top = math.ceil(X) - 1
    return range(3, max(top, 2) + 1)


@dataclass(frozen=True)
class SpectrumTable:
    X: float
    weight: WeightMode
    entries: tuple[SpectrumEntry, ...]

    def __post_init__(self):
        ns = [e.n for e in self.entries]
        if ns != list(trace_range(self.X)):
            raise SpectrumError("spectrum entries must cover every n with 3 <= n < X")

    def __len__(self) -> int:
        return len(self.entries)

    def covers(self, X: float) -> bool:
        return self.X >= X

    def truncated(self, X: float) -> "SpectrumTable":
        if X > self.X:
            raise SpectrumError(f"table cutoff {self.X} does not cover X={X}")
        keep = tuple(e for e in self.entries if e.n < X)
        return SpectrumTable(X, self.weight, keep)

    def arrays(self, X: float | None = None):
        """(n, m, log_eps, lambda_bar) as float arrays for entries with n < X."""
        entries = self.entries if X is None else [e for e in self.entries if e.n < X]
        n = np.array([e.n for e in entries], dtype=float)
        m = np.array([float(e.m) for e in entries], dtype=float)
        L = np.array([e.log_eps for e in entries], dtype=float)
        lb = np.array([e.lambda_bar for e in entries], dtype=float)
        return n, m, L, lb


def build_table(X: float, weight: WeightMode = UNITY, threads: int = 1, chunk: int = 256) -> SpectrumTable:
    if not X > 3:
        raise SpectrumError("build_table needs X > 3")
    ns = list(trace_range(X))
    if threads <= 1 or len(ns) < 2 * chunk:
        entries = _entries_chunk((ns, weight))
    else:
        # interleaved chunks balance the growing per-n cost; results are re-sorted
        jobs = [(ns[i::threads * 4], weight) for i in range(threads * 4)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            entries = [e for part in pool.map(_entries_chunk, jobs) for e in part]
        entries.sort(key=lambda e: e.n)
    return SpectrumTable(float(X), weight, tuple(entries))


def format_float(v: float) -> str:
    return format(v, ".17g")


def dumps(table: SpectrumTable) -> str:
    lines = [f"{CACHE_MAGIC} X={format_float(table.X)} weight={table.weight.spec}", CACHE_HEADER]
    for e in table.entries:
        comps = "|".join(c.encode() for c in e.components)
        lines.append(
            f"{e.n},{e.m.numerator},{e.m.denominator},{format_float(e.log_eps)},"
            f"{format_float(e.lambda_bar)},{comps}"
        )
    return "\n".join(lines) + "\n"


def write_cache(table: SpectrumTable, path) -> None:
    """Atomic write: temp file in the target directory, then rename."""
    path = Path(path)
    text = dumps(table)
    fd, tmp = tempfile.mkstemp(prefix=".spectrum-", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class CacheError(ValueError):
    pass


def read_header(path) -> tuple[float, str]:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
    return _parse_header(first, path)


def _parse_header(first: str, path) -> tuple[float, str]:
    if not first.startswith(CACHE_MAGIC + " "):
        raise CacheError(f"{path}: not a selberg-spectrum v1 cache")
    fields = dict(item.split("=", 1) for item in first[len(CACHE_MAGIC) + 1:].split(" ") if "=" in item)
    try:
        return float(fields["X"]), fields["weight"]
    except (KeyError, ValueError):
        raise CacheError(f"{path}: malformed cache header {first!r}") from None


def read_cache(path, weight: WeightMode | None = None) -> SpectrumTable:
    """Load a cache file. Structural problems raise CacheError; numeric consistency
    is left to ``check_table``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CacheError(f"cannot read cache {path}: {exc}") from exc
    lines = text.splitlines()
    if len(lines) < 2:
        raise CacheError(f"{path}: truncated cache")
    X, spec = _parse_header(lines[0], path)
    if lines[1] != CACHE_HEADER:
        raise CacheError(f"{path}: unexpected column header {lines[1]!r}")
    if weight is None:
        weight = parse_weight(spec) if not spec.startswith("table:") else WeightMode("table", spec=spec)
    entries = []
    for lineno, line in enumerate(lines[2:], 3):
        try:
            n, num, den, L, lb, comps = line.split(",", 5)
            components = tuple(Component.decode(c) for c in comps.split("|")) if comps else ()
            entries.append(SpectrumEntry(int(n), Fraction(int(num), int(den)), components, float(L), float(lb)))
        except (ValueError, ZeroDivisionError) as exc:
            raise CacheError(f"{path}:{lineno}: {exc}") from None
    try:
        return SpectrumTable(X, weight, tuple(entries))
    except SpectrumError as exc:
        raise CacheError(f"{path}: {exc}") from None


def check_table(table: SpectrumTable, recompute_upto: int = 0) -> list[str]:
    """Consistency problems in a table (empty list when clean)."""
    problems = []
    for e in table.entries:
        if sum((c.value for c in e.components), Fraction(0)) != e.m:
            problems.append(f"n={e.n}: m differs from the sum of its components")
        if abs(e.log_eps - log_eps(e.n)) > 1e-12 * max(1.0, log_eps(e.n)):
            problems.append(f"n={e.n}: log_eps does not match acosh(n/2)")
        if abs(e.lambda_bar - lambda_bar(e.n)) > 1e-12 * lambda_bar(e.n):
            problems.append(f"n={e.n}: lambda_bar does not match 2 log eps/(1 - eps^-2)")
        for c in e.components:
            if c.u * c.u * c.D != e.n * e.n - 4:
                problems.append(f"n={e.n}: component u={c.u} D={c.D} inconsistent")
        if e.n <= recompute_upto and table.weight.kind != "table":
            fresh = make_entry(e.n, table.weight)
            if fresh.components != e.components:
                problems.append(f"n={e.n}: stored components differ from recomputation")
    return problems
