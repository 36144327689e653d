import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from selberg_spectrum import arith, oracle, qforms
from selberg_spectrum.arith import PellSolution
from selberg_spectrum.qforms import QuadForm, apply_transform, discriminant

VALID_D = [D for D in range(5, 1001) if arith.is_discriminant(D)]


def random_sl2(rng, steps=6):
    g = ((1, 0), (0, 1))
    gens = [((0, -1), (1, 0)), ((1, 1), (0, 1)), ((1, -1), (0, 1))]
    for _ in range(steps):
        (p, q), (r, s) = g
        (p2, q2), (r2, s2) = rng.choice(gens)
        g = ((p * p2 + q * r2, p * q2 + q * s2), (r * p2 + s * r2, r * q2 + s * s2))
    return g


def same_cycle(Q1, Q2):
    return any(Q2 in cyc and Q1 in cyc for cyc in qforms.cycles(discriminant(Q1)))


def test_discriminant_examples():
    assert discriminant(QuadForm(1, 1, -1)) == 5
    assert discriminant(QuadForm(1, 2, -2)) == 12
    assert discriminant(QuadForm(1, 4, -4)) == 32


def test_apply_transform_examples():
    Q = QuadForm(1, 1, -1)
    assert apply_transform(Q, ((1, 0), (0, 1))) == Q
    # (x, y) -> (-y, x): Q(-y, x) = y^2 - xy - x^2
    assert apply_transform(Q, ((0, 1), (-1, 0))) == QuadForm(-1, -1, 1)
    with pytest.raises(qforms.FormError):
        apply_transform(Q, ((2, 0), (0, 1)))


def test_apply_transform_invariants():
    rng = random.Random(7)
    for _ in range(1000):
        D = rng.choice(VALID_D)
        Q = rng.choice(qforms.reduced_forms(D))
        g = random_sl2(rng)
        Q2 = apply_transform(Q, g)
        assert discriminant(Q2) == D
        assert Q2.is_primitive()


def test_apply_transform_composes():
    rng = random.Random(3)
    Q = QuadForm(2, 3, -5)
    for _ in range(100):
        g, h = random_sl2(rng), random_sl2(rng)
        hg = tuple(tuple(sum(h[i][k] * g[k][j] for k in range(2)) for j in range(2)) for i in range(2))
        # (Q . g)(v h) = Q(v h g)
        assert apply_transform(apply_transform(Q, g), h) == apply_transform(Q, hg)


def test_rho_cycle_returns_after_even_steps():
    start = QuadForm(1, 1, -1)
    Q, steps = qforms.rho_step(start), 1
    while Q != start:
        Q, steps = qforms.rho_step(Q), steps + 1
    assert steps % 2 == 0


def test_rho_step_preserves_discriminant_and_reduction():
    for D in VALID_D:
        for Q in qforms.reduced_forms(D):
            R = qforms.rho_step(Q)
            assert discriminant(R) == D
            assert qforms.is_reduced(R)
            assert apply_transform(Q, qforms.rho_transform(Q)) == R


def test_rho_step_rejects_unreduced():
    with pytest.raises(qforms.FormError):
        qforms.rho_step(QuadForm(1, 0, -5))


def test_two_cycles_at_12():
    cyc = next(c for c in qforms.cycles(12) if QuadForm(1, 2, -2) in c)
    assert QuadForm(-1, 2, 2) not in cyc
    assert len(qforms.cycles(12)) == 2


def test_cycles_are_even_and_partition():
    for D in VALID_D:
        cyc = qforms.cycles(D)
        flat = [Q for c in cyc for Q in c]
        assert sorted(flat) == qforms.reduced_forms(D)
        assert len(set(flat)) == len(flat)
        assert all(len(c) % 2 == 0 for c in cyc)


def test_partition_independent_of_enumeration_order():
    rng = random.Random(11)
    for D in VALID_D[::7]:
        forms = qforms.reduced_forms(D)
        rng.shuffle(forms)
        seen, parts = set(), set()
        for f in forms:
            if f in seen:
                continue
            cyc, Q = [f], qforms.rho_step(f)
            while Q != f:
                cyc.append(Q)
                Q = qforms.rho_step(Q)
            seen.update(cyc)
            parts.add(frozenset(cyc))
        assert parts == {frozenset(c) for c in qforms.cycles(D)}


def test_reduce_examples():
    R = qforms.reduce(QuadForm(1, 0, -5))
    assert discriminant(R) == 20 and qforms.is_reduced(R)
    assert same_cycle(R, qforms.reduce(QuadForm(1, 0, -5)))
    Q = QuadForm(1, 1, -1)
    assert qforms.reduce(Q) == Q


def test_reduce_is_class_invariant():
    rng = random.Random(5)
    for _ in range(300):
        D = rng.choice(VALID_D)
        Q = rng.choice(qforms.reduced_forms(D))
        Q2 = apply_transform(Q, random_sl2(rng, steps=10))
        assert same_cycle(qforms.reduce(Q), qforms.reduce(Q2))


@pytest.mark.parametrize("D, h", [(5, 1), (12, 2), (32, 2)])
def test_class_number_examples(D, h):
    assert oracle.brute_class_number(D) == h
    assert qforms.class_number(D) == h


def test_class_number_positive():
    assert all(qforms.class_number(D) >= 1 for D in VALID_D)


def test_class_number_matches_orbit_oracle():
    for D in VALID_D:
        if D > 500:
            break
        assert qforms.class_number(D) == oracle.brute_class_number(D), D


def test_class_number_formula_examples():
    assert qforms.class_number_via_formula(5) == pytest.approx(1.0, abs=1e-9)
    assert qforms.class_number_via_formula(12) == pytest.approx(2.0, abs=1e-9)


def test_class_number_analytic_matches_cycles():
    for D in VALID_D[::3] + [10_001 * 4 + 1, 99_997 * 4 + 1, 65_537 * 4]:
        if arith.is_discriminant(D):
            assert qforms.class_number_analytic(D) == qforms.class_number(D), D


def test_form_to_matrix_examples():
    g = qforms.form_to_matrix(QuadForm(1, 1, -1), PellSolution(3, 1, 5))
    assert g == ((2, 1), (1, 1))
    assert qforms.matrix_to_form(g) == (QuadForm(1, 1, -1), 3, 1)


def test_form_to_matrix_trace_and_determinant():
    for D in VALID_D[:200]:
        sol = arith.pell_fundamental(D)
        for Q in qforms.reduced_forms(D):
            (a, b), (c, d) = qforms.form_to_matrix(Q, sol)
            assert a + d == sol.t
            assert a * d - b * c == 1


def test_form_to_matrix_rejects_mismatch():
    with pytest.raises(qforms.FormError):
        qforms.form_to_matrix(QuadForm(1, 2, -2), PellSolution(3, 1, 5))


def test_matrix_round_trip_random_hyperbolic():
    rng = random.Random(1)
    done = 0
    while done < 1000:
        a = rng.randint(-300, 300)
        d = rng.randint(-300, 300)
        t = a + d
        if abs(t) <= 2 or abs(t) > 1000:
            continue
        # need b c = a d - 1 with b, c integers
        bc = a * d - 1
        if bc == 0:
            continue
        divs = [k for k in range(1, min(abs(bc), 2000) + 1) if bc % k == 0]
        b = rng.choice(divs) * rng.choice((1, -1))
        c = bc // b
        g = ((a, b), (c, d))
        Q, tt, u = qforms.matrix_to_form(g)
        assert tt == t
        assert (t * t - 4) == u * u * discriminant(Q)
        if t > 0:
            back = qforms.form_to_matrix(Q, PellSolution(t, u, discriminant(Q)))
            assert back == g
        done += 1


def test_matrix_to_form_rejects_elliptic():
    with pytest.raises(qforms.FormError):
        qforms.matrix_to_form(((1, 1), (-1, 0)))
