import cmath
import math

import numpy as np
import pytest

from pbcsim.octic import ExactAmplitude
from pbcsim.quadsum import (
    DegreeTwoPolynomial,
    brute_force_exp_sum,
    exp_sum,
    random_polynomial,
)

W = cmath.exp(1j * math.pi / 4)


def slow_value(f: DegreeTwoPolynomial) -> complex:
    """Scalar-loop oracle, independent of both production paths."""
    total = 0j
    for x in range(1 << f.n):
        v = f.const
        for a in range(f.n):
            if (x >> a) & 1:
                v += 2 * f.lin[a]
                for b in range(a + 1, f.n):
                    if (x >> b) & 1 and (f.quad[a] >> b) & 1:
                        v += 4
        total += W ** (v % 8)
    return total


def test_evaluate_matches_definition():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(0, 7))
        f = random_polynomial(rng, n)
        for x in range(1 << n):
            v = f.const
            for a in range(n):
                if (x >> a) & 1:
                    v += 2 * f.lin[a]
                    for b in range(a + 1, n):
                        if (x >> b) & 1 and (f.quad[a] >> b) & 1:
                            v += 4
            assert f.evaluate(x) == v % 8


def test_brute_force_matches_slow_complex():
    rng = np.random.default_rng(3)
    for _ in range(60):
        n = int(rng.integers(0, 8))
        f = random_polynomial(rng, n)
        assert abs(brute_force_exp_sum(f).to_complex() - slow_value(f)) < 1e-8


def test_exp_sum_trivial_cases():
    # f = 0 on n variables: <f> = 2^n
    for n in range(5):
        assert exp_sum(DegreeTwoPolynomial.zero(n)) == ExactAmplitude.from_int(1 << n)
    # n = 0 with a constant
    assert exp_sum(DegreeTwoPolynomial(0, 5)) == ExactAmplitude.omega_power(5)
    # f(x) = 2x on one variable: 1 + i
    f = DegreeTwoPolynomial(1, 0, [1], [0])
    assert exp_sum(f) == ExactAmplitude(1, 0, 1, 0)
    # f(x) = 6x: 1 - i
    f = DegreeTwoPolynomial(1, 0, [3], [0])
    assert exp_sum(f) == ExactAmplitude(1, 0, -1, 0)
    # f(x1,x2) = 4 x1 x2: sum = 2
    f = DegreeTwoPolynomial(2, 0, [0, 0], [0b10, 0])
    assert exp_sum(f) == ExactAmplitude.from_int(2)
    # f(x1,x2) = 4 x1 x2 + 2(x1 + x2) with odd coefficients ... 1+1+i+i-... just
    # compare against brute force.
    f = DegreeTwoPolynomial(2, 0, [1, 1], [0b10, 0])
    assert exp_sum(f) == brute_force_exp_sum(f)


def test_exp_sum_matches_brute_force_exhaustive_small():
    # All polynomials on 2 variables (8 * 4^2 * 2 = 1024 of them).
    for const in range(8):
        for l0 in range(4):
            for l1 in range(4):
                for q in range(2):
                    f = DegreeTwoPolynomial(2, const, [l0, l1], [q << 1, 0])
                    assert exp_sum(f) == brute_force_exp_sum(f), repr(f)


def test_exp_sum_matches_brute_force_random():
    rng = np.random.default_rng(12345)
    for _ in range(400):
        n = int(rng.integers(0, 11))
        f = random_polynomial(rng, n)
        got = exp_sum(f)
        want = brute_force_exp_sum(f)
        assert got == want, repr(f)


def test_exp_sum_form_is_power_of_sqrt2():
    rng = np.random.default_rng(99)
    for _ in range(300):
        n = int(rng.integers(1, 11))
        f = random_polynomial(rng, n)
        val = exp_sum(f)
        if val.is_zero():
            continue
        form = val.power_form()
        assert form is not None, repr(f)
        p, _ = form
        assert n <= p <= 2 * n


def test_compose_affine_is_exact():
    rng = np.random.default_rng(7)
    for _ in range(150):
        n_old = int(rng.integers(1, 7))
        n_new = int(rng.integers(1, 7))
        f = random_polynomial(rng, n_old)
        rows = [int(rng.integers(0, 1 << n_old)) for _ in range(n_new)]
        shift = int(rng.integers(0, 1 << n_old))
        g = f.compose_affine(rows, n_new, shift)
        for y in range(1 << n_new):
            x = shift
            for i in range(n_new):
                if (y >> i) & 1:
                    x ^= rows[i]
            assert g.evaluate(y) == f.evaluate(x), (repr(f), rows, shift, y)


def test_restrict():
    rng = np.random.default_rng(8)
    for _ in range(100):
        n = int(rng.integers(1, 7))
        f = random_polynomial(rng, n)
        p = int(rng.integers(0, n))
        for eps in (0, 1):
            g = f.restrict(p, eps)
            for y in range(1 << (n - 1)):
                x = (y & ((1 << p) - 1)) | ((y >> p) << (p + 1)) | (eps << p)
                assert g.evaluate(y) == f.evaluate(x)


def test_negated_embed_iadd():
    rng = np.random.default_rng(9)
    f = random_polynomial(rng, 4)
    g = f.negated()
    for x in range(16):
        assert (f.evaluate(x) + g.evaluate(x)) % 8 == 0
    h = f.embed(7, 2)
    for x in range(16):
        assert h.evaluate(x << 2) == f.evaluate(x)
    s = f.copy()
    s.iadd(g)
    for x in range(16):
        assert s.evaluate(x) == 0


def test_validation_errors():
    with pytest.raises(ValueError):
        DegreeTwoPolynomial(2, 0, [0], [0, 0])
    with pytest.raises(ValueError):
        DegreeTwoPolynomial(2, 0, [0, 0], [1, 0])  # diagonal bit
    f = DegreeTwoPolynomial.zero(3)
    with pytest.raises(ValueError):
        f.evaluate(8)
    with pytest.raises(ValueError):
        f.toggle_quad(1, 1)
