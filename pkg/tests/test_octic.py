import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from pbcsim.octic import (
    ExactAmplitude,
    OMEGA_POWERS,
    QuadraticInteger,
    QuadraticRational,
    probability_from_amplitude,
    real_part_as_quadratic,
)

W = cmath.exp(1j * math.pi / 4)


def close(a: ExactAmplitude, z: complex, tol=1e-10) -> bool:
    return abs(a.to_complex() - z) <= tol * max(1.0, abs(z))


def random_amplitude(rng) -> ExactAmplitude:
    c = rng.integers(-9, 10, size=4)
    e = int(rng.integers(-6, 7))
    return ExactAmplitude(int(c[0]), int(c[1]), int(c[2]), int(c[3]), e)


def test_omega_powers():
    for m in range(8):
        assert close(OMEGA_POWERS[m], W**m)
    assert ExactAmplitude.omega_power(13) == OMEGA_POWERS[5]


def test_sqrt2_is_omega_minus_omega_cubed():
    s = OMEGA_POWERS[1] - OMEGA_POWERS[3]
    assert s == ExactAmplitude.two_pow(1)
    assert close(s, math.sqrt(2))


def test_canonical_form_unique():
    # The same value entered with redundant factors lands on identical fields.
    a = ExactAmplitude(2, 0, 2, 0, 3)
    b = ExactAmplitude(1, 0, 1, 0, 5)
    assert a == b and hash(a) == hash(b)
    z = ExactAmplitude(0, 0, 0, 0, 4)
    assert z.is_zero() and z.e == 0


def test_canonical_form_primitive():
    rng = np.random.default_rng(3)
    for _ in range(500):
        a = random_amplitude(rng)
        if a.is_zero():
            continue
        c = a.c
        assert not ((c[0] ^ c[2]) & 1 == 0 and (c[1] ^ c[3]) & 1 == 0)


def test_ring_ops_against_complex():
    rng = np.random.default_rng(17)
    for _ in range(500):
        a, b = random_amplitude(rng), random_amplitude(rng)
        assert close(a + b, a.to_complex() + b.to_complex())
        assert close(a - b, a.to_complex() - b.to_complex())
        assert close(a * b, a.to_complex() * b.to_complex())
        assert close(a.conj(), a.to_complex().conjugate())
        assert close(-a, -a.to_complex())


def test_addition_exact_cancellation():
    rng = np.random.default_rng(29)
    for _ in range(200):
        a = random_amplitude(rng)
        assert (a - a).is_zero()
        assert (a + (-a)).is_zero()


def test_power_form():
    assert ExactAmplitude.two_pow(5).power_form() == (5, 0)
    assert OMEGA_POWERS[3].power_form() == (0, 3)
    v = OMEGA_POWERS[6] * ExactAmplitude.two_pow(3)
    assert v.power_form() == (3, 6)
    assert ExactAmplitude(1, 1, 0, 0).power_form() is None
    assert ExactAmplitude.zero().power_form() is None
    # 1 + i = sqrt(2) * w
    assert ExactAmplitude(1, 0, 1, 0).power_form() == (1, 1)


def test_is_real():
    assert ExactAmplitude(3, 1, 0, -1).is_real()
    assert not ExactAmplitude(0, 1, 0, 0).is_real()
    rng = np.random.default_rng(31)
    for _ in range(300):
        a = random_amplitude(rng)
        assert a.is_real() == (abs(a.to_complex().imag) < 1e-9)


def test_quadratic_integer_ops():
    t = QuadraticInteger(-1, 1)  # sqrt(2) - 1
    assert (t * t) == QuadraticInteger(3, -2)
    assert (t**3).to_float() == pytest.approx((math.sqrt(2) - 1) ** 3)
    assert t.galois_conj() == QuadraticInteger(-1, -1)
    assert t.norm() == -1
    assert QuadraticInteger(4, -2) > QuadraticInteger(0, 0)
    assert QuadraticInteger(-1, 1) > 0  # sqrt(2) > 1
    assert QuadraticInteger(3, -2) < 1  # (sqrt(2)-1)^2 < 1


def test_quadratic_embedding():
    rng = np.random.default_rng(5)
    for _ in range(200):
        q = QuadraticInteger(int(rng.integers(-20, 20)), int(rng.integers(-20, 20)))
        e = int(rng.integers(-4, 5))
        amp = q.to_amplitude(2 * e)
        assert close(amp, q.to_float() * 2.0**e)
        assert amp.is_real()


def test_real_part_as_quadratic():
    rng = np.random.default_rng(37)
    for _ in range(500):
        a = random_amplitude(rng)
        q, e2 = real_part_as_quadratic(a)
        assert q.to_float() * 2.0**e2 == pytest.approx(
            a.to_complex().real, abs=1e-9, rel=1e-9
        )


def test_probability_from_amplitude():
    # 2^{-3} as an amplitude
    p = probability_from_amplitude(ExactAmplitude.two_pow(-6))
    assert p == QuadraticRational(Fraction(1, 8))
    with pytest.raises(ValueError):
        probability_from_amplitude(OMEGA_POWERS[2])
    with pytest.raises(ValueError):
        probability_from_amplitude(ExactAmplitude.from_int(-1))


def test_quadratic_rational_field():
    x = QuadraticRational(Fraction(1, 2), Fraction(-1, 3))
    y = QuadraticRational(Fraction(2), Fraction(1, 5))
    assert (x * y / y) == x
    assert ((x + y) - y) == x
    ratio = QuadraticRational(2, -1) / QuadraticRational(4, -2)
    assert ratio == QuadraticRational(Fraction(1, 2))
    assert x.to_float() == pytest.approx(0.5 - math.sqrt(2) / 3)
    assert QuadraticRational(0, 1) > QuadraticRational(Fraction(7, 5))
    with pytest.raises(ZeroDivisionError):
        x / QuadraticRational(0)
