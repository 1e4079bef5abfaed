"""Exact arithmetic in the cyclotomic ring Z[w], w = exp(i pi/4), with
half-integer powers of two split off.

An :class:`ExactAmplitude` stores the value

    (c0 + c1*w + c2*w^2 + c3*w^3) * 2^(e/2),

with integer coefficients and integer ``e`` (possibly negative).  Since
``w^2 = i`` and ``sqrt(2) = w - w^3``, this ring is closed under the sums,
products and conjugations generated by quadratic exponential sums, projector
expansions and Z[sqrt(2)]-valued decomposition coefficients, so equality is
decidable exactly.

Canonical form: the zero value has ``e = 0``; otherwise factors of sqrt(2)
are extracted from the coefficient vector until it is no longer divisible
(division by sqrt(2) exists in Z[w] iff c0 = c2 and c1 = c3 mod 2).  That
makes the representation unique, so ``==`` on the dataclass fields is value
equality.

Python integers never overflow; the intermediate growth of the coefficients
is therefore harmless.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import total_ordering

SQRT2 = math.sqrt(2.0)

__all__ = [
    "ExactAmplitude",
    "QuadraticInteger",
    "QuadraticRational",
    "OMEGA_POWERS",
    "real_part_as_quadratic",
]


def _mul_coeffs(a: tuple[int, int, int, int], b: tuple[int, int, int, int]):
    """Multiply two coefficient vectors modulo w^4 = -1."""
    out = [0, 0, 0, 0]
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if not bj:
                continue
            k = i + j
            if k >= 4:
                out[k - 4] -= ai * bj
            else:
                out[k] += ai * bj
    return tuple(out)


def _times_sqrt2(c: tuple[int, int, int, int]):
    """Coefficients of ``c * (w - w^3)``."""
    c0, c1, c2, c3 = c
    return (c1 - c3, c0 + c2, c1 + c3, c2 - c0)


class ExactAmplitude:
    """An element of Z[w] scaled by a half-integer power of two."""

    __slots__ = ("c", "e")

    def __init__(self, c0: int, c1: int, c2: int, c3: int, e: int = 0) -> None:
        c = (c0, c1, c2, c3)
        if c == (0, 0, 0, 0):
            self.c = c
            self.e = 0
            return
        # Extract sqrt(2) factors until the coefficient vector is primitive.
        while (c[0] ^ c[2]) & 1 == 0 and (c[1] ^ c[3]) & 1 == 0:
            d = _times_sqrt2(c)
            c = (d[0] // 2, d[1] // 2, d[2] // 2, d[3] // 2)
            e += 1
        self.c = c
        self.e = e

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls) -> "ExactAmplitude":
        return cls(0, 0, 0, 0)

    @classmethod
    def one(cls) -> "ExactAmplitude":
        return cls(1, 0, 0, 0)

    @classmethod
    def from_int(cls, n: int) -> "ExactAmplitude":
        return cls(n, 0, 0, 0)

    @classmethod
    def omega_power(cls, m: int) -> "ExactAmplitude":
        return OMEGA_POWERS[m % 8]

    @classmethod
    def two_pow(cls, e: int) -> "ExactAmplitude":
        """The value 2^(e/2)."""
        return cls(1, 0, 0, 0, e)

    @classmethod
    def from_quadratic(cls, q: "QuadraticInteger", e: int = 0) -> "ExactAmplitude":
        return cls(q.p, q.q, 0, -q.q, e)

    # -- ring operations ----------------------------------------------

    def is_zero(self) -> bool:
        return self.c == (0, 0, 0, 0)

    def __add__(self, other: "ExactAmplitude") -> "ExactAmplitude":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        a, b = self, other
        if a.e > b.e:
            a, b = b, a
        diff = b.e - a.e
        cb = b.c
        if diff & 1:
            cb = _times_sqrt2(cb)
            diff -= 1
        mult = 1 << (diff // 2)
        return ExactAmplitude(
            a.c[0] + mult * cb[0],
            a.c[1] + mult * cb[1],
            a.c[2] + mult * cb[2],
            a.c[3] + mult * cb[3],
            a.e,
        )

    def __neg__(self) -> "ExactAmplitude":
        return ExactAmplitude(-self.c[0], -self.c[1], -self.c[2], -self.c[3], self.e)

    def __sub__(self, other: "ExactAmplitude") -> "ExactAmplitude":
        return self + (-other)

    def __mul__(self, other: "ExactAmplitude") -> "ExactAmplitude":
        if self.is_zero() or other.is_zero():
            return ExactAmplitude.zero()
        c = _mul_coeffs(self.c, other.c)
        return ExactAmplitude(*c, self.e + other.e)

    def conj(self) -> "ExactAmplitude":
        """Complex conjugate (w -> w^-1 = -w^3)."""
        c0, c1, c2, c3 = self.c
        return ExactAmplitude(c0, -c3, -c2, -c1, self.e)

    def scale_int(self, n: int) -> "ExactAmplitude":
        return ExactAmplitude(n * self.c[0], n * self.c[1], n * self.c[2], n * self.c[3], self.e)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, ExactAmplitude)
            and self.c == other.c
            and self.e == other.e
        )

    def __hash__(self) -> int:
        return hash((self.c, self.e))

    # -- structure ------------------------------------------------------

    def is_real(self) -> bool:
        return self.c[2] == 0 and self.c[1] == -self.c[3]

    def power_form(self):
        """Decompose as ``2^(p/2) * w^m`` if possible.

        Returns ``(p, m)`` or ``None`` (``None`` also for zero).  In canonical
        form such a value has exactly one coefficient, equal to +/-1.
        """
        nz = [(i, v) for i, v in enumerate(self.c) if v]
        if len(nz) != 1 or abs(nz[0][1]) != 1:
            return None
        i, v = nz[0]
        return self.e, (i + (4 if v < 0 else 0)) % 8

    def to_complex(self) -> complex:
        c0, c1, c2, c3 = self.c
        w = complex(SQRT2 / 2, SQRT2 / 2)
        return (c0 + c1 * w + c2 * w * w + c3 * w ** 3) * 2.0 ** (self.e / 2.0)

    def __str__(self) -> str:
        return f"({self.c[0]},{self.c[1]},{self.c[2]},{self.c[3]}; {self.e})"

    __repr__ = __str__


OMEGA_POWERS = (
    ExactAmplitude(1, 0, 0, 0),
    ExactAmplitude(0, 1, 0, 0),
    ExactAmplitude(0, 0, 1, 0),
    ExactAmplitude(0, 0, 0, 1),
    ExactAmplitude(-1, 0, 0, 0),
    ExactAmplitude(0, -1, 0, 0),
    ExactAmplitude(0, 0, -1, 0),
    ExactAmplitude(0, 0, 0, -1),
)


@total_ordering
class QuadraticInteger:
    """An element ``p + q*sqrt(2)`` of the ring Z[sqrt(2)]."""

    __slots__ = ("p", "q")

    def __init__(self, p: int, q: int = 0) -> None:
        self.p = p
        self.q = q

    def __add__(self, other: "QuadraticInteger") -> "QuadraticInteger":
        return QuadraticInteger(self.p + other.p, self.q + other.q)

    def __sub__(self, other: "QuadraticInteger") -> "QuadraticInteger":
        return QuadraticInteger(self.p - other.p, self.q - other.q)

    def __neg__(self) -> "QuadraticInteger":
        return QuadraticInteger(-self.p, -self.q)

    def __mul__(self, other: "QuadraticInteger") -> "QuadraticInteger":
        return QuadraticInteger(
            self.p * other.p + 2 * self.q * other.q,
            self.p * other.q + self.q * other.p,
        )

    def __pow__(self, n: int) -> "QuadraticInteger":
        if n < 0:
            raise ValueError("negative power")
        out = QuadraticInteger(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def galois_conj(self) -> "QuadraticInteger":
        """The conjugate ``p - q*sqrt(2)``."""
        return QuadraticInteger(self.p, -self.q)

    def norm(self) -> int:
        return self.p * self.p - 2 * self.q * self.q

    def is_zero(self) -> bool:
        return self.p == 0 and self.q == 0

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            other = QuadraticInteger(other)
        return (
            isinstance(other, QuadraticInteger)
            and self.p == other.p
            and self.q == other.q
        )

    def __lt__(self, other) -> bool:
        if isinstance(other, int):
            other = QuadraticInteger(other)
        return _sqrt2_sign(other.p - self.p, other.q - self.q) > 0

    def __hash__(self) -> int:
        return hash((self.p, self.q))

    def to_float(self) -> float:
        return self.p + self.q * SQRT2

    def to_amplitude(self, e: int = 0) -> ExactAmplitude:
        return ExactAmplitude.from_quadratic(self, e)

    def __str__(self) -> str:
        return f"({self.p}, {self.q})"

    __repr__ = __str__


def _sqrt2_sign(p, q) -> int:
    """Sign of ``p + q*sqrt(2)`` for rational ``p``, ``q``, computed exactly."""
    if q == 0:
        return (p > 0) - (p < 0)
    if p == 0:
        return (q > 0) - (q < 0)
    if p > 0 and q > 0:
        return 1
    if p < 0 and q < 0:
        return -1
    # Opposite signs: compare p^2 with 2 q^2; sign follows the larger magnitude.
    lhs, rhs = p * p, 2 * q * q
    if lhs == rhs:
        return 0  # impossible for nonzero integers, possible only for p=q=0
    bigger_is_p = lhs > rhs
    return (1 if p > 0 else -1) if bigger_is_p else (1 if q > 0 else -1)


@total_ordering
class QuadraticRational:
    """``a + b*sqrt(2)`` with rational ``a``, ``b``: the field Q(sqrt(2)).

    Used for exactly normalized probabilities, where division by values such
    as ``(4 - 2*sqrt(2))^n`` leaves Z[sqrt(2)].
    """

    __slots__ = ("a", "b")

    def __init__(self, a, b=0) -> None:
        self.a = Fraction(a)
        self.b = Fraction(b)

    @classmethod
    def from_quadratic(cls, q: QuadraticInteger, pow2: int = 0) -> "QuadraticRational":
        scale = Fraction(1 << pow2) if pow2 >= 0 else Fraction(1, 1 << -pow2)
        return cls(q.p * scale, q.q * scale)

    def __add__(self, other: "QuadraticRational") -> "QuadraticRational":
        return QuadraticRational(self.a + other.a, self.b + other.b)

    def __sub__(self, other: "QuadraticRational") -> "QuadraticRational":
        return QuadraticRational(self.a - other.a, self.b - other.b)

    def __neg__(self) -> "QuadraticRational":
        return QuadraticRational(-self.a, -self.b)

    def __mul__(self, other: "QuadraticRational") -> "QuadraticRational":
        return QuadraticRational(
            self.a * other.a + 2 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    def __truediv__(self, other: "QuadraticRational") -> "QuadraticRational":
        na, nb = other.a, other.b
        denom = na * na - 2 * nb * nb
        if denom == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt(2))")
        # Multiply by the Galois conjugate to rationalize.
        a = (self.a * na - 2 * self.b * nb) / denom
        b = (self.b * na - self.a * nb) / denom
        return QuadraticRational(a, b)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QuadraticRational(other)
        return (
            isinstance(other, QuadraticRational)
            and self.a == other.a
            and self.b == other.b
        )

    def __lt__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = QuadraticRational(other)
        d = other - self
        return _sqrt2_sign(d.a, d.b) > 0

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def to_float(self) -> float:
        return float(self.a) + float(self.b) * SQRT2

    def __str__(self) -> str:
        if self.b == 0:
            return f"{self.a}"
        if self.a == 0:
            return f"{self.b}*sqrt2"
        if self.b < 0:
            return f"{self.a} - {-self.b}*sqrt2"
        return f"{self.a} + {self.b}*sqrt2"

    __repr__ = __str__


def real_part_as_quadratic(a: ExactAmplitude) -> tuple[QuadraticInteger, int]:
    """Real part of ``a`` as ``(q, e)`` meaning ``q * 2^e`` with integer ``e``.

    The real part of any Z[w]-element scaled by ``2^(e/2)`` lies in
    Z[sqrt(2)] scaled by an integer power of two, for either parity of ``e``;
    a parity violation here would signal an internal bug, so it is asserted.
    """
    c0, c1, c2, c3 = a.c
    if a.e & 1:
        d = _times_sqrt2(a.c)  # now the value is d * 2^((e-1)/2)
        p, q, e2 = d[0], (d[1] - d[3]) // 2, (a.e - 1) // 2
        assert (d[1] - d[3]) % 2 == 0
    else:
        # Re = c0 + (c1 - c3)/sqrt(2), scaled by 2^(e/2)
        p, q, e2 = 2 * c0, c1 - c3, a.e // 2 - 1
    while p % 2 == 0 and q % 2 == 0 and (p or q):
        p //= 2
        q //= 2
        e2 += 1
    if p == 0 and q == 0:
        e2 = 0
    return QuadraticInteger(p, q), e2


def probability_from_amplitude(a: ExactAmplitude) -> QuadraticRational:
    """Interpret ``a`` as an exact probability.

    Raises ``ValueError`` if the value has a nonzero imaginary part or is
    negative; the caller is claiming it is a probability numerator.
    """
    if not a.is_real():
        raise ValueError(f"amplitude {a} is not real")
    q, e2 = real_part_as_quadratic(a)
    out = QuadraticRational.from_quadratic(q, e2)
    if _sqrt2_sign(out.a, out.b) < 0:
        raise ValueError(f"amplitude {a} is negative")
    return out
