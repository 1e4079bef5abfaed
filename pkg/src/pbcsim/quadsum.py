"""Exponential sums of degree-two polynomials over F_2^n.

A :class:`DegreeTwoPolynomial` is a function f: F_2^n -> Z_8 of the shape

    f(x) = c + 2*sum_a l_a x_a + 4*sum_{a<b} q_ab x_a x_b   (mod 8),

with c in Z_8, l_a in Z_4 and q_ab in Z_2.  This family is closed under
affine substitutions x -> y M + s over F_2, which is what makes the whole
machinery work: composing with a substitution only re-mixes the (c, l, q)
data (with the usual XOR-to-integer lift corrections at the 4-level).

``exp_sum`` evaluates <f> = sum_x w^{f(x)}, w = exp(i pi/4), in O(n^3) bit
operations instead of 2^n work:

1.  If some l_a is odd the substitution y_p = sum over the odd set pins all
    the i-valued behaviour to a single variable p; restricting x_p to 0 and
    1 leaves two polynomials whose linear parts are even.
2.  A polynomial with even linear part is w^c * (-1)^{quadratic form}, and
    the +/-1 sum is evaluated by canonicalizing the form into hyperbolic
    2x2 blocks: each block contributes +/-2, any linear term outside the
    blocks kills the sum, and free variables contribute factors of 2.

The result is always either zero or of the form 2^(p/2) * w^m, which
:meth:`pbcsim.octic.ExactAmplitude.power_form` recovers.
"""
from __future__ import annotations

import numpy as np

from .f2linalg import iter_bits, parity, popcount, symplectic_basis
from .octic import OMEGA_POWERS, ExactAmplitude

__all__ = [
    "DegreeTwoPolynomial",
    "exp_sum",
    "brute_force_exp_sum",
    "random_polynomial",
]


class DegreeTwoPolynomial:
    """f(x) = const + 2*sum l_a x_a + 4*sum_{a<b} q_ab x_a x_b (mod 8)."""

    __slots__ = ("n", "const", "lin", "quad")

    def __init__(self, n: int, const: int = 0, lin=None, quad=None) -> None:
        self.n = n
        self.const = const % 8
        self.lin = [v & 3 for v in lin] if lin is not None else [0] * n
        self.quad = list(quad) if quad is not None else [0] * n
        if len(self.lin) != n or len(self.quad) != n:
            raise ValueError("coefficient arrays do not match n")
        for a, row in enumerate(self.quad):
            if row < 0 or row >> n or row & ((1 << (a + 1)) - 1):
                raise ValueError(f"quadratic row {a} is not strictly upper")

    @classmethod
    def zero(cls, n: int) -> "DegreeTwoPolynomial":
        return cls(n)

    def copy(self) -> "DegreeTwoPolynomial":
        return DegreeTwoPolynomial(self.n, self.const, list(self.lin), list(self.quad))

    # -- small mutators (used while assembling composite polynomials) ----

    def add_constant(self, v: int) -> None:
        self.const = (self.const + v) % 8

    def add_linear(self, a: int, v: int) -> None:
        self.lin[a] = (self.lin[a] + v) & 3

    def toggle_quad(self, a: int, b: int) -> None:
        if a == b:
            raise ValueError("no diagonal quadratic terms")
        if a > b:
            a, b = b, a
        self.quad[a] ^= 1 << b

    def iadd(self, other: "DegreeTwoPolynomial") -> None:
        """Add another polynomial on the same variables, in place."""
        if other.n != self.n:
            raise ValueError("variable count mismatch")
        self.const = (self.const + other.const) % 8
        for a in range(self.n):
            self.lin[a] = (self.lin[a] + other.lin[a]) & 3
            self.quad[a] ^= other.quad[a]

    # -- value operations ------------------------------------------------

    def evaluate(self, x: int) -> int:
        if x < 0 or x >> self.n:
            raise ValueError("argument out of range")
        v = self.const
        for a in iter_bits(x):
            v += 2 * self.lin[a] + 4 * popcount(self.quad[a] & x)
        return v % 8

    def negated(self) -> "DegreeTwoPolynomial":
        """The polynomial -f mod 8 (note -4 = 4, so quad is unchanged)."""
        return DegreeTwoPolynomial(
            self.n,
            -self.const % 8,
            [(-v) & 3 for v in self.lin],
            list(self.quad),
        )

    def embed(self, total_n: int, offset: int) -> "DegreeTwoPolynomial":
        """The same polynomial on variables [offset, offset + n)."""
        if offset < 0 or offset + self.n > total_n:
            raise ValueError("embedding out of range")
        lin = [0] * total_n
        quad = [0] * total_n
        for a in range(self.n):
            lin[offset + a] = self.lin[a]
            quad[offset + a] = self.quad[a] << offset
        return DegreeTwoPolynomial(total_n, self.const, lin, quad)

    def compose_affine(self, m_rows: list[int], new_n: int, shift: int = 0) -> "DegreeTwoPolynomial":
        """Substitute ``x = y M + s``: returns g(y) = f(y M + s).

        ``m_rows[i]`` is row i of M, a packed vector over the old variables;
        ``shift`` packs s.  Exact over Z_8: single variables x_a are XORs of
        bits, and the lift XOR(b) = sum(b) - 2*sum(pairs) + ... supplies the
        4-level corrections for odd linear coefficients.
        """
        if len(m_rows) != new_n:
            raise ValueError("row count does not match new variable count")
        cols = [0] * self.n
        for i, row in enumerate(m_rows):
            if row < 0 or row >> self.n:
                raise ValueError("substitution row out of range")
            for j in iter_bits(row):
                cols[j] |= 1 << i
        const = self.const
        lin = [0] * new_n
        quad = [0] * new_n

        def toggle_pairs_within(mask: int) -> None:
            for i in iter_bits(mask):
                quad[i] ^= mask & ~((1 << (i + 1)) - 1)

        def toggle_cross(aset: int, bset: int) -> None:
            # Ordered toggles (i in A, j in B, j != i): unordered pair {i,j}
            # ends up with parity A_i B_j + A_j B_i, which is the coefficient
            # of y_i y_j in (sum_A y)(sum_B y) off the diagonal.
            for i in iter_bits(aset):
                m = bset & ~(1 << i)
                quad[i] ^= m & ~((1 << (i + 1)) - 1)
                for j in iter_bits(m & ((1 << i) - 1)):
                    quad[j] ^= 1 << i

        for j in range(self.n):
            fj = self.lin[j] & 3
            if fj == 0:
                continue
            col = cols[j]
            cbit = (shift >> j) & 1
            for i in iter_bits(col):
                lin[i] = (lin[i] + fj) & 3
            if cbit:
                const = (const + 2 * fj) % 8
            if fj & 1:
                toggle_pairs_within(col)
                if cbit:
                    for i in iter_bits(col):
                        lin[i] = (lin[i] + 2) & 3

        for a in range(self.n):
            row = self.quad[a]
            if not row:
                continue
            aset = cols[a]
            ca = (shift >> a) & 1
            for b in iter_bits(row):
                bset = cols[b]
                cb = (shift >> b) & 1
                for i in iter_bits(aset & bset):
                    lin[i] = (lin[i] + 2) & 3
                toggle_cross(aset, bset)
                if cb:
                    for i in iter_bits(aset):
                        lin[i] = (lin[i] + 2) & 3
                if ca:
                    for i in iter_bits(bset):
                        lin[i] = (lin[i] + 2) & 3
                if ca and cb:
                    const = (const + 4) % 8
        return DegreeTwoPolynomial(new_n, const, lin, quad)

    def restrict(self, p: int, eps: int) -> "DegreeTwoPolynomial":
        """Fix variable ``p`` to the bit ``eps`` and drop it."""
        if not 0 <= p < self.n:
            raise ValueError("variable out of range")
        eps &= 1

        def drop(mask: int) -> int:
            return (mask & ((1 << p) - 1)) | ((mask >> (p + 1)) << p)

        coupled = self.quad[p]
        for a in range(p):
            if (self.quad[a] >> p) & 1:
                coupled |= 1 << a
        const = (self.const + 2 * eps * self.lin[p]) % 8
        lin = []
        quad = []
        for a in range(self.n):
            if a == p:
                continue
            v = self.lin[a]
            if eps and (coupled >> a) & 1:
                v += 2
            lin.append(v & 3)
            quad.append(drop(self.quad[a] & ~(1 << p)))
        return DegreeTwoPolynomial(self.n - 1, const, lin, quad)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DegreeTwoPolynomial)
            and self.n == other.n
            and self.const == other.const
            and self.lin == other.lin
            and self.quad == other.quad
        )

    def __hash__(self) -> int:
        return hash((self.n, self.const, tuple(self.lin), tuple(self.quad)))

    def __repr__(self) -> str:
        quads = [
            (a, b) for a in range(self.n) for b in iter_bits(self.quad[a])
        ]
        return f"DegreeTwoPolynomial(n={self.n}, const={self.const}, lin={self.lin}, quad={quads})"


def _gauss_sign_sum(n: int, quad_rows: list[int], lin_mask: int) -> tuple[int, int]:
    """Evaluate sum_x (-1)^(sum_{a<b} q_ab x_a x_b + L.x) = sign * 2^log2.

    Returns ``(sign, log2)`` with sign in {-1, 0, +1}.  The form is
    canonicalized into hyperbolic blocks; a linear term on a coordinate
    outside the blocks makes the sum vanish, otherwise each block
    contributes +/-2 and each free coordinate a factor 2.
    """
    if n == 0:
        return 1, 0
    sym = list(quad_rows)
    for a in range(n):
        row = quad_rows[a]
        bit_a = 1 << a
        while row:
            low = row & -row
            sym[low.bit_length() - 1] |= bit_a
            row ^= low
    cols, r = symplectic_basis(n, sym)
    new_lin = 0
    for i, wi in enumerate(cols):
        lam = (wi & lin_mask).bit_count() & 1
        # The Boolean form picks up a linear residue q(w_i) under the basis
        # change (squares x_a^2 = x_a), which plain matrix congruence hides.
        rest = wi
        while rest:
            low = rest & -rest
            lam ^= (quad_rows[low.bit_length() - 1] & wi).bit_count() & 1
            rest ^= low
        if lam:
            new_lin |= 1 << i
    if new_lin >> (2 * r):
        return 0, 0
    sign = 1
    for a in range(r):
        if (new_lin >> (2 * a)) & 3 == 3:
            sign = -sign
    return sign, n - r


def _even_linear_sum(g: DegreeTwoPolynomial) -> ExactAmplitude:
    """<g> for a polynomial whose linear coefficients are all even."""
    lin_mask = 0
    for a in range(g.n):
        la = g.lin[a]
        assert la & 1 == 0, "internal: odd linear coefficient survived"
        if la == 2:
            lin_mask |= 1 << a
    sign, log2 = _gauss_sign_sum(g.n, g.quad, lin_mask)
    if sign == 0:
        return ExactAmplitude.zero()
    return OMEGA_POWERS[g.const].scale_int(sign) * ExactAmplitude.two_pow(2 * log2)


def exp_sum(f: DegreeTwoPolynomial) -> ExactAmplitude:
    """Exact value of <f> = sum_{x in F_2^n} w^{f(x)}."""
    odd = [a for a in range(f.n) if f.lin[a] & 1]
    if not odd:
        return _even_linear_sum(f)
    p = odd[-1]
    # x = y M with x_p = y_p + sum of the other odd-coefficient variables;
    # afterwards only variable p carries an odd (i-valued) linear term.
    rows = [1 << a for a in range(f.n)]
    for a in odd[:-1]:
        rows[a] |= 1 << p
    g = f.compose_affine(rows, f.n)
    return _even_linear_sum(g.restrict(p, 0)) + _even_linear_sum(g.restrict(p, 1))


def brute_force_exp_sum(f: DegreeTwoPolynomial) -> ExactAmplitude:
    """<f> by direct enumeration of all 2^n points (oracle; n <= 22)."""
    n = f.n
    if n > 22:
        raise ValueError("brute force capped at n = 22")
    if n == 0:
        return OMEGA_POWERS[f.const]
    x = np.arange(1 << n, dtype=np.int64)
    bits = ((x[:, None] >> np.arange(n)) & 1).astype(np.int64)
    vals = f.const + 2 * (bits @ np.array(f.lin, dtype=np.int64))
    qm = np.zeros((n, n), dtype=np.int64)
    for a in range(n):
        for b in iter_bits(f.quad[a]):
            qm[a, b] = 1
    vals = vals + 4 * np.einsum("sa,sa->s", bits, bits @ qm.T)
    counts = np.bincount(vals % 8, minlength=8)
    return ExactAmplitude(
        int(counts[0] - counts[4]),
        int(counts[1] - counts[5]),
        int(counts[2] - counts[6]),
        int(counts[3] - counts[7]),
    )


def random_polynomial(rng: np.random.Generator, n: int) -> DegreeTwoPolynomial:
    """A uniformly random degree-two polynomial on n variables."""
    const = int(rng.integers(0, 8))
    lin = [int(v) for v in rng.integers(0, 4, size=n)]
    quad = [0] * n
    for a in range(n):
        for b in range(a + 1, n):
            if rng.integers(0, 2):
                quad[a] |= 1 << b
    return DegreeTwoPolynomial(n, const, lin, quad)
