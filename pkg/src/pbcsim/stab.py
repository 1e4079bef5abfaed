"""Stabilizer states in affine form, Pauli operators and projector groups.

A state is stored as

    |psi> = scale * sum_{u in F_2^k} w^{f(u)} |z + u Psi>,

with ``Psi`` a full-row-rank k x n bit matrix (row vectors act on the left),
``z`` an n-bit offset, ``f`` a degree-two polynomial on k variables and
``scale`` an exact amplitude.  States are intentionally unnormalized; the
norm lives entirely in ``scale`` and the coefficient arithmetic of callers.

Pauli operators are ``i^c X(x) Z(z)`` with ``c`` in Z_4; the operator is
hermitian iff ``c`` and the overlap ``x.z`` have equal parity.

The payoff of the representation is :func:`inner_product_projected`: matrix
elements ``<psi| Pi |phi>`` of a projector onto a commuting-Pauli eigenspace
reduce to one exponential sum of a degree-two polynomial on
``k + m + n + t`` variables, evaluated exactly in polynomial time.
"""
from __future__ import annotations

import numpy as np

from .f2linalg import BitMatrix, RowSpace, iter_bits, parity, popcount
from .octic import OMEGA_POWERS, ExactAmplitude
from .quadsum import DegreeTwoPolynomial, exp_sum

__all__ = [
    "PauliOperator",
    "AffineStabilizerState",
    "StabilizerGroup",
    "ProjectorForm",
    "family_state",
    "inner_product_projected",
    "inner_product",
]

_PAULI_LETTERS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


class PauliOperator:
    """A Pauli operator ``i^c X(x) Z(z)`` on n qubits."""

    __slots__ = ("n", "x", "z", "c")

    def __init__(self, n: int, x: int, z: int, c: int = 0) -> None:
        if x < 0 or x >> n or z < 0 or z >> n:
            raise ValueError("support out of range")
        self.n = n
        self.x = x
        self.z = z
        self.c = c & 3

    @classmethod
    def identity(cls, n: int) -> "PauliOperator":
        return cls(n, 0, 0, 0)

    @classmethod
    def from_string(cls, s: str) -> "PauliOperator":
        s = s.strip()
        sign = 0
        if s and s[0] in "+-":
            if s[0] == "-":
                sign = 2
            s = s[1:]
        x = z = 0
        for i, ch in enumerate(s):
            try:
                xb, zb = _PAULI_LETTERS[ch]
            except KeyError:
                raise ValueError(f"bad Pauli letter {ch!r} at position {i}") from None
            x |= xb << i
            z |= zb << i
        n_y = popcount(x & z)
        return cls(len(s), x, z, (n_y + sign) & 3)

    @classmethod
    def single(cls, n: int, qubit: int, letter: str, sign: int = 1) -> "PauliOperator":
        xb, zb = _PAULI_LETTERS[letter]
        c = (xb & zb) + (0 if sign > 0 else 2)
        return cls(n, xb << qubit, zb << qubit, c)

    def is_hermitian(self) -> bool:
        return (self.c + popcount(self.x & self.z)) % 2 == 0

    def sign(self) -> int:
        """+1 or -1 for hermitian operators (the i^c X Z phase folded in)."""
        n_y = popcount(self.x & self.z)
        d = (self.c - n_y) & 3
        if d == 0:
            return 1
        if d == 2:
            return -1
        raise ValueError("operator is not hermitian")

    def __mul__(self, other: "PauliOperator") -> "PauliOperator":
        if self.n != other.n:
            raise ValueError("qubit count mismatch")
        c = self.c + other.c + 2 * parity(self.z & other.x)
        return PauliOperator(self.n, self.x ^ other.x, self.z ^ other.z, c)

    def __neg__(self) -> "PauliOperator":
        return PauliOperator(self.n, self.x, self.z, self.c + 2)

    def commutes_with(self, other: "PauliOperator") -> bool:
        return parity(self.x & other.z) == parity(self.z & other.x)

    def is_identity_up_to_phase(self) -> bool:
        return self.x == 0 and self.z == 0

    def weight(self) -> int:
        return popcount(self.x | self.z)

    def symplectic(self) -> int:
        """The (x|z) row, x bits low, packed into one integer."""
        return self.x | (self.z << self.n)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliOperator)
            and (self.n, self.x, self.z, self.c) == (other.n, other.x, other.z, other.c)
        )

    def __hash__(self) -> int:
        return hash((self.n, self.x, self.z, self.c))

    def __str__(self) -> str:
        n_y = popcount(self.x & self.z)
        letters = []
        for i in range(self.n):
            xb = (self.x >> i) & 1
            zb = (self.z >> i) & 1
            letters.append("IXZY"[xb + 2 * zb] if xb + 2 * zb != 3 else "Y")
        prefix = {0: "+", 1: "i", 2: "-", 3: "-i"}[(self.c - n_y) & 3]
        return prefix + "".join(letters)

    __repr__ = __str__

    # -- dense action --------------------------------------------------

    def phase(self) -> complex:
        return 1j ** self.c

    def apply_dense(self, vec: np.ndarray) -> np.ndarray:
        """P |vec> for a complex statevector of length 2^n."""
        idx = np.arange(vec.shape[0], dtype=np.int64)
        src = idx ^ self.x
        signs = 1.0 - 2.0 * _parity_array(src & self.z)
        return (1j ** self.c) * signs * vec[src]

    def apply_exact(self, vec: list[ExactAmplitude]) -> list[ExactAmplitude]:
        out = []
        for j in range(len(vec)):
            src = j ^ self.x
            ph = (2 * self.c + 4 * parity(src & self.z)) % 8
            out.append(vec[src] * OMEGA_POWERS[ph])
        return out

    def matrix(self) -> np.ndarray:
        dim = 1 << self.n
        idx = np.arange(dim, dtype=np.int64)
        m = np.zeros((dim, dim), dtype=complex)
        m[idx ^ self.x, idx] = (1j ** self.c) * (1.0 - 2.0 * _parity_array(idx & self.z))
        return m


def _parity_array(arr: np.ndarray) -> np.ndarray:
    arr = arr.copy()
    for s in (32, 16, 8, 4, 2, 1):
        arr ^= arr >> s
    return arr & 1


class StabilizerGroup:
    """Independent, pairwise commuting hermitian Pauli generators."""

    __slots__ = ("n", "generators")

    def __init__(self, n: int, generators: list[PauliOperator]) -> None:
        self.n = n
        self.generators = list(generators)
        space = RowSpace(2 * n)
        for idx, p in enumerate(self.generators):
            if p.n != n:
                raise ValueError(f"generator {idx} acts on {p.n} qubits, not {n}")
            if not p.is_hermitian():
                raise ValueError(f"generator {idx} ({p}) is not hermitian")
            if not space.add(p.symplectic()):
                raise ValueError(f"generator {idx} ({p}) is dependent on the others")
        for i in range(len(self.generators)):
            for j in range(i + 1, len(self.generators)):
                if not self.generators[i].commutes_with(self.generators[j]):
                    raise ValueError(f"generators {i} and {j} do not commute")

    def __len__(self) -> int:
        return len(self.generators)

    def projector_form(self) -> "ProjectorForm":
        """Expand ``Pi = 2^-t sum_{y} P(y)`` with P(y) ordered generator products.

        The ordered product over the support of y is
        ``i^{sum c_k y_k} (-1)^{sum_{k<l} (b_k . a_l) y_k y_l} X(yA) Z(yB)``,
        which is exactly a degree-two phase polynomial g(y).
        """
        t = len(self.generators)
        g = DegreeTwoPolynomial.zero(t)
        a_rows = [p.x for p in self.generators]
        b_rows = [p.z for p in self.generators]
        for k, p in enumerate(self.generators):
            g.add_linear(k, p.c)
        for k in range(t):
            for l in range(k + 1, t):
                if parity(b_rows[k] & a_rows[l]):
                    g.toggle_quad(k, l)
        return ProjectorForm(self.n, a_rows, b_rows, g)


class ProjectorForm:
    """Group-sum form of a projector: A, B generator rows and phase poly g."""

    __slots__ = ("n", "t", "a_rows", "b_rows", "g")

    def __init__(self, n: int, a_rows: list[int], b_rows: list[int], g: DegreeTwoPolynomial) -> None:
        self.n = n
        self.t = len(a_rows)
        if len(b_rows) != self.t or g.n != self.t:
            raise ValueError("inconsistent projector data")
        self.a_rows = list(a_rows)
        self.b_rows = list(b_rows)
        self.g = g

    @classmethod
    def trivial(cls, n: int) -> "ProjectorForm":
        return cls(n, [], [], DegreeTwoPolynomial.zero(0))

    def term(self, y: int) -> PauliOperator:
        """The group element P(y) as a Pauli operator."""
        x = z = 0
        for k in iter_bits(y):
            x ^= self.a_rows[k]
            z ^= self.b_rows[k]
        return PauliOperator(self.n, x, z, _phase_from_g(self.g, y))

    def dense_matrix(self) -> np.ndarray:
        dim = 1 << self.n
        m = np.zeros((dim, dim), dtype=complex)
        for y in range(1 << self.t):
            m += self.term(y).matrix()
        return m / (1 << self.t)


def _phase_from_g(g: DegreeTwoPolynomial, y: int) -> int:
    v = g.evaluate(y)
    assert v % 2 == 0, "projector phase polynomial took an odd value"
    return (v // 2) & 3


class AffineStabilizerState:
    """Unnormalized stabilizer state over an affine subspace (see module doc)."""

    __slots__ = ("n", "k", "psi_rows", "z", "f", "scale")

    def __init__(
        self,
        n: int,
        psi_rows: list[int],
        z: int,
        f: DegreeTwoPolynomial,
        scale: ExactAmplitude = ExactAmplitude(1, 0, 0, 0),
    ) -> None:
        k = len(psi_rows)
        if z < 0 or z >> n:
            raise ValueError("offset out of range")
        if f.n != k:
            raise ValueError("phase polynomial has wrong variable count")
        space = RowSpace(n)
        for r in psi_rows:
            if r < 0 or r >> n:
                raise ValueError("basis row out of range")
            if not space.add(r):
                raise ValueError("basis rows are dependent")
        self.n = n
        self.k = k
        self.psi_rows = list(psi_rows)
        self.z = z
        self.f = f
        self.scale = scale

    # -- constructors ----------------------------------------------------

    @classmethod
    def computational(cls, n: int, bits: int) -> "AffineStabilizerState":
        return cls(n, [], bits, DegreeTwoPolynomial.zero(0))

    def copy(self) -> "AffineStabilizerState":
        return AffineStabilizerState(self.n, list(self.psi_rows), self.z, self.f.copy(), self.scale)

    # -- columns of Psi --------------------------------------------------

    def _column(self, j: int) -> int:
        col = 0
        for a, r in enumerate(self.psi_rows):
            col |= ((r >> j) & 1) << a
        return col

    # -- Clifford-diagonal decorations ------------------------------------

    def apply_cz(self, i: int, j: int) -> "AffineStabilizerState":
        """Apply a controlled-Z on qubits i, j (phase (-1)^{b_i b_j})."""
        if i == j:
            raise ValueError("CZ needs two distinct qubits")
        s = self.copy()
        ci, cj = s._column(i), s._column(j)
        zi, zj = (s.z >> i) & 1, (s.z >> j) & 1
        f = s.f
        if zi and zj:
            f.add_constant(4)
        for a in iter_bits(ci & cj):
            f.add_linear(a, 2)
        if zi:
            for a in iter_bits(cj):
                f.add_linear(a, 2)
        if zj:
            for a in iter_bits(ci):
                f.add_linear(a, 2)
        # cross terms (u psi_i)(u psi_j): pair {a,b} flips once per ordered hit,
        # so the net toggle count is ci_a cj_b + ci_b cj_a as required
        for a in iter_bits(ci):
            for b in iter_bits(cj & ~(1 << a)):
                if a < b:
                    f.toggle_quad(a, b)
                else:
                    f.toggle_quad(b, a)
        return s

    def apply_z(self, i: int) -> "AffineStabilizerState":
        s = self.copy()
        if (s.z >> i) & 1:
            s.f.add_constant(4)
        for a in iter_bits(s._column(i)):
            s.f.add_linear(a, 2)
        return s

    def apply_x(self, i: int) -> "AffineStabilizerState":
        s = self.copy()
        if not 0 <= i < s.n:
            raise ValueError("qubit out of range")
        s.z ^= 1 << i
        return s

    def apply_pauli(self, p: PauliOperator) -> "AffineStabilizerState":
        """P |psi> exactly (any Pauli, the i^c phase goes into scale)."""
        if p.n != self.n:
            raise ValueError("qubit count mismatch")
        s = self.copy()
        # Z(z0) first: phase (-1)^{z0 . (z + u Psi)}
        if parity(p.z & s.z):
            s.scale = s.scale.scale_int(-1)
        for a, row in enumerate(s.psi_rows):
            if parity(p.z & row):
                s.f.add_linear(a, 2)
        s.z ^= p.x
        if p.c:
            s.scale = s.scale * OMEGA_POWERS[(2 * p.c) % 8]
        return s

    def tensor(self, other: "AffineStabilizerState") -> "AffineStabilizerState":
        n = self.n + other.n
        rows = list(self.psi_rows) + [r << self.n for r in other.psi_rows]
        f = self.f.embed(self.k + other.k, 0)
        f.iadd(other.f.embed(self.k + other.k, self.k))
        return AffineStabilizerState(
            n, rows, self.z | (other.z << self.n), f, self.scale * other.scale
        )

    # -- dense conversions -------------------------------------------------

    def to_dense(self) -> np.ndarray:
        vec = np.zeros(1 << self.n, dtype=complex)
        scale = self.scale.to_complex()
        for u in range(1 << self.k):
            pos = self.z
            for a in iter_bits(u):
                pos ^= self.psi_rows[a]
            vec[pos] += scale * OMEGA_POWERS[self.f.evaluate(u)].to_complex()
        return vec

    def to_dense_exact(self) -> list[ExactAmplitude]:
        vec = [ExactAmplitude.zero()] * (1 << self.n)
        for u in range(1 << self.k):
            pos = self.z
            for a in iter_bits(u):
                pos ^= self.psi_rows[a]
            vec[pos] = vec[pos] + self.scale * OMEGA_POWERS[self.f.evaluate(u)]
        return vec

    @classmethod
    def from_dense(cls, vec: np.ndarray, tol: float = 1e-8) -> "AffineStabilizerState":
        """Recover the affine form of a dense stabilizer state.

        Raises ``ValueError`` when the vector is not (numerically) a scalar
        multiple of a stabilizer state on the w^j amplitude grid.
        """
        n = int(np.log2(len(vec)))
        if 1 << n != len(vec):
            raise ValueError("length is not a power of two")
        mags = np.abs(vec)
        top = float(mags.max())
        if top <= 0.0:
            raise ValueError("zero vector")
        support = np.nonzero(mags > tol * top)[0]
        if np.any((mags > tol * top) & (np.abs(mags - mags[support[0]]) > tol * top)):
            raise ValueError("support amplitudes have unequal magnitude")
        if popcount(len(support)) != 1:
            raise ValueError("support size is not a power of two")
        z = int(support[0])
        offsets = [int(s) ^ z for s in support[1:]]
        space = RowSpace(n)
        rows = [o for o in offsets if space.add(o)]
        k = len(rows)
        if 1 << k != len(support):
            raise ValueError("support is not an affine subspace")
        base = vec[z]

        def omega_exponent(idx: int) -> int:
            r = vec[idx] / base
            j = int(np.round(np.angle(r) / (np.pi / 4))) % 8
            if abs(r - OMEGA_POWERS[j].to_complex()) > 10 * tol:
                raise ValueError("amplitude off the w^j grid")
            return j

        f = DegreeTwoPolynomial.zero(k)
        lin_vals = []
        for a in range(k):
            va = omega_exponent(z ^ rows[a])
            if va % 2:
                raise ValueError("odd phase ratio: not a stabilizer pattern")
            lin_vals.append(va // 2)
            f.add_linear(a, va // 2)
        for a in range(k):
            for b in range(a + 1, k):
                vab = omega_exponent(z ^ rows[a] ^ rows[b])
                q = (vab - 2 * lin_vals[a] - 2 * lin_vals[b]) % 8
                if q % 4:
                    raise ValueError("pair phase off the quadratic grid")
                if q == 4:
                    f.toggle_quad(a, b)
        state = cls(n, rows, z, f)
        # verify the full support (cubic terms would slip through otherwise)
        dense = state.to_dense() * base
        if np.max(np.abs(dense - vec)) > 20 * tol * top:
            raise ValueError("vector is not a stabilizer state")
        return state

    def __repr__(self) -> str:
        return f"AffineStabilizerState(n={self.n}, k={self.k}, z={self.z:0{self.n}b})"


_FAMILY_ALIASES = {"B_N0": "B0", "B_NN": "B1", "E_N": "E", "O_N": "O", "K_N": "K"}


def family_state(kind: str, n: int) -> AffineStabilizerState:
    """Reference product-family states on n qubits.

    ``B0``/``B1``: the all-zeros / all-ones basis states.  ``E``/``O``: the
    uniform superpositions of even-/odd-weight strings.  ``K``: the uniform
    superposition with sign (-1)^{w(w-1)/2} on weight-w strings, i.e. the
    result of a controlled-Z on every pair applied to the uniform state.
    The long spellings ``B_n0``, ``B_nn``, ``E_n``, ``O_n``, ``K_n`` are
    accepted as aliases.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    kind = _FAMILY_ALIASES.get(kind.upper(), kind)
    if kind == "B0":
        return AffineStabilizerState.computational(n, 0)
    if kind == "B1":
        return AffineStabilizerState.computational(n, (1 << n) - 1)
    if kind in ("E", "O"):
        rows = [(1 << i) | (1 << (n - 1)) for i in range(n - 1)]
        z = 1 if kind == "O" else 0
        return AffineStabilizerState(n, rows, z, DegreeTwoPolynomial.zero(n - 1))
    if kind == "K":
        f = DegreeTwoPolynomial.zero(n)
        for a in range(n):
            for b in range(a + 1, n):
                f.toggle_quad(a, b)
        return AffineStabilizerState(n, [1 << i for i in range(n)], 0, f)
    raise ValueError(f"unknown family {kind!r}")


def inner_product_projected(
    psi: AffineStabilizerState,
    proj: ProjectorForm,
    phi: AffineStabilizerState,
) -> ExactAmplitude:
    """Exact ``<psi| Pi |phi>`` for a commuting-group projector Pi.

    Assembles the combined phase polynomial over the block variables
    (u: psi's subspace, v: phi's subspace, x: the delta enforcing position
    match, y: the group expansion) and evaluates one exponential sum.  The
    normalization is ``2^{-n-t}`` (2^-t from the group average, 2^-n from
    writing the Kronecker delta as a character sum).
    """
    if psi.n != phi.n or proj.n != psi.n:
        raise ValueError("qubit count mismatch")
    n, t = psi.n, proj.t
    k, m = psi.k, phi.k
    total = k + m + n + t
    v_off, x_off, y_off = k, k + m, k + m + n
    big = DegreeTwoPolynomial.zero(total)
    big.iadd(psi.f.negated().embed(total, 0))
    big.iadd(phi.f.embed(total, v_off))
    big.iadd(proj.g.embed(total, y_off))
    # 4 y B (z' + v Phi)^T
    for j in range(t):
        if parity(proj.b_rows[j] & phi.z):
            big.add_linear(y_off + j, 2)
        for i in range(m):
            if parity(proj.b_rows[j] & phi.psi_rows[i]):
                big.toggle_quad(v_off + i, y_off + j)
    # 4 x (z + u Psi + z' + v Phi + y A)^T
    diff = psi.z ^ phi.z
    for a in iter_bits(diff):
        big.add_linear(x_off + a, 2)
    for i in range(k):
        big.quad[i] ^= psi.psi_rows[i] << x_off
    for i in range(m):
        big.quad[v_off + i] ^= phi.psi_rows[i] << x_off
    for j in range(t):
        for a in iter_bits(proj.a_rows[j]):
            big.toggle_quad(x_off + a, y_off + j)
    val = exp_sum(big)
    return psi.scale.conj() * phi.scale * val * ExactAmplitude.two_pow(-2 * (n + t))


def inner_product(psi: AffineStabilizerState, phi: AffineStabilizerState) -> ExactAmplitude:
    """Exact ``<psi|phi>``."""
    return inner_product_projected(psi, ProjectorForm.trivial(psi.n), phi)
