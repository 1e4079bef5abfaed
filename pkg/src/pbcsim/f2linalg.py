"""Bit-packed linear algebra over GF(2).

Vectors are stored as Python integers (bit ``i`` is coordinate ``i``), so all
row operations are single XORs regardless of length.  Row vectors act on the
left of matrices throughout: ``(x @ M)_j = sum_i x_i M[i][j]``.
"""
from __future__ import annotations

from typing import Optional


def popcount(x: int) -> int:
    return x.bit_count()


def parity(x: int) -> int:
    return x.bit_count() & 1


def iter_bits(x: int):
    """Yield the positions of the set bits of ``x`` in increasing order."""
    while x:
        low = x & -x
        yield low.bit_length() - 1
        x ^= low


class BitVector:
    """An immutable vector over GF(2) of fixed length ``n``."""

    __slots__ = ("n", "bits")

    def __init__(self, n: int, bits: int = 0) -> None:
        if n < 0:
            raise ValueError("negative length")
        if bits < 0 or bits >> n:
            raise ValueError(f"bits 0x{bits:x} out of range for length {n}")
        self.n = n
        self.bits = bits

    @classmethod
    def from_ints(cls, values) -> "BitVector":
        values = list(values)
        bits = 0
        for i, v in enumerate(values):
            if v & 1:
                bits |= 1 << i
        return cls(len(values), bits)

    @classmethod
    def from_string(cls, s: str) -> "BitVector":
        if any(c not in "01" for c in s):
            raise ValueError(f"not a bit string: {s!r}")
        return cls(len(s), int(s[::-1], 2) if s else 0)

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"bit index {i} out of range for length {self.n}")
        return (self.bits >> i) & 1

    def __len__(self) -> int:
        return self.n

    def __xor__(self, other: "BitVector") -> "BitVector":
        if self.n != other.n:
            raise ValueError("length mismatch")
        return BitVector(self.n, self.bits ^ other.bits)

    def dot(self, other: "BitVector") -> int:
        if self.n != other.n:
            raise ValueError("length mismatch")
        return parity(self.bits & other.bits)

    def weight(self) -> int:
        return popcount(self.bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and self.n == other.n
            and self.bits == other.bits
        )

    def __hash__(self) -> int:
        return hash((self.n, self.bits))

    def __str__(self) -> str:
        return "".join(str((self.bits >> i) & 1) for i in range(self.n))

    def __repr__(self) -> str:
        return f"BitVector({self.n}, 0b{self.bits:0{max(self.n, 1)}b})"


class BitMatrix:
    """A matrix over GF(2) stored as a list of bit-packed rows."""

    __slots__ = ("nrows", "ncols", "rows")

    def __init__(self, nrows: int, ncols: int, rows: Optional[list[int]] = None) -> None:
        if rows is None:
            rows = [0] * nrows
        if len(rows) != nrows:
            raise ValueError("row count mismatch")
        for r in rows:
            if r < 0 or r >> ncols:
                raise ValueError(f"row 0x{r:x} out of range for {ncols} columns")
        self.nrows = nrows
        self.ncols = ncols
        self.rows = list(rows)

    @classmethod
    def identity(cls, n: int) -> "BitMatrix":
        return cls(n, n, [1 << i for i in range(n)])

    @classmethod
    def zeros(cls, nrows: int, ncols: int) -> "BitMatrix":
        return cls(nrows, ncols)

    @classmethod
    def from_rows(cls, rows, ncols: Optional[int] = None) -> "BitMatrix":
        rows = [r.bits if isinstance(r, BitVector) else int(r) for r in rows]
        if ncols is None:
            ncols = max((r.bit_length() for r in rows), default=0)
        return cls(len(rows), ncols, rows)

    @classmethod
    def from_lists(cls, entries) -> "BitMatrix":
        entries = [list(row) for row in entries]
        ncols = len(entries[0]) if entries else 0
        rows = []
        for row in entries:
            if len(row) != ncols:
                raise ValueError("ragged rows")
            rows.append(sum((v & 1) << j for j, v in enumerate(row)))
        return cls(len(entries), ncols, rows)

    def get(self, i: int, j: int) -> int:
        if not (0 <= i < self.nrows and 0 <= j < self.ncols):
            raise IndexError(f"({i}, {j}) out of range for {self.nrows}x{self.ncols}")
        return (self.rows[i] >> j) & 1

    def row(self, i: int) -> int:
        if not 0 <= i < self.nrows:
            raise IndexError(f"row {i} out of range")
        return self.rows[i]

    def column(self, j: int) -> int:
        if not 0 <= j < self.ncols:
            raise IndexError(f"column {j} out of range")
        out = 0
        for i, r in enumerate(self.rows):
            out |= ((r >> j) & 1) << i
        return out

    def transpose(self) -> "BitMatrix":
        return BitMatrix(self.ncols, self.nrows, [self.column(j) for j in range(self.ncols)])

    def mul_vec(self, x: int) -> int:
        """Return the row vector ``x @ self`` (``x`` packs ``nrows`` bits)."""
        out = 0
        for i in iter_bits(x):
            out ^= self.rows[i]
        return out

    def matmul(self, other: "BitMatrix") -> "BitMatrix":
        if self.ncols != other.nrows:
            raise ValueError("shape mismatch")
        return BitMatrix(self.nrows, other.ncols, [other.mul_vec(r) for r in self.rows])

    def copy(self) -> "BitMatrix":
        return BitMatrix(self.nrows, self.ncols, list(self.rows))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.rows == other.rows
        )

    def __hash__(self) -> int:
        return hash((self.nrows, self.ncols, tuple(self.rows)))

    def __str__(self) -> str:
        return "\n".join(
            "".join(str((r >> j) & 1) for j in range(self.ncols)) for r in self.rows
        )

    def __repr__(self) -> str:
        return f"BitMatrix({self.nrows}x{self.ncols})"


def rank(m: BitMatrix) -> int:
    """Return the rank of ``m`` over GF(2)."""
    rows = [r for r in m.rows if r]
    rk = 0
    while rows:
        pivot = rows.pop()
        rk += 1
        low = pivot & -pivot
        rows = [r ^ pivot if r & low else r for r in rows]
        rows = [r for r in rows if r]
    return rk


class RowSpace:
    """Incremental row space with membership tests and combination recovery.

    Each inserted vector is tagged; ``express`` returns the tag mask of the
    inserted vectors whose XOR equals a query vector, or ``None`` if the query
    is outside the span.
    """

    __slots__ = ("n", "_echelon", "_count")

    def __init__(self, n: int) -> None:
        self.n = n
        # pivot bit -> (reduced row, tag mask of original vectors)
        self._echelon: dict[int, tuple[int, int]] = {}
        self._count = 0

    def __len__(self) -> int:
        return len(self._echelon)

    def _reduce(self, v: int) -> tuple[int, int]:
        tags = 0
        while v:
            top = v.bit_length() - 1
            hit = self._echelon.get(top)
            if hit is None:
                return v, tags
            v ^= hit[0]
            tags ^= hit[1]
        return 0, tags

    def add(self, v: int) -> bool:
        """Insert ``v``;  return True if it enlarged the span."""
        if v >> self.n:
            raise ValueError("vector out of range")
        tag = 1 << self._count
        self._count += 1
        red, tags = self._reduce(v)
        if red == 0:
            return False
        self._echelon[red.bit_length() - 1] = (red, tags | tag)
        return True

    def contains(self, v: int) -> bool:
        return self._reduce(v)[0] == 0

    def copy(self) -> "RowSpace":
        dup = RowSpace(self.n)
        dup._echelon = dict(self._echelon)
        dup._count = self._count
        return dup

    def express(self, v: int) -> Optional[int]:
        """Tag mask of inserted vectors XOR-ing to ``v``, or None."""
        red, tags = self._reduce(v)
        return tags if red == 0 else None


def solve_linear(a: BitMatrix, b: BitVector) -> Optional[tuple[BitVector, list[BitVector]]]:
    """Solve ``x @ a = b`` over GF(2).

    Returns ``(particular, kernel_basis)`` where ``particular @ a = b`` and the
    kernel basis spans ``{x : x @ a = 0}``, or ``None`` if no solution exists.
    """
    if a.ncols != b.n:
        raise ValueError("shape mismatch between matrix and right-hand side")
    # Eliminate on [a | I] so each reduced row remembers its combination.
    work = [(a.rows[i], 1 << i) for i in range(a.nrows)]
    echelon: dict[int, tuple[int, int]] = {}
    kernel: list[int] = []
    for row, tag in work:
        while row:
            top = row.bit_length() - 1
            hit = echelon.get(top)
            if hit is None:
                break
            row ^= hit[0]
            tag ^= hit[1]
        if row:
            echelon[row.bit_length() - 1] = (row, tag)
        else:
            kernel.append(tag)
    v, tags = b.bits, 0
    while v:
        top = v.bit_length() - 1
        hit = echelon.get(top)
        if hit is None:
            return None
        v ^= hit[0]
        tags ^= hit[1]
    return (
        BitVector(a.nrows, tags),
        [BitVector(a.nrows, k) for k in kernel],
    )


def symplectic_basis(n: int, rows: list[int]) -> tuple[list[int], int]:
    """Hyperbolic basis for a symmetric zero-diagonal form given as raw rows.

    Low-level core of :func:`symplectic_canonicalize`: no validation, no
    matrix wrapping.  Returns ``(columns, r)`` where ``columns`` packs the
    new basis vectors and the leading ``2r`` of them pair into
    ``[[0,1],[1,0]]`` blocks, the rest spanning the radical.
    """
    # Symplectic Gram-Schmidt on the standard basis.  Track each basis
    # vector v together with its image h @ v so form evaluations stay O(1);
    # symmetry makes the initial images the rows themselves.
    basis = [1 << i for i in range(n)]
    images = list(rows)
    pairs: list[tuple[int, int]] = []
    radical: list[int] = []
    pool = list(range(n))
    while pool:
        a = pool.pop(0)
        partner = None
        ba, ia = basis[a], images[a]
        for idx, b in enumerate(pool):
            if (ba & images[b]).bit_count() & 1:
                partner = idx
                break
        if partner is None:
            radical.append(a)
            continue
        b = pool.pop(partner)
        pairs.append((a, b))
        bb, ib = basis[b], images[b]
        for u in pool:
            bu = basis[u]
            ca = (bu & ib).bit_count() & 1
            cb = (bu & ia).bit_count() & 1
            if ca:
                basis[u] ^= ba
                images[u] ^= ia
            if cb:
                basis[u] ^= bb
                images[u] ^= ib
    order: list[int] = []
    for a, b in pairs:
        order.extend((a, b))
    order.extend(radical)
    return [basis[i] for i in order], len(pairs)


def symplectic_canonicalize(h: BitMatrix) -> tuple[BitMatrix, int]:
    """Canonicalize a symmetric zero-diagonal GF(2) form by a basis change.

    Returns ``(v, r)`` with ``v`` invertible and ``v^T h v`` block diagonal:
    ``r`` blocks ``[[0,1],[1,0]]`` on the leading ``2r`` coordinates, zeros
    elsewhere.  ``rank(h) = 2r``.
    """
    n = h.nrows
    if h.ncols != n:
        raise ValueError("matrix not square")
    rows = h.rows
    cols = [0] * n
    for i, r in enumerate(rows):
        if (r >> i) & 1:
            raise ValueError(f"nonzero diagonal at {i}")
        for j in iter_bits(r):
            cols[j] |= 1 << i
    for i in range(n):
        diff = cols[i] ^ rows[i]
        if diff:
            j = (diff & -diff).bit_length() - 1
            raise ValueError(f"not symmetric at ({min(i, j)}, {max(i, j)})")
    columns, r = symplectic_basis(n, rows)
    vrows = [0] * n
    for j, col in enumerate(columns):
        bit = 1 << j
        for i in iter_bits(col):
            vrows[i] |= bit
    return BitMatrix(n, n, vrows), r
