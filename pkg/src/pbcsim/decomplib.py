"""Exact low-rank stabilizer decompositions of magic-state tensor powers.

The magic state is kept unnormalized as ``|H> = |0> + t|1>`` with
``t = tan(pi/8) = sqrt(2) - 1``, so ``|H^k>`` has amplitude ``t^|x|`` on the
basis string x.  Each built-in decomposition writes ``|H^k>`` as a short
Z[sqrt(2)]-combination of highly structured stabilizer states: weight-0 and
weight-n basis states, the even/odd weight-parity superpositions, and
controlled-Z twists of those.  The six-qubit entry additionally needs a pair
of graph-decorated odd-weight states; their edge sets are derived by a
meet-in-the-middle search (:func:`derive_h6_edge_sets`) and kept frozen in
``data/h6_graphs.json``.

Term counts are 2, 2, 3, 4, 6, 7 for k = 1..6.  Larger powers are handled by
tensoring block decompositions, which is what makes the count scale as
``7^(n/6) ~ 2^(0.468 n)`` instead of ``2^n``; the product term lists are
lazy, so the full list is never materialized.
"""
from __future__ import annotations

import json
import math
from collections.abc import Sequence
from importlib import resources

import numpy as np

from .f2linalg import popcount
from .octic import ExactAmplitude, QuadraticInteger, QuadraticRational
from .stab import AffineStabilizerState, family_state

__all__ = [
    "TAN_PI_8",
    "STABILIZER_RANK",
    "Component",
    "StabilizerDecomposition",
    "magic_decomposition",
    "verify_decomposition",
    "tensor_power_decomposition",
    "product_decomposition",
    "chunked_magic_decomposition",
    "magic_amplitudes_exact",
    "chi_upper_bound",
    "derive_h6_edge_sets",
    "ALL_PAIRS",
]

TAN_PI_8 = QuadraticInteger(-1, 1)

STABILIZER_RANK = {1: 2, 2: 2, 3: 3, 4: 4, 5: 6, 6: 7}

ALL_PAIRS = "all"


class Component:
    """Declarative recipe for one library state in a decomposition.

    ``family`` is one of the :func:`pbcsim.stab.family_state` kinds; ``edges``
    is a list of qubit pairs receiving a controlled-Z (or :data:`ALL_PAIRS`),
    and ``z_all`` applies a Z to every qubit.  Keeping the recipe alongside
    the built state makes the tables readable and serializable.
    """

    __slots__ = ("family", "edges", "z_all")

    def __init__(
        self,
        family: str,
        edges: "list[tuple[int, int]] | str | None" = None,
        z_all: bool = False,
    ) -> None:
        self.family = family
        self.edges = edges if edges is not None else []
        self.z_all = z_all

    def build(self, n: int) -> AffineStabilizerState:
        s = family_state(self.family, n)
        edges = self.edges
        if edges == ALL_PAIRS:
            edges = [(i, j) for i in range(n) for j in range(i + 1, n)]
        for i, j in edges:
            s = s.apply_cz(i, j)
        if self.z_all:
            for i in range(n):
                s = s.apply_z(i)
        return s

    def label(self) -> str:
        parts = []
        if self.z_all:
            parts.append("Z*")
        if self.edges == ALL_PAIRS:
            parts.append("K*")
        elif self.edges:
            parts.append("CZ" + "".join(f"({i},{j})" for i, j in self.edges))
        parts.append(self.family)
        return " ".join(parts)

    def to_obj(self):
        return {"family": self.family, "edges": self.edges, "z_all": self.z_all}

    @classmethod
    def from_obj(cls, obj) -> "Component":
        edges = obj.get("edges", [])
        if edges != ALL_PAIRS:
            edges = [tuple(e) for e in edges]
        return cls(obj["family"], edges, bool(obj.get("z_all", False)))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Component)
            and (self.family, self.edges, self.z_all)
            == (other.family, other.edges, other.z_all)
        )

    def __repr__(self) -> str:
        return f"Component({self.label()!r})"


Coefficient = "QuadraticInteger | QuadraticRational | complex"


class _LazyProductTerms(Sequence):
    """Product of factor term lists, decoded from a multi-index on demand.

    Index digits run least-significant-first over the factors, and the first
    factor occupies the lowest qubits of the tensor product.
    """

    __slots__ = ("factors", "_len")

    def __init__(self, factors: list[list[tuple]]) -> None:
        self.factors = factors
        self._len = math.prod(len(f) for f in factors)

    def __len__(self) -> int:
        return self._len

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(self._len))]
        if idx < 0:
            idx += self._len
        if not 0 <= idx < self._len:
            raise IndexError(idx)
        coeff = None
        state = None
        for terms in self.factors:
            idx, digit = divmod(idx, len(terms))
            c, s = terms[digit]
            coeff = c if coeff is None else coeff * c
            state = s if state is None else state.tensor(s)
        return coeff, state


class StabilizerDecomposition:
    """A target-equals-sum-of-stabilizer-states certificate.

    ``terms`` is a sequence of (coefficient, state) pairs — a plain list for
    the built-in tables, a lazy product view for tensor powers.  Coefficients
    are exact ring elements for library entries; search results may carry
    floats (see :func:`verify_decomposition` for how the two modes differ).
    ``target_id`` names the intended target; ``H^k`` is understood exactly.
    """

    __slots__ = ("k", "terms", "target_id", "recipes")

    def __init__(
        self,
        k: int,
        terms,
        target_id: str = "",
        recipes: "list[Component] | None" = None,
    ) -> None:
        self.k = k
        self.terms = terms
        self.target_id = target_id
        self.recipes = recipes

    @property
    def chi(self) -> int:
        return len(self.terms)

    def coefficients(self) -> list:
        return [c for c, _ in self.terms]

    def states(self) -> list[AffineStabilizerState]:
        return [s for _, s in self.terms]

    def to_dense(self) -> np.ndarray:
        out = np.zeros(1 << self.k, dtype=complex)
        for coeff, state in self.terms:
            out += _coeff_complex(coeff) * state.to_dense()
        return out

    def __repr__(self) -> str:
        return f"StabilizerDecomposition(k={self.k}, chi={self.chi}, target={self.target_id!r})"


def _coeff_complex(c) -> complex:
    if isinstance(c, (QuadraticInteger, QuadraticRational)):
        return complex(c.to_float())
    return complex(c)


def magic_amplitudes_exact(n: int) -> list[QuadraticInteger]:
    """Amplitudes t^|x| of the unnormalized |H^n>, indexed by basis string."""
    powers = [QuadraticInteger(1, 0)]
    for _ in range(n):
        powers.append(powers[-1] * TAN_PI_8)
    return [powers[popcount(x)] for x in range(1 << n)]


def _q(p: int, q: int) -> QuadraticInteger:
    return QuadraticInteger(p, q)


_FIXED_TABLES: dict[int, list[tuple[QuadraticInteger, Component]]] = {
    1: [
        (_q(1, 0), Component("B0")),
        (_q(-1, 1), Component("B1")),
    ],
    2: [
        (_q(2, -1), Component("E")),
        (_q(-1, 1), Component("K")),
    ],
    3: [
        (_q(-8, 6), Component("B1")),
        (_q(2, -1), Component("E")),
        (_q(-1, 1), Component("K")),
    ],
    4: [
        (_q(4, -2), Component("B0")),
        (_q(20, -14), Component("B1")),
        (_q(-4, 3), Component("O")),
        (_q(-3, 2), Component("K", z_all=True)),
    ],
    5: [
        (_q(-16, 12), Component("B0")),
        (_q(-40, 28), Component("B1")),
        (_q(-4, 3), Component("O")),
        (_q(10, -7), Component("E")),
        (_q(3, -2), Component("O", edges=ALL_PAIRS)),
        (_q(7, -5), Component("E", edges=ALL_PAIRS)),
    ],
}

# six-qubit table: five structured terms plus two graph-decorated odd states
_H6_FIVE: list[tuple[QuadraticInteger, Component]] = [
    (_q(-16, 12), Component("B0")),
    (_q(96, -68), Component("B1")),
    (_q(10, -7), Component("E")),
    (_q(-14, 10), Component("O")),
    (_q(7, -5), Component("K", z_all=True)),
]
_H6_GRAPH_COEFF = _q(10, -7)


def _load_h6_graphs() -> tuple[list[tuple[int, int]], list[tuple[int, int]]]:
    text = resources.files("pbcsim.data").joinpath("h6_graphs.json").read_text()
    obj = json.loads(text)
    return (
        [tuple(e) for e in obj["edges_a"]],
        [tuple(e) for e in obj["edges_b"]],
    )


def _recipe_table(k: int) -> list[tuple[QuadraticInteger, Component]]:
    if k in _FIXED_TABLES:
        return list(_FIXED_TABLES[k])
    if k == 6:
        edges_a, edges_b = _load_h6_graphs()
        terms = list(_H6_FIVE)
        terms.append((_H6_GRAPH_COEFF, Component("O", edges=edges_a)))
        terms.append((_H6_GRAPH_COEFF, Component("O", edges=edges_b)))
        return terms
    raise ValueError("built-in tables cover k = 1..6 only")


def magic_decomposition(k: int) -> StabilizerDecomposition:
    """The built-in decomposition of unnormalized |H^k> for k = 1..6."""
    recipes = _recipe_table(k)
    terms = [(coeff, comp.build(k)) for coeff, comp in recipes]
    return StabilizerDecomposition(
        k, terms, target_id=f"H^{k}", recipes=[comp for _, comp in recipes]
    )


def _parse_h_target(target_id: str) -> int | None:
    if target_id.startswith("H^"):
        try:
            return int(target_id[2:])
        except ValueError:
            return None
    return None


def _exact_term_sum(
    d: StabilizerDecomposition,
) -> "tuple[int, list[ExactAmplitude]] | None":
    """Sum of coefficient * state amplitudes, cleared of rational denominators.

    Returns ``(D, amplitudes)`` where D is the least common denominator of
    any QuadraticRational coefficients and the amplitudes are those of
    D * (sum over terms) — or None when some coefficient is not an exact ring
    element.
    """
    coeffs = d.coefficients()
    denom = 1
    for c in coeffs:
        if isinstance(c, QuadraticRational):
            denom = math.lcm(denom, c.a.denominator, c.b.denominator)
        elif not isinstance(c, QuadraticInteger):
            return None
    acc = [ExactAmplitude.zero() for _ in range(1 << d.k)]
    for c, state in d.terms:
        if isinstance(c, QuadraticRational):
            ci = QuadraticInteger(int(c.a * denom), int(c.b * denom))
        else:
            ci = QuadraticInteger(c.p * denom, c.q * denom)
        camp = ci.to_amplitude()
        for x, amp in enumerate(state.to_dense_exact()):
            acc[x] = acc[x] + camp * amp
    return denom, acc


def verify_decomposition(
    d: StabilizerDecomposition, target: "np.ndarray | None" = None
) -> tuple[bool, float]:
    """Check a decomposition against its target.

    Returns ``(exact, residual)``: ``exact`` is True only when every
    coefficient is an exact ring element, the target is the understood
    ``H^k``, and the componentwise identity holds in the ring; ``residual``
    is the floating 2-norm of (sum - target) in all cases.
    """
    if target is None:
        k_target = _parse_h_target(d.target_id)
        if k_target is None:
            raise ValueError(f"no dense target given and target_id {d.target_id!r} is not understood")
        if k_target != d.k:
            raise ValueError("target_id qubit count disagrees with decomposition")
        t = TAN_PI_8.to_float()
        target_dense = np.array([t ** popcount(x) for x in range(1 << d.k)], dtype=complex)
        exact_target: "list[QuadraticInteger] | None" = magic_amplitudes_exact(d.k)
    else:
        if target.shape != (1 << d.k,):
            raise ValueError("dense target has wrong length")
        target_dense = target.astype(complex)
        exact_target = None
    residual = float(np.linalg.norm(d.to_dense() - target_dense))
    exact = False
    if exact_target is not None:
        summed = _exact_term_sum(d)
        if summed is not None:
            denom, acc = summed
            exact = all(
                acc[x] == (exact_target[x] * QuadraticInteger(denom, 0)).to_amplitude()
                for x in range(1 << d.k)
            )
    return exact, residual


def product_decomposition(parts: list[StabilizerDecomposition]) -> StabilizerDecomposition:
    """Tensor product of decompositions (first part on the lowest qubits)."""
    if not parts:
        raise ValueError("need at least one factor")
    if len(parts) == 1:
        return parts[0]
    factors = [list(p.terms) for p in parts]
    k = sum(p.k for p in parts)
    sizes = [_parse_h_target(p.target_id) for p in parts]
    target_id = f"H^{k}" if all(s is not None for s in sizes) else ""
    return StabilizerDecomposition(k, _LazyProductTerms(factors), target_id=target_id)


def tensor_power_decomposition(d: StabilizerDecomposition, m: int) -> StabilizerDecomposition:
    """The m-fold tensor power with chi^m lazily enumerated terms."""
    if m < 1:
        raise ValueError("need m >= 1")
    return product_decomposition([d] * m)


def chunked_magic_decomposition(n: int, base_k: int = 6) -> StabilizerDecomposition:
    """|H^n> from base_k-sized blocks plus a remainder block."""
    if n < 1:
        raise ValueError("need n >= 1")
    if not 1 <= base_k <= 6:
        raise ValueError("base_k must be 1..6")
    q, r = divmod(n, base_k)
    parts = [magic_decomposition(base_k)] * q
    if r:
        parts.append(magic_decomposition(r))
    return product_decomposition(parts)


def chi_upper_bound(n: int, base_k: int = 6) -> int:
    """Term count of :func:`chunked_magic_decomposition`."""
    if n < 1:
        raise ValueError("need n >= 1")
    if not 1 <= base_k <= 6:
        raise ValueError("base_k must be 1..6")
    q, r = divmod(n, base_k)
    return STABILIZER_RANK[base_k] ** q * (STABILIZER_RANK[r] if r else 1)


# ------------------------------------------------------------------ search
# for the six-qubit graph pair


def _odd_strings() -> list[int]:
    return [x for x in range(64) if popcount(x) & 1]


def _sign_masks() -> np.ndarray:
    """For every 15-bit edge subset, the sign pattern over odd-weight strings.

    Bit s of the result is 1 when the state picks up a (-1) on the s-th
    odd-weight string, i.e. when an odd number of chosen edges lie inside it.
    """
    odd = _odd_strings()
    edges = [(i, j) for i in range(6) for j in range(i + 1, 6)]
    inside = np.zeros((15, 32), dtype=np.int64)
    for e, (i, j) in enumerate(edges):
        for s, x in enumerate(odd):
            inside[e, s] = (x >> i) & (x >> j) & 1
    subsets = np.arange(1 << 15, dtype=np.int64)
    picks = (subsets[:, None] >> np.arange(15)[None, :]) & 1  # (32768, 15)
    parities = (picks @ inside) & 1  # (32768, 32)
    return parities @ (1 << np.arange(32, dtype=np.int64))


def derive_h6_edge_sets() -> dict:
    """Recover the two graph edge sets completing the six-qubit table.

    Subtracts the five fixed terms from |H^6> exactly, divides by the shared
    graph coefficient (norm 2 in Z[sqrt(2)]), and searches for two odd-support
    graph states summing to the remainder.  The residue forces the sign of
    both states wherever it is nonzero and forces them opposite elsewhere, so
    a single pass over all 2^15 edge subsets with a sign-pattern lookup table
    finds every solution.  Returns the lexicographically smallest pair along
    with the number of distinct sign-pattern solutions.
    """
    target = magic_amplitudes_exact(6)
    residue = list(target)
    for coeff, comp in _H6_FIVE:
        dense = comp.build(6).to_dense_exact()
        for x in range(64):
            amp = dense[x]
            if amp.is_zero():
                continue
            ip = amp.power_form()
            assert ip is not None and ip[0] == 0  # entries are +-1
            sign = -1 if ip[1] >= 4 else 1
            residue[x] = residue[x] - coeff * QuadraticInteger(sign, 0)
    # divide by (10 - 7 sqrt(2)): multiply by the conjugate, halve
    conj = _H6_GRAPH_COEFF.galois_conj()
    norm = _H6_GRAPH_COEFF.norm()
    div: list[int] = []
    for x in range(64):
        if popcount(x) & 1 == 0:
            assert residue[x].is_zero(), "even-weight residue must vanish"
            continue
        num = residue[x] * conj
        assert num.p % norm == 0 and num.q % norm == 0
        d = QuadraticInteger(num.p // norm, num.q // norm)
        assert d.q == 0 and d.p in (-2, 0, 2), f"unreachable residue {d}"
        div.append(d.p)
    # sign constraints per odd string: d = +-2 forces both signs, 0 forces opposite
    forced_neg = 0
    forced_pos = 0
    flip = 0
    for s, dv in enumerate(div):
        if dv == 2:
            forced_pos |= 1 << s
        elif dv == -2:
            forced_neg |= 1 << s
        else:
            flip |= 1 << s
    masks = _sign_masks()
    first_subset: dict[int, int] = {}
    for m, mask in enumerate(masks.tolist()):
        if mask not in first_subset:
            first_subset[mask] = m
    pairs: set[tuple[int, int]] = set()
    for mask in first_subset:
        if mask & forced_pos or (mask & forced_neg) != forced_neg:
            continue
        partner = mask ^ flip
        if partner in first_subset:
            pairs.add(tuple(sorted((mask, partner))))
    if not pairs:
        raise RuntimeError("no graph pair completes the six-qubit table")
    best = min(pairs)
    edges = [(i, j) for i in range(6) for j in range(i + 1, 6)]

    def subset_edges(mask: int) -> list[tuple[int, int]]:
        m = first_subset[mask]
        return [edges[e] for e in range(15) if (m >> e) & 1]

    return {
        "edges_a": subset_edges(best[0]),
        "edges_b": subset_edges(best[1]),
        "sign_pattern_pairs": len(pairs),
    }
