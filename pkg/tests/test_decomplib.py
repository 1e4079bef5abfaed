from fractions import Fraction

import numpy as np
import pytest

from pbcsim.decomplib import (
    ALL_PAIRS,
    Component,
    StabilizerDecomposition,
    STABILIZER_RANK,
    TAN_PI_8,
    chi_upper_bound,
    chunked_magic_decomposition,
    derive_h6_edge_sets,
    magic_amplitudes_exact,
    magic_decomposition,
    product_decomposition,
    tensor_power_decomposition,
    verify_decomposition,
)
from pbcsim.f2linalg import popcount
from pbcsim.octic import QuadraticInteger, QuadraticRational
from pbcsim.stab import AffineStabilizerState


def magic_dense(n: int) -> np.ndarray:
    t = np.sqrt(2) - 1
    return np.array([t ** popcount(x) for x in range(1 << n)])


def test_magic_amplitudes_exact():
    amps = magic_amplitudes_exact(3)
    assert amps[0] == QuadraticInteger(1, 0)
    assert amps[1] == TAN_PI_8
    assert amps[7] == TAN_PI_8 * TAN_PI_8 * TAN_PI_8
    assert np.allclose([a.to_float() for a in amps], magic_dense(3))


def test_builtin_term_counts_match_rank_table():
    for k in range(1, 7):
        assert magic_decomposition(k).chi == STABILIZER_RANK[k]
    with pytest.raises(ValueError):
        magic_decomposition(7)


def test_builtin_decompositions_verify_exactly():
    for k in range(1, 7):
        exact, residual = verify_decomposition(magic_decomposition(k))
        assert exact, f"k={k}"
        assert residual < 1e-12


def test_builtin_decompositions_match_dense():
    for k in range(1, 7):
        assert np.allclose(magic_decomposition(k).to_dense(), magic_dense(k), atol=1e-12)


def test_verify_rejects_corrupted_table():
    d = magic_decomposition(4)
    coeff, state = d.terms[0]
    d.terms[0] = (coeff + QuadraticInteger(1, 0), state)
    exact, residual = verify_decomposition(d)
    assert not exact
    assert residual >= 1.0


def test_verify_with_rational_coefficients():
    # normalized two-qubit identity: divide every coefficient by (1+t^2)^2
    d = magic_decomposition(2)
    norm = QuadraticRational(4, -2) * QuadraticRational(4, -2)
    terms = [
        (QuadraticRational.from_quadratic(c, 0) / norm, s) for c, s in d.terms
    ]
    scaled = StabilizerDecomposition(2, terms, target_id="H^2")
    exact, residual = verify_decomposition(scaled)
    assert not exact  # the sum is |H^2>/(1+t^2)^2, not |H^2>
    # against the correctly scaled dense target it does match
    _, residual2 = verify_decomposition(scaled, target=magic_dense(2) / (4 - 2 * np.sqrt(2)) ** 2)
    assert residual2 < 1e-12
    # and rational coefficients still verify exactly when they equal the table
    same = StabilizerDecomposition(
        2,
        [(QuadraticRational.from_quadratic(c, 0), s) for c, s in d.terms],
        target_id="H^2",
    )
    exact3, residual3 = verify_decomposition(same)
    assert exact3 and residual3 < 1e-12


def test_verify_float_mode_only_for_float_coefficients():
    d = magic_decomposition(2)
    terms = [(complex(c.to_float()), s) for c, s in d.terms]
    fd = StabilizerDecomposition(2, terms, target_id="H^2")
    exact, residual = verify_decomposition(fd)
    assert not exact and residual < 1e-12


def test_component_builders():
    comp = Component("O", edges=ALL_PAIRS)
    s = comp.build(3)
    assert isinstance(s, AffineStabilizerState)
    # all-pairs CZ on odd-weight support: sign flips where two set bits meet
    v = s.to_dense()
    for x in range(8):
        w = popcount(x)
        want = 0.0 if w % 2 == 0 else (-1.0) ** (w * (w - 1) // 2)
        assert v[x] == want
    zk = Component("K", z_all=True).build(2)
    assert np.allclose(zk.to_dense(), [1, -1, -1, -1])
    assert Component.from_obj(comp.to_obj()) == comp
    roundtrip = Component.from_obj(Component("O", edges=[(0, 2)]).to_obj())
    assert roundtrip.edges == [(0, 2)]


def test_chi_upper_bound():
    assert [chi_upper_bound(n) for n in range(1, 8)] == [2, 2, 3, 4, 6, 7, 14]
    assert chi_upper_bound(12) == 49
    assert chi_upper_bound(13) == 98
    assert chi_upper_bound(18) == 343
    assert chi_upper_bound(6, base_k=1) == 64
    assert chi_upper_bound(6, base_k=3) == 9
    with pytest.raises(ValueError):
        chi_upper_bound(0)


def test_tensor_power_identity_and_lazy_indexing():
    d2 = magic_decomposition(2)
    assert tensor_power_decomposition(d2, 1) is d2
    d4 = tensor_power_decomposition(d2, 2)
    assert d4.k == 4 and d4.chi == 4
    # coefficient of the all-first multi-index is c_1^m
    c0 = d2.terms[0][0]
    assert d4.terms[0][0] == c0 * c0
    assert np.allclose(d4.to_dense(), magic_dense(4), atol=1e-12)
    exact, _ = verify_decomposition(d4)
    assert exact
    with pytest.raises(IndexError):
        d4.terms[4]
    assert d4.terms[-1][0] == d2.terms[1][0] * d2.terms[1][0]


def test_chunked_magic_decomposition_exact():
    for n, base_k in [(4, 6), (6, 6), (8, 6), (6, 1), (5, 2)]:
        d = chunked_magic_decomposition(n, base_k)
        assert d.k == n
        assert d.chi == chi_upper_bound(n, base_k)
        assert np.allclose(d.to_dense(), magic_dense(n), atol=1e-9)
    exact, _ = verify_decomposition(chunked_magic_decomposition(7))
    assert exact


def test_product_decomposition_orders_blocks_low_to_high():
    d1 = magic_decomposition(1)
    d2 = magic_decomposition(2)
    prod = product_decomposition([d1, d2])
    assert prod.k == 3
    # first factor on the low qubit: term (1, 0) = second state of d1, first of d2
    coeff, state = prod.terms[1]
    assert coeff == d1.terms[1][0] * d2.terms[0][0]
    assert np.allclose(
        state.to_dense(), np.kron(d2.terms[0][1].to_dense(), d1.terms[1][1].to_dense())
    )


def test_derivation_matches_frozen_data():
    found = derive_h6_edge_sets()
    d6 = magic_decomposition(6)
    assert d6.recipes is not None
    frozen_a = d6.recipes[5].edges
    frozen_b = d6.recipes[6].edges
    assert [tuple(e) for e in found["edges_a"]] == list(frozen_a)
    assert [tuple(e) for e in found["edges_b"]] == list(frozen_b)
    assert found["sign_pattern_pairs"] >= 1


def test_six_qubit_graph_states_are_not_permutation_symmetric():
    # the two graph-decorated states genuinely break qubit-exchange symmetry,
    # unlike the five structured terms
    d6 = magic_decomposition(6)
    idx = np.arange(64)

    def swap_bits(a: int, b: int) -> np.ndarray:
        return (idx & ~((1 << a) | (1 << b))) | (((idx >> a) & 1) << b) | (((idx >> b) & 1) << a)

    transpositions = [(a, b) for a in range(6) for b in range(a + 1, 6)]
    for _, state in d6.terms[:5]:
        v = state.to_dense()
        assert all(np.allclose(v, v[swap_bits(a, b)]) for a, b in transpositions)
    for _, state in d6.terms[5:]:
        v = state.to_dense()
        assert any(not np.allclose(v, v[swap_bits(a, b)]) for a, b in transpositions)


def test_normalized_two_term_identity_reconciles():
    # the two-term rank-2 identity over normalized states: dividing the
    # unnormalized table by (1+t^2) reproduces |H>^2 with unit norm
    d = magic_decomposition(2)
    norm = QuadraticRational(4, -2)
    terms = [(QuadraticRational.from_quadratic(c, 0) / norm, s) for c, s in d.terms]
    scaled = StabilizerDecomposition(2, terms, target_id="")
    dense = scaled.to_dense()
    assert abs(np.linalg.norm(dense) - 1.0) < 1e-12
    target = magic_dense(2)
    target = target / np.linalg.norm(target)
    assert np.allclose(dense, target, atol=1e-12)
    # the rational coefficients have small denominators
    assert all(isinstance(c.a, Fraction) and c.a.denominator <= 8 for c, _ in terms)
