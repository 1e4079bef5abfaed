"""Tests for the virtual-qubit expansion of measurement programs."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from pbcsim.dense import GATES, magic_h_state
from pbcsim.octic import QuadraticRational
from pbcsim.pbc import (
    Coin,
    Measure,
    Output,
    PbcProgram,
    output_distribution,
)
from pbcsim.stab import PauliOperator
from pbcsim.virtualq import (
    WEIGHTS_SQUARED_PER_QUBIT,
    PlanTerm,
    build_plan,
    estimate_acceptance,
    exact_acceptance,
    reduce_program,
)

ONE = QuadraticRational(Fraction(1))
ZERO = QuadraticRational(Fraction(0))


def popcount(v: int) -> int:
    return bin(v).count("1")


def random_hermitian_pauli(rng, n: int) -> PauliOperator:
    while True:
        x = int(rng.integers(0, 1 << n))
        z = int(rng.integers(0, 1 << n))
        if x == 0 and z == 0:
            continue
        c = (popcount(x & z) + 2 * int(rng.integers(0, 2))) & 3
        return PauliOperator(n, x, z, c)


def random_commuting_tree(rng, n: int, depth: int, ancestors=()):
    """An adaptive program tree whose measurements commute along each path."""
    if depth == 0:
        return {"output": int(rng.integers(0, 2))}
    while True:
        p = random_hermitian_pauli(rng, n)
        if all(p.commutes_with(a) for a in ancestors):
            break
    return {
        "pauli": p,
        "on_plus": random_commuting_tree(rng, n, depth - 1, ancestors + (p,)),
        "on_minus": random_commuting_tree(rng, n, depth - 1, ancestors + (p,)),
    }


def random_program(rng, n: int, depth: int) -> PbcProgram:
    return PbcProgram.from_tree(n, random_commuting_tree(rng, n, depth))


def framed_initial(frames: tuple[str, ...], n: int) -> np.ndarray:
    """Dense |framed 0...0> (x) |H...H> with the pinned qubits in the low bits."""
    virt = np.array([1.0], dtype=complex)
    for g in frames:
        col = GATES[g][:, 0] if g != "I" else np.array([1.0, 0.0], dtype=complex)
        virt = np.kron(col, virt)
    if n == 0:
        return virt
    return np.kron(magic_h_state(n), virt)


# ---------------------------------------------------------------------------
# the plan


def test_plan_weights_sum_to_one_exactly():
    for k in range(4):
        plan = build_plan(k)
        assert len(plan) == 3**k
        total = ZERO
        for term in plan:
            assert len(term.frames) == k
            assert all(g in ("I", "X", "H") for g in term.frames)
            total = total + term.alpha
        assert total == ONE


def test_plan_squared_mass_matches_closed_form():
    for k in range(1, 4):
        mass = ZERO
        for term in build_plan(k):
            mass = mass + term.alpha * term.alpha
        want = ONE
        for _ in range(k):
            want = want * WEIGHTS_SQUARED_PER_QUBIT
        assert mass == want
    assert abs(WEIGHTS_SQUARED_PER_QUBIT.to_float() - (3 - np.sqrt(2)) / 2) < 1e-15


def test_frame_decomposition_reconstructs_magic_projector():
    zero = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    acc = np.zeros((2, 2), dtype=complex)
    for term in build_plan(1):
        g = term.frames[0]
        u = np.eye(2, dtype=complex) if g == "I" else GATES[g]
        acc += term.alpha.to_float() * (u @ zero @ u.conj().T)
    h = magic_h_state(1)
    assert np.allclose(acc, np.outer(h, h.conj()), atol=1e-14)


def test_plan_term_equality_and_repr():
    a = PlanTerm(ONE, ("I",))
    assert a == PlanTerm(ONE, ("I",)) and a != PlanTerm(ONE, ("X",))
    assert "I" in repr(a)
    with pytest.raises(ValueError):
        build_plan(-1)


# ---------------------------------------------------------------------------
# per-term reduction


def test_reduced_term_matches_dense_pinned_state():
    rng = np.random.default_rng(41)
    for trial in range(10):
        k = int(rng.integers(1, 3))
        n = int(rng.integers(1, 3))
        program = random_program(rng, n + k, depth=int(rng.integers(1, 4)))
        for term in build_plan(k):
            reduced = reduce_program(program, term.frames)
            assert reduced.n == n
            got = output_distribution(reduced, method="brute")[1]
            got = got.to_float() if isinstance(got, QuadraticRational) else float(got)
            want = output_distribution(
                program, method="brute", initial=framed_initial(term.frames, n)
            )[1]
            assert abs(got - float(want)) < 1e-9, (trial, term.frames)


def test_reduction_turns_x_measurement_into_coin():
    program = PbcProgram.fixed(["X"], output=lambda bits: bits[0])
    reduced = reduce_program(program, ("I",))
    assert reduced.n == 0
    assert isinstance(reduced.step(()), Coin)
    assert isinstance(reduced.step((1,)), Output)
    # under the H frame the X measurement is the dummy +Z itself: forced
    framed = reduce_program(program, ("H",))
    step = framed.step(())
    assert isinstance(step, Output) and step.bit == 0


def test_reduction_forced_sign_respects_frame():
    program = PbcProgram.fixed(["Z"], output=lambda bits: bits[0])
    plain = reduce_program(program, ("I",))
    step = plain.step(())
    assert isinstance(step, Output) and step.bit == 0  # +Z on |0>
    flipped = reduce_program(program, ("X",))
    step = flipped.step(())
    assert isinstance(step, Output) and step.bit == 1  # +Z on X|0> reads -1


def test_reduction_validation():
    program = PbcProgram.fixed(["ZZ"], output=0)
    with pytest.raises(ValueError):
        reduce_program(program, ("I", "X", "H"))
    with pytest.raises(ValueError):
        reduce_program(program, ("Q",))


# ---------------------------------------------------------------------------
# whole-plan invariants


def test_exact_acceptance_equals_direct_acceptance():
    rng = np.random.default_rng(43)
    for trial in range(8):
        k = int(rng.integers(1, 3))
        n = int(rng.integers(1, 3))
        program = random_program(rng, n + k, depth=int(rng.integers(1, 4)))
        direct = output_distribution(program, method="brute")[1]
        via_plan = exact_acceptance(program, k, method="brute")
        assert via_plan == direct, trial


def test_exact_acceptance_rank_backend():
    rng = np.random.default_rng(47)
    program = random_program(rng, 3, depth=3)
    direct = output_distribution(program, method="brute")[1]
    assert exact_acceptance(program, 1, method="rank", base_k=2) == direct


def test_estimate_acceptance_is_seeded_and_calibrated():
    rng = np.random.default_rng(53)
    program = random_program(rng, 3, depth=3)
    exact = output_distribution(program, method="brute")[1].to_float()
    est_a, err_a = estimate_acceptance(program, 1, samples=4000, seed=7)
    est_b, err_b = estimate_acceptance(program, 1, samples=4000, seed=7)
    assert est_a == est_b and err_a == err_b
    hits = 0
    for seed in range(6):
        est, err = estimate_acceptance(program, 1, samples=4000, seed=seed)
        if abs(est - exact) <= 4 * max(err, 1e-12):
            hits += 1
    assert hits >= 5


def test_estimate_variance_within_weight_mass():
    rng = np.random.default_rng(59)
    program = random_program(rng, 4, depth=3)
    k = 2
    samples = 3000
    est, err = estimate_acceptance(program, k, samples=samples, seed=11)
    variance = (err * np.sqrt(samples)) ** 2
    mass = ONE
    for _ in range(k):
        mass = mass * WEIGHTS_SQUARED_PER_QUBIT
    assert variance <= mass.to_float() + 1e-6


def test_estimate_default_sample_count_and_validation():
    rng = np.random.default_rng(61)
    program = random_program(rng, 2, depth=1)
    est, err = estimate_acceptance(program, 1, epsilon=0.2, seed=3)
    assert np.isfinite(est) and err >= 0.0
    with pytest.raises(ValueError):
        estimate_acceptance(program, 1, samples=1, seed=3)
