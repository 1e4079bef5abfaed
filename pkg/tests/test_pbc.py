"""Tests for adaptive measurement programs and their exact backends."""
from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from pbcsim.dense import magic_h_state
from pbcsim.f2linalg import popcount
from pbcsim.octic import QuadraticRational
from pbcsim.pbc import (
    Coin,
    DenseStateSimulator,
    ExactMagicSimulator,
    Measure,
    OutcomeRecord,
    Output,
    PbcProgram,
    RankSimulator,
    brute_force_probability,
    enumerate_distribution,
    outcomes_from_string,
    output_distribution,
    rank_probability,
    sample_run,
    validate_standard_form,
)
from pbcsim.stab import PauliOperator

ONE = QuadraticRational(1)


def random_hermitian_pauli(rng, n, allow_identity=False):
    while True:
        x = int(rng.integers(0, 1 << n))
        z = int(rng.integers(0, 1 << n))
        if not allow_identity and x == 0 and z == 0:
            continue
        c = (popcount(x & z) + 2 * int(rng.integers(0, 2))) & 3
        return PauliOperator(n, x, z, c)


def random_commuting_paulis(rng, n, t):
    found = []
    while len(found) < t:
        p = random_hermitian_pauli(rng, n)
        if all(p.commutes_with(q) for q in found):
            found.append(p)
    return found


def random_tree(rng, n, depth, path=()):
    """Adaptive decision tree; measurements commute along every path."""
    if depth == 0:
        return {"output": int(rng.integers(0, 2))}
    if depth > 1 and rng.random() < 0.2:
        return {
            "coin": True,
            "on_plus": random_tree(rng, n, depth - 1, path),
            "on_minus": random_tree(rng, n, depth - 1, path),
        }
    while True:
        p = random_hermitian_pauli(rng, n)
        if all(p.commutes_with(q) for q in path):
            break
    return {
        "pauli": p,
        "on_plus": random_tree(rng, n, depth - 1, path + (p,)),
        "on_minus": random_tree(rng, n, depth - 1, path + (p,)),
    }


def dense_prefix_probability(program, outcomes, vec):
    """Floating oracle for the probability of a +-1 prefix."""
    vec = np.array(vec, dtype=complex)
    prob = 1.0
    history = []
    for sigma in outcomes:
        step = program.step(tuple(history))
        assert not isinstance(step, Output)
        if isinstance(step, Coin):
            prob *= 0.5
        else:
            b = step.pauli.apply_dense(vec)
            naa = np.vdot(vec, vec).real
            p_plus = (naa + np.vdot(vec, b).real) / (2.0 * naa)
            branch = p_plus if sigma > 0 else 1.0 - p_plus
            if branch <= 1e-15:
                return 0.0
            prob *= branch
            vec = 0.5 * (vec + sigma * b)
        history.append(sigma)
    return prob


def test_step_validation():
    with pytest.raises(ValueError):
        Measure(PauliOperator(1, 1, 1, 0))  # XZ is anti-hermitian
    with pytest.raises(ValueError):
        Output(2)
    assert Measure("Y").pauli == PauliOperator.single(1, 0, "Y")
    prog = PbcProgram(2, lambda h: "nonsense")
    with pytest.raises(TypeError):
        prog.step(())
    wrong_width = PbcProgram(2, lambda h: Measure("Z"))
    with pytest.raises(ValueError):
        wrong_width.step(())


def test_tree_program_walk():
    tree = {
        "pauli": "ZI",
        "on_plus": {"output": 0},
        "on_minus": {
            "pauli": "IZ",
            "on_plus": {"output": 1},
            "on_minus": {"output": 0},
        },
    }
    prog = PbcProgram.from_tree(2, tree)
    assert isinstance(prog.step(()), Measure)
    assert prog.step(()).pauli == PauliOperator.from_string("ZI")
    assert prog.step((1,)).bit == 0
    assert prog.step((-1,)).pauli == PauliOperator.from_string("IZ")
    assert prog.step((-1, -1)).bit == 0
    with pytest.raises(ValueError):
        prog.step((1, 1))
    with pytest.raises(ValueError):
        PbcProgram.from_tree(2, {"pauli": "Z", "on_plus": {"output": 0}, "on_minus": {"output": 0}})
    with pytest.raises(ValueError):
        PbcProgram.from_tree(1, {"pauli": "Z", "on_plus": {"output": 0}})
    with pytest.raises(ValueError):
        PbcProgram.from_tree(1, {"nonsense": 1})


def test_fixed_program():
    prog = PbcProgram.fixed(["ZI", "IZ"], output=lambda bits: bits[0] ^ bits[1])
    assert prog.n == 2
    assert prog.step((1,)).pauli == PauliOperator.from_string("IZ")
    assert prog.step((1, -1)).bit == 1
    assert prog.step((-1, -1)).bit == 0
    with pytest.raises(ValueError):
        PbcProgram.fixed([], output=1)
    empty = PbcProgram.fixed([], output=1, n=3)
    assert empty.step(()).bit == 1


def test_outcomes_from_string():
    assert outcomes_from_string("+-+") == (1, -1, 1)
    assert outcomes_from_string("") == ()
    with pytest.raises(ValueError):
        outcomes_from_string("+x")


def test_single_qubit_known_values():
    for letter in ("Z", "X"):
        prog = PbcProgram.fixed([letter], output=0)
        pr = brute_force_probability(prog, (1,))
        assert pr == QuadraticRational(Fraction(1, 2), Fraction(1, 4))
        assert rank_probability(prog, (1,)) == pr
    prog_y = PbcProgram.fixed(["Y"], output=0)
    assert brute_force_probability(prog_y, (1,)) == QuadraticRational(Fraction(1, 2))
    assert brute_force_probability(prog_y, ()) == ONE


def test_exact_magic_matches_dense_oracle():
    rng = np.random.default_rng(7)
    for _ in range(60):
        n = int(rng.integers(1, 5))
        depth = int(rng.integers(1, n + 3))
        paulis = [random_hermitian_pauli(rng, n) for _ in range(depth)]
        prog = PbcProgram.fixed(paulis, output=0)
        outcomes = tuple(1 if rng.random() < 0.5 else -1 for _ in range(depth))
        exact = brute_force_probability(prog, outcomes)
        oracle = dense_prefix_probability(prog, outcomes, magic_h_state(n))
        assert abs(exact.to_float() - oracle) < 1e-9


def test_exact_simulator_probability_and_commit():
    sim = ExactMagicSimulator(2)
    z0 = PauliOperator.from_string("ZI")
    pr = sim.probability_plus(z0)
    assert pr == QuadraticRational(Fraction(1, 2), Fraction(1, 4))
    sim.commit(z0, 1)
    # Once +Z0 is fixed, remeasuring it is deterministic.
    assert sim.probability_plus(z0) == ONE
    assert sim.probability_plus(-z0) == QuadraticRational(0)


def test_dependent_measurements_are_deterministic():
    rng = np.random.default_rng(11)
    for backend in ("brute", "rank"):
        for _ in range(10):
            n = int(rng.integers(2, 5))
            a, b = random_commuting_paulis(rng, n, 2)
            prog = PbcProgram.fixed([a, b, a * b], output=0)
            for s1 in (1, -1):
                for s2 in (1, -1):
                    base = (s1, s2)
                    fn = brute_force_probability if backend == "brute" else rank_probability
                    p_prefix = fn(prog, base)
                    if p_prefix.is_zero():
                        continue
                    # The product measurement is fixed by the first two results.
                    agree = fn(prog, base + (s1 * s2 * (a * b * (a * b)).sign(),))
                    assert agree == p_prefix
                    assert (fn(prog, base + (1,)) + fn(prog, base + (-1,))) == p_prefix


def test_rank_matches_brute_exactly_on_adaptive_trees():
    rng = np.random.default_rng(23)
    for trial in range(8):
        n = int(rng.integers(2, 5))
        prog = PbcProgram.from_tree(n, random_tree(rng, n, int(rng.integers(1, n + 1))))
        base_k = int(rng.integers(1, 3))
        brute_records = enumerate_distribution(prog, "brute")
        rank_records = enumerate_distribution(prog, "rank", base_k=base_k)
        assert brute_records == rank_records
        total = QuadraticRational(0)
        for rec in brute_records:
            total = total + rec.probability
        assert total == ONE


def test_rank_base_choice_is_invisible():
    rng = np.random.default_rng(31)
    paulis = random_commuting_paulis(rng, 6, 4)
    prog = PbcProgram.fixed(paulis, output=0)
    outcomes = (1, -1, 1, -1)
    values = {k: rank_probability(prog, outcomes, base_k=k) for k in (1, 2, 6)}
    assert values[1] == values[6]
    assert values[2] == values[6]
    assert values[6] == brute_force_probability(prog, outcomes)


def test_rank_dependent_measurements_do_not_grow_generators():
    rng = np.random.default_rng(41)
    a, b = random_commuting_paulis(rng, 4, 2)
    sim = RankSimulator(4, base_k=2)
    sim.commit(a, 1)
    sim.commit(b, -1)
    assert len(sim.kept) == 2
    prod = a * b
    assert sim.probability_plus(prod) in (ONE, QuadraticRational(0))
    sigma = 1 if sim.probability_plus(prod) == ONE else -1
    sim.commit(prod, sigma)
    assert len(sim.kept) == 2


def test_rank_rejects_anticommuting_runs():
    sim = RankSimulator(2, base_k=1)
    sim.commit(PauliOperator.from_string("ZI"), 1)
    with pytest.raises(ValueError):
        sim.probability_plus(PauliOperator.from_string("XI"))
    with pytest.raises(ValueError):
        sim.commit(PauliOperator.from_string("XI"), 1)


def test_coin_nodes_halve_probabilities():
    tree = {
        "coin": True,
        "on_plus": {"pauli": "Z", "on_plus": {"output": 0}, "on_minus": {"output": 1}},
        "on_minus": {"output": 1},
    }
    prog = PbcProgram.from_tree(1, tree)
    records = enumerate_distribution(prog, "brute")
    assert len(records) == 3
    assert brute_force_probability(prog, (-1,)) == QuadraticRational(Fraction(1, 2))
    total = QuadraticRational(0)
    for rec in records:
        total = total + rec.probability
    assert total == ONE
    dist = output_distribution(prog, "rank", base_k=1)
    assert dist[0] + dist[1] == ONE
    assert dist[0] == QuadraticRational(Fraction(1, 4), Fraction(1, 8))


def test_sample_run_reproducible_and_consistent():
    rng = np.random.default_rng(55)
    prog = PbcProgram.from_tree(3, random_tree(rng, 3, 3))
    rec1 = sample_run(prog, "brute", seed=99)
    rec2 = sample_run(prog, "brute", seed=99)
    assert rec1 == rec2
    assert rec1.probability == brute_force_probability(prog, rec1.outcomes)
    rec3 = sample_run(prog, "rank", seed=99, base_k=2)
    assert rec3.outcomes == rec1.outcomes
    assert rec3.b_out == rec1.b_out


def test_sample_run_frequency_sanity():
    prog = PbcProgram.fixed(["Z"], output=lambda bits: bits[0])
    hits = 0
    shots = 3000
    rng_seed = np.random.default_rng(7).integers(0, 2**32, size=shots)
    for s in rng_seed:
        rec = sample_run(prog, "brute", seed=int(s))
        hits += rec.b_out == 0
    expected = (2 + np.sqrt(2)) / 4
    assert abs(hits / shots - expected) < 0.05


def test_dense_initial_state_backend():
    rng = np.random.default_rng(63)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        vec = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        depth = int(rng.integers(1, 4))
        prog = PbcProgram.fixed(
            [random_hermitian_pauli(rng, n) for _ in range(depth)], output=0
        )
        outcomes = tuple(1 if rng.random() < 0.5 else -1 for _ in range(depth))
        got = brute_force_probability(prog, outcomes, initial=vec)
        want = dense_prefix_probability(prog, outcomes, vec)
        assert got == pytest.approx(want, abs=1e-9)
    with pytest.raises(ValueError):
        DenseStateSimulator(np.zeros(4))
    with pytest.raises(ValueError):
        DenseStateSimulator(np.ones(3))


def test_exact_arrays_widen_without_losing_exactness():
    rng = np.random.default_rng(13)
    tight = ExactMagicSimulator(3, widen_limit=4)  # forces python-int entries early
    wide = ExactMagicSimulator(3)
    for _ in range(25):
        p = random_hermitian_pauli(rng, 3)
        pr_tight = tight.probability_plus(p)
        assert pr_tight == wide.probability_plus(p)
        f = pr_tight.to_float()
        sigma = 1 if rng.random() < f else -1
        if (sigma > 0 and f < 1e-12) or (sigma < 0 and f > 1.0 - 1e-12):
            sigma = -sigma
        tight.commit(p, sigma)
        wide.commit(p, sigma)
    assert tight.pr.dtype == object  # headroom was exceeded and arrays widened
    assert wide.pr.dtype == np.int64


def test_zero_qubit_programs():
    prog = PbcProgram.fixed([], output=1, n=0)
    assert brute_force_probability(prog, ()) == ONE
    assert rank_probability(prog, ()) == ONE
    records = enumerate_distribution(prog)
    assert records == [OutcomeRecord((), 1, ONE)]


def test_output_distribution_margins():
    rng = np.random.default_rng(77)
    prog = PbcProgram.from_tree(3, random_tree(rng, 3, 3))
    for method, kw in (("brute", {}), ("rank", {"base_k": 2})):
        dist = output_distribution(prog, method, **kw)
        assert dist[0] + dist[1] == ONE
        assert not (dist[0] < QuadraticRational(0))


def test_validate_standard_form_accepts_good_programs():
    rng = np.random.default_rng(83)
    paulis = random_commuting_paulis(rng, 4, 4)
    report = validate_standard_form(PbcProgram.fixed(paulis, output=0))
    assert report.ok
    assert not report.truncated
    assert report.explored_paths == 16


def test_validate_standard_form_flags_violations():
    # Depth: n+1 measurements on n qubits.
    deep = PbcProgram.fixed(["Z", "Z"], output=0)
    report = validate_standard_form(deep)
    assert any("exceeds 1 measurements" in v for v in report.violations)

    # Anticommuting measurements on one path.
    clash = PbcProgram.fixed(["ZZ", "XI"], output=0)
    report = validate_standard_form(clash)
    assert any("anticommutes" in v for v in report.violations)

    # A policy that crashes is reported, not raised.
    def broken(history):
        if len(history) >= 1:
            raise RuntimeError("no such branch")
        return Measure(PauliOperator.from_string("ZZ"))

    report = validate_standard_form(PbcProgram(2, broken))
    assert any("policy failed" in v for v in report.violations)

    # A program that never outputs trips the step cap and the path budget.
    loop = PbcProgram(1, lambda h: Coin())
    report = validate_standard_form(loop, max_paths=64)
    assert report.truncated or any("without an output" in v for v in report.violations)


def test_enumerate_skips_zero_branches_exactly():
    # After fixing +Z, remeasuring Z has a zero-probability minus branch.
    prog = PbcProgram.fixed(["Z", "Z"], output=0)
    records = enumerate_distribution(prog)
    assert [rec.outcomes for rec in records] == [(1, 1), (-1, -1)]
    total = QuadraticRational(0)
    for rec in records:
        total = total + rec.probability
    assert total == ONE
