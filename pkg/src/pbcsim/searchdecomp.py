"""Simulated-annealing search for low-rank stabilizer decompositions.

A target state has a rank-chi stabilizer decomposition exactly when some
chi-tuple of stabilizer states spans it, i.e. when the objective

    F(phi_1, ..., phi_chi) = || Pi phi ||

(the norm of the target's orthogonal projection onto the span) reaches one.
The search runs a random walk on chi-tuples of dense stabilizer states:
a tentative move picks a tuple slot and a uniformly random signed hermitian
Pauli P and replaces the state by (I + P) phi, normalized — a map that sends
stabilizer states to stabilizer states and annihilates exactly when -P
stabilizes phi.  Moves that do not lower F are always accepted, and lowering
moves survive with probability exp[-beta (F - F')], with beta raised along a
geometric schedule.  On success the coefficients are solved by least squares
on the span, the states are snapped to exact affine form, and coefficients
matching small rational combinations of 1 and sqrt(2) are refit exactly.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Optional

import numpy as np

from .decomplib import TAN_PI_8, StabilizerDecomposition, verify_decomposition
from .f2linalg import popcount
from .octic import QuadraticRational
from .stab import AffineStabilizerState, PauliOperator

__all__ = [
    "AnnealConfig",
    "AnnealResult",
    "DenseStabilizerTuple",
    "accept_move",
    "anneal",
    "extract_decomposition",
    "objective",
    "propose_move",
    "random_basis_tuple",
    "snap_coefficient",
]

DENSE_SEARCH_LIMIT = 8
SUCCESS_THRESHOLD = 1.0 - 1e-10


class AnnealConfig:
    """Schedule and options for the annealing walk.

    ``chi`` tuple slots; inverse temperature raised geometrically from
    ``beta_initial`` to ``beta_final`` (endpoints inclusive) over
    ``anneal_steps`` stages of ``steps_per_beta`` tentative moves each.
    ``restrict_real`` keeps every walk state real by proposing only Paulis
    with an even number of Y letters.  ``restarts`` independent walks are
    tried in sequence, each with its own stream split off ``seed``.
    """

    __slots__ = (
        "chi",
        "beta_initial",
        "beta_final",
        "steps_per_beta",
        "anneal_steps",
        "seed",
        "restrict_real",
        "restarts",
    )

    def __init__(
        self,
        chi: int,
        beta_initial: float = 1.0,
        beta_final: float = 4000.0,
        steps_per_beta: int = 1000,
        anneal_steps: int = 100,
        seed=None,
        restrict_real: bool = True,
        restarts: int = 1,
    ) -> None:
        if chi < 1:
            raise ValueError("need at least one tuple slot")
        if not 0 < beta_initial <= beta_final:
            raise ValueError("need 0 < beta_initial <= beta_final")
        if steps_per_beta < 1 or anneal_steps < 1 or restarts < 1:
            raise ValueError("all counts must be positive")
        self.chi = chi
        self.beta_initial = float(beta_initial)
        self.beta_final = float(beta_final)
        self.steps_per_beta = steps_per_beta
        self.anneal_steps = anneal_steps
        self.seed = seed
        self.restrict_real = restrict_real
        self.restarts = restarts

    def beta_schedule(self) -> np.ndarray:
        if self.anneal_steps == 1:
            return np.array([self.beta_final])
        return np.geomspace(self.beta_initial, self.beta_final, self.anneal_steps)

    def __repr__(self) -> str:
        return (
            f"AnnealConfig(chi={self.chi}, beta={self.beta_initial}..{self.beta_final}, "
            f"M={self.steps_per_beta}, steps={self.anneal_steps}, restarts={self.restarts})"
        )


class DenseStabilizerTuple:
    """A chi-tuple of dense stabilizer states walking toward a unit target."""

    __slots__ = ("n", "states", "target")

    def __init__(self, n: int, states: list[np.ndarray], target: np.ndarray) -> None:
        dim = 1 << n
        target = np.asarray(target, dtype=complex)
        if target.shape != (dim,):
            raise ValueError("target has the wrong length")
        if abs(np.linalg.norm(target) - 1.0) > 1e-9:
            raise ValueError("target must be a unit vector")
        self.n = n
        self.states = [np.asarray(s, dtype=complex) for s in states]
        for s in self.states:
            if s.shape != (dim,):
                raise ValueError("state has the wrong length")
        self.target = target

    @property
    def chi(self) -> int:
        return len(self.states)

    def matrix(self) -> np.ndarray:
        return np.column_stack(self.states)

    def copy(self) -> "DenseStabilizerTuple":
        out = DenseStabilizerTuple.__new__(DenseStabilizerTuple)
        out.n = self.n
        out.states = list(self.states)
        out.target = self.target
        return out


def random_basis_tuple(n: int, chi: int, rng, target: np.ndarray) -> DenseStabilizerTuple:
    """The walk's starting point: chi uniformly random basis states."""
    dim = 1 << n
    states = []
    for _ in range(chi):
        vec = np.zeros(dim, dtype=complex)
        vec[int(rng.integers(dim))] = 1.0
        states.append(vec)
    return DenseStabilizerTuple(n, states, target)


def _span_fit(matrix: np.ndarray, target: np.ndarray) -> float:
    """Norm of the projection of ``target`` onto the column span, via a
    singular-value decomposition for stability."""
    u, s, _ = np.linalg.svd(matrix, full_matrices=False)
    if s.size == 0:
        return 0.0
    keep = s > s[0] * 1e-12
    basis = u[:, keep]
    return float(np.linalg.norm(basis.conj().T @ target))


def objective(t: DenseStabilizerTuple) -> float:
    """F = norm of the orthogonal projection of the target onto the span."""
    return min(_span_fit(t.matrix(), t.target), 1.0)


def _random_signed_pauli(n: int, rng) -> PauliOperator:
    """Uniform over the 2 (4^n - 1) signed hermitian Paulis excluding +-I."""
    code = int(rng.integers(1, 1 << (2 * n)))
    x = code & ((1 << n) - 1)
    z = code >> n
    sign = int(rng.integers(2))
    c = (popcount(x & z) + 2 * sign) & 3
    return PauliOperator(n, x, z, c)


def propose_move(
    t: DenseStabilizerTuple, rng, restrict_real: bool = False
) -> tuple[int, PauliOperator, Optional[np.ndarray]]:
    """A tentative move: slot a and state (I + P) phi_a, normalized.

    Returns ``(a, P, None)`` when the move is rejected outright — either the
    Pauli has an odd number of Y letters under the real restriction, or
    (I + P) annihilates the state (i.e. -P stabilizes it).
    """
    a = int(rng.integers(t.chi))
    p = _random_signed_pauli(t.n, rng)
    if restrict_real and popcount(p.x & p.z) % 2:
        return a, p, None
    phi = t.states[a]
    moved = phi + p.apply_dense(phi)
    norm = float(np.linalg.norm(moved))
    if norm <= 1e-12:
        return a, p, None
    return a, p, moved / norm


def accept_move(f_old: float, f_new: float, beta: float, rng) -> bool:
    """Moves that do not lower F pass; lowering moves survive with
    probability exp[-beta (F - F')]."""
    if f_new >= f_old:
        return True
    return float(rng.random()) < math.exp(-beta * (f_old - f_new))


def snap_coefficient(
    value: float, denominators: tuple[int, ...] = (1, 2, 4, 8), tol: float = 1e-7
) -> Optional[QuadraticRational]:
    """The simplest p/d + (q/d) sqrt(2) within ``tol`` of ``value``, if any.

    Denominators are powers of two: dyadic combinations of 1 and sqrt(2)
    are the ring the file formats serialize, and the ring every exact
    decomposition here lives in.
    """
    root2 = math.sqrt(2.0)
    bound = abs(value) + 4.0
    for den in denominators:
        q_limit = int(math.ceil(bound * den))
        for q_num in range(-q_limit, q_limit + 1):
            p_num = round((value - q_num * root2 / den) * den)
            if abs(p_num / den + q_num * root2 / den - value) <= tol:
                return QuadraticRational(Fraction(p_num, den), Fraction(q_num, den))
    return None


def _magic_pattern(k: int) -> np.ndarray:
    t = TAN_PI_8.to_float()
    return np.array([t ** popcount(x) for x in range(1 << k)], dtype=complex)


def parse_h_target(target_id: str) -> Optional[int]:
    """Qubit count of an ``H^k`` target id, or None."""
    if target_id.startswith("H^"):
        try:
            k = int(target_id[2:])
        except ValueError:
            return None
        if k >= 1:
            return k
    return None


def extract_decomposition(
    states: list[np.ndarray], target: np.ndarray, target_id: str = ""
) -> tuple[StabilizerDecomposition, float]:
    """Snap dense span states to affine form and solve for coefficients.

    The states are converted by the exact-form recognizer; coefficients come
    from least squares against the snapped columns, so any canonical phase
    chosen by the recognizer is absorbed.  For an understood ``H^k`` target
    the system is solved against the unnormalized tangent-amplitude pattern
    (the convention of the stored decomposition tables); real coefficient
    vectors are refit as exact ring elements when every entry matches one
    and the exact sum still verifies.  Returns the decomposition and its
    floating residual.
    """
    n = int(np.log2(len(target)))
    snapped = [AffineStabilizerState.from_dense(vec) for vec in states]
    columns = np.column_stack([s.to_dense() for s in snapped])
    k_target = parse_h_target(target_id)
    goal = _magic_pattern(k_target) if k_target == n else np.asarray(target, dtype=complex)
    coeffs, _, _, _ = np.linalg.lstsq(columns, goal, rcond=None)
    residual = float(np.linalg.norm(columns @ coeffs - goal))
    final: list = list(coeffs)
    if np.max(np.abs(coeffs.imag)) <= 1e-9:
        ring = [snap_coefficient(float(c.real)) for c in coeffs]
        if all(r is not None for r in ring):
            candidate = StabilizerDecomposition(
                n, list(zip(ring, snapped)), target_id=target_id
            )
            _, ring_residual = verify_decomposition(
                candidate, None if k_target == n else goal
            )
            if ring_residual <= 1e-8:
                return candidate, ring_residual
    decomposition = StabilizerDecomposition(n, list(zip(final, snapped)), target_id=target_id)
    return decomposition, residual


class AnnealResult:
    """Outcome of an annealing search; failure is a value, not an error."""

    __slots__ = ("succeeded", "decomposition", "best_f", "restarts_used", "residual")

    def __init__(self, succeeded, decomposition, best_f, restarts_used, residual) -> None:
        self.succeeded = succeeded
        self.decomposition = decomposition
        self.best_f = best_f
        self.restarts_used = restarts_used
        self.residual = residual

    def __repr__(self) -> str:
        status = "success" if self.succeeded else "failure"
        return (
            f"AnnealResult({status}, best_f={self.best_f:.12f}, "
            f"restarts={self.restarts_used})"
        )


def anneal(target: np.ndarray, config: AnnealConfig, target_id: str = "") -> AnnealResult:
    """Search for a rank-chi stabilizer decomposition of a unit target.

    Runs up to ``config.restarts`` independent annealing walks.  A walk
    stops as soon as the span captures the target (F within 1e-10 of one);
    the tuple is then turned into a verified decomposition.  On exhaustion
    the result reports the best F seen across all restarts.
    """
    target = np.asarray(target, dtype=complex)
    n = int(np.log2(len(target)))
    if 1 << n != len(target):
        raise ValueError("target length is not a power of two")
    if n > DENSE_SEARCH_LIMIT:
        raise ValueError(f"dense search is limited to {DENSE_SEARCH_LIMIT} qubits")
    norm = np.linalg.norm(target)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("target must be a unit vector")
    schedule = config.beta_schedule()
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.restarts)
    best_f = 0.0
    for restart in range(config.restarts):
        rng = np.random.default_rng(children[restart])
        walk = random_basis_tuple(n, config.chi, rng, target)
        f_current = objective(walk)
        best_f = max(best_f, f_current)

        def finish(walk_states, used):
            decomposition, residual = extract_decomposition(
                walk_states, target, target_id
            )
            return AnnealResult(True, decomposition, 1.0, used, residual)

        if f_current >= SUCCESS_THRESHOLD:
            return finish(walk.states, restart + 1)
        for beta in schedule:
            for _ in range(config.steps_per_beta):
                a, _p, moved = propose_move(walk, rng, config.restrict_real)
                if moved is None:
                    continue
                saved = walk.states[a]
                walk.states[a] = moved
                f_new = objective(walk)
                if accept_move(f_current, f_new, float(beta), rng):
                    f_current = f_new
                    best_f = max(best_f, f_current)
                    if f_current >= SUCCESS_THRESHOLD:
                        return finish(walk.states, restart + 1)
                else:
                    walk.states[a] = saved
    return AnnealResult(False, None, best_f, config.restarts, None)
