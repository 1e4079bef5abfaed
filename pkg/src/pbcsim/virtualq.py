"""Trading magic qubits for samples: virtual-qubit expansion.

The single-qubit magic state's density operator splits as an affine
combination of stabilizer projectors,

    |H><H| = (1/2) |0><0| + ((1 - sqrt2)/2) |1><1| + (1/sqrt2) |+><+|,

whose weights sum to exactly one.  Pinning each of the first k qubits of an
(n+k)-qubit measurement program to one of the three frames |0>, X|0>, H|0>
turns it into 3^k programs on n qubits; averaging their accept bits with the
product weights is an unbiased estimator of the original acceptance
probability.  The price is sampling overhead: the squared weight mass grows
as ((3 - sqrt2)/2)^k per virtual qubit.
"""
from __future__ import annotations

import math
from fractions import Fraction
from itertools import product
from typing import Optional

import numpy as np

from .cliffordt import DummyReduction, _conjugate_by_gate
from .octic import QuadraticRational
from .pbc import Coin, Measure, Output, PbcProgram, output_distribution

__all__ = [
    "PlanTerm",
    "build_plan",
    "reduce_program",
    "exact_acceptance",
    "estimate_acceptance",
    "WEIGHTS_SQUARED_PER_QUBIT",
]

_ZERO = QuadraticRational(Fraction(0))
_ONE = QuadraticRational(Fraction(1))

# per-qubit frame decomposition: weight, frame gate applied to |0>
_FRAME_OPTIONS: tuple[tuple[QuadraticRational, str], ...] = (
    (QuadraticRational(Fraction(1, 2)), "I"),
    (QuadraticRational(Fraction(1, 2), Fraction(-1, 2)), "X"),
    (QuadraticRational(Fraction(0), Fraction(1, 2)), "H"),
)

WEIGHTS_SQUARED_PER_QUBIT = QuadraticRational(Fraction(3, 2), Fraction(-1, 2))
"""Sum of squared frame weights for one virtual qubit, (3 - sqrt2)/2."""


class PlanTerm:
    """One product term of the expansion: a weight and k frame gates."""

    __slots__ = ("alpha", "frames")

    def __init__(self, alpha: QuadraticRational, frames: tuple[str, ...]) -> None:
        self.alpha = alpha
        self.frames = frames

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PlanTerm)
            and (self.alpha, self.frames) == (other.alpha, other.frames)
        )

    def __repr__(self) -> str:
        return f"PlanTerm({self.alpha}, {'.'.join(self.frames) or '-'})"


def build_plan(k: int) -> list[PlanTerm]:
    """All 3^k product terms replacing k magic qubits by framed |0> states.

    The weights sum to exactly one; their squared mass is
    ((3 - sqrt2)/2)^k.
    """
    if k < 0:
        raise ValueError("virtual qubit count must be nonnegative")
    terms = []
    for combo in product(_FRAME_OPTIONS, repeat=k):
        alpha = _ONE
        for weight, _ in combo:
            alpha = alpha * weight
        terms.append(PlanTerm(alpha, tuple(name for _, name in combo)))
    return terms


def reduce_program(program: PbcProgram, frames: tuple[str, ...]) -> PbcProgram:
    """The program left after pinning the first ``len(frames)`` qubits.

    Each pinned qubit sits in ``frame|0>`` with frame gates from
    {I, X, H}.  The frame is absorbed into every measured operator, and the
    pinned qubits are then eliminated against their +Z stabilizers: operators
    that hit them in X or Y become fair coins, dependent operators become
    forced bits, and the rest restrict to the remaining qubits.  Outputs are
    passed through unchanged, so acceptance statistics refer to the same bit.
    """
    k = len(frames)
    if not 0 <= k <= program.n:
        raise ValueError("more frames than program qubits")
    for g in frames:
        if g not in ("I", "X", "H"):
            raise ValueError(f"unknown frame gate {g!r}")
    n = program.n - k

    def policy(outer: tuple) -> object:
        reduction = DummyReduction(program.n, k)
        inner: tuple = ()
        cursor = 0
        while True:
            step = program.step(inner)
            if isinstance(step, Output):
                if cursor != len(outer):
                    raise ValueError("history extends past an output leaf")
                return step
            if isinstance(step, Coin):
                if cursor == len(outer):
                    return Coin()
                inner = inner + (outer[cursor],)
                cursor += 1
                continue
            op = step.pauli
            for j, g in enumerate(frames):
                if g != "I":
                    op = _conjugate_by_gate(g, (j,), op)
            kind, payload = reduction.resolve(op)
            if kind == "forced":
                inner = inner + (payload,)
                continue
            if cursor == len(outer):
                return Coin() if kind == "coin" else Measure(payload)
            sigma = outer[cursor]
            cursor += 1
            reduction.commit(sigma)
            inner = inner + (sigma,)

    return PbcProgram(n, policy)


def _acceptance(program: PbcProgram, method: str, base_k: int):
    if method == "rank" and program.n == 0:
        method = "brute"  # nothing left to rank-decompose
    return output_distribution(program, method=method, base_k=base_k)[1]


def exact_acceptance(
    program: PbcProgram, k: int, method: str = "rank", base_k: int = 6
) -> QuadraticRational:
    """Weighted acceptance over the whole plan; equals the acceptance of the
    original program exactly."""
    total = _ZERO
    for term in build_plan(k):
        p = _acceptance(reduce_program(program, term.frames), method, base_k)
        if not isinstance(p, QuadraticRational):
            raise TypeError("exact mode needs an exact backend")
        total = total + term.alpha * p
    return total


def estimate_acceptance(
    program: PbcProgram,
    k: int,
    method: str = "brute",
    samples: Optional[int] = None,
    seed=None,
    epsilon: float = 0.05,
    base_k: int = 6,
) -> tuple[float, float]:
    """Monte-Carlo acceptance estimate from the virtual-qubit plan.

    Each sample runs every reduced program once and combines the accept bits
    with the plan weights.  A run's accept bit is a Bernoulli draw on the
    program's exact output distribution, which is computed once per term and
    cached, so the estimator matches per-run sampling exactly while staying
    cheap.  ``samples`` defaults to ceil(max(1, sum alpha^2) / epsilon^2).
    Returns ``(estimate, stderr)``.
    """
    plan = build_plan(k)
    if samples is None:
        mass = _ONE
        for _ in range(k):
            mass = mass * WEIGHTS_SQUARED_PER_QUBIT
        samples = math.ceil(max(1.0, mass.to_float()) / (epsilon * epsilon))
    if samples < 2:
        raise ValueError("need at least two samples for a standard error")
    rng = np.random.default_rng(seed)
    xi = np.zeros(samples, dtype=float)
    for term in plan:
        reduced = reduce_program(program, term.frames)
        p1 = _acceptance(reduced, method, base_k)
        p1 = p1.to_float() if isinstance(p1, QuadraticRational) else float(p1)
        bits = rng.random(samples) < p1
        xi += term.alpha.to_float() * bits
    estimate = float(xi.mean())
    stderr = float(xi.std(ddof=1) / math.sqrt(samples))
    return estimate, stderr
