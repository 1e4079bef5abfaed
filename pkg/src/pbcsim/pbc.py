"""Adaptive Pauli-measurement programs and their exact simulators.

A program interrogates an n-qubit input with a sequence of non-destructive
hermitian Pauli measurements, choosing every next step from the record of
+-1 results so far, and finally emits one classical bit.  The default input
is the product magic state (|0> + tan(pi/8)|1>)^(x n), for which two
interchangeable exact backends are provided: a dense vector with entries in
Z[sqrt(2)] + i Z[sqrt(2)], and a stabilizer-rank expansion whose working set
scales with the number of expansion terms rather than 2^n.  Probabilities
from either backend are exact elements of Q(sqrt(2)).
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence, Union

import numpy as np

from .decomplib import chunked_magic_decomposition
from .f2linalg import RowSpace
from .octic import (
    ExactAmplitude,
    QuadraticInteger,
    QuadraticRational,
    real_part_as_quadratic,
)
from .stab import (
    AffineStabilizerState,
    PauliOperator,
    ProjectorForm,
    StabilizerGroup,
    _parity_array,
    inner_product_projected,
)

__all__ = [
    "Measure",
    "Coin",
    "Output",
    "PbcProgram",
    "OutcomeRecord",
    "ExactMagicSimulator",
    "DenseStateSimulator",
    "RankSimulator",
    "ValidationReport",
    "brute_force_probability",
    "rank_probability",
    "sample_run",
    "enumerate_distribution",
    "output_distribution",
    "validate_standard_form",
    "outcomes_from_string",
    "DENSE_BOUND",
]

#: Default qubit cap for the dense exact backend (4 int arrays of 2^n entries).
DENSE_BOUND = 16

_WIDEN_LIMIT = 1 << 20
_MAX_STEPS = 1 << 16
_FLOAT_PRUNE = 1e-12
_HALF = QuadraticRational(Fraction(1, 2))

Probability = Union[QuadraticRational, float]


# ---------------------------------------------------------------------------
# program steps


class Measure:
    """Next step: non-destructively measure a hermitian Pauli."""

    __slots__ = ("pauli",)

    def __init__(self, pauli: Union[PauliOperator, str]) -> None:
        if isinstance(pauli, str):
            pauli = PauliOperator.from_string(pauli)
        if not pauli.is_hermitian():
            raise ValueError(f"cannot measure non-hermitian operator {pauli}")
        self.pauli = pauli

    def __repr__(self) -> str:
        return f"Measure({self.pauli})"


class Coin:
    """Next step: flip a fair classical coin and branch on the result."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "Coin()"


class Output:
    """Terminal step: halt and emit the classical output bit."""

    __slots__ = ("bit",)

    def __init__(self, bit: int) -> None:
        bit = int(bit)
        if bit not in (0, 1):
            raise ValueError("output bit must be 0 or 1")
        self.bit = bit

    def __repr__(self) -> str:
        return f"Output({self.bit})"


Step = Union[Measure, Coin, Output]


def _history_str(history: Sequence[int]) -> str:
    return "".join("+" if s > 0 else "-" for s in history) or "(start)"


def outcomes_from_string(text: str) -> tuple[int, ...]:
    """Parse a result string like ``"+-+"`` into a tuple of +-1 values."""
    out = []
    for i, ch in enumerate(text.strip()):
        if ch == "+":
            out.append(1)
        elif ch == "-":
            out.append(-1)
        else:
            raise ValueError(f"bad outcome character {ch!r} at position {i}")
    return tuple(out)


class PbcProgram:
    """An adaptive measurement program on ``n`` qubits.

    ``policy`` maps the tuple of +-1 results recorded so far to the next
    step: a :class:`Measure`, a :class:`Coin`, or a terminal
    :class:`Output`.  The callable form suits compiled programs whose
    decision logic is algorithmic; :meth:`from_tree` wraps an explicit
    decision tree and :meth:`fixed` a non-adaptive measurement list.
    """

    __slots__ = ("n", "policy")

    def __init__(self, n: int, policy: Callable[[tuple], Step]) -> None:
        if n < 0:
            raise ValueError("qubit count must be nonnegative")
        self.n = n
        self.policy = policy

    def step(self, history: Sequence[int] = ()) -> Step:
        """The program's next step after observing ``history``."""
        step = self.policy(tuple(history))
        if isinstance(step, Measure):
            if step.pauli.n != self.n:
                raise ValueError(
                    f"policy measured {step.pauli.n} qubits on a {self.n}-qubit program"
                )
            return step
        if isinstance(step, (Coin, Output)):
            return step
        raise TypeError(
            f"policy returned {type(step).__name__}; expected Measure, Coin, or Output"
        )

    @classmethod
    def from_tree(cls, n: int, root: dict) -> "PbcProgram":
        """Build a program from nested dict nodes.

        Inner nodes are ``{"pauli": "+XZ..", "on_plus": ..., "on_minus": ...}``
        or ``{"coin": True, "on_plus": ..., "on_minus": ...}``; leaves are
        ``{"output": 0 or 1}``.  Pauli values may be strings or operators.
        """
        parsed = _parse_tree_node(root, n)

        def policy(history: tuple) -> Step:
            node = parsed
            for sigma in history:
                if isinstance(node, Output):
                    raise ValueError("history extends past an output leaf")
                node = node[1] if sigma > 0 else node[2]
            if isinstance(node, Output):
                return node
            return node[0]

        return cls(n, policy)

    @classmethod
    def fixed(
        cls,
        paulis: Iterable[Union[PauliOperator, str]],
        output: Union[int, Callable[[tuple], int]],
        n: Optional[int] = None,
    ) -> "PbcProgram":
        """A non-adaptive program: measure ``paulis`` in order, then emit
        ``output`` (a constant bit or a callable on the tuple of result bits).
        """
        steps = [Measure(p) for p in paulis]
        if n is None:
            if not steps:
                raise ValueError("qubit count is required for a measurement-free program")
            n = steps[0].pauli.n

        def policy(history: tuple) -> Step:
            t = len(history)
            if t < len(steps):
                return steps[t]
            bits = tuple((1 - s) // 2 for s in history)
            return Output(output(bits) if callable(output) else output)

        return cls(n, policy)


def _parse_tree_node(node, n: int):
    """Recursively convert a dict tree into (step, plus, minus) triples."""
    if isinstance(node, Output):
        return node
    if not isinstance(node, dict):
        raise TypeError(f"tree node must be a dict, got {type(node).__name__}")
    if "output" in node:
        return Output(node["output"])
    if "pauli" in node:
        pauli = node["pauli"]
        if isinstance(pauli, str):
            pauli = PauliOperator.from_string(pauli)
        if pauli.n != n:
            raise ValueError(f"tree measures {pauli.n} qubits, program has {n}")
        step: Step = Measure(pauli)
    elif node.get("coin"):
        step = Coin()
    else:
        raise ValueError("tree node needs a 'pauli', 'coin', or 'output' key")
    for key in ("on_plus", "on_minus"):
        if key not in node:
            raise ValueError(f"branching tree node is missing {key!r}")
    return (step, _parse_tree_node(node["on_plus"], n), _parse_tree_node(node["on_minus"], n))


class OutcomeRecord:
    """One complete run: the +-1 results, the output bit, the run probability.

    ``probability`` is exact (:class:`QuadraticRational`) from the exact
    backends, a float from the dense floating backend, or None if untracked.
    """

    __slots__ = ("outcomes", "b_out", "probability")

    def __init__(
        self,
        outcomes: Sequence[int],
        b_out: int,
        probability: Optional[Probability] = None,
    ) -> None:
        outcomes = tuple(outcomes)
        if any(s not in (1, -1) for s in outcomes):
            raise ValueError("outcomes must be +-1")
        b_out = int(b_out)
        if b_out not in (0, 1):
            raise ValueError("output bit must be 0 or 1")
        self.outcomes = outcomes
        self.b_out = b_out
        self.probability = probability

    def bits(self) -> tuple[int, ...]:
        """The outcomes as 0/1 bits (0 for +1)."""
        return tuple((1 - s) // 2 for s in self.outcomes)

    def history_string(self) -> str:
        return "".join("+" if s > 0 else "-" for s in self.outcomes)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, OutcomeRecord)
            and self.outcomes == other.outcomes
            and self.b_out == other.b_out
            and self.probability == other.probability
        )

    def __hash__(self) -> int:
        return hash((self.outcomes, self.b_out))

    def __repr__(self) -> str:
        return (
            f"OutcomeRecord('{self.history_string()}', b_out={self.b_out}, "
            f"p={self.probability})"
        )


# ---------------------------------------------------------------------------
# backends


def _check_measurement(n: int, pauli: PauliOperator) -> None:
    if pauli.n != n:
        raise ValueError(f"measurement acts on {pauli.n} qubits, state has {n}")
    if not pauli.is_hermitian():
        raise ValueError(f"cannot measure non-hermitian operator {pauli}")


def _check_sigma(sigma: int) -> None:
    if sigma not in (1, -1):
        raise ValueError("measurement result must be +1 or -1")


class ExactMagicSimulator:
    """Dense exact simulator started on the unnormalized magic product state.

    Amplitudes live in Z[sqrt(2)] + i Z[sqrt(2)], held as four integer
    arrays.  Only ratios of norms are ever reported, so no global
    normalization is stored; a common integer content is stripped as entries
    grow, and the arrays widen to python-int entries if they outgrow the
    int64 headroom needed by exact dot products.
    """

    exact = True
    __slots__ = ("n", "pr", "qr", "pi", "qi", "_idx", "_limit")

    def __init__(
        self, n: int, dense_bound: int = DENSE_BOUND, widen_limit: int = _WIDEN_LIMIT
    ) -> None:
        if n > dense_bound:
            raise ValueError(
                f"{n} qubits exceeds the dense bound {dense_bound}; "
                "raise the bound explicitly or use the rank backend"
            )
        self._limit = widen_limit
        dim = 1 << n
        t = QuadraticInteger(-1, 1)  # tan(pi/8)
        powers = [QuadraticInteger(1)]
        for _ in range(n):
            powers.append(powers[-1] * t)
        self.n = n
        self.pr = np.empty(dim, dtype=np.int64)
        self.qr = np.empty(dim, dtype=np.int64)
        for i in range(dim):
            tw = powers[bin(i).count("1")]
            self.pr[i] = tw.p
            self.qr[i] = tw.q
        self.pi = np.zeros(dim, dtype=np.int64)
        self.qi = np.zeros(dim, dtype=np.int64)
        self._idx = np.arange(dim, dtype=np.int64)

    # -- internals ------------------------------------------------------

    def _apply(self, pauli: PauliOperator):
        """The four component arrays of ``pauli`` applied to the state."""
        src = self._idx ^ pauli.x
        sgn = 1 - 2 * _parity_array(src & pauli.z).astype(np.int64)
        b0 = sgn * self.pr[src]
        b1 = sgn * self.qr[src]
        b2 = sgn * self.pi[src]
        b3 = sgn * self.qi[src]
        c = pauli.c & 3
        if c == 0:
            return b0, b1, b2, b3
        if c == 1:  # multiply by i
            return -b2, -b3, b0, b1
        if c == 2:
            return -b0, -b1, -b2, -b3
        return b2, b3, -b0, -b1  # multiply by -i

    def _inner(self, b0, b1, b2, b3) -> tuple[QuadraticInteger, QuadraticInteger]:
        """<state|b> split into real and imaginary Z[sqrt(2)] parts."""
        dot = lambda x, y: int(np.dot(x, y))  # noqa: E731 - local shorthand
        re = QuadraticInteger(
            dot(self.pr, b0) + 2 * dot(self.qr, b1) + dot(self.pi, b2) + 2 * dot(self.qi, b3),
            dot(self.pr, b1) + dot(self.qr, b0) + dot(self.pi, b3) + dot(self.qi, b2),
        )
        im = QuadraticInteger(
            dot(self.pr, b2) + 2 * dot(self.qr, b3) - dot(self.pi, b0) - 2 * dot(self.qi, b1),
            dot(self.pr, b3) + dot(self.qr, b2) - dot(self.pi, b1) - dot(self.qi, b0),
        )
        return re, im

    def _norm_sq(self) -> QuadraticInteger:
        return self._inner(self.pr, self.qr, self.pi, self.qi)[0]

    def _tidy(self) -> None:
        arrays = (self.pr, self.qr, self.pi, self.qi)
        if self.pr.dtype == np.int64:
            top = max(int(np.abs(a).max(initial=0)) for a in arrays)
            if top <= self._limit:
                return
            g = 0
            for a in arrays:
                g = math.gcd(g, int(np.gcd.reduce(np.abs(a), initial=0)))
                if g == 1:
                    break
            if g > 1:
                self.pr //= g
                self.qr //= g
                self.pi //= g
                self.qi //= g
                top //= g
            if top > self._limit:
                self.pr = self.pr.astype(object)
                self.qr = self.qr.astype(object)
                self.pi = self.pi.astype(object)
                self.qi = self.qi.astype(object)
        else:
            g = 0
            for a in arrays:
                for v in a:
                    g = math.gcd(g, abs(int(v)))
                    if g == 1:
                        return
            if g > 1:
                self.pr //= g
                self.qr //= g
                self.pi //= g
                self.qi //= g

    # -- measurement protocol -------------------------------------------

    def probability_plus(self, pauli: PauliOperator) -> QuadraticRational:
        """Exact Pr(result = +1) for measuring ``pauli`` now."""
        _check_measurement(self.n, pauli)
        naa = self._norm_sq()
        if naa.is_zero():
            raise ValueError("state has zero norm")
        re, im = self._inner(*self._apply(pauli))
        assert im.is_zero(), "hermitian expectation came out complex"
        num = QuadraticRational.from_quadratic(naa + re)
        den = QuadraticRational.from_quadratic(naa, 1)
        return num / den

    def commit(self, pauli: PauliOperator, sigma: int) -> None:
        """Project onto the ``sigma`` eigenspace: state <- (I + sigma P) state."""
        _check_measurement(self.n, pauli)
        _check_sigma(sigma)
        b0, b1, b2, b3 = self._apply(pauli)
        if sigma > 0:
            self.pr = self.pr + b0
            self.qr = self.qr + b1
            self.pi = self.pi + b2
            self.qi = self.qi + b3
        else:
            self.pr = self.pr - b0
            self.qr = self.qr - b1
            self.pi = self.pi - b2
            self.qi = self.qi - b3
        self._tidy()

    def copy(self) -> "ExactMagicSimulator":
        dup = object.__new__(ExactMagicSimulator)
        dup.n = self.n
        dup.pr = self.pr.copy()
        dup.qr = self.qr.copy()
        dup.pi = self.pi.copy()
        dup.qi = self.qi.copy()
        dup._idx = self._idx
        dup._limit = self._limit
        return dup

    def state_exact(self) -> list[ExactAmplitude]:
        """The current unnormalized amplitudes (mainly for tests)."""
        out = []
        for i in range(1 << self.n):
            re = QuadraticInteger(int(self.pr[i]), int(self.qr[i]))
            im = QuadraticInteger(int(self.pi[i]), int(self.qi[i]))
            amp = ExactAmplitude.from_quadratic(re)
            if not im.is_zero():
                # i = w^2
                amp = amp + ExactAmplitude.from_quadratic(im) * ExactAmplitude.omega_power(2)
            out.append(amp)
        return out


class DenseStateSimulator:
    """Floating-point backend for an arbitrary dense initial state."""

    exact = False
    __slots__ = ("n", "vec")

    def __init__(self, initial: np.ndarray) -> None:
        vec = np.array(initial, dtype=complex).ravel()
        dim = vec.shape[0]
        if dim < 1 or dim & (dim - 1):
            raise ValueError("state length must be a power of two")
        if not np.isfinite(vec).all() or np.vdot(vec, vec).real <= 0.0:
            raise ValueError("initial state must be finite and nonzero")
        self.n = dim.bit_length() - 1
        self.vec = vec

    def probability_plus(self, pauli: PauliOperator) -> float:
        _check_measurement(self.n, pauli)
        naa = np.vdot(self.vec, self.vec).real
        if naa <= 0.0:
            raise ValueError("state has zero norm")
        cross = np.vdot(self.vec, pauli.apply_dense(self.vec)).real
        return float(min(1.0, max(0.0, (naa + cross) / (2.0 * naa))))

    def commit(self, pauli: PauliOperator, sigma: int) -> None:
        _check_measurement(self.n, pauli)
        _check_sigma(sigma)
        self.vec = 0.5 * (self.vec + sigma * pauli.apply_dense(self.vec))

    def copy(self) -> "DenseStateSimulator":
        dup = object.__new__(DenseStateSimulator)
        dup.n = self.n
        dup.vec = self.vec.copy()
        return dup


class RankSimulator:
    """Stabilizer-rank backend over the magic-input expansion.

    The input is expanded through :func:`chunked_magic_decomposition`; each
    new independent measurement costs one exact projected inner product per
    unordered pair of expansion terms.  Dependent measurements (the operator
    already lies in the group generated by earlier results, up to sign) are
    resolved classically and never grow the tracked generator set.
    Measurements must commute pairwise along any one run.
    """

    exact = True
    __slots__ = ("n", "base_k", "states", "_amps", "kept", "space", "norm", "_pending")

    def __init__(self, n: int, base_k: int = 6) -> None:
        if n == 0:
            self.states = [AffineStabilizerState.computational(0, 0)]
            self._amps = [ExactAmplitude.one()]
        else:
            expansion = chunked_magic_decomposition(n, base_k)
            terms = list(expansion.terms)
            self.states = [state for _, state in terms]
            self._amps = [coeff.to_amplitude() for coeff, _ in terms]
        self.n = n
        self.base_k = base_k
        self.kept: list[PauliOperator] = []
        self.space = RowSpace(2 * n if n else 1)
        norm0 = QuadraticRational(1)
        factor = QuadraticRational(4, -2)  # squared length of one magic factor
        for _ in range(n):
            norm0 = norm0 * factor
        self.norm = norm0
        self._pending: Optional[tuple[PauliOperator, QuadraticRational]] = None

    def _group_norm(self, generators: list[PauliOperator]) -> QuadraticRational:
        """Squared norm of the projected expansion, assembled pairwise."""
        if generators:
            form = StabilizerGroup(self.n, generators).projector_form()
        else:
            form = ProjectorForm.trivial(self.n)
        total = ExactAmplitude.zero()
        chi = len(self.states)
        for a in range(chi):
            for b in range(a, chi):
                val = inner_product_projected(self.states[a], form, self.states[b])
                if b > a:
                    val = val + val.conj()
                total = total + val * (self._amps[a] * self._amps[b])
        assert total.is_real(), "projected norm came out complex"
        quad, e2 = real_part_as_quadratic(total)
        return QuadraticRational.from_quadratic(quad, e2)

    def _dependent_sign(self, pauli: PauliOperator) -> Optional[int]:
        """+1/-1 if ``pauli`` equals (minus) a product of kept results, else None."""
        tags = self.space.express(pauli.symplectic())
        if tags is None:
            return None
        prod = PauliOperator.identity(self.n)
        i = 0
        while tags:
            if tags & 1:
                prod = prod * self.kept[i]
            tags >>= 1
            i += 1
        delta = (prod.c - pauli.c) & 3
        assert delta in (0, 2), "sign mismatch between hermitian operators"
        return 1 if delta == 0 else -1

    def probability_plus(self, pauli: PauliOperator) -> QuadraticRational:
        """Exact Pr(result = +1), conditioned on all committed results."""
        _check_measurement(self.n, pauli)
        fixed = self._dependent_sign(pauli)
        if fixed is not None:
            return QuadraticRational(1) if fixed > 0 else QuadraticRational(0)
        for g in self.kept:
            if not pauli.commutes_with(g):
                raise ValueError(
                    "measurement anticommutes with an earlier result; the rank "
                    "backend handles pairwise-commuting programs only"
                )
        nplus = self._group_norm(self.kept + [pauli])
        self._pending = (pauli, nplus)
        return nplus / self.norm

    def commit(self, pauli: PauliOperator, sigma: int) -> None:
        _check_measurement(self.n, pauli)
        _check_sigma(sigma)
        fixed = self._dependent_sign(pauli)
        if fixed is not None:
            if sigma != fixed:
                raise ValueError("cannot commit a zero-probability dependent result")
            return
        for g in self.kept:
            if not pauli.commutes_with(g):
                raise ValueError(
                    "measurement anticommutes with an earlier result; the rank "
                    "backend handles pairwise-commuting programs only"
                )
        if self._pending is not None and self._pending[0] == pauli:
            nplus = self._pending[1]
        else:
            nplus = self._group_norm(self.kept + [pauli])
        if sigma > 0:
            self.kept.append(pauli)
            self.norm = nplus
        else:
            self.kept.append(-pauli)
            self.norm = self.norm - nplus
        self.space.add(pauli.symplectic())
        self._pending = None

    def copy(self) -> "RankSimulator":
        dup = object.__new__(RankSimulator)
        dup.n = self.n
        dup.base_k = self.base_k
        dup.states = self.states
        dup._amps = self._amps
        dup.kept = list(self.kept)
        dup.space = self.space.copy()
        dup.norm = self.norm
        dup._pending = None
        return dup


# ---------------------------------------------------------------------------
# walkers


def _make_simulator(program, method, base_k, initial, dense_bound):
    if method == "rank":
        if initial is not None:
            raise ValueError("the rank backend runs on the magic input only")
        return RankSimulator(program.n, base_k=base_k)
    if method != "brute":
        raise ValueError(f"unknown method {method!r}; use 'brute' or 'rank'")
    if initial is None:
        return ExactMagicSimulator(program.n, dense_bound=dense_bound)
    return DenseStateSimulator(initial)


def _one(sim) -> Probability:
    return QuadraticRational(1) if sim.exact else 1.0


def _zero(sim) -> Probability:
    return QuadraticRational(0) if sim.exact else 0.0


def _half(sim) -> Probability:
    return _HALF if sim.exact else 0.5


def _complement(sim, pr: Probability) -> Probability:
    return QuadraticRational(1) - pr if sim.exact else 1.0 - pr


def _is_negligible(prob: Probability) -> bool:
    if isinstance(prob, QuadraticRational):
        return prob.is_zero()
    return prob <= _FLOAT_PRUNE


def _prefix_probability(program, sim, outcomes: tuple[int, ...]) -> Probability:
    prob = _one(sim)
    history: list[int] = []
    for sigma in outcomes:
        _check_sigma(sigma)
        step = program.step(tuple(history))
        if isinstance(step, Output):
            raise ValueError("outcome prefix runs past an output leaf")
        if isinstance(step, Coin):
            prob = prob * _half(sim)
        else:
            pr_plus = sim.probability_plus(step.pauli)
            branch = pr_plus if sigma > 0 else _complement(sim, pr_plus)
            if _is_negligible(branch):
                return _zero(sim)
            prob = prob * branch
            sim.commit(step.pauli, sigma)
        history.append(sigma)
    return prob


def brute_force_probability(
    program: PbcProgram,
    outcomes: Sequence[int] = (),
    initial: Optional[np.ndarray] = None,
    dense_bound: int = DENSE_BOUND,
) -> Probability:
    """Probability of observing the +-1 result prefix ``outcomes``.

    With no ``initial`` state the program runs on the magic input and the
    answer is an exact :class:`QuadraticRational`; passing a dense vector
    switches to the floating backend and returns a float.
    """
    sim = _make_simulator(program, "brute", 6, initial, dense_bound)
    return _prefix_probability(program, sim, tuple(outcomes))


def rank_probability(
    program: PbcProgram,
    outcomes: Sequence[int] = (),
    base_k: int = 6,
) -> QuadraticRational:
    """Exact prefix probability through the stabilizer-rank backend."""
    sim = RankSimulator(program.n, base_k=base_k)
    pr = _prefix_probability(program, sim, tuple(outcomes))
    assert not (pr < QuadraticRational(0)) and not (QuadraticRational(1) < pr)
    return pr


def sample_run(
    program: PbcProgram,
    method: str = "brute",
    seed=None,
    base_k: int = 6,
    initial: Optional[np.ndarray] = None,
    dense_bound: int = DENSE_BOUND,
) -> OutcomeRecord:
    """Run the program once, drawing every branch from its exact law."""
    rng = np.random.default_rng(seed)
    sim = _make_simulator(program, method, base_k, initial, dense_bound)
    history: list[int] = []
    prob = _one(sim)
    for _ in range(_MAX_STEPS):
        step = program.step(tuple(history))
        if isinstance(step, Output):
            return OutcomeRecord(tuple(history), step.bit, prob)
        if isinstance(step, Coin):
            sigma = 1 if rng.random() < 0.5 else -1
            prob = prob * _half(sim)
        else:
            pr_plus = sim.probability_plus(step.pauli)
            threshold = pr_plus.to_float() if sim.exact else pr_plus
            sigma = 1 if rng.random() < threshold else -1
            branch = pr_plus if sigma > 0 else _complement(sim, pr_plus)
            sim.commit(step.pauli, sigma)
            prob = prob * branch
        history.append(sigma)
    raise RuntimeError("program did not reach an output leaf")


def enumerate_distribution(
    program: PbcProgram,
    method: str = "brute",
    base_k: int = 6,
    initial: Optional[np.ndarray] = None,
    dense_bound: int = DENSE_BOUND,
    max_leaves: int = 4096,
) -> list[OutcomeRecord]:
    """Every run with nonzero probability, ordered by result bits.

    Zero-probability branches are skipped exactly in the exact backends and
    pruned below a tiny threshold in the floating one.
    """
    sim0 = _make_simulator(program, method, base_k, initial, dense_bound)
    records: list[OutcomeRecord] = []
    stack = [(sim0, (), _one(sim0))]
    while stack:
        sim, history, prob = stack.pop()
        step = program.step(history)
        dead = False
        while not isinstance(step, Output):
            if len(history) >= _MAX_STEPS:
                raise RuntimeError("program did not reach an output leaf")
            if isinstance(step, Coin):
                half = _half(sim)
                stack.append((sim.copy(), history + (-1,), prob * half))
                history += (1,)
                prob = prob * half
            else:
                pr_plus = sim.probability_plus(step.pauli)
                pr_minus = _complement(sim, pr_plus)
                if not _is_negligible(pr_minus):
                    child = sim.copy()
                    child.commit(step.pauli, -1)
                    stack.append((child, history + (-1,), prob * pr_minus))
                if _is_negligible(pr_plus):
                    dead = True
                    break
                sim.commit(step.pauli, 1)
                history += (1,)
                prob = prob * pr_plus
            step = program.step(history)
        if not dead:
            records.append(OutcomeRecord(history, step.bit, prob))
            if len(records) > max_leaves:
                raise RuntimeError(f"more than {max_leaves} leaves; raise max_leaves")
    records.sort(key=OutcomeRecord.bits)
    return records


def output_distribution(
    program: PbcProgram,
    method: str = "brute",
    base_k: int = 6,
    initial: Optional[np.ndarray] = None,
    dense_bound: int = DENSE_BOUND,
    max_leaves: int = 4096,
) -> dict[int, Probability]:
    """Total probability of each output bit, by exhaustive enumeration."""
    records = enumerate_distribution(
        program, method, base_k=base_k, initial=initial,
        dense_bound=dense_bound, max_leaves=max_leaves,
    )
    exact = method in ("brute", "rank") and initial is None
    totals: dict[int, Probability] = {
        0: QuadraticRational(0) if exact else 0.0,
        1: QuadraticRational(0) if exact else 0.0,
    }
    for rec in records:
        totals[rec.b_out] = totals[rec.b_out] + rec.probability
    return totals


# ---------------------------------------------------------------------------
# static validation


class ValidationReport:
    """Findings from statically walking a program's decision structure."""

    __slots__ = ("n", "explored_paths", "violations", "truncated")

    def __init__(self, n: int, explored_paths: int, violations: list[str], truncated: bool) -> None:
        self.n = n
        self.explored_paths = explored_paths
        self.violations = violations
        self.truncated = truncated

    @property
    def ok(self) -> bool:
        return not self.violations

    def __repr__(self) -> str:
        return (
            f"ValidationReport(ok={self.ok}, paths={self.explored_paths}, "
            f"violations={len(self.violations)}, truncated={self.truncated})"
        )


def validate_standard_form(program: PbcProgram, max_paths: int = 256) -> ValidationReport:
    """Explore the decision tree and report standard-form violations.

    Per explored root-to-leaf path this checks that every measured operator
    acts on the program's qubit count, that the measured operators commute
    pairwise, and that at most ``program.n`` measurements occur (coin flips
    are classical and do not count).  Exploration is budgeted: at most
    ``max_paths`` leaves are visited (``truncated`` reports whether the
    budget cut the walk short), and a path that runs far past the expected
    depth without reaching an output is flagged as non-terminating.
    """
    violations: list[str] = []
    paths = 0
    truncated = False
    step_cap = 4 * program.n + 64
    stack: list[tuple[tuple, list[PauliOperator]]] = [((), [])]
    while stack:
        if paths >= max_paths:
            truncated = True
            break
        history, measured = stack.pop()
        try:
            step = program.step(history)
        except Exception as exc:
            violations.append(f"policy failed at '{_history_str(history)}': {exc}")
            paths += 1
            continue
        if isinstance(step, Output):
            paths += 1
            continue
        if len(history) >= step_cap:
            violations.append(
                f"path '{_history_str(history)}' runs {step_cap} steps without an output"
            )
            paths += 1
            continue
        if isinstance(step, Measure):
            pauli = step.pauli
            for j, earlier in enumerate(measured):
                if not pauli.commutes_with(earlier):
                    violations.append(
                        f"measurement at '{_history_str(history)}' anticommutes "
                        f"with measurement {j} on the same path"
                    )
                    break
            measured = measured + [pauli]
            if len(measured) == program.n + 1:
                violations.append(
                    f"path '{_history_str(history)}' exceeds {program.n} measurements"
                )
        stack.append((history + (-1,), measured))
        stack.append((history + (1,), measured))
    return ValidationReport(program.n, paths, violations, truncated)
