"""Clifford+T circuits and their compilation to measurement programs.

A circuit over {H, S, SDG, T, X, Y, Z, CZ, CNOT} acting on |0...0>, measured
qubit-by-qubit in the computational basis and reduced to one output bit, is
rewritten as an adaptive program of commuting Pauli measurements on exactly
one magic qubit per T gate.  Every T becomes a two-measurement ancilla
gadget; Clifford gates are pushed into a conjugation frame; the |0> data
qubits are eliminated against their +Z stabilizers, which turns operators
that hit them in X or Y into fair classical coins; and measurements whose
operators become dependent on earlier results are resolved to deterministic
bits.  The quantum side that remains acts on the magic register alone.
"""
from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

from .f2linalg import RowSpace
from .pbc import Coin, Measure, Output, PbcProgram
from .stab import PauliOperator

__all__ = [
    "CliffordTCircuit",
    "CliffordFrame",
    "conjugate_pauli",
    "compile_to_pbc",
    "gadget_semantics_check",
    "CLIFFORD_GATE_NAMES",
    "GATE_NAMES",
]

CLIFFORD_GATE_NAMES = frozenset({"H", "S", "SDG", "X", "Y", "Z", "CZ", "CNOT"})
GATE_NAMES = CLIFFORD_GATE_NAMES | {"T"}

_ARITY = {name: 2 if name in ("CZ", "CNOT") else 1 for name in GATE_NAMES}
_ALIASES = {"CX": "CNOT", "S+": "SDG", "SDAG": "SDG"}

# Forward conjugation tables: gate . P . gate^dagger for each generator,
# written as a signed Pauli word over the gate's qubits in listed order
# (first letter = first qubit; for CNOT the first qubit is the control).
_CONJ = {
    "H": {"X": "+Z", "Z": "+X"},
    "S": {"X": "+Y", "Z": "+Z"},
    "SDG": {"X": "-Y", "Z": "+Z"},
    "X": {"X": "+X", "Z": "-Z"},
    "Y": {"X": "-X", "Z": "-Z"},
    "Z": {"X": "-X", "Z": "+Z"},
    "CZ": {"XI": "+XZ", "IX": "+ZX", "ZI": "+ZI", "IZ": "+IZ"},
    "CNOT": {"XI": "+XX", "IX": "+IX", "ZI": "+ZI", "IZ": "+ZZ"},
}
_INVERSE = {"H": "H", "S": "SDG", "SDG": "S", "X": "X", "Y": "Y", "Z": "Z",
            "CZ": "CZ", "CNOT": "CNOT"}

# T-gadget corrections keyed by the (Z(x)Z, X_ancilla) results, in execution
# order on the data qubit.  Verified densely by gadget_semantics_check.
_GADGET_CORRECTIONS = {
    (1, 1): (),
    (1, -1): ("Z",),
    (-1, 1): ("S",),
    (-1, -1): ("Z", "S"),
}


def _embed(word: str, qubits: Sequence[int], n: int) -> PauliOperator:
    """A signed Pauli word over ``qubits`` as an n-qubit operator."""
    sign = 1
    if word[0] in "+-":
        if word[0] == "-":
            sign = -1
        word = word[1:]
    out = PauliOperator.identity(n)
    for letter, q in zip(word, qubits):
        if letter != "I":
            out = out * PauliOperator.single(n, q, letter)
    return out if sign > 0 else -out


def _conjugate_by_gate(name: str, qubits: Sequence[int], p: PauliOperator) -> PauliOperator:
    """``g P g^dagger`` for one named Clifford gate embedded at ``qubits``."""
    rules = _CONJ[name]
    touched = {q: pos for pos, q in enumerate(qubits)}
    keys = ("X", "Z") if len(qubits) == 1 else (("XI", "IX"), ("ZI", "IZ"))
    out = PauliOperator(p.n, 0, 0, p.c)
    for q in range(p.n):
        xq = (p.x >> q) & 1
        zq = (p.z >> q) & 1
        if not (xq or zq):
            continue
        if q in touched:
            pos = touched[q]
            factor = PauliOperator.identity(p.n)
            if xq:
                key = keys[0] if len(qubits) == 1 else keys[0][pos]
                factor = factor * _embed(rules[key], qubits, p.n)
            if zq:
                key = keys[1] if len(qubits) == 1 else keys[1][pos]
                factor = factor * _embed(rules[key], qubits, p.n)
        else:
            factor = PauliOperator(p.n, xq << q, zq << q, 0)
        out = out * factor
    return out


class CliffordFrame:
    """A Clifford unitary F tracked by the images ``F X_i F``-dagger, ``F Z_i F``-dagger.

    ``conjugate`` maps any Pauli through the frame exactly, sign included.
    ``compose_after`` extends the unitary by a gate applied after it
    (F <- g F); ``absorb`` right-composes with a gate's inverse (F <- F g^t),
    which is the update needed when F tracks the adjoint of a growing circuit
    prefix: operators written after the prefix are mapped back through it.
    """

    __slots__ = ("n", "x_img", "z_img")

    def __init__(self, n: int, x_img: list[PauliOperator], z_img: list[PauliOperator]) -> None:
        self.n = n
        self.x_img = x_img
        self.z_img = z_img

    @classmethod
    def identity(cls, n: int) -> "CliffordFrame":
        xs = [PauliOperator(n, 1 << i, 0, 0) for i in range(n)]
        zs = [PauliOperator(n, 0, 1 << i, 0) for i in range(n)]
        return cls(n, xs, zs)

    def _check_gate(self, name: str, qubits: Sequence[int]) -> None:
        if name not in CLIFFORD_GATE_NAMES:
            raise ValueError(f"{name!r} is not a Clifford frame gate")
        if len(qubits) != _ARITY[name]:
            raise ValueError(f"{name} takes {_ARITY[name]} qubit(s)")
        if len(set(qubits)) != len(qubits):
            raise ValueError("gate qubits must be distinct")
        if any(q < 0 or q >= self.n for q in qubits):
            raise ValueError("gate qubit out of range")

    def conjugate(self, p: PauliOperator) -> PauliOperator:
        """``F P F``-dagger, with the exact sign."""
        if p.n != self.n:
            raise ValueError("operator width does not match the frame")
        out = PauliOperator(self.n, 0, 0, p.c)
        for i in range(self.n):
            if (p.x >> i) & 1:
                out = out * self.x_img[i]
        for i in range(self.n):
            if (p.z >> i) & 1:
                out = out * self.z_img[i]
        return out

    def compose_after(self, name: str, qubits: Sequence[int]) -> None:
        """F <- g F: the unitary grows by a gate applied after it."""
        self._check_gate(name, qubits)
        self.x_img = [_conjugate_by_gate(name, qubits, im) for im in self.x_img]
        self.z_img = [_conjugate_by_gate(name, qubits, im) for im in self.z_img]

    def absorb(self, name: str, qubits: Sequence[int]) -> None:
        """F <- F g^dagger: extend a tracked circuit-prefix adjoint by ``g``."""
        self._check_gate(name, qubits)
        inv = _INVERSE[name]
        updates = []
        for q in qubits:
            local_x = _conjugate_by_gate(inv, qubits, PauliOperator(self.n, 1 << q, 0, 0))
            local_z = _conjugate_by_gate(inv, qubits, PauliOperator(self.n, 0, 1 << q, 0))
            updates.append((q, self.conjugate(local_x), self.conjugate(local_z)))
        for q, new_x, new_z in updates:
            self.x_img[q] = new_x
            self.z_img[q] = new_z

    def copy(self) -> "CliffordFrame":
        return CliffordFrame(self.n, list(self.x_img), list(self.z_img))


def conjugate_pauli(frame: CliffordFrame, p: PauliOperator) -> PauliOperator:
    """The image of ``p`` under the frame's unitary, sign included."""
    return frame.conjugate(p)


class CliffordTCircuit:
    """A circuit over H, S, SDG, T, X, Y, Z, CZ, CNOT on ``n`` qubits.

    Every qubit starts in |0> and is measured in the computational basis at
    the end; ``postprocess`` maps the tuple of measured bits to the single
    output bit (default: the first bit).
    """

    __slots__ = ("n", "ops", "postprocess")

    def __init__(
        self,
        n: int,
        postprocess: Optional[Callable[[tuple], int]] = None,
    ) -> None:
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.ops: list[tuple[str, tuple[int, ...]]] = []
        self.postprocess = postprocess if postprocess is not None else (lambda bits: bits[0])

    def append(self, name: str, *qubits: int) -> "CliffordTCircuit":
        name = _ALIASES.get(name.upper(), name.upper())
        if name not in GATE_NAMES:
            raise ValueError(f"unknown gate {name!r}")
        if len(qubits) != _ARITY[name]:
            raise ValueError(f"{name} takes {_ARITY[name]} qubit(s), got {len(qubits)}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{name} qubits must be distinct")
        if any(q < 0 or q >= self.n for q in qubits):
            raise ValueError("gate qubit out of range")
        self.ops.append((name, tuple(int(q) for q in qubits)))
        return self

    @property
    def t_count(self) -> int:
        return sum(1 for name, _ in self.ops if name == "T")

    def is_clifford(self) -> bool:
        return self.t_count == 0

    def to_dense(self):
        """The same circuit as a dense simulator object."""
        from .dense import Circuit

        circ = Circuit(self.n)
        for name, qubits in self.ops:
            circ.append(name, *qubits)
        return circ

    def simulate(self) -> np.ndarray:
        return self.to_dense().simulate()

    def __repr__(self) -> str:
        return f"CliffordTCircuit(n={self.n}, gates={len(self.ops)}, t={self.t_count})"


# ---------------------------------------------------------------------------
# the T gadget, densely


def gadget_semantics_check(psi: np.ndarray, qubit: int = 0):
    """Simulate the ancilla-assisted T gadget densely on ``psi``.

    The ancilla is prepared in the T-magic state, Z(data qubit)Z(ancilla) and
    then X(ancilla) are measured non-destructively, and the tabulated
    Clifford correction is applied to the data register.  Returns four rows
    ``((s1, s2), probability, corrected_state)`` covering both results of
    both measurements.  For any input the probabilities are 1/4 each and
    every corrected state equals T|psi> up to global phase.
    """
    from .dense import apply_gate

    psi = np.asarray(psi, dtype=complex).ravel()
    dim = psi.shape[0]
    if dim < 2 or dim & (dim - 1):
        raise ValueError("state length must be a power of two")
    n = dim.bit_length() - 1
    if not 0 <= qubit < n:
        raise ValueError("data qubit out of range")
    norm = np.vdot(psi, psi).real
    if abs(norm - 1.0) > 1e-9:
        raise ValueError("input state must be normalized")
    anc = np.array([1.0, np.exp(1j * np.pi / 4)], dtype=complex) / np.sqrt(2.0)
    full = np.kron(anc, psi)  # ancilla is the top qubit
    zz = PauliOperator(n + 1, 0, (1 << qubit) | (1 << n), 0)
    xa = PauliOperator(n + 1, 1 << n, 0, 0)
    rows = []
    for s1 in (1, -1):
        v1 = 0.5 * (full + s1 * zz.apply_dense(full))
        for s2 in (1, -1):
            v2 = 0.5 * (v1 + s2 * xa.apply_dense(v1))
            prob = float(np.vdot(v2, v2).real)
            # contract the ancilla against its X eigenvector
            data = (v2[:dim] + s2 * v2[dim:]) / np.sqrt(2.0)
            data = data / np.sqrt(prob)
            for gate in _GADGET_CORRECTIONS[(s1, s2)]:
                data = apply_gate(data, gate, (qubit,))
            rows.append(((s1, s2), prob, data))
    return rows


# ---------------------------------------------------------------------------
# compilation


def _fold_conjugate(m: PauliOperator, p: PauliOperator, e: PauliOperator) -> PauliOperator:
    """``V M V`` for the reflection V = (p + e)/sqrt(2), with p, e
    anticommuting hermitian Paulis (V is unitary, hermitian, and Clifford)."""
    with_p = m.commutes_with(p)
    with_e = m.commutes_with(e)
    if with_p and with_e:
        return m
    if with_p:
        return m * p * e
    if with_e:
        return -(m * p * e)
    return -m


class DummyReduction:
    """Measurement rewriting against low dummy qubits fixed in |0>.

    Operators on ``total`` qubits whose first ``dummy_count`` qubits are
    stabilized by +Z are resolved one at a time.  An operator inside the
    group generated by the dummies and the earlier committed results has a
    forced sign; one that anticommutes with a tracked stabilizer becomes a
    fair coin, and the reflection (sigma*P + E)/sqrt(2) is folded into every
    later operator; the rest shed their dummy-qubit Z letters against the +Z
    stabilizers and restrict to the live (high) qubits.  Call ``resolve``,
    then ``commit`` with the observed sign once the coin or measurement has
    actually happened.
    """

    __slots__ = ("total", "dummy_count", "kept", "space", "folds", "_pending")

    def __init__(self, total: int, dummy_count: int) -> None:
        if not 0 <= dummy_count <= total:
            raise ValueError("dummy count out of range")
        self.total = total
        self.dummy_count = dummy_count
        self.kept = [PauliOperator(total, 0, 1 << i, 0) for i in range(dummy_count)]
        self.space = RowSpace(2 * total)
        for p in self.kept:
            self.space.add(p.symplectic())
        self.folds: list[tuple[PauliOperator, PauliOperator]] = []
        self._pending: Optional[tuple] = None

    @property
    def live(self) -> int:
        return self.total - self.dummy_count

    def resolve(self, op: PauliOperator):
        """Classify measuring ``op`` now: ``('forced', sign)``,
        ``('coin', None)``, or ``('measure', live_operator)``."""
        if op.n != self.total:
            raise ValueError("operator width does not match the reduction")
        for pf, ef in self.folds:
            op = _fold_conjugate(op, pf, ef)
        tags = self.space.express(op.symplectic())
        if tags is not None:
            prod = PauliOperator.identity(self.total)
            i = 0
            while tags:
                if tags & 1:
                    prod = prod * self.kept[i]
                tags >>= 1
                i += 1
            delta = (prod.c - op.c) & 3
            assert delta in (0, 2), "dependent operator with a complex sign"
            self._pending = None
            return ("forced", 1 if delta == 0 else -1)
        partner = next((e for e in self.kept if not op.commutes_with(e)), None)
        if partner is not None:
            self._pending = ("coin", op, partner)
            return ("coin", None)
        work = op
        for i in range(self.dummy_count):
            if (work.z >> i) & 1:
                work = work * self.kept[i]
        d = self.dummy_count
        assert (work.x | work.z) & ((1 << d) - 1) == 0, "dummy support survived reduction"
        restricted = PauliOperator(self.live, work.x >> d, work.z >> d, work.c)
        self._pending = ("measure", work, None)
        return ("measure", restricted)

    def commit(self, sigma: int) -> None:
        """Record the sign of the coin or measurement last resolved."""
        if self._pending is None:
            raise ValueError("nothing resolved to commit")
        if sigma not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        kind, op, partner = self._pending
        self._pending = None
        if kind == "coin":
            self.folds.append((op if sigma > 0 else -op, partner))
        else:
            self.kept.append(op if sigma > 0 else -op)
            self.space.add(op.symplectic())

    def copy(self) -> "DummyReduction":
        dup = object.__new__(DummyReduction)
        dup.total = self.total
        dup.dummy_count = self.dummy_count
        dup.kept = list(self.kept)
        dup.space = self.space.copy()
        dup.folds = list(self.folds)
        dup._pending = self._pending
        return dup


class _CompiledReplay:
    """The deterministic rewrite of one circuit, paused at a needed sign.

    The replay advances through the gate list, resolving every required
    measurement against the dummy reduction.  ``outcome`` holds
    ``("need", step)`` while a sign is awaited and ``("done", bits)`` once
    the data readout has completed; ``feed`` consumes one observed sign and
    advances to the next pause point.  Instances are forked with ``copy``
    at branch points, so a cached replay is never mutated again.
    """

    __slots__ = (
        "ops",
        "n",
        "total",
        "frame",
        "reduction",
        "op_index",
        "t_results",
        "next_ancilla",
        "bits",
        "outcome",
    )

    def __init__(self, ops: list, n: int, m: int) -> None:
        self.ops = ops
        self.n = n
        self.total = n + m
        frame = CliffordFrame.identity(self.total)
        for a in range(m):  # ancilla prep |H> -> |T>: S-dagger then H
            frame.absorb("SDG", (n + a,))
            frame.absorb("H", (n + a,))
        self.frame = frame
        self.reduction = DummyReduction(self.total, n)
        self.op_index = 0
        self.t_results: list[int] = []
        self.next_ancilla = 0
        self.bits: list[int] = []
        self.outcome: tuple = ()
        self._advance()

    def copy(self) -> "_CompiledReplay":
        dup = object.__new__(_CompiledReplay)
        dup.ops = self.ops
        dup.n = self.n
        dup.total = self.total
        dup.frame = self.frame.copy()
        dup.reduction = self.reduction.copy()
        dup.op_index = self.op_index
        dup.t_results = list(self.t_results)
        dup.next_ancilla = self.next_ancilla
        dup.bits = list(self.bits)
        dup.outcome = self.outcome
        return dup

    def _pause(self, kind: str, payload) -> None:
        self.outcome = ("need", Coin() if kind == "coin" else Measure(payload))

    def _finish_t(self) -> None:
        _name, qubits = self.ops[self.op_index]
        for gate in _GADGET_CORRECTIONS[tuple(self.t_results)]:
            self.frame.absorb(gate, (qubits[0],))
        self.t_results = []
        self.next_ancilla += 1
        self.op_index += 1

    def _advance(self) -> None:
        ops, n, total = self.ops, self.n, self.total
        while self.op_index < len(ops):
            name, qubits = ops[self.op_index]
            if name != "T":
                self.frame.absorb(name, qubits)
                self.op_index += 1
                continue
            q = qubits[0]
            a = n + self.next_ancilla
            pair = (
                PauliOperator(total, 0, (1 << q) | (1 << a), 0),
                PauliOperator(total, 1 << a, 0, 0),
            )
            while len(self.t_results) < 2:
                kind, payload = self.reduction.resolve(
                    self.frame.conjugate(pair[len(self.t_results)])
                )
                if kind != "forced":
                    self._pause(kind, payload)
                    return
                self.t_results.append(payload)
            self._finish_t()
        while len(self.bits) < n:
            i = len(self.bits)
            kind, payload = self.reduction.resolve(
                self.frame.conjugate(PauliOperator(total, 0, 1 << i, 0))
            )
            if kind != "forced":
                self._pause(kind, payload)
                return
            self.bits.append((1 - payload) // 2)
        self.outcome = ("done", tuple(self.bits))

    def feed(self, sigma: int) -> None:
        if self.outcome[0] != "need":
            raise ValueError("history extends past the compiled program")
        self.reduction.commit(sigma)
        if self.op_index < len(self.ops):
            self.t_results.append(sigma)
            if len(self.t_results) == 2:
                self._finish_t()
        else:
            self.bits.append((1 - sigma) // 2)
        self._advance()


def compile_to_pbc(
    circuit: CliffordTCircuit, seed=None
) -> tuple[PbcProgram, Callable[[Sequence[int]], tuple[int, ...]]]:
    """Compile a circuit to an adaptive measurement program on its T count.

    Returns ``(program, postmap)``.  The program acts on exactly
    ``m = circuit.t_count`` magic qubits and outputs the circuit's
    postprocessed bit; ``postmap(outcomes)`` recovers the ``n`` data-qubit
    measurement bits from a complete run history.  Both are thin views over
    one deterministic replay: each T gate contributes its gadget pair of
    measurements, Clifford gates (and the outcome-conditioned gadget
    corrections) move into an adjoint conjugation frame, operators that hit
    a |0> data qubit in X or Y become fair coins folded through reflection
    conjugations, data-qubit Z letters are cleared against the +Z dummies,
    and operators dependent on earlier results become deterministic bits.
    ``seed`` is accepted for interface stability; compilation is
    deterministic.
    """
    del seed  # the rewrite involves no random choices
    n = circuit.n
    m = circuit.t_count
    ops = list(circuit.ops)
    post = circuit.postprocess

    # Replays are cached by the history prefix that produced them, so a
    # step query costs only the gate segment since the deepest cached
    # prefix.  The cache grows with the set of distinct histories queried.
    cache: dict[tuple[int, ...], _CompiledReplay] = {(): _CompiledReplay(ops, n, m)}

    def replay_at(history: tuple[int, ...]) -> _CompiledReplay:
        hit = cache.get(history)
        if hit is not None:
            return hit
        base = len(history) - 1
        while base > 0 and history[:base] not in cache:
            base -= 1
        current = cache[history[:base]]
        for i in range(base, len(history)):
            current = current.copy()
            current.feed(history[i])
            cache[history[: i + 1]] = current
        return current

    def policy(history: tuple) -> object:
        state, payload = replay_at(tuple(history)).outcome
        if state == "need":
            return payload
        return Output(post(payload))

    def postmap(outcomes: Sequence[int]) -> tuple[int, ...]:
        state, payload = replay_at(tuple(outcomes)).outcome
        if state != "done":
            raise ValueError("history does not cover a complete run")
        return payload

    return PbcProgram(m, policy), postmap
