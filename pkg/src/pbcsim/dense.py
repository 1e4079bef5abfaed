"""Dense statevector reference engine.

Everything here is small, explicit numpy: it exists to cross-check the exact
machinery and to execute tiny circuits where 2^n is harmless.  Qubit ``i``
occupies bit ``i`` of the basis index (little-endian).  Multi-qubit gate
matrices are indexed the same way: bit ``i`` of a row/column index refers to
``qubits[i]``.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "GATES",
    "GATE_ARITY",
    "Circuit",
    "apply_unitary",
    "apply_gate",
    "simulate",
    "measurement_distribution",
    "COS_PI_8",
    "SIN_PI_8",
    "TAN_PI_8",
    "magic_h_state",
    "random_circuit",
]

_W = np.exp(1j * np.pi / 4)

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j]).astype(complex)
_T = np.diag([1, _W]).astype(complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.diag([1, -1]).astype(complex)
_I = np.eye(2, dtype=complex)


def _two_qubit(u: np.ndarray) -> np.ndarray:
    """Controlled-u with bit 0 the control, bit 1 the target."""
    m = np.eye(4, dtype=complex)
    # control set: indices 1 (target 0) and 3 (target 1)
    m[np.ix_([1, 3], [1, 3])] = u
    return m


_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)

GATES: dict[str, np.ndarray] = {
    "I": _I,
    "H": _H,
    "X": _X,
    "Y": _Y,
    "Z": _Z,
    "S": _S,
    "SDG": _S.conj().T,
    "T": _T,
    "TDG": _T.conj().T,
    "CX": _two_qubit(_X),
    "CNOT": _two_qubit(_X),
    "CY": _two_qubit(_Y),
    "CZ": _two_qubit(_Z),
    "SWAP": _SWAP,
}

GATE_ARITY: dict[str, int] = {name: int(np.log2(m.shape[0])) for name, m in GATES.items()}

CLIFFORD_GATES = frozenset(
    ["I", "H", "X", "Y", "Z", "S", "SDG", "CX", "CNOT", "CY", "CZ", "SWAP"]
)


def apply_unitary(vec: np.ndarray, m: np.ndarray, qubits: tuple[int, ...]) -> np.ndarray:
    """Apply a 2^k x 2^k unitary to the given qubits of a statevector."""
    k = len(qubits)
    if m.shape != (1 << k, 1 << k):
        raise ValueError("matrix size does not match qubit count")
    if len(set(qubits)) != k:
        raise ValueError("repeated qubit")
    dim = vec.shape[0]
    idx = np.arange(dim, dtype=np.int64)
    sel = np.ones(dim, dtype=bool)
    for q in qubits:
        if not 0 <= (1 << q) < dim:
            raise ValueError("qubit out of range")
        sel &= ((idx >> q) & 1) == 0
    base = idx[sel]
    offsets = np.array(
        [sum(1 << q for i, q in enumerate(qubits) if (j >> i) & 1) for j in range(1 << k)],
        dtype=np.int64,
    )
    gather = base[None, :] | offsets[:, None]
    out = vec.astype(complex, copy=True)
    out[gather] = m @ vec[gather]
    return out


def apply_gate(vec: np.ndarray, name: str, qubits: tuple[int, ...]) -> np.ndarray:
    return apply_unitary(vec, GATES[name], qubits)


class Circuit:
    """A flat list of named gates on n qubits."""

    __slots__ = ("n", "ops")

    def __init__(self, n: int, ops: list[tuple[str, tuple[int, ...]]] | None = None) -> None:
        if n < 1:
            raise ValueError("need at least one qubit")
        self.n = n
        self.ops: list[tuple[str, tuple[int, ...]]] = []
        for name, qubits in ops or []:
            self.append(name, *qubits)

    def append(self, name: str, *qubits: int) -> "Circuit":
        name = name.upper()
        if name not in GATES:
            raise ValueError(f"unknown gate {name!r}")
        if len(qubits) != GATE_ARITY[name]:
            raise ValueError(f"{name} takes {GATE_ARITY[name]} qubit(s), got {len(qubits)}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{name} applied to repeated qubit {qubits}")
        for q in qubits:
            if not 0 <= q < self.n:
                raise ValueError(f"qubit {q} out of range for n={self.n}")
        self.ops.append((name, tuple(qubits)))
        return self

    def t_count(self) -> int:
        return sum(1 for name, _ in self.ops if name in ("T", "TDG"))

    def is_clifford(self) -> bool:
        return all(name in CLIFFORD_GATES for name, _ in self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def __iter__(self):
        return iter(self.ops)

    def __eq__(self, other) -> bool:
        return isinstance(other, Circuit) and (self.n, self.ops) == (other.n, other.ops)

    def __repr__(self) -> str:
        return f"Circuit(n={self.n}, gates={len(self.ops)})"

    def simulate(self, initial: np.ndarray | None = None) -> np.ndarray:
        return simulate(self, initial)

    def unitary(self) -> np.ndarray:
        dim = 1 << self.n
        u = np.eye(dim, dtype=complex)
        for col in range(dim):
            u[:, col] = self.simulate(np.eye(dim, dtype=complex)[:, col])
        return u


def simulate(circ: Circuit, initial: np.ndarray | None = None) -> np.ndarray:
    dim = 1 << circ.n
    if initial is None:
        vec = np.zeros(dim, dtype=complex)
        vec[0] = 1.0
    else:
        if initial.shape != (dim,):
            raise ValueError("initial state has wrong length")
        vec = initial.astype(complex, copy=True)
    for name, qubits in circ.ops:
        vec = apply_gate(vec, name, qubits)
    return vec


def measurement_distribution(vec: np.ndarray) -> np.ndarray:
    p = np.abs(vec) ** 2
    s = p.sum()
    if s <= 0:
        raise ValueError("zero state")
    return p / s


COS_PI_8 = float(np.cos(np.pi / 8))
SIN_PI_8 = float(np.sin(np.pi / 8))
TAN_PI_8 = float(np.tan(np.pi / 8))  # = sqrt(2) - 1


def magic_h_state(n: int = 1) -> np.ndarray:
    """The n-fold product of cos(pi/8)|0> + sin(pi/8)|1>."""
    one = np.array([COS_PI_8, SIN_PI_8], dtype=complex)
    vec = np.array([1.0], dtype=complex)
    for _ in range(n):
        vec = np.kron(one, vec)  # new qubit takes the high bits
    return vec


def random_circuit(
    rng: np.random.Generator,
    n: int,
    n_gates: int,
    gate_names: tuple[str, ...] = ("H", "S", "SDG", "X", "Z", "CZ", "CNOT", "T", "TDG"),
) -> Circuit:
    """A uniformly random circuit over the given gate set (utility for tests)."""
    circ = Circuit(n)
    names = [g for g in gate_names if GATE_ARITY[g] <= n]
    for _ in range(n_gates):
        name = names[int(rng.integers(0, len(names)))]
        qubits = tuple(int(q) for q in rng.choice(n, size=GATE_ARITY[name], replace=False))
        circ.append(name, *qubits)
    return circ
