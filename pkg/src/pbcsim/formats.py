"""Text and JSON formats shared by the command-line tools.

Four kinds of files move between the tools:

* **circuit text** — one gate per line (``H 0``, ``CNOT 0 1``), optional
  ``QUBITS`` / ``SPARSITY`` headers, ``#`` comments, a trailing
  ``MEASURE all`` and a ``POSTPROCESS`` boolean expression over the
  measured bits.  :func:`parse_circuit` produces a neutral document that
  :func:`circuit_to_cliffordt` and :func:`circuit_to_sparse` adapt.
* **measurement trees** — JSON decision trees for adaptive Pauli
  measurement programs (:func:`load_pbc_tree` / :func:`render_pbc_tree`).
* **phase polynomials** — a line grammar for the degree-two exponents
  consumed by the exponential-sum evaluator (:func:`load_polynomial`).
* **decompositions** — JSON certificates writing a target state as a
  coefficient-weighted sum of stabilizer states
  (:func:`load_decomposition` / :func:`dump_decomposition`), with exact
  ring coefficients rendered as ``(p, q, e)`` for ``(p + q*sqrt(2)) * 2^e``
  and amplitudes as ``(c0,c1,c2,c3; e)``.

Every parser reports failures as :class:`FormatError` carrying the line
and column of the offending token so callers can print a usable
diagnostic and exit.
"""

from __future__ import annotations

import json
import math
import re
from typing import Callable, Optional

from .cliffordt import CliffordTCircuit
from .decomplib import Component, StabilizerDecomposition
from .f2linalg import iter_bits
from .octic import ExactAmplitude, QuadraticInteger, QuadraticRational
from .pbc import Coin, Measure, Output, PbcProgram
from .quadsum import DegreeTwoPolynomial
from .sparsecut import SparseCircuit
from .stab import AffineStabilizerState, PauliOperator

__all__ = [
    "FormatError",
    "CircuitDocument",
    "parse_circuit",
    "circuit_to_cliffordt",
    "circuit_to_sparse",
    "compile_postprocess",
    "load_pbc_tree",
    "dump_pbc_tree",
    "render_pbc_tree",
    "load_polynomial",
    "dump_polynomial",
    "parse_ring_coefficient",
    "render_ring_coefficient",
    "parse_amplitude",
    "render_amplitude",
    "load_state",
    "load_decomposition",
    "dump_decomposition",
]


class FormatError(ValueError):
    """A parse or serialization failure with an optional text position."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.line = line
        self.column = column
        super().__init__(str(self))

    def __str__(self) -> str:
        if self.line is None:
            return self.message
        if self.column is None:
            return f"line {self.line}: {self.message}"
        return f"line {self.line}, column {self.column}: {self.message}"


# ---------------------------------------------------------------------------
# circuit text


#: All gate names a circuit file may mention, with their arities.  The
#: adapters below narrow this to what each consumer supports.
CIRCUIT_GATES = {
    "I": 1, "H": 1, "X": 1, "Y": 1, "Z": 1,
    "S": 1, "SDG": 1, "T": 1, "TDG": 1,
    "CX": 2, "CNOT": 2, "CY": 2, "CZ": 2, "SWAP": 2,
}

_GATE_ALIASES = {"S+": "SDG", "SDAG": "SDG", "T+": "TDG", "TDAG": "TDG"}

_TOKEN_RE = re.compile(r"\S+")


class CircuitDocument:
    """A parsed circuit file, independent of which simulator consumes it.

    ``ops`` holds ``(name, qubits, line, column)`` with canonical gate
    names, so adapters can still point at the source line when a gate is
    outside their repertoire.
    """

    __slots__ = ("n", "sparsity", "ops", "postprocess", "postprocess_source", "measured")

    def __init__(
        self,
        n: int,
        sparsity: Optional[int],
        ops: list,
        postprocess: Callable[[tuple], int],
        postprocess_source: Optional[str],
        measured: bool,
    ) -> None:
        self.n = n
        self.sparsity = sparsity
        self.ops = ops
        self.postprocess = postprocess
        self.postprocess_source = postprocess_source
        self.measured = measured


def _int_token(tok: str, line: int, col: int, what: str) -> int:
    try:
        return int(tok, 10)
    except ValueError:
        raise FormatError(f"expected {what}, got {tok!r}", line, col) from None


def compile_postprocess(source: str, n: int) -> Callable[[tuple], int]:
    """Compile a boolean expression over ``b0 .. b{n-1}`` to a bit function.

    The grammar allows bit names, the literals ``0`` and ``1``, the
    operators ``& | ^ ~`` with their usual precedence, and parentheses.
    Offsets in raised :class:`FormatError` columns are relative to the
    start of ``source``.
    """
    if not source.strip():
        raise FormatError("empty postprocess expression")
    pos = 0
    while pos < len(source):
        m = re.match(r"\s+|b(\d+)|[01]|[&|^~()]", source[pos:])
        if m is None:
            raise FormatError(f"bad postprocess token {source[pos]!r}", column=pos)
        if m.group(1) is not None:
            idx = int(m.group(1))
            if idx >= n:
                raise FormatError(
                    f"postprocess references b{idx} but the circuit has {n} qubit(s)",
                    column=pos,
                )
        pos += m.end()
    body = re.sub(r"b(\d+)", r"bits[\1]", source)
    try:
        fn = eval(compile(f"lambda bits: ({body}) & 1", "<postprocess>", "eval"), {"__builtins__": {}})
    except SyntaxError:
        raise FormatError("malformed postprocess expression") from None
    return fn


def parse_circuit(text: str) -> CircuitDocument:
    """Parse circuit text into a :class:`CircuitDocument`.

    Grammar, one statement per line (``#`` starts a comment anywhere):

    * ``QUBITS n`` and ``SPARSITY d`` headers, each at most once, before
      any gate.  Without ``QUBITS`` the width is one past the largest
      qubit index used.
    * gate lines ``NAME q`` or ``NAME q1 q2`` with distinct indices.
    * ``MEASURE all`` and ``POSTPROCESS <expr>``, each at most once,
      after all gates.  The default postprocess is ``b0``.
    """
    declared_n: Optional[int] = None
    sparsity: Optional[int] = None
    ops: list = []
    measured = False
    post_source: Optional[str] = None
    post_pos: tuple = (0, 0)
    max_qubit = -1

    for lineno, raw in enumerate(text.splitlines(), 1):
        code = raw.split("#", 1)[0]
        tokens = [(m.group(0), m.start() + 1) for m in _TOKEN_RE.finditer(code)]
        if not tokens:
            continue
        head, head_col = tokens[0]
        keyword = head.upper()

        if keyword in ("QUBITS", "SPARSITY"):
            if ops:
                raise FormatError(f"{keyword} header must precede gate lines", lineno, head_col)
            if (keyword == "QUBITS" and declared_n is not None) or (
                keyword == "SPARSITY" and sparsity is not None
            ):
                raise FormatError(f"duplicate {keyword} header", lineno, head_col)
            if len(tokens) != 2:
                raise FormatError(f"{keyword} takes one integer argument", lineno, head_col)
            value = _int_token(tokens[1][0], lineno, tokens[1][1], "a positive integer")
            if value < 1:
                raise FormatError(f"{keyword} must be at least 1", lineno, tokens[1][1])
            if keyword == "QUBITS":
                declared_n = value
            else:
                sparsity = value
            continue

        if keyword == "MEASURE":
            if measured:
                raise FormatError("duplicate MEASURE line", lineno, head_col)
            if len(tokens) != 2 or tokens[1][0].lower() != "all":
                raise FormatError("expected 'MEASURE all'", lineno, head_col)
            measured = True
            continue

        if keyword == "POSTPROCESS":
            if post_source is not None:
                raise FormatError("duplicate POSTPROCESS line", lineno, head_col)
            expr_start = head_col - 1 + len(head)
            post_source = code[expr_start:]
            post_pos = (lineno, expr_start + 1)
            if not post_source.strip():
                raise FormatError("POSTPROCESS needs an expression", lineno, head_col)
            continue

        name = _GATE_ALIASES.get(keyword, keyword)
        if name not in CIRCUIT_GATES:
            raise FormatError(f"unknown gate {head!r}", lineno, head_col)
        if measured or post_source is not None:
            raise FormatError("gate after MEASURE/POSTPROCESS", lineno, head_col)
        arity = CIRCUIT_GATES[name]
        if len(tokens) - 1 != arity:
            raise FormatError(
                f"{name} takes {arity} qubit argument(s), got {len(tokens) - 1}",
                lineno,
                head_col,
            )
        qubits = []
        for tok, col in tokens[1:]:
            q = _int_token(tok, lineno, col, "a qubit index")
            if q < 0:
                raise FormatError("qubit index must be nonnegative", lineno, col)
            qubits.append(q)
            max_qubit = max(max_qubit, q)
        if arity == 2 and qubits[0] == qubits[1]:
            raise FormatError(f"{name} needs two distinct qubits", lineno, head_col)
        ops.append((name, tuple(qubits), lineno, head_col))

    if declared_n is None:
        if max_qubit < 0:
            raise FormatError("cannot infer the qubit count of an empty circuit")
        n = max_qubit + 1
    else:
        n = declared_n
        if max_qubit >= n:
            for name, qubits, lineno, col in ops:
                if max(qubits) >= n:
                    raise FormatError(
                        f"qubit {max(qubits)} out of range for {n} qubit(s)", lineno, col
                    )

    if post_source is not None:
        try:
            postprocess = compile_postprocess(post_source, n)
        except FormatError as e:
            offset = e.column if e.column is not None else 0
            raise FormatError(e.message, post_pos[0], post_pos[1] + offset) from None
        source = post_source.strip()
    else:
        postprocess = compile_postprocess("b0", n)
        source = None

    return CircuitDocument(n, sparsity, ops, postprocess, source, measured)


def circuit_to_cliffordt(doc: CircuitDocument) -> CliffordTCircuit:
    """Adapt a parsed circuit for the non-Clifford-counting compiler.

    Identity gates are dropped; gates outside the compiler's repertoire
    (``TDG``, ``CY``, ``SWAP``) are reported with their source position.
    """
    circ = CliffordTCircuit(doc.n, postprocess=doc.postprocess)
    for name, qubits, lineno, col in doc.ops:
        if name == "I":
            continue
        try:
            circ.append(name, *qubits)
        except ValueError as e:
            raise FormatError(str(e), lineno, col) from None
    return circ


def circuit_to_sparse(doc: CircuitDocument) -> SparseCircuit:
    """Adapt a parsed circuit for sparse-cut estimation.

    The file must declare its sparseness budget with a ``SPARSITY``
    header; the per-qubit two-qubit-gate count is checked against it as
    gates are replayed, so a violation points at the offending line.
    """
    if doc.sparsity is None:
        raise FormatError("a SPARSITY header is required for sparse estimation")
    circ = SparseCircuit(doc.n, doc.sparsity, postprocess=doc.postprocess)
    for name, qubits, lineno, col in doc.ops:
        try:
            circ.append(name, *qubits)
        except ValueError as e:
            raise FormatError(str(e), lineno, col) from None
    return circ


# ---------------------------------------------------------------------------
# measurement trees


def load_pbc_tree(text: str) -> PbcProgram:
    """Parse a JSON decision tree into an adaptive measurement program.

    Inner nodes are ``{"pauli": "+XZ..", "on_plus": ..., "on_minus": ...}``
    or fair-coin branches ``{"coin": true, "on_plus": ..., "on_minus": ...}``
    (compiled circuits emit those whenever a readout is randomized); leaves
    are ``{"output": 0 or 1}``.  The qubit count is the length of the Pauli
    words, which must agree across the tree; a tree with no measurements is
    a zero-qubit program.
    """
    try:
        root = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, e.lineno, e.colno) from None

    def first_pauli(node):
        if isinstance(node, dict) and "pauli" in node:
            return node["pauli"]
        if isinstance(node, dict):
            for key in ("on_plus", "on_minus"):
                if key in node:
                    found = first_pauli(node[key])
                    if found is not None:
                        return found
        return None

    def check(node, path: str) -> None:
        if not isinstance(node, dict):
            raise FormatError(f"{path}: tree node must be an object")
        if "output" in node:
            if set(node) != {"output"}:
                raise FormatError(f"{path}: an output leaf has no other keys")
            if node["output"] not in (0, 1):
                raise FormatError(f"{path}: output must be 0 or 1")
            return
        if "coin" in node:
            if set(node) != {"coin", "on_plus", "on_minus"} or node["coin"] is not True:
                raise FormatError(f"{path}: a coin node is {{'coin': true}} plus branches")
        elif set(node) != {"pauli", "on_plus", "on_minus"}:
            raise FormatError(
                f"{path}: expected keys 'pauli', 'on_plus', 'on_minus' or 'output'"
            )
        else:
            word = node["pauli"]
            if not isinstance(word, str):
                raise FormatError(f"{path}: 'pauli' must be a string")
            try:
                PauliOperator.from_string(word)
            except ValueError as e:
                raise FormatError(f"{path}: {e}") from None
        check(node["on_plus"], path + ".on_plus")
        check(node["on_minus"], path + ".on_minus")

    check(root, "root")
    word = first_pauli(root)
    n = 0 if word is None else PauliOperator.from_string(word).n
    try:
        return PbcProgram.from_tree(n, root)
    except (ValueError, TypeError) as e:
        raise FormatError(str(e)) from None


def dump_pbc_tree(program: PbcProgram, max_depth: int = 64) -> dict:
    """Expand a program's policy into the nested-dict tree form.

    Runaway recursion (a policy that never outputs) is cut off at
    ``max_depth``.
    """

    def walk(history: tuple, depth: int) -> dict:
        if depth > max_depth:
            raise ValueError(f"program still running after {max_depth} measurements")
        step = program.step(history)
        if isinstance(step, Output):
            return {"output": step.bit}
        branches = {
            "on_plus": walk(history + (1,), depth + 1),
            "on_minus": walk(history + (-1,), depth + 1),
        }
        if isinstance(step, Coin):
            return {"coin": True, **branches}
        assert isinstance(step, Measure)
        return {"pauli": str(step.pauli), **branches}

    return walk((), 0)


def render_pbc_tree(program: PbcProgram, max_depth: int = 64) -> str:
    return json.dumps(dump_pbc_tree(program, max_depth), indent=2) + "\n"


# ---------------------------------------------------------------------------
# phase polynomials


def load_polynomial(text: str) -> DegreeTwoPolynomial:
    """Parse the line grammar for degree-two exponent polynomials.

    ``VARS n`` comes first; then any of ``CONST c`` (c mod 8), ``LIN a v``
    (v mod 4, contributing ``2*v*x_a``), and ``QUAD a b`` (contributing
    ``4*x_a*x_b``), each term at most once.  ``#`` starts a comment.
    """
    n: Optional[int] = None
    const = 0
    const_seen = False
    lin: list = []
    lin_seen: set = set()
    quad: list = []
    quad_seen: set = set()

    for lineno, raw in enumerate(text.splitlines(), 1):
        code = raw.split("#", 1)[0]
        tokens = [(m.group(0), m.start() + 1) for m in _TOKEN_RE.finditer(code)]
        if not tokens:
            continue
        head, head_col = tokens[0]
        keyword = head.upper()
        args = tokens[1:]

        if keyword == "VARS":
            if n is not None:
                raise FormatError("duplicate VARS line", lineno, head_col)
            if len(args) != 1:
                raise FormatError("VARS takes one integer argument", lineno, head_col)
            n = _int_token(args[0][0], lineno, args[0][1], "a variable count")
            if n < 0:
                raise FormatError("variable count must be nonnegative", lineno, args[0][1])
            lin = [0] * n
            quad = [0] * n
            continue
        if n is None:
            raise FormatError("VARS must come before any terms", lineno, head_col)

        if keyword == "CONST":
            if const_seen:
                raise FormatError("duplicate CONST line", lineno, head_col)
            if len(args) != 1:
                raise FormatError("CONST takes one integer argument", lineno, head_col)
            const = _int_token(args[0][0], lineno, args[0][1], "an integer") % 8
            const_seen = True
            continue

        if keyword in ("LIN", "QUAD"):
            want = 2
            if len(args) != want:
                raise FormatError(f"{keyword} takes two integer arguments", lineno, head_col)
            a = _int_token(args[0][0], lineno, args[0][1], "a variable index")
            b = _int_token(args[1][0], lineno, args[1][1], "an integer")
            if not 0 <= a < n:
                raise FormatError(f"variable index {a} out of range", lineno, args[0][1])
            if keyword == "LIN":
                if a in lin_seen:
                    raise FormatError(f"duplicate LIN term for variable {a}", lineno, head_col)
                lin_seen.add(a)
                lin[a] = b & 3
            else:
                if not 0 <= b < n:
                    raise FormatError(f"variable index {b} out of range", lineno, args[1][1])
                if a == b:
                    raise FormatError("QUAD needs two distinct variables", lineno, head_col)
                key = (min(a, b), max(a, b))
                if key in quad_seen:
                    raise FormatError(f"duplicate QUAD term {key}", lineno, head_col)
                quad_seen.add(key)
                quad[key[0]] |= 1 << key[1]
            continue

        raise FormatError(f"unknown directive {head!r}", lineno, head_col)

    if n is None:
        raise FormatError("polynomial file needs a VARS line")
    return DegreeTwoPolynomial(n, const, lin, quad)


def dump_polynomial(poly: DegreeTwoPolynomial) -> str:
    lines = [f"VARS {poly.n}"]
    if poly.const:
        lines.append(f"CONST {poly.const}")
    for a, v in enumerate(poly.lin):
        if v:
            lines.append(f"LIN {a} {v}")
    for a, row in enumerate(poly.quad):
        for b in iter_bits(row):
            lines.append(f"QUAD {a} {b}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# exact ring values


_RING_RE = re.compile(r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*\)")
_AMP_RE = re.compile(
    r"\(\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*,\s*(-?\d+)\s*;\s*(-?\d+)\s*\)"
)


def parse_ring_coefficient(text: str):
    """Parse ``(p, q, e)`` as ``(p + q*sqrt(2)) * 2^e``.

    ``e = 0`` yields a :class:`QuadraticInteger`; any other exponent a
    :class:`QuadraticRational`.
    """
    m = _RING_RE.fullmatch(text.strip())
    if m is None:
        raise FormatError(f"expected a '(p, q, e)' coefficient, got {text!r}")
    p, q, e = (int(g) for g in m.groups())
    base = QuadraticInteger(p, q)
    if e == 0:
        return base
    return QuadraticRational.from_quadratic(base, e)


def render_ring_coefficient(value) -> str:
    """Render a ring element as ``(p, q, e)``.

    Only dyadic rationals serialize; a :class:`QuadraticRational` with a
    denominator that is not a power of two has no such form and raises.
    """
    if isinstance(value, int):
        value = QuadraticInteger(value)
    if isinstance(value, QuadraticInteger):
        return f"({value.p}, {value.q}, 0)"
    if not isinstance(value, QuadraticRational):
        raise FormatError(f"not an exact ring element: {value!r}")
    den = math.lcm(value.a.denominator, value.b.denominator)
    if den & (den - 1):
        raise FormatError(f"denominator {den} is not a power of two")
    e = -(den.bit_length() - 1)
    p = int(value.a * den)
    q = int(value.b * den)
    while p % 2 == 0 and q % 2 == 0 and (p or q):
        p //= 2
        q //= 2
        e += 1
    return f"({p}, {q}, {e})"


def parse_amplitude(text: str) -> ExactAmplitude:
    """Parse ``(c0,c1,c2,c3; e)``: a cyclotomic integer scaled by 2^(e/2)."""
    m = _AMP_RE.fullmatch(text.strip())
    if m is None:
        raise FormatError(f"expected a '(c0,c1,c2,c3; e)' amplitude, got {text!r}")
    c0, c1, c2, c3, e = (int(g) for g in m.groups())
    return ExactAmplitude(c0, c1, c2, c3, e)


def render_amplitude(a: ExactAmplitude) -> str:
    return str(a)


# ---------------------------------------------------------------------------
# decompositions


_UNIT_SCALE = ExactAmplitude(1, 0, 0, 0)


def _parse_coefficient(obj, where: str):
    if isinstance(obj, str):
        try:
            return parse_ring_coefficient(obj)
        except FormatError as e:
            raise FormatError(f"{where}: {e.message}") from None
    if isinstance(obj, bool):
        raise FormatError(f"{where}: coefficient cannot be a boolean")
    if isinstance(obj, (int, float)):
        return complex(obj)
    if isinstance(obj, dict) and set(obj) <= {"real", "imag"}:
        try:
            return complex(float(obj.get("real", 0.0)), float(obj.get("imag", 0.0)))
        except (TypeError, ValueError):
            raise FormatError(f"{where}: bad real/imag pair") from None
    raise FormatError(f"{where}: coefficient must be '(p, q, e)' text, a number, or real/imag")


def _render_coefficient(value):
    if isinstance(value, (int, QuadraticInteger, QuadraticRational)):
        return render_ring_coefficient(value)
    value = complex(value)
    if value.imag == 0.0:
        return value.real
    return {"real": value.real, "imag": value.imag}


def _parse_state(obj, k: int, where: str) -> AffineStabilizerState:
    if not isinstance(obj, dict):
        raise FormatError(f"{where}: state must be an object")
    extra = set(obj) - {"rows", "offset", "constant", "linear", "quad", "scale"}
    if extra:
        raise FormatError(f"{where}: unknown state keys {sorted(extra)}")
    rows = obj.get("rows", [])
    if not isinstance(rows, list) or not all(isinstance(r, int) for r in rows):
        raise FormatError(f"{where}: 'rows' must be a list of integers")
    t = len(rows)
    lin = obj.get("linear", [0] * t)
    if not isinstance(lin, list) or len(lin) != t:
        raise FormatError(f"{where}: 'linear' must list one value per row")
    quad_rows = [0] * t
    for pair in obj.get("quad", []):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise FormatError(f"{where}: 'quad' entries are [a, b] pairs")
        a, b = sorted(pair)
        if not (0 <= a < b < t):
            raise FormatError(f"{where}: quad pair {pair} out of range")
        quad_rows[a] ^= 1 << b
    scale = _UNIT_SCALE
    if "scale" in obj:
        try:
            scale = parse_amplitude(obj["scale"])
        except FormatError as e:
            raise FormatError(f"{where}: {e.message}") from None
    try:
        poly = DegreeTwoPolynomial(t, obj.get("constant", 0), lin, quad_rows)
        return AffineStabilizerState(k, rows, obj.get("offset", 0), poly, scale)
    except (ValueError, TypeError) as e:
        raise FormatError(f"{where}: {e}") from None


def load_state(text: str) -> AffineStabilizerState:
    """Parse a single-state JSON file.

    The document is ``{"qubits": k, ...}`` with either a ``component``
    recipe or an explicit ``state``, exactly as one decomposition term.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, e.lineno, e.colno) from None
    if not isinstance(obj, dict):
        raise FormatError("state file must be a JSON object")
    k = obj.get("qubits")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise FormatError("'qubits' must be a positive integer")
    has_component = "component" in obj
    if has_component == ("state" in obj):
        raise FormatError("exactly one of 'component' or 'state' is required")
    if has_component:
        try:
            return Component.from_obj(obj["component"]).build(k)
        except (KeyError, ValueError, TypeError) as e:
            raise FormatError(str(e)) from None
    return _parse_state(obj["state"], k, "state")


def load_decomposition(text: str) -> StabilizerDecomposition:
    """Parse the JSON decomposition format.

    The document is ``{"target": id, "qubits": k, "terms": [...]}`` where
    each term pairs a ``coefficient`` with either a ``component`` recipe
    (family name, controlled-Z edge list, optional all-qubit Z) or an
    explicit ``state``.
    """
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(e.msg, e.lineno, e.colno) from None
    if not isinstance(obj, dict):
        raise FormatError("decomposition file must be a JSON object")
    k = obj.get("qubits")
    if not isinstance(k, int) or isinstance(k, bool) or k < 1:
        raise FormatError("'qubits' must be a positive integer")
    target_id = obj.get("target", "")
    if not isinstance(target_id, str):
        raise FormatError("'target' must be a string")
    raw_terms = obj.get("terms")
    if not isinstance(raw_terms, list) or not raw_terms:
        raise FormatError("'terms' must be a nonempty list")

    terms = []
    recipes: list = []
    for i, item in enumerate(raw_terms):
        where = f"term {i}"
        if not isinstance(item, dict) or "coefficient" not in item:
            raise FormatError(f"{where}: each term needs a 'coefficient'")
        coeff = _parse_coefficient(item["coefficient"], where)
        has_component = "component" in item
        has_state = "state" in item
        if has_component == has_state:
            raise FormatError(f"{where}: exactly one of 'component' or 'state' is required")
        if has_component:
            try:
                recipe = Component.from_obj(item["component"])
                state = recipe.build(k)
            except (KeyError, ValueError, TypeError) as e:
                raise FormatError(f"{where}: {e}") from None
            recipes.append(recipe)
        else:
            state = _parse_state(item["state"], k, where)
            recipes.append(None)
        terms.append((coeff, state))

    all_recipes = [r for r in recipes if r is not None]
    return StabilizerDecomposition(
        k,
        terms,
        target_id=target_id,
        recipes=all_recipes if len(all_recipes) == len(terms) else None,
    )


def _dump_state(state: AffineStabilizerState) -> dict:
    out: dict = {"rows": list(state.psi_rows), "offset": state.z}
    if state.f.const:
        out["constant"] = state.f.const
    if any(state.f.lin):
        out["linear"] = list(state.f.lin)
    pairs = [[a, b] for a, row in enumerate(state.f.quad) for b in iter_bits(row)]
    if pairs:
        out["quad"] = pairs
    if state.scale != _UNIT_SCALE:
        out["scale"] = render_amplitude(state.scale)
    return out


def dump_decomposition(d: StabilizerDecomposition) -> str:
    """Serialize a decomposition, preferring component recipes when present."""
    terms = []
    recipes = d.recipes if d.recipes and len(d.recipes) == d.chi else None
    for i, (coeff, state) in enumerate(d.terms):
        entry: dict = {"coefficient": _render_coefficient(coeff)}
        if recipes is not None:
            entry["component"] = recipes[i].to_obj()
        else:
            if state.n != d.k:
                raise FormatError(f"term {i}: state width {state.n} != {d.k}")
            entry["state"] = _dump_state(state)
        terms.append(entry)
    doc = {"target": d.target_id, "qubits": d.k, "terms": terms}
    return json.dumps(doc, indent=2) + "\n"
