"""Tests for the shared text and JSON file formats."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from pbcsim.decomplib import (
    StabilizerDecomposition,
    magic_decomposition,
    verify_decomposition,
)
from pbcsim.formats import (
    CircuitDocument,
    FormatError,
    circuit_to_cliffordt,
    circuit_to_sparse,
    compile_postprocess,
    dump_decomposition,
    dump_pbc_tree,
    dump_polynomial,
    load_decomposition,
    load_pbc_tree,
    load_polynomial,
    parse_amplitude,
    parse_circuit,
    parse_ring_coefficient,
    render_amplitude,
    render_pbc_tree,
    render_ring_coefficient,
)
from pbcsim.octic import ExactAmplitude, QuadraticInteger, QuadraticRational
from pbcsim.pbc import Coin, Output, PbcProgram, enumerate_distribution
from pbcsim.quadsum import DegreeTwoPolynomial


# ---------------------------------------------------------------------------
# FormatError


def test_format_error_renders_position():
    assert str(FormatError("boom")) == "boom"
    assert str(FormatError("boom", 3)) == "line 3: boom"
    assert str(FormatError("boom", 3, 7)) == "line 3, column 7: boom"
    assert isinstance(FormatError("boom"), ValueError)


# ---------------------------------------------------------------------------
# circuit text


CIRCUIT = """\
# a small example
QUBITS 3
SPARSITY 2

H 0          # comment after a gate
cx 0 1
S+ 2
T 1
MEASURE all
POSTPROCESS b0 ^ ~b2 & b1
"""


def test_parse_circuit_document_fields():
    doc = parse_circuit(CIRCUIT)
    assert doc.n == 3
    assert doc.sparsity == 2
    assert doc.measured is True
    assert [(name, qubits) for name, qubits, _, _ in doc.ops] == [
        ("H", (0,)),
        ("CX", (0, 1)),
        ("SDG", (2,)),
        ("T", (1,)),
    ]
    assert doc.postprocess_source == "b0 ^ ~b2 & b1"
    # precedence: ~ binds tighter than &, which binds tighter than ^
    for bits in [(a, b, c) for a in (0, 1) for b in (0, 1) for c in (0, 1)]:
        expect = (bits[0] ^ ((1 - bits[2]) & bits[1])) & 1
        assert doc.postprocess(bits) == expect


def test_parse_circuit_infers_width_and_default_postprocess():
    doc = parse_circuit("H 0\nCNOT 2 0\n")
    assert doc.n == 3
    assert doc.sparsity is None
    assert doc.measured is False
    assert doc.postprocess_source is None
    assert doc.postprocess((1, 0, 1)) == 1
    assert doc.postprocess((0, 1, 1)) == 0


@pytest.mark.parametrize(
    "text, line, column, fragment",
    [
        ("H 0\nFOO 1\n", 2, 1, "unknown gate"),
        ("H 0\nQUBITS 2\n", 2, 1, "must precede"),
        ("QUBITS 2\nQUBITS 2\nH 0\n", 2, 1, "duplicate QUBITS"),
        ("SPARSITY 0\nH 0\n", 1, 10, "at least 1"),
        ("QUBITS x\n", 1, 8, "positive integer"),
        ("H 0 1\n", 1, 1, "takes 1 qubit"),
        ("CZ 1 1\n", 1, 1, "distinct"),
        ("CNOT 0\n", 1, 1, "takes 2 qubit"),
        ("H -1\n", 1, 3, "nonnegative"),
        ("QUBITS 2\nH 0\nCX 0 3\n", 3, 1, "out of range"),
        ("H 0\nMEASURE all\nX 0\n", 3, 1, "after MEASURE"),
        ("H 0\nMEASURE some\n", 2, 1, "MEASURE all"),
        ("H 0\nMEASURE all\nMEASURE all\n", 3, 1, "duplicate MEASURE"),
        ("H 0\nPOSTPROCESS b0\nPOSTPROCESS b0\n", 3, 1, "duplicate POSTPROCESS"),
        ("H 0\nPOSTPROCESS   # nothing left\n", 2, 1, "needs an expression"),
        ("H 0\nPOSTPROCESS b7\n", 2, 13, "b7"),
        ("H 0\nPOSTPROCESS b0 + b0\n", 2, 16, "bad postprocess token"),
        ("H 0\nPOSTPROCESS b0 b0\n", 2, 12, "malformed"),
    ],
)
def test_parse_circuit_reports_positions(text, line, column, fragment):
    with pytest.raises(FormatError) as err:
        parse_circuit(text)
    assert err.value.line == line
    assert err.value.column == column
    assert fragment in str(err.value)


def test_parse_circuit_rejects_empty_input():
    with pytest.raises(FormatError, match="empty circuit"):
        parse_circuit("# only comments\n\n")


def test_compile_postprocess_operators():
    f = compile_postprocess("(b0 | b1) & ~(b0 & b1)", 2)  # xor, the long way
    for bits in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert f(bits) == bits[0] ^ bits[1]
    assert compile_postprocess("1", 1)((0,)) == 1
    assert compile_postprocess("0 | 1 ^ 1", 1)((0,)) == 0


def test_circuit_to_cliffordt_adapts_and_positions_failures():
    doc = parse_circuit("QUBITS 2\nI 0\nH 0\nCX 0 1\nT 1\nPOSTPROCESS b1\n")
    circ = circuit_to_cliffordt(doc)
    assert circ.n == 2
    assert [op[0] for op in circ.ops] == ["H", "CNOT", "T"]  # identity dropped
    assert circ.postprocess((0, 1)) == 1

    bad = parse_circuit("H 0\nTDG 1\n")
    with pytest.raises(FormatError) as err:
        circuit_to_cliffordt(bad)
    assert err.value.line == 2
    assert "TDG" in str(err.value)


def test_circuit_to_sparse_requires_and_enforces_sparsity():
    with pytest.raises(FormatError, match="SPARSITY header"):
        circuit_to_sparse(parse_circuit("H 0\nCZ 0 1\n"))

    doc = parse_circuit("SPARSITY 1\nH 0\nCZ 0 1\nTDG 1\n")
    circ = circuit_to_sparse(doc)
    assert circ.sparsity == 1
    assert circ.ops == [("H", (0,)), ("CZ", (0, 1)), ("TDG", (1,))]

    over = parse_circuit("SPARSITY 1\nCZ 0 1\nCNOT 1 2\n")
    with pytest.raises(FormatError) as err:
        circuit_to_sparse(over)
    assert err.value.line == 3


# ---------------------------------------------------------------------------
# measurement trees


TREE = {
    "pauli": "+ZI",
    "on_plus": {"output": 0},
    "on_minus": {
        "pauli": "-XX",
        "on_plus": {"output": 1},
        "on_minus": {"output": 0},
    },
}


def test_tree_round_trip_preserves_distribution():
    program = PbcProgram.from_tree(2, TREE)
    text = render_pbc_tree(program)
    again = load_pbc_tree(text)
    assert again.n == 2
    first = enumerate_distribution(program)
    second = enumerate_distribution(again)
    assert {r.outcomes: (r.b_out, r.probability) for r in first} == {
        r.outcomes: (r.b_out, r.probability) for r in second
    }
    assert dump_pbc_tree(again) == TREE


def test_coin_trees_round_trip():
    coin = PbcProgram(1, lambda h: Coin() if not h else Output(0 if h[0] > 0 else 1))
    tree = dump_pbc_tree(coin)
    assert tree == {"coin": True, "on_plus": {"output": 0}, "on_minus": {"output": 1}}
    again = load_pbc_tree(render_pbc_tree(coin))
    dist = {r.outcomes: (r.b_out, r.probability) for r in enumerate_distribution(again)}
    assert dist == {(1,): (0, QuadraticRational(Fraction(1, 2))), (-1,): (1, QuadraticRational(Fraction(1, 2)))}


def test_measurement_free_tree_is_zero_qubit():
    program = load_pbc_tree('{"output": 1}')
    assert program.n == 0
    assert isinstance(program.step(()), Output)


def test_dump_tree_rejects_runaways():
    runaway = PbcProgram(1, lambda h: __import__("pbcsim.pbc", fromlist=["Measure"]).Measure("+Z"))
    with pytest.raises(ValueError, match="still running"):
        dump_pbc_tree(runaway)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ('{"output": 2}', "output must be 0 or 1"),
        ('{"coin": false, "on_plus": {"output": 0}, "on_minus": {"output": 0}}', "coin node"),
        ('{"coin": true, "on_plus": {"output": 0}}', "coin node"),
        ('{"pauli": "+Z", "on_plus": {"output": 0}}', "expected keys"),
        ('{"pauli": "+Q", "on_plus": {"output": 0}, "on_minus": {"output": 1}}', "Pauli letter"),
        ('{"pauli": 7, "on_plus": {"output": 0}, "on_minus": {"output": 1}}', "must be a string"),
        ("[1, 2]", "must be an object"),
        (
            '{"pauli": "+Z", "on_plus": {"output": 0}, "on_minus": '
            '{"pauli": "+ZZ", "on_plus": {"output": 0}, "on_minus": {"output": 1}}}',
            "2 qubits",
        ),
    ],
)
def test_load_tree_semantic_errors(text, fragment):
    with pytest.raises(FormatError, match=fragment):
        load_pbc_tree(text)


def test_load_tree_reports_json_position():
    with pytest.raises(FormatError) as err:
        load_pbc_tree('{"output": 0\n "oops"}')
    assert err.value.line == 2
    assert err.value.column is not None


# ---------------------------------------------------------------------------
# phase polynomials


def test_polynomial_round_trip():
    text = """\
# exponent of a toy sum
VARS 3
CONST 5
LIN 0 3
LIN 2 1
QUAD 0 2
"""
    poly = load_polynomial(text)
    assert (poly.n, poly.const, poly.lin, poly.quad) == (3, 5, [3, 0, 1], [4, 0, 0])
    for x in range(8):
        bits = [(x >> i) & 1 for i in range(3)]
        expect = (5 + 2 * (3 * bits[0] + bits[2]) + 4 * bits[0] * bits[2]) % 8
        assert poly.evaluate(x) == expect
    again = load_polynomial(dump_polynomial(poly))
    assert (again.n, again.const, again.lin, again.quad) == (
        poly.n,
        poly.const,
        poly.lin,
        poly.quad,
    )


def test_polynomial_dump_of_zero_is_loadable():
    poly = DegreeTwoPolynomial.zero(2)
    assert load_polynomial(dump_polynomial(poly)).evaluate(3) == 0


@pytest.mark.parametrize(
    "text, line, fragment",
    [
        ("CONST 1\n", 1, "VARS must come"),
        ("VARS 2\nVARS 2\n", 2, "duplicate VARS"),
        ("VARS 2\nCONST 1\nCONST 1\n", 3, "duplicate CONST"),
        ("VARS 2\nLIN 5 1\n", 2, "out of range"),
        ("VARS 2\nQUAD 0 0\n", 2, "distinct"),
        ("VARS 2\nQUAD 0 1\nQUAD 1 0\n", 3, "duplicate QUAD"),
        ("VARS 2\nCUBIC 0 1\n", 2, "unknown directive"),
        ("VARS 2\nLIN 0\n", 2, "two integer arguments"),
    ],
)
def test_polynomial_errors(text, line, fragment):
    with pytest.raises(FormatError) as err:
        load_polynomial(text)
    assert err.value.line == line
    assert fragment in str(err.value)


def test_polynomial_requires_vars():
    with pytest.raises(FormatError, match="needs a VARS"):
        load_polynomial("# nothing\n")


# ---------------------------------------------------------------------------
# ring values


def test_ring_coefficient_text_forms():
    assert parse_ring_coefficient("(2, -1, 0)") == QuadraticInteger(2, -1)
    quarter = parse_ring_coefficient("(1, 0, -2)")
    assert isinstance(quarter, QuadraticRational)
    assert quarter == QuadraticRational(Fraction(1, 4))
    assert render_ring_coefficient(QuadraticInteger(2, -1)) == "(2, -1, 0)"
    assert render_ring_coefficient(5) == "(5, 0, 0)"
    assert render_ring_coefficient(QuadraticRational(Fraction(1, 4))) == "(1, 0, -2)"
    # common factors of two move into the exponent
    assert render_ring_coefficient(QuadraticRational(2, 4)) == "(1, 2, 1)"
    value = QuadraticRational(Fraction(3, 8), Fraction(-1, 2))
    assert parse_ring_coefficient(render_ring_coefficient(value)) == value


def test_ring_coefficient_rejects_bad_input():
    with pytest.raises(FormatError, match="p, q, e"):
        parse_ring_coefficient("(1, 2)")
    with pytest.raises(FormatError, match="power of two"):
        render_ring_coefficient(QuadraticRational(Fraction(1, 3)))
    with pytest.raises(FormatError, match="ring element"):
        render_ring_coefficient(1.25)


def test_amplitude_text_canonicalizes():
    a = ExactAmplitude(1, -1, 1, -2, 2)
    assert render_amplitude(a) == "(1,-1,1,-2; 2)"
    assert parse_amplitude("(1,-1,1,-2; 2)") == a
    # a non-primitive coefficient vector parses to its canonical form
    assert parse_amplitude("(1, 1, 1, 1; 0)") == ExactAmplitude(1, 1, 1, 1)
    assert parse_amplitude("( 0 , 1 , 1 , 0 ; 1 )") == ExactAmplitude(1, 1, 1, 1)
    with pytest.raises(FormatError, match="amplitude"):
        parse_amplitude("(1, 2, 3; 0)")


# ---------------------------------------------------------------------------
# decompositions


def test_decomposition_component_round_trip():
    d = magic_decomposition(2)
    text = dump_decomposition(d)
    again = load_decomposition(text)
    assert again.k == 2 and again.chi == d.chi
    assert again.target_id == d.target_id
    assert again.recipes == d.recipes
    assert again.coefficients() == d.coefficients()
    exact, residual = verify_decomposition(again)
    assert exact and residual <= 1e-12


def test_decomposition_explicit_state_round_trip():
    base = magic_decomposition(2)
    stripped = StabilizerDecomposition(2, list(base.terms), target_id="H^2")
    text = dump_decomposition(stripped)
    assert '"state"' in text and '"component"' not in text
    again = load_decomposition(text)
    assert again.recipes is None
    np.testing.assert_allclose(again.to_dense(), base.to_dense(), atol=1e-12)
    assert again.coefficients() == base.coefficients()


def test_decomposition_float_coefficients_round_trip():
    base = magic_decomposition(2)
    terms = [(0.25 + 0.5j, base.terms[0][1]), (-1.0, base.terms[1][1])]
    text = dump_decomposition(StabilizerDecomposition(2, terms, target_id="custom"))
    again = load_decomposition(text)
    assert again.coefficients() == [0.25 + 0.5j, complex(-1.0)]


def test_decomposition_scale_and_phase_survive():
    d = magic_decomposition(3)
    stripped = StabilizerDecomposition(3, list(d.terms), target_id="H^3")
    again = load_decomposition(dump_decomposition(stripped))
    np.testing.assert_allclose(again.to_dense(), d.to_dense(), atol=1e-12)


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("[]", "JSON object"),
        ('{"qubits": true, "terms": [{"coefficient": 1, "state": {}}]}', "positive integer"),
        ('{"qubits": 1, "terms": []}', "nonempty"),
        ('{"qubits": 1, "terms": [{}]}', "coefficient"),
        (
            '{"qubits": 1, "terms": [{"coefficient": 1}]}',
            "exactly one of",
        ),
        (
            '{"qubits": 1, "terms": [{"coefficient": 1, "state": {}, '
            '"component": {"family": "E"}}]}',
            "exactly one of",
        ),
        (
            '{"qubits": 1, "terms": [{"coefficient": true, "state": {}}]}',
            "boolean",
        ),
        (
            '{"qubits": 1, "terms": [{"coefficient": "(1, 2)", "state": {}}]}',
            "term 0",
        ),
        (
            '{"qubits": 1, "terms": [{"coefficient": 1, "component": {"family": "QQ"}}]}',
            "term 0",
        ),
        (
            '{"qubits": 2, "terms": [{"coefficient": 1, "state": {"rows": [1, 1]}}]}',
            "dependent",
        ),
        (
            '{"qubits": 2, "terms": [{"coefficient": 1, '
            '"state": {"rows": [1, 2], "quad": [[0, 5]]}}]}',
            "out of range",
        ),
        (
            '{"qubits": 1, "terms": [{"coefficient": 1, '
            '"state": {"rows": [1], "scale": "nope"}}]}',
            "amplitude",
        ),
    ],
)
def test_decomposition_load_errors(text, fragment):
    with pytest.raises(FormatError, match=fragment):
        load_decomposition(text)


def test_decomposition_mixed_terms_load_without_recipes():
    text = """
    {"target": "mix", "qubits": 1, "terms": [
      {"coefficient": "(1, 0, 0)", "component": {"family": "E"}},
      {"coefficient": "(0, 1, -1)", "state": {"rows": [1], "linear": [2]}}
    ]}
    """
    d = load_decomposition(text)
    assert d.recipes is None
    assert d.chi == 2
    assert isinstance(d.coefficients()[1], QuadraticRational)
