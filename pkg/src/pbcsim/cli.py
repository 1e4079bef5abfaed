"""Command-line surface tying the simulation modules together.

Ten subcommands cover the full workflow: evaluating exponential sums
(``exp-sum``), projected inner products between stabilizer states
(``inner``), running and querying adaptive measurement programs
(``simulate-pbc``, ``pbc-prob``), compiling circuits to measurement
programs (``compile``), trading magic qubits for samples (``virtual``),
cut-and-estimate runs on sparse circuits (``sparse-estimate``), annealing
for new decompositions (``search``), checking decomposition certificates
(``verify-decomp``), and timing the two probability backends against
each other (``bench``).

Output is line-oriented ``key: value`` text, switchable to a JSON object
with ``--json``.  Quantities that exist in the exact ring are printed in
both the exact text form and decimal.  Runs that sample accept ``--seed``
and are bit-reproducible under it.  Malformed input files exit with
status 2 and a line/column diagnostic; other failures exit with 1.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
import time
from typing import Optional

import numpy as np

from .cliffordt import CLIFFORD_GATE_NAMES, CliffordFrame, compile_to_pbc
from .decomplib import (
    chi_upper_bound,
    magic_amplitudes_exact,
    magic_decomposition,
    verify_decomposition,
)
from .formats import (
    FormatError,
    circuit_to_cliffordt,
    circuit_to_sparse,
    dump_decomposition,
    load_decomposition,
    load_pbc_tree,
    load_polynomial,
    load_state,
    parse_circuit,
    render_pbc_tree,
    render_ring_coefficient,
)
from .octic import ExactAmplitude, QuadraticInteger, QuadraticRational
from .pbc import (
    PbcProgram,
    brute_force_probability,
    outcomes_from_string,
    output_distribution,
    rank_probability,
    sample_run,
    validate_standard_form,
)
from .quadsum import exp_sum
from .searchdecomp import AnnealConfig, anneal
from .sparsecut import estimate_pi, expand_crossing_gates
from .stab import (
    PauliOperator,
    ProjectorForm,
    StabilizerGroup,
    inner_product_projected,
)
from .virtualq import estimate_acceptance, exact_acceptance

__all__ = ["main", "build_parser"]


# ---------------------------------------------------------------------------
# output plumbing


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


class Report:
    """Ordered key/value output, printable as text lines or one JSON object."""

    def __init__(self, json_mode: bool) -> None:
        self.json_mode = json_mode
        self.items: list = []

    def add(self, key: str, value) -> None:
        self.items.append((key, value))

    def line(self, text: str) -> None:
        """A preformatted text-mode line (ignored under --json)."""
        self.items.append((None, text))

    def quantity(self, key: str, value) -> None:
        """A number, with its exact ring form alongside when it has one."""
        if isinstance(value, QuadraticRational):
            self.add(f"{key}-exact", str(value))
            self.add(key, value.to_float())
        elif isinstance(value, QuadraticInteger):
            self.add(f"{key}-exact", render_ring_coefficient(value))
            self.add(key, value.to_float())
        elif isinstance(value, ExactAmplitude):
            z = value.to_complex()
            self.add(f"{key}-exact", str(value))
            self.add(f"{key}-real", z.real)
            self.add(f"{key}-imag", z.imag)
        elif isinstance(value, complex):
            self.add(f"{key}-real", value.real)
            self.add(f"{key}-imag", value.imag)
        else:
            self.add(key, float(value))

    def write(self, stream) -> None:
        if self.json_mode:
            obj = {k: v for k, v in self.items if k is not None}
            stream.write(json.dumps(obj, indent=2) + "\n")
            return
        for key, value in self.items:
            if key is None:
                stream.write(value + "\n")
            else:
                stream.write(f"{key}: {_fmt_value(value)}\n")


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


# ---------------------------------------------------------------------------
# subcommand handlers


def _cmd_exp_sum(args) -> Report:
    poly = load_polynomial(_read(args.file))
    value = exp_sum(poly)
    rep = Report(args.json)
    rep.add("variables", poly.n)
    rep.quantity("value", value)
    return rep


def _cmd_inner(args) -> Report:
    psi = load_state(_read(args.psi))
    phi = load_state(_read(args.phi))
    if psi.n != phi.n:
        raise ValueError(f"state widths differ: {psi.n} vs {phi.n}")
    if args.generator:
        gens = [PauliOperator.from_string(g) for g in args.generator]
        proj = StabilizerGroup(psi.n, gens).projector_form()
    else:
        proj = ProjectorForm.trivial(psi.n)
    value = inner_product_projected(psi, proj, phi)
    rep = Report(args.json)
    rep.add("qubits", psi.n)
    rep.add("generators", len(args.generator or ()))
    rep.quantity("value", value)
    return rep


def _cmd_simulate_pbc(args) -> Report:
    program = load_pbc_tree(_read(args.file))
    rep = Report(args.json)
    rep.add("qubits", program.n)
    rep.add("method", args.method)

    if args.outcomes is not None:
        if args.shots:
            raise ValueError("choose either --shots or --outcomes, not both")
        outcomes = outcomes_from_string(args.outcomes)
        if args.method == "rank":
            pr = rank_probability(program, outcomes, base_k=args.base_k)
        else:
            pr = brute_force_probability(program, outcomes)
        rep.add("outcomes", args.outcomes.strip())
        rep.quantity("probability", pr)
        return rep

    if args.shots == 0:
        dist = output_distribution(program, method=args.method, base_k=args.base_k)
        zero = QuadraticRational(0) if any(
            isinstance(v, QuadraticRational) for v in dist.values()
        ) else 0.0
        rep.quantity("p0", dist.get(0, zero))
        rep.quantity("p1", dist.get(1, zero))
        return rep

    rng = np.random.default_rng(args.seed)
    ones = 0
    for _ in range(args.shots):
        record = sample_run(program, method=args.method, seed=rng, base_k=args.base_k)
        ones += record.b_out
    rep.add("shots", args.shots)
    rep.add("ones", ones)
    rep.add("zeros", args.shots - ones)
    rep.add("frequency", ones / args.shots)
    return rep


def _cmd_pbc_prob(args) -> Report:
    program = load_pbc_tree(_read(args.file))
    outcomes = outcomes_from_string(args.outcomes)
    if args.method == "rank":
        pr = rank_probability(program, outcomes, base_k=args.base_k)
    else:
        pr = brute_force_probability(program, outcomes)
    rep = Report(args.json)
    rep.add("qubits", program.n)
    rep.add("outcomes", args.outcomes.strip())
    rep.quantity("probability", pr)
    return rep


def _cmd_compile(args) -> Report:
    doc = parse_circuit(_read(args.file))
    circuit = circuit_to_cliffordt(doc)
    program, _postmap = compile_to_pbc(circuit, seed=args.seed)
    rep = Report(args.json)
    rep.add("qubits", circuit.n)
    rep.add("t-count", program.n)
    report = validate_standard_form(program)
    rep.add("standard-form", report.ok)
    if args.output is not None:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(render_pbc_tree(program))
        rep.add("output", args.output)
    if args.enumerate:
        dist = output_distribution(program, method="brute")
        zero = QuadraticRational(0)
        rep.quantity("p0", dist.get(0, zero))
        rep.quantity("p1", dist.get(1, zero))
    return rep


def _cmd_virtual(args) -> Report:
    program = load_pbc_tree(_read(args.file))
    if args.k < 0 or args.k > program.n:
        raise ValueError(f"--k must be between 0 and the program width {program.n}")
    rep = Report(args.json)
    rep.add("qubits", program.n)
    rep.add("virtual", args.k)
    rep.add("method", args.method)
    if args.samples == 0:
        value = exact_acceptance(program, args.k, method=args.method, base_k=args.base_k)
        rep.quantity("acceptance", value)
        return rep
    estimate, stderr = estimate_acceptance(
        program,
        args.k,
        method=args.method,
        samples=args.samples,
        seed=args.seed,
        base_k=args.base_k,
    )
    rep.add("samples", args.samples)
    rep.add("acceptance", estimate)
    rep.add("stderr", stderr)
    return rep


def _parse_cut(text: str):
    def side(chunk: str, what: str) -> tuple:
        out = []
        for piece in chunk.split(","):
            piece = piece.strip()
            if not piece:
                raise ValueError(f"empty qubit entry in the {what} side of --cut")
            try:
                out.append(int(piece, 10))
            except ValueError:
                raise ValueError(f"bad qubit index {piece!r} in --cut") from None
        return tuple(out)

    if "|" in text:
        a_text, b_text = text.split("|", 1)
        return side(a_text, "small"), side(b_text, "large")
    return side(text, "small")


def _cmd_sparse_estimate(args) -> Report:
    doc = parse_circuit(_read(args.file))
    circuit = circuit_to_sparse(doc)
    partition = _parse_cut(args.cut)
    expansion = expand_crossing_gates(circuit, partition)
    estimate, samples = estimate_pi(
        circuit,
        partition,
        epsilon=args.eps,
        seed=args.seed,
        delta=args.delta,
        exact_expectation=args.exact_expectation,
    )
    rep = Report(args.json)
    rep.add("qubits", circuit.n)
    rep.add("sparsity", circuit.sparsity)
    rep.add("small-side", len(expansion.a_qubits))
    rep.add("chi", expansion.chi)
    rep.add("samples", samples)
    rep.add("estimate", estimate)
    if not args.exact_expectation:
        rep.add("eps", args.eps)
    return rep


def _unit_magic_target(k: int) -> np.ndarray:
    vec = np.array([a.to_float() for a in magic_amplitudes_exact(k)], dtype=complex)
    return vec / np.linalg.norm(vec)


def _cmd_search(args) -> Report:
    m = re.fullmatch(r"[Hh]\^?(\d+)", args.target.strip())
    if m is None:
        raise ValueError(f"unsupported search target {args.target!r}; use H^k")
    k = int(m.group(1))
    if k < 1:
        raise ValueError("target exponent must be at least 1")
    target_id = f"H^{k}"
    config = AnnealConfig(
        chi=args.chi,
        seed=args.seed,
        restarts=args.restarts,
        restrict_real=not args.allow_complex,
    )
    result = anneal(_unit_magic_target(k), config, target_id=target_id)
    rep = Report(args.json)
    rep.add("target", target_id)
    rep.add("chi", args.chi)
    rep.add("succeeded", result.succeeded)
    rep.add("restarts-used", result.restarts_used)
    rep.add("best-f", result.best_f)
    if not result.succeeded:
        return rep
    rep.add("residual", result.residual)
    d = result.decomposition
    for i, coeff in enumerate(d.coefficients()):
        rep.quantity(f"coefficient-{i}", coeff)
    if args.output is not None:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dump_decomposition(d))
        rep.add("output", args.output)
    return rep


def _cmd_verify_decomp(args) -> Report:
    source = args.source
    m = re.fullmatch(r"builtin:[Hh]\^?(\d+)", source)
    if m is not None:
        d = magic_decomposition(int(m.group(1)))
    else:
        d = load_decomposition(_read(source))
    exact, residual = verify_decomposition(d)
    rep = Report(args.json)
    if args.json:
        rep.add("exact", exact)
        rep.add("chi", d.chi)
    else:
        rep.line(f"exact: {_fmt_value(exact)}, chi: {d.chi}")
    rep.add("target", d.target_id)
    rep.add("terms", d.chi)
    rep.add("residual", residual)
    return rep


def _random_commuting_program(n: int, rng: np.random.Generator) -> PbcProgram:
    """A fixed-order program measuring n commuting conjugated-Z operators."""
    frame = CliffordFrame.identity(n)
    names = sorted(CLIFFORD_GATE_NAMES)
    for _ in range(4 * n):
        name = names[int(rng.integers(len(names)))]
        if name in ("CZ", "CNOT"):
            a, b = rng.choice(n, size=2, replace=False)
            frame.absorb(name, (int(a), int(b)))
        else:
            frame.absorb(name, (int(rng.integers(n)),))
    paulis = [frame.conjugate(PauliOperator.single(n, i, "Z")) for i in range(n)]
    table = rng.integers(0, 2, size=1 << n)

    def out(bits: tuple) -> int:
        idx = 0
        for i, b in enumerate(bits):
            idx |= b << i
        return int(table[idx])

    return PbcProgram.fixed(paulis, out)


def _cmd_bench(args) -> Report:
    sizes = []
    for piece in args.sizes.split(","):
        piece = piece.strip()
        if piece:
            sizes.append(int(piece, 10))
    if not sizes or any(n < 1 for n in sizes):
        raise ValueError("--sizes needs a comma list of positive widths")
    rng = np.random.default_rng(args.seed)
    rep = Report(args.json)
    rep.add("trials", args.trials)
    rep.add("base-k", args.base_k)
    for n in sizes:
        brute_total = 0.0
        rank_total = 0.0
        agree = True
        for _ in range(args.trials):
            program = _random_commuting_program(n, rng)
            outcomes = sample_run(program, method="brute", seed=rng).outcomes
            t0 = time.perf_counter()
            pb = brute_force_probability(program, outcomes)
            t1 = time.perf_counter()
            pr = rank_probability(program, outcomes, base_k=args.base_k)
            t2 = time.perf_counter()
            brute_total += t1 - t0
            rank_total += t2 - t1
            agree = agree and abs(pb.to_float() - pr.to_float()) <= 1e-9
        pairs = chi_upper_bound(n, args.base_k) ** 2
        rep.add(f"n{n}-brute-seconds", brute_total / args.trials)
        rep.add(f"n{n}-rank-seconds", rank_total / args.trials)
        rep.add(f"n{n}-pairs", pairs)
        rep.add(f"n{n}-agree", agree)
    return rep


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pbcsim",
        description="Simulate Pauli-based computation and Clifford+T circuits.",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    def sub(name: str, func, help_text: str):
        p = subs.add_parser(name, help=help_text)
        p.add_argument("--json", action="store_true", help="emit one JSON object")
        p.set_defaults(func=func)
        return p

    p = sub("exp-sum", _cmd_exp_sum, "evaluate an exponential sum over a phase polynomial")
    p.add_argument("file", help="polynomial text file")

    p = sub("inner", _cmd_inner, "projected inner product between stabilizer states")
    p.add_argument("psi", help="bra state file")
    p.add_argument("phi", help="ket state file")
    p.add_argument(
        "--generator",
        action="append",
        metavar="PAULI",
        help="signed Pauli word for the projector group (repeatable)",
    )

    p = sub("simulate-pbc", _cmd_simulate_pbc, "run an adaptive measurement program")
    p.add_argument("file", help="measurement tree file")
    p.add_argument("--method", choices=("brute", "rank"), default="brute")
    p.add_argument("--base-k", type=int, default=6)
    p.add_argument("--shots", type=int, default=0, help="0 enumerates exactly")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--outcomes", help="result prefix such as '+-+'")

    p = sub("pbc-prob", _cmd_pbc_prob, "probability of one outcome prefix")
    p.add_argument("file", help="measurement tree file")
    p.add_argument("--outcomes", required=True, help="result prefix such as '+-+'")
    p.add_argument("--method", choices=("brute", "rank"), default="brute")
    p.add_argument("--base-k", type=int, default=6)

    p = sub("compile", _cmd_compile, "compile a circuit to a measurement program")
    p.add_argument("file", help="circuit text file")
    p.add_argument("-o", "--output", help="write the compiled tree here")
    p.add_argument("--enumerate", action="store_true", help="print the exact output distribution")
    p.add_argument("--seed", type=int, default=None)

    p = sub("virtual", _cmd_virtual, "estimate acceptance with virtualized magic qubits")
    p.add_argument("file", help="measurement tree file")
    p.add_argument("--k", type=int, required=True, help="qubits to virtualize")
    p.add_argument("--samples", type=int, default=0, help="0 evaluates exactly")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--method", choices=("brute", "rank"), default="brute")
    p.add_argument("--base-k", type=int, default=6)

    p = sub("sparse-estimate", _cmd_sparse_estimate, "cut-and-estimate a sparse circuit")
    p.add_argument("file", help="circuit text file with a SPARSITY header")
    p.add_argument("--cut", required=True, help="partition such as '0,1|2,3,4,5'")
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument(
        "--exact-expectation",
        action="store_true",
        help="replace sampling with exact interference expectations",
    )

    p = sub("search", _cmd_search, "anneal for a stabilizer decomposition")
    p.add_argument("--target", required=True, help="target such as H^2")
    p.add_argument("--chi", type=int, required=True, help="number of terms to try")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--allow-complex", action="store_true")
    p.add_argument("-o", "--output", help="write the found decomposition here")

    p = sub("verify-decomp", _cmd_verify_decomp, "check a decomposition certificate")
    p.add_argument("source", help="decomposition file or builtin:H<k>")

    p = sub("bench", _cmd_bench, "time the brute and rank probability backends")
    p.add_argument("--sizes", default="2,4,6", help="comma list of program widths")
    p.add_argument("--trials", type=int, default=3)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--base-k", type=int, default=6)

    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except FormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    report.write(sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
