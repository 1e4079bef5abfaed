#!/usr/bin/env python3
"""Regenerate src/pbcsim/data/h6_graphs.json from the meet-in-the-middle search.

The six-qubit magic-state table needs two graph-decorated odd-weight states;
this script derives their edge sets, verifies the completed decomposition
exactly, and freezes the result.  Run from the repository root:

    python3 scripts/derive_h6_graphs.py
"""
import json
import pathlib
import sys
import time

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from pbcsim.decomplib import (
    _H6_FIVE,
    _H6_GRAPH_COEFF,
    Component,
    StabilizerDecomposition,
    derive_h6_edge_sets,
    verify_decomposition,
)


def main() -> None:
    t0 = time.perf_counter()
    found = derive_h6_edge_sets()
    dt = time.perf_counter() - t0
    recipes = list(_H6_FIVE)
    recipes.append((_H6_GRAPH_COEFF, Component("O", edges=found["edges_a"])))
    recipes.append((_H6_GRAPH_COEFF, Component("O", edges=found["edges_b"])))
    terms = [(coeff, comp.build(6)) for coeff, comp in recipes]
    cert = StabilizerDecomposition(6, terms, target_id="H^6")
    exact, residual = verify_decomposition(cert)
    assert exact and residual < 1e-9, "derived pair fails exact verification"
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "pbcsim" / "data" / "h6_graphs.json"
    out.write_text(json.dumps(found, indent=2) + "\n")
    print(f"wrote {out} in {dt:.2f}s")
    print(f"edges_a = {found['edges_a']}")
    print(f"edges_b = {found['edges_b']}")
    print(f"sign-pattern pairs found: {found['sign_pattern_pairs']}")


if __name__ == "__main__":
    main()
