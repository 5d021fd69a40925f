"""
The arithmetic graph of an imaginary quadratic field
====================================================

Places of Q(sqrt -11) become vertices; labels come from discrete logs
of ideal generators in residue fields. At ell = 2 the mod-2 labels obey
quadratic reciprocity.
"""

from __future__ import annotations

from nilrado import quadfield as qf
from nilrado.graph import ExtensionQuery
from nilrado.harness import experiment_reciprocity
from nilrado.labels import ArithmeticOracle, build_arithmetic_graph, hilbert_table_check, weakrado_probe

K = qf.field_init(-11)
print("class number:", K.h)
print("first places at ell = 2:", [pl.id for pl in qf.places_upto(K, 2, 60)])

G = build_arithmetic_graph(K, 2, 200, 2)
print("label of (p3+, p5+):", G.label_int("p3+", "p5+"))

# 2-adic Hilbert symbols on the square classes of Q_2(sqrt 5).
print("Hilbert table:", hilbert_table_check())

rep = experiment_reciprocity(-11, 5000)
print(rep.summary())

# Find a place with prescribed labels towards the two infinite vertices.
oracle = ArithmeticOracle(K, 2, 2, 1000)
q = ExtensionQuery(("inf1", "inf2"), 1, 1, {"inf1": 0, "inf2": 0}, {"inf1": 0, "inf2": 1})
res = weakrado_probe(oracle, q)
print("witness:", res.witness, "after scanning", res.scanned, "places")
