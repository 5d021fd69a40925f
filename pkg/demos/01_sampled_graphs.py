"""
Sampled decorated graphs and back-and-forth
===========================================

Sample a truncated graph, check its axioms, rescale it, and try to
extend partial isomorphisms between graphs.
"""

from __future__ import annotations

from nilrado.backforth import run_back_and_forth, verify_partial_iso
from nilrado.graph import ScalingVector, sample_random, scale, validate

# A graph at ell = 3: two infinite vertices plus finite vertices of level f <= 2.
A = sample_random(3, "odd", 6, 2, 2, seed=0)
print("vertices:", A.ids)
print("levels:  ", [A.f_of(v) for v in A.finite_ids])
print("axiom violations:", validate(A))

# Rescaling by units gives another valid graph.
gamma = ScalingVector({v: 2 for v in A.finite_ids})
print("scaled copy valid:", not validate(scale(A, gamma)))

# A graph is trivially isomorphic to itself; back-and-forth finds a map round by round.
res = run_back_and_forth(A, A, rounds=6)
print("self map:", res.iso.pairs, "verified:", not verify_partial_iso(A, A, res.iso))

# Two independent samples agree on small pieces only; the candidates thin out as S grows.
B = sample_random(3, "odd", 200, 2, 2, seed=1)
C = sample_random(3, "odd", 200, 2, 2, seed=2)
res = run_back_and_forth(B, C, rounds=20)
print("independent samples: completed", res.iso.rounds, "rounds, failure:", res.failure)
