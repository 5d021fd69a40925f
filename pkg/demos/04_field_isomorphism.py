"""
Comparing two fields by back-and-forth
======================================

Run alternating extensions between the graphs of Q(sqrt -11) and
Q(sqrt -19) at ell = 2, and check that the induced map of groups is a
homomorphism. With primes below 10^5 the search runs out of candidates
at round 6; the reverse order completes.
"""

from __future__ import annotations

from nilrado.harness import experiment_field_iso

for d1, d2 in [(-11, -19), (-19, -11)]:
    rep = experiment_field_iso(d1, d2, 2, 6, 10**5, 2, spot_checks=200)
    print(f"d1 = {d1}, d2 = {d2}")
    print(rep.summary())
    print("pairs:", rep.aggregate["pairs"])
    print()

# Q(sqrt -7) has 2 split, so it is rejected before any scan.
print(experiment_field_iso(-11, -7, 2, 6, 10**5, 2).summary())
