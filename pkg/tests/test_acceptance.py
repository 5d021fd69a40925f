"""The eleven acceptance criteria; each test prints one PASS/FAIL line."""

from __future__ import annotations

import time

import numpy as np
import pytest

from nilrado import quadfield as qf
from nilrado.graph import sample_random, validate
from nilrado.grpcoh import FinAbGroup, carry_cocycle, class_order, h2_census
from nilrado.harness import (experiment_backforth, experiment_chebotarev, experiment_field_iso,
                             experiment_reciprocity)
from nilrado.labels import (EXPECTED_HILBERT, anticyclotomic_character, build_arithmetic_graph_data,
                            hilbert_table_check)
from nilrado.nilgroup import build_group, reconstruction_test, roundtrip_labels

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, passed, detail):
        with capsys.disabled():
            print(f"\ncriterion {n}: {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return emit


def test_criterion_01_graph_axioms_and_sampling(report):
    t0 = time.perf_counter()
    bad = 0
    for ell, flavor in [(3, "odd"), (2, "two"), (2, "two-reciprocity")]:
        for seed in range(1000):
            bad += bool(validate(sample_random(ell, flavor, 30, 3, 4, seed)))
    dt = time.perf_counter() - t0
    report(1, bad == 0 and dt < 10, f"3000 graphs, {bad} invalid, {dt:.1f} s")


def test_criterion_02_back_and_forth_on_sampled_graphs(report):
    t0 = time.perf_counter()
    rep = experiment_backforth(3, "odd", 200, 2, 2, rounds=20, seeds=100, seed=0)
    dt = time.perf_counter() - t0
    v = rep.verdicts[0]
    report(2, v.passed and dt < 60,
           f"{v.detail} verified over 20 rounds, median failing round "
           f"{rep.aggregate['median_failed_round']}, {dt:.1f} s")


def test_criterion_03_group_law_exactness(report):
    t0 = time.perf_counter()
    fails = []
    triples = 0
    for ell, flavor in [(2, "two-reciprocity"), (3, "odd")]:
        for seed in range(5):
            g = sample_random(ell, flavor, 4, 2, 2, seed)
            G = build_group(g.subgraph(g.finite_ids[:4]))
            assert G.n <= 6
            rng = np.random.default_rng(seed)
            for _ in range(1000):
                a, b, c = (G.random_element(rng) for _ in range(3))
                triples += 1
                if G.mul(G.mul(a, b), c) != G.mul(a, G.mul(b, c)):
                    fails.append("associativity")
                if not G.mul(a, G.inv(a)).is_identity():
                    fails.append("inverse")
                if not G.commutator(a, G.commutator(b, c)).is_identity():
                    fails.append("class 2")
                # commutator of pure lifts is the determinant pairing
                x, y = G.element(rho=a.rho), G.element(rho=b.rho)
                det = {k: a.rho.get(k[0], 0) * b.rho.get(k[1], 0) - a.rho.get(k[1], 0) * b.rho.get(k[0], 0)
                       for k in G.pairs}
                if G.commutator(x, y) != G.element(mu=det):
                    fails.append("determinant pairing")
            for i in range(G.n):
                for j in range(i + 1, G.n):
                    cm = G.commutator(G.standard_lift(i), G.standard_lift(j))
                    if (i, j) in G.pairs and cm != G.element(mu={(i, j): 1}):
                        fails.append("lift commutator")
    dt = time.perf_counter() - t0
    report(3, not fails, f"{triples} triples, {len(fails)} violations, {dt:.1f} s")


def test_criterion_04_label_roundtrip(report):
    bad = 0
    for ell, flavor in [(3, "odd"), (2, "two"), (2, "two-reciprocity")]:
        for seed in range(100):
            g = sample_random(ell, flavor, 2, 2, 2, seed)
            bad += not roundtrip_labels(build_group(g)).same_as(g)
    report(4, bad == 0, f"300 graphs, {bad} mismatches")


def test_criterion_05_cohomology_census(report):
    t0 = time.perf_counter()
    klein = h2_census(FinAbGroup(2, (1, 1)), 1, method="exhaustive")
    cyc = h2_census(FinAbGroup(3, (1,)), 1, method="exhaustive")
    orders = {(ell, f, g): class_order(carry_cocycle(f, g, ell))
              for ell in (2, 3) for f in (1, 2) for g in range(1, ell**f) if g % ell}
    carry_ok = all(o == ell**f for (ell, f, _), o in orders.items())
    dt = time.perf_counter() - t0
    ok = (klein.H2 == 8 == klein.Ext * klein.Hom_wedge and cyc.H2 == 3 == cyc.Ext * cyc.Hom_wedge
          and carry_ok and dt < 10)
    report(5, ok, f"|H2((Z/2)^2, Z/2)| = {klein.H2}, |H2(Z/3, Z/3)| = {cyc.H2}, "
                  f"{len(orders)} carry classes of order ell^f: {carry_ok}, {dt:.1f} s")


def test_criterion_06_arithmetic_graph_at_two(report):
    t0 = time.perf_counter()
    details, ok = [], True
    for d in (-11, -19):
        rep = experiment_reciprocity(d, 20000)
        ok &= rep.ok
        a = rep.aggregate
        details.append(f"d={d}: {a['places']} places, reciprocity {a['reciprocity_violations']}, "
                       f"parity {a['parity_violations']}, cyclotomic {a['cyclotomic_violations']}, "
                       f"Legendre {a['legendre_mismatches']}")
    dt = time.perf_counter() - t0
    report(6, ok and dt < 120, "; ".join(details) + f"; {dt:.1f} s")


def test_criterion_07_hilbert_table(report):
    t0 = time.perf_counter()
    table = hilbert_table_check()
    dt = time.perf_counter() - t0
    ok = [tuple(r) for r in table] == [tuple(r) for r in EXPECTED_HILBERT] and dt < 30
    report(7, ok, f"{table}, {dt:.1f} s")


def test_criterion_08_weak_rado_probe(report):
    t0 = time.perf_counter()
    rep = experiment_chebotarev(-11, 2, {"n": 1, "S": 3}, 10**5, 100, seed=0)
    dt = time.perf_counter() - t0
    report(8, rep.ok and dt < 300, "; ".join(f"{v.name}: {v.detail}" for v in rep.verdicts) + f"; {dt:.1f} s")


def test_criterion_09_cross_field_isomorphism(report):
    t0 = time.perf_counter()
    rep = experiment_field_iso(-11, -19, 2, 6, 10**5, 2, spot_checks=1000, seed=0)
    rej = experiment_field_iso(-11, -7, 2, 6, 10**5, 2)
    dt = time.perf_counter() - t0
    rejected = not rej.ok and rej.aggregate["scanned"] == 0 and "-7" in rej.aggregate["rejected"]
    detail = "; ".join(f"{v.name}: {v.detail}" for v in rep.verdicts)
    report(9, rep.ok and rejected and dt < 600,
           f"{detail}; Q(sqrt -7) rejected before scanning: {rejected}; {dt:.1f} s")


def test_criterion_10_anticyclotomic_row(report):
    fails = []
    rng = np.random.default_rng(0)
    for d, ell in [(-11, 3), (-11, 2), (-19, 2)]:
        K = qf.field_init(d)
        places = qf.places_upto(K, ell, 20000)
        chi = anticyclotomic_character(K, ell, places, digits=4)
        mod = ell**4
        done = 0
        while done < 1000:
            x1, y1, x2, y2 = (int(t) for t in rng.integers(-500, 500, 4))
            a = qf.QuadInt(2 * x1 + y1, y1)
            b = qf.QuadInt(2 * x2 + y2, y2)
            if K.norm(a) % ell == 0 or K.norm(b) % ell == 0:
                continue
            done += 1
            if (chi.psi(K.mul(a, b), 4) - chi.psi(a, 4) - chi.psi(b, 4)) % mod:
                fails.append(f"homomorphism d={d} ell={ell}")
            if (chi.psi(K.conj(a), 4) + chi.psi(a, 4)) % mod:
                fails.append(f"antisymmetry d={d} ell={ell}")
        if ell == 2:
            for pl in places[:500]:
                if chi.value(pl.alpha, 1, pl.q) != ((pl.q - 1) // 2) % 2:
                    fails.append(f"calibration d={d} at {pl.id}")
    report(10, not fails, f"3 x 1000 pairs at precision ell^4, 2 x 500 calibration places, "
                          f"{len(fails)} exceptions")


def test_criterion_11_reconstruction(report):
    t0 = time.perf_counter()
    K = qf.field_init(-11)
    G3 = build_arithmetic_graph_data(K, 3, 3000, 3).graph
    level2 = [v for v in G3.finite_ids if G3.f_of(v) == 2][:4]
    odd = reconstruction_test(build_group(G3.subgraph(level2)))
    G2 = build_arithmetic_graph_data(K, 2, 300, 2).graph
    two = reconstruction_test(build_group(G2.subgraph(G2.finite_ids[:5])))
    dt = time.perf_counter() - t0
    ok = (odd["cyclotomic_ok"] and odd["anticyclotomic_fails"] and odd["witness"] is not None
          and two["unique"] and two["equals_parity_row"] and dt < 120)
    report(11, ok, f"ell=3 on {level2}: cyclotomic passes {odd['cyclotomic_ok']}, anticyclotomic fails "
                   f"with witness {odd['witness']}; ell=2: unique match {two['matches']}; {dt:.1f} s")
