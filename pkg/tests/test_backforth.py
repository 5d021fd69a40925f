from __future__ import annotations

import numpy as np
import pytest

from nilrado.backforth import (GraphAsOracle, PartialIso, oracle_subgraph, run_back_and_forth,
                               verify_partial_iso)
from nilrado.graph import DecoratedGraph, ScalingVector, sample_random, scale, units_mod, validate


def renamed(g, prefix="b"):
    ids = g.ids[:2] + tuple(prefix + v for v in g.ids[2:])
    return DecoratedGraph(g.ell, g.flavor, g.cap, ids, g.f, g.g, g.labels)


def random_scaling(g, seed):
    rng = np.random.default_rng(seed)
    vals = {}
    for i in g.finite:
        u = units_mod(g.ell, int(g.prec[i]))
        vals[g.ids[i]] = int(u[rng.integers(len(u))])
    return ScalingVector(vals)


@pytest.mark.parametrize("ell,flavor,max_f", [(3, "odd", 2), (2, "two-reciprocity", 2)])
def test_a_graph_matches_a_relabelled_copy(ell, flavor, max_f):
    g = sample_random(ell, flavor, 30, max_f, 2, 5)
    res = run_back_and_forth(g, renamed(g), 12)
    assert res.ok and res.iso.rounds == 12
    assert verify_partial_iso(g, renamed(g), res.iso) == []
    assert len(res.trace) == 12


def test_scaled_copy_matches_only_up_to_scaling():
    g = sample_random(3, "odd", 60, 1, 2, 0)
    h = renamed(scale(g, random_scaling(g, 9)))
    assert validate(h) == []
    res = run_back_and_forth(g, h, 12, mode="up_to_scaling")
    assert res.ok
    assert verify_partial_iso(g, h, res.iso) == []
    assert all("b" + a == b for a, b in res.iso.pairs[2:])
    assert not run_back_and_forth(g, h, 12, mode="exact").ok


def test_scaling_chosen_on_partial_data_can_strand_a_finite_copy():
    # the first finite vertex only meets zero columns, so its unit is unconstrained
    g = sample_random(3, "odd", 40, 2, 2, 0)
    c = random_scaling(g, 9)
    h = renamed(scale(g, c))
    res = run_back_and_forth(g, h, 10, mode="up_to_scaling")
    assert not res.ok
    assert all("b" + a == b for a, b in res.iso.pairs[2:])
    assert verify_partial_iso(g, h, res.iso) == []
    chosen = res.iso.scaling["bv0001"]
    true = pow(c["v0001"], -1, 9)
    assert chosen % 3 == true % 3 and chosen != true


@pytest.mark.parametrize("ell,flavor", [(2, "two"), (2, "two-reciprocity"), (3, "odd")])
def test_oriented_mode_on_independent_samples_verifies(ell, flavor):
    a = sample_random(ell, flavor, 300, 1, 2, 11)
    b = renamed(sample_random(ell, flavor, 300, 1, 2, 12))
    res = run_back_and_forth(a, b, 4, mode="up_to_scaling", oriented=True)
    assert res.iso.oriented and res.iso.rounds >= 2
    assert verify_partial_iso(a, b, res.iso) == []
    fwd = res.iso.forward()
    for a1, a2 in zip(list(fwd)[2:], list(fwd)[3:]):
        assert a1 != a2


def test_independent_samples_eventually_fail_with_a_failure_record():
    a = sample_random(3, "odd", 30, 2, 2, 1)
    b = renamed(sample_random(3, "odd", 30, 2, 2, 2))
    res = run_back_and_forth(a, b, 40)
    assert not res.ok
    fail = res.failure
    assert fail["round"] == res.iso.rounds + 1
    assert fail["side"] in ("A->B", "B->A")
    assert res.trace[-1]["witness"] is None
    assert verify_partial_iso(a, b, res.iso) == []


def test_verify_reports_perturbed_labels():
    g = sample_random(3, "odd", 30, 2, 2, 5)
    h = renamed(g)
    res = run_back_and_forth(g, h, 8)
    a1, b1 = res.iso.pairs[2]
    a2, b2 = res.iso.pairs[3]
    lab = h.labels.copy()
    i, j = h.index[b1], h.index[b2]
    lab[i, j] = (lab[i, j] + 1) % h.moduli[i, j]
    bad = verify_partial_iso(g, h.with_labels(lab), res.iso)
    assert [d.kind for d in bad] == ["label"]
    assert bad[0].where == (a1, a2)


def test_verify_reports_level_and_bijection_problems():
    g = sample_random(3, "odd", 5, 2, 2, 5)
    f1 = next(v for v in g.finite_ids if g.f_of(v) == 1)
    f2 = next(v for v in g.finite_ids if g.f_of(v) == 2)
    iso = PartialIso([("inf1", "inf1"), ("inf2", "inf2"), (f1, f2)])
    assert "level" in {d.kind for d in verify_partial_iso(g, g, iso)}
    iso = PartialIso([("inf1", "inf1"), ("inf2", "inf2"), (f1, f1), (f2, f1)])
    assert "not a bijection" in {d.kind for d in verify_partial_iso(g, g, iso)}


def test_mismatched_oracles_are_rejected():
    with pytest.raises(ValueError):
        run_back_and_forth(sample_random(3, "odd", 3, 1, 2, 0), sample_random(5, "odd", 3, 1, 2, 0), 2)
    with pytest.raises(ValueError):
        run_back_and_forth(sample_random(3, "odd", 3, 1, 2, 0), sample_random(3, "odd", 3, 1, 3, 0), 2)
    g = sample_random(3, "odd", 3, 1, 2, 0)
    with pytest.raises(ValueError):
        run_back_and_forth(g, g, 2, mode="fuzzy")


def test_exhaustion_is_recorded():
    g = sample_random(3, "odd", 2, 1, 2, 0)
    res = run_back_and_forth(g, renamed(g), 10)
    assert res.ok
    assert res.trace[-1].get("exhausted")


def test_fresh_answers_follow_the_query_set():
    g = sample_random(3, "odd", 50, 1, 2, 3)
    oracle = GraphAsOracle(g)
    S = list(g.ids[:2]) + [g.finite_ids[30]]
    from nilrado.graph import query_for_vertex
    q = query_for_vertex(g, g.finite_ids[40], S)
    hit = oracle.answer(q, "exact", fresh=True)
    assert g.index[hit.vertex] > g.index[g.finite_ids[30]]


def test_oracle_subgraph_matches_the_induced_subgraph():
    g = sample_random(2, "two-reciprocity", 10, 2, 3, 4)
    ids = list(reversed(g.finite_ids[3:9]))
    sub = oracle_subgraph(g, ids)
    assert sub.same_as(g.subgraph(ids))
    assert validate(sub) == []


def test_iso_json():
    g = sample_random(3, "odd", 20, 1, 2, 0)
    res = run_back_and_forth(g, renamed(g), 4, mode="up_to_scaling", oriented=True)
    obj = res.to_json()
    assert obj["iso"]["oriented"] is True and obj["failure"] is None
    assert len(obj["iso"]["pairs"]) == 6
