from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilrado.graph import (DecoratedGraph, ExtensionQuery, InvalidQuery, ScalingVector, cyclotomic_value,
                           derive_rado_scaling, query_for_vertex, random_query_for, sample_random, scale,
                           solve_extension, units_mod, validate, validate_query, witness_ok)

from oracles import log_fraction

CONFIGS = [(3, "odd", 2), (5, "odd", 2), (2, "two", 3), (2, "two-reciprocity", 3)]


def sample(ell, flavor, max_f, supply=20, cap=None, seed=0):
    return sample_random(ell, flavor, supply, max_f, cap or max(2, max_f), seed)


def axioms(graph):
    return {v.axiom for v in validate(graph)}


@pytest.mark.parametrize("ell,flavor,max_f", CONFIGS)
def test_samples_are_valid(ell, flavor, max_f):
    g = sample(ell, flavor, max_f)
    assert validate(g) == []
    assert g.n == 2 + 20 * max_f


def test_cyclotomic_value_matches_series_oracle():
    for ell, f, g in [(3, 1, 1), (3, 2, 4), (2, 2, 1), (2, 3, 5), (5, 1, 3), (2, 4, 3)]:
        assert cyclotomic_value(ell, f, g, f) == log_fraction(1 + g * ell**f, ell, f)
    assert cyclotomic_value(3, 2, 4, 2) == 3
    assert cyclotomic_value(2, 4, 3, 4) == 12


def test_json_roundtrip():
    g = sample(2, "two-reciprocity", 3)
    h = DecoratedGraph.from_json(json.loads(json.dumps(g.to_json())))
    assert h.same_as(g)
    assert validate(h) == []


def perturbed(g, i, j, delta=1):
    lab = g.labels.copy()
    lab[i, j] = (lab[i, j] + delta) % g.moduli[i, j]
    return g.with_labels(lab)


def test_validate_detects_cyclotomic_row_change():
    g = sample(3, "odd", 2)
    assert "cyclotomic row" in axioms(perturbed(g, 0, 5))


def test_validate_detects_zero_column_change():
    g = sample(3, "odd", 2)
    assert "zero column" in axioms(perturbed(g, 5, 1))


def test_validate_detects_parity_change():
    g = sample(2, "two", 2)
    assert "parity axiom" in axioms(perturbed(g, 1, 4))


def test_validate_detects_reciprocity_change():
    g = sample(2, "two-reciprocity", 2)
    assert axioms(perturbed(g, 4, 7)) == {"reciprocity"}
    # the plain two flavor does not constrain the pair
    h = sample(2, "two", 2)
    assert validate(perturbed(h, 4, 7)) == []


def test_validate_structural_problems():
    g = sample(3, "odd", 1)
    bad_g = DecoratedGraph(g.ell, g.flavor, g.cap, g.ids, g.f, np.where(g.f > 0, 3, 0), g.labels)
    assert "g not a unit" in axioms(bad_g)
    lab = g.labels.copy()
    lab[3, 4] = 99
    assert "label out of range" in axioms(g.with_labels(lab))
    three_inf = DecoratedGraph(g.ell, g.flavor, g.cap, g.ids, np.where(np.arange(g.n) == 2, 0, g.f),
                               g.g, g.labels)
    assert "infinity fiber has size 2" in axioms(three_inf)
    mismatched = DecoratedGraph(2, "odd", g.cap, g.ids, g.f, g.g, g.labels)
    assert "flavor/prime mismatch" in axioms(mismatched)


def test_sampler_rejects_bad_parameters():
    with pytest.raises(ValueError):
        sample_random(2, "odd", 5, 1, 2, 0)
    with pytest.raises(ValueError):
        sample_random(3, "odd", 5, 3, 2, 0)


def test_sampler_is_reproducible():
    assert sample(3, "odd", 2, seed=7).same_as(sample(3, "odd", 2, seed=7))
    assert not sample(3, "odd", 2, seed=7).same_as(sample(3, "odd", 2, seed=8))


def test_sampler_labels_and_units_are_uniform():
    g = sample_random(3, "odd", 300, 2, 2, 1)
    fin = g.finite
    f2 = fin[g.f[fin] == 2]
    counts = np.bincount(g.g[f2], minlength=9)[units_mod(3, 2)]
    expected = len(f2) / 6
    assert np.all(np.abs(counts - expected) < 4 * np.sqrt(expected))
    sub = g.labels[np.ix_(f2, f2)]
    off = sub[~np.eye(len(f2), dtype=bool)]
    counts = np.bincount(off, minlength=9)
    expected = len(off) / 9
    assert np.all(np.abs(counts - expected) < 4 * np.sqrt(expected))


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(CONFIGS), st.integers(0, 10**6), st.integers(0, 10**6))
def test_scaling_preserves_axioms_and_composes(cfg, seed, seed2):
    ell, flavor, max_f = cfg
    g = sample(ell, flavor, max_f, supply=6, seed=seed)
    rng = np.random.default_rng(seed2)

    def rand_scaling():
        vals = {}
        for i in g.finite:
            u = units_mod(ell, int(g.prec[i]))
            vals[g.ids[i]] = int(u[rng.integers(len(u))])
        return ScalingVector(vals)

    a, b = rand_scaling(), rand_scaling()
    assert validate(scale(g, a)) == []
    assert scale(scale(g, a), b).same_as(scale(g, a.compose(b, g)))
    assert scale(g, ScalingVector.ones(g)).same_as(g)


def test_scale_rejects_non_units_and_partial_vectors():
    g = sample(3, "odd", 1, supply=3)
    with pytest.raises(ValueError):
        scale(g, ScalingVector({v: 3 for v in g.finite_ids}))
    with pytest.raises(ValueError):
        scale(g, ScalingVector({g.finite_ids[0]: 1}))


@pytest.mark.parametrize("ell,flavor,max_f", CONFIGS)
def test_a_vertex_answers_its_own_query(ell, flavor, max_f):
    g = sample(ell, flavor, max_f)
    S = list(g.ids[:2]) + list(g.finite_ids[:4])
    v = g.finite_ids[10]
    q = query_for_vertex(g, v, S)
    validate_query(g, q)
    assert v in [w.vertex for w in solve_extension(g, q)]
    hits = solve_extension(g, q, mode="up_to_scaling")
    assert any(w.vertex == v and w.gamma == 1 for w in hits)


def test_up_to_scaling_finds_a_scaled_vertex():
    g = sample(3, "odd", 2)
    S = list(g.ids[:2]) + list(g.finite_ids[:3])
    v = next(x for x in g.finite_ids[10:] if g.f_of(x) == 2)
    q = query_for_vertex(g, v, S)
    outs = {s: (2 * val) % 9 if s not in g.ids[:2] else 0 for s, val in q.out_labels.items()}
    outs = {s: val % (3 ** min(2, int(g.prec[g.index[s]]))) for s, val in outs.items()}
    q2 = ExtensionQuery(q.S, q.n, q.alpha, outs, q.in_labels)
    hits = {w.vertex: w.gamma for w in solve_extension(g, q2, mode="up_to_scaling")}
    assert v in hits
    assert witness_ok(g, q2, v, hits[v])
    assert hits[v] % 9 == 2


def test_random_queries_are_valid():
    rng = np.random.default_rng(3)
    for ell, flavor, max_f in CONFIGS:
        g = sample(ell, flavor, max_f)
        S = list(g.ids[:2]) + list(g.finite_ids[:5])
        for n in range(1, max_f + 2):
            validate_query(g, random_query_for(g, rng, S, n))


def base_query(g):
    S = list(g.ids[:2]) + list(g.finite_ids[:2])
    return query_for_vertex(g, g.finite_ids[5], S)


def replace(q, **kw):
    d = dict(S=q.S, n=q.n, alpha=q.alpha, out_labels=dict(q.out_labels), in_labels=dict(q.in_labels))
    d.update(kw)
    return ExtensionQuery(**d)


def clause(g, q):
    with pytest.raises(InvalidQuery) as exc:
        validate_query(g, q)
    return exc.value.clause


def test_invalid_queries_name_their_clause():
    g = sample(3, "odd", 1)
    q = base_query(g)
    assert clause(g, replace(q, S=q.S[2:])) == "subset"
    assert clause(g, replace(q, S=q.S + ("nope",))) == "subset"
    assert clause(g, replace(q, alpha=3)) == "generator"
    assert clause(g, replace(q, n=0)) == "level"
    outl = dict(q.out_labels)
    outl["inf1"] = 1
    assert clause(g, replace(q, out_labels=outl)) == "zero column"
    inl = dict(q.in_labels)
    inl["inf1"] = (inl["inf1"] + 1) % 3
    assert clause(g, replace(q, in_labels=inl)) == "cyclotomic row"
    inl = dict(q.in_labels)
    inl[q.S[2]] = 7
    assert clause(g, replace(q, in_labels=inl)) == "labels"


def test_invalid_queries_at_two():
    g = sample(2, "two-reciprocity", 2)
    q = base_query(g)
    inl = dict(q.in_labels)
    inl["inf2"] ^= 1
    assert clause(g, replace(q, in_labels=inl)) == "parity axiom"
    s = q.S[2]
    inl = dict(q.in_labels)
    inl[s] ^= 1
    assert clause(g, replace(q, in_labels=inl)) == "reciprocity"


def test_derive_rado_scaling():
    g = sample(3, "odd", 2)
    S = list(g.ids[:2]) + list(g.finite_ids[:3])
    book = []
    for v in g.finite_ids[10:14]:
        q = query_for_vertex(g, v, S)
        book.append((q, v, 1))
    gamma = derive_rado_scaling(g, book)
    assert all(gamma[v] == 1 for v in g.finite_ids)
    with pytest.raises(ValueError):
        derive_rado_scaling(g, book + [book[0]])
    q0, v0, _ = book[0]
    with pytest.raises(ValueError):
        derive_rado_scaling(g, [(q0, v0, 3)])
