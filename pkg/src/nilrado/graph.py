"""Truncated decorated graphs: data model, axioms, scaling, extension queries, sampling."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping

import numpy as np

from nilrado.resring import Residue, log_int

FLAVORS = ("odd", "two", "two-reciprocity")
INF_IDS = ("inf1", "inf2")


class InvalidQuery(ValueError):
    """An extension query violating one of its defining clauses."""

    def __init__(self, clause: str, detail: str = ""):
        self.clause = clause
        super().__init__(f"{clause}: {detail}" if detail else clause)


class InvalidGraph(ValueError):
    pass


@lru_cache(maxsize=4096)
def cyclotomic_value(ell: int, f: int, g: int, digits: int) -> int:
    """log_ell(1 + g ell^f) in the normalized form, mod ell^digits (digits <= f)."""
    return log_int(1 + g * ell**f, ell, digits)


@dataclass(frozen=True)
class Violation:
    kind: str  # "structural" or "axiom"
    axiom: str
    where: tuple
    detail: str = ""

    def __str__(self):
        loc = ", ".join(str(x) for x in self.where)
        s = f"{self.axiom} at {loc}" if loc else self.axiom
        return f"{s} ({self.detail})" if self.detail else s


@dataclass(frozen=True, eq=False)
class DecoratedGraph:
    """Vertices 0 and 1 are the two infinite-level vertices; the rest are finite.

    f uses 0 as the infinity marker.  labels[i, j] holds lambda(i, j) reduced mod
    ell^min(prec i, prec j); the diagonal and the pair of infinite vertices hold 0.
    """

    ell: int
    flavor: str
    cap: int
    ids: tuple
    f: np.ndarray
    g: np.ndarray
    labels: np.ndarray

    @classmethod
    def build(cls, ell, flavor, cap, vertices, labels) -> DecoratedGraph:
        """vertices: iterable of (id, f or None, g or None); labels: matrix or {(v, w): int}."""
        vertices = list(vertices)
        ids = tuple(str(v[0]) for v in vertices)
        f = np.array([0 if v[1] is None else int(v[1]) for v in vertices], dtype=np.int64)
        g = np.array([0 if v[1] is None else int(v[2]) for v in vertices], dtype=np.int64)
        n = len(ids)
        if isinstance(labels, Mapping):
            index = {v: i for i, v in enumerate(ids)}
            mat = np.zeros((n, n), dtype=np.int64)
            for (a, b), val in labels.items():
                mat[index[a], index[b]] = int(val)
        else:
            mat = np.array(labels, dtype=np.int64).reshape(n, n)
        return cls(int(ell), flavor, int(cap), ids, f, g, mat)

    @property
    def n(self) -> int:
        return len(self.ids)

    @cached_property
    def index(self) -> dict:
        return {v: i for i, v in enumerate(self.ids)}

    @cached_property
    def inf_mask(self) -> np.ndarray:
        return self.f == 0

    @cached_property
    def finite(self) -> np.ndarray:
        return np.nonzero(self.f != 0)[0]

    @property
    def finite_ids(self) -> list:
        return [self.ids[i] for i in self.finite]

    @cached_property
    def prec(self) -> np.ndarray:
        return np.where(self.f == 0, self.cap, np.minimum(self.f, self.cap))

    @cached_property
    def pair_exp(self) -> np.ndarray:
        return np.minimum.outer(self.prec, self.prec)

    @cached_property
    def moduli(self) -> np.ndarray:
        return self.ell**self.pair_exp

    @cached_property
    def included(self) -> np.ndarray:
        """Mask of ordered pairs that carry a label."""
        m = ~np.eye(self.n, dtype=bool)
        inf = self.inf_mask
        m &= ~np.logical_and.outer(inf, inf)
        return m

    def f_of(self, v):
        x = int(self.f[self.index[v]])
        return None if x == 0 else x

    def g_of(self, v):
        i = self.index[v]
        return None if self.f[i] == 0 else int(self.g[i])

    def label(self, v, w) -> Residue:
        i, j = self.index[v], self.index[w]
        if not self.included[i, j]:
            raise KeyError((v, w))
        return Residue(int(self.labels[i, j]), self.ell, int(self.pair_exp[i, j]))

    def label_int(self, v, w) -> int:
        return int(self.labels[self.index[v], self.index[w]])

    def vertex_records(self) -> list:
        return [(self.ids[i], None if self.f[i] == 0 else int(self.f[i]),
                 None if self.f[i] == 0 else int(self.g[i])) for i in range(self.n)]

    def subgraph(self, ids: Iterable, cap: int | None = None) -> DecoratedGraph:
        """Induced graph on ids (the two infinite vertices are always kept)."""
        wanted = set(ids)
        keep = [i for i in range(self.n) if self.f[i] == 0 or self.ids[i] in wanted]
        cap = self.cap if cap is None else cap
        if cap > self.cap:
            raise ValueError("cannot raise the precision cap of a stored graph")
        sub = DecoratedGraph(self.ell, self.flavor, cap, tuple(self.ids[i] for i in keep),
                             self.f[keep].copy(), self.g[keep].copy(),
                             self.labels[np.ix_(keep, keep)].copy())
        return sub.with_labels(sub.labels % sub.moduli)

    def with_labels(self, labels: np.ndarray) -> DecoratedGraph:
        lab = np.where(self.included, labels, 0)
        return DecoratedGraph(self.ell, self.flavor, self.cap, self.ids, self.f, self.g, lab)

    def same_as(self, other: DecoratedGraph) -> bool:
        return (self.ell == other.ell and self.flavor == other.flavor and self.cap == other.cap
                and self.ids == other.ids and np.array_equal(self.f, other.f)
                and np.array_equal(self.g, other.g) and np.array_equal(self.labels, other.labels))

    # JSON

    def to_json(self) -> dict:
        verts = []
        for i in range(self.n):
            if self.f[i] == 0:
                verts.append({"id": self.ids[i], "f": "inf"})
            else:
                verts.append({"id": self.ids[i], "f": int(self.f[i]), "g": int(self.g[i])})
        labels = {}
        inc = self.included
        for i in range(self.n):
            for j in range(self.n):
                if inc[i, j]:
                    labels[f"{self.ids[i]}|{self.ids[j]}"] = int(self.labels[i, j])
        return {"ell": self.ell, "flavor": self.flavor, "cap": self.cap,
                "vertices": verts, "labels": labels}

    @classmethod
    def from_json(cls, obj) -> DecoratedGraph:
        if isinstance(obj, str):
            obj = json.loads(obj)
        verts = []
        for rec in obj["vertices"]:
            if rec["f"] == "inf":
                verts.append((rec["id"], None, None))
            else:
                verts.append((rec["id"], int(rec["f"]), int(rec["g"])))
        ids = [v[0] for v in verts]
        index = {v: i for i, v in enumerate(ids)}
        n = len(ids)
        mat = np.zeros((n, n), dtype=np.int64)
        present = np.zeros((n, n), dtype=bool)
        for key, val in obj["labels"].items():
            a, b = key.split("|")
            mat[index[a], index[b]] = int(val)
            present[index[a], index[b]] = True
        gr = cls.build(obj["ell"], obj["flavor"], obj["cap"], verts, mat)
        object.__setattr__(gr, "_present", present)
        return gr


@dataclass(frozen=True)
class ScalingVector:
    values: Mapping = field(default_factory=dict)

    def __getitem__(self, v):
        return self.values[v]

    def get(self, v, default=1):
        return self.values.get(v, default)

    @classmethod
    def ones(cls, graph: DecoratedGraph) -> ScalingVector:
        return cls({v: 1 for v in graph.finite_ids})

    def compose(self, other: ScalingVector, graph: DecoratedGraph) -> ScalingVector:
        out = {}
        for i in graph.finite:
            v = graph.ids[i]
            out[v] = self.get(v) * other.get(v) % graph.ell ** int(graph.prec[i])
        return ScalingVector(out)

    def to_json(self) -> dict:
        return {str(k): int(v) for k, v in self.values.items()}


# validation


def validate(graph: DecoratedGraph) -> list[Violation]:
    out: list[Violation] = []
    ell, n = graph.ell, graph.n
    if graph.flavor not in FLAVORS:
        out.append(Violation("structural", "unknown flavor", (), graph.flavor))
        return out
    if (graph.flavor == "odd") == (ell == 2):
        out.append(Violation("structural", "flavor/prime mismatch", (), f"{graph.flavor}, ell={ell}"))
    if graph.cap < 2:
        out.append(Violation("structural", "cap below 2", (), str(graph.cap)))
    if len(set(graph.ids)) != n:
        out.append(Violation("structural", "duplicate ids", ()))
    if graph.labels.shape != (n, n) or graph.f.shape != (n,) or graph.g.shape != (n,):
        out.append(Violation("structural", "shape mismatch", ()))
        return out
    inf = np.nonzero(graph.f == 0)[0]
    if len(inf) != 2:
        out.append(Violation("axiom", "infinity fiber has size 2", (), f"found {len(inf)}"))
        return out
    if list(inf) != [0, 1]:
        out.append(Violation("structural", "infinite vertices must come first", ()))
        return out
    if (graph.f < 0).any():
        out.append(Violation("structural", "negative level", ()))
        return out
    present = getattr(graph, "_present", None)
    inc = graph.included
    if present is not None:
        for i, j in zip(*np.nonzero(inc & ~present)):
            out.append(Violation("structural", "missing label", (graph.ids[i], graph.ids[j])))
        for i, j in zip(*np.nonzero(~inc & present)):
            out.append(Violation("structural", "unexpected label", (graph.ids[i], graph.ids[j])))
    for i in graph.finite:
        fi, gi = int(graph.f[i]), int(graph.g[i])
        if not (0 < gi < ell**fi) or gi % ell == 0:
            out.append(Violation("structural", "g not a unit", (graph.ids[i],), f"g={gi}, f={fi}"))
    bad = inc & ((graph.labels < 0) | (graph.labels >= graph.moduli))
    for i, j in zip(*np.nonzero(bad)):
        out.append(Violation("structural", "label out of range", (graph.ids[i], graph.ids[j]),
                             f"{graph.labels[i, j]} mod {graph.moduli[i, j]}"))
    if out:
        return out

    lab = graph.labels
    fin = graph.finite
    for k in (0, 1):
        for i in fin[lab[fin, k] != 0]:
            out.append(Violation("axiom", "zero column", (graph.ids[i], graph.ids[k])))
    for i in fin:
        fi, gi, p = int(graph.f[i]), int(graph.g[i]), int(graph.prec[i])
        w = graph.ids[i]
        if graph.flavor == "odd" or fi >= 2:
            exp = cyclotomic_value(ell, fi, gi, p)
            if lab[0, i] != exp:
                out.append(Violation("axiom", "cyclotomic row", (w,), f"{lab[0, i]} != {exp}"))
        if graph.flavor != "odd":
            if (lab[1, i] % 2 == 1) != (fi == 1):
                out.append(Violation("axiom", "parity axiom", (w,), f"lambda={lab[1, i]}, f={fi}"))
    if graph.flavor == "two-reciprocity" and len(fin) > 1:
        par = lab[1, fin] % 2
        sub = lab[np.ix_(fin, fin)] % 2
        lhs = (sub + sub.T + np.outer(par, par)) % 2
        np.fill_diagonal(lhs, 0)
        for a, b in zip(*np.nonzero(np.triu(lhs))):
            out.append(Violation("axiom", "reciprocity", (graph.ids[fin[a]], graph.ids[fin[b]])))
    return out


def scale(graph: DecoratedGraph, gamma: ScalingVector) -> DecoratedGraph:
    keys = set(gamma.values)
    fin = set(graph.finite_ids)
    if keys != fin:
        raise ValueError("scaling must be defined on exactly the finite vertices")
    col = np.ones(graph.n, dtype=np.int64)
    for i in graph.finite:
        gv = int(gamma[graph.ids[i]])
        if gv % graph.ell == 0:
            raise ValueError(f"non-unit scaling at {graph.ids[i]}")
        col[i] = gv % graph.ell ** int(graph.prec[i])
    lab = graph.labels * col[:, None] % graph.moduli
    return graph.with_labels(lab)


# extension queries


@dataclass(frozen=True)
class ExtensionQuery:
    S: tuple
    n: int
    alpha: int
    out_labels: Mapping  # lambda_s(1): the demanded lambda(v, s)
    in_labels: Mapping  # lambda_s(2): the demanded lambda(s, v)

    def to_json(self) -> dict:
        return {"S": list(self.S), "n": self.n, "alpha": self.alpha,
                "out": {str(k): int(v) for k, v in self.out_labels.items()},
                "in": {str(k): int(v) for k, v in self.in_labels.items()}}

    @classmethod
    def from_json(cls, obj) -> ExtensionQuery:
        return cls(tuple(obj["S"]), int(obj["n"]), int(obj["alpha"]),
                   {k: int(v) for k, v in obj["out"].items()},
                   {k: int(v) for k, v in obj["in"].items()})


@dataclass(frozen=True)
class Witness:
    vertex: str
    gamma: int | None = None


def query_modulus(ell: int, cap: int, n: int, prec_s: int) -> int:
    return ell ** min(n, cap, prec_s)


def check_query(ell, flavor, cap, inf_ids, prec_of, parity_of, query: ExtensionQuery) -> None:
    """Raise InvalidQuery for the first violated clause.

    prec_of(s) gives the label precision of s, parity_of(s) the parity of
    lambda(v_2(2), s) (only consulted for the reciprocity flavor).
    """
    S = list(query.S)
    v1, v2 = inf_ids
    if len(set(S)) != len(S):
        raise InvalidQuery("subset", "repeated vertices")
    if v1 not in S or v2 not in S:
        raise InvalidQuery("subset", "S must contain both infinite vertices")
    n = query.n
    if n < 1:
        raise InvalidQuery("level", f"n={n}")
    if not (0 < query.alpha < ell**n) or query.alpha % ell == 0:
        raise InvalidQuery("generator", f"alpha={query.alpha} is not a unit mod {ell}^{n}")
    for s in S:
        if s not in query.out_labels or s not in query.in_labels:
            raise InvalidQuery("labels", f"missing labels for {s}")
        m = query_modulus(ell, cap, n, prec_of(s))
        for val in (query.out_labels[s], query.in_labels[s]):
            if not 0 <= val < m:
                raise InvalidQuery("labels", f"label {val} at {s} not reduced mod {m}")
    for s in (v1, v2):
        if query.out_labels[s] != 0:
            raise InvalidQuery("zero column", f"lambda_{s}(1) must vanish")
    digits = min(n, cap)
    if ell != 2:
        exp = cyclotomic_value(ell, n, query.alpha, digits)
        if query.in_labels[v1] != exp:
            raise InvalidQuery("cyclotomic row", f"{query.in_labels[v1]} != {exp}")
        return
    if (query.in_labels[v2] % 2 == 1) != (n == 1):
        raise InvalidQuery("parity axiom", f"lambda_v2(2)={query.in_labels[v2]}, n={n}")
    if n >= 2:
        exp = cyclotomic_value(2, n, query.alpha, digits)
        if query.in_labels[v1] != exp:
            raise InvalidQuery("cyclotomic row", f"{query.in_labels[v1]} != {exp}")
    if flavor == "two-reciprocity":
        for s in S:
            if s in (v1, v2):
                continue
            lhs = query.out_labels[s] - query.in_labels[s] - parity_of(s) * (n == 1)
            if lhs % 2:
                raise InvalidQuery("reciprocity", f"coupling fails at {s}")


def validate_query(graph: DecoratedGraph, query: ExtensionQuery) -> None:
    for s in query.S:
        if s not in graph.index:
            raise InvalidQuery("subset", f"unknown vertex {s}")
    check_query(graph.ell, graph.flavor, graph.cap, graph.ids[:2],
                lambda s: int(graph.prec[graph.index[s]]),
                lambda s: int(graph.labels[1, graph.index[s]] % 2), query)


def units_mod(ell: int, e: int) -> np.ndarray:
    m = ell**e
    u = np.arange(1, m, dtype=np.int64)
    return u[u % ell != 0]


def match_rows(ell, out_rows, in_rows, want_out, want_in, mods, n_prec, mode):
    """Vectorized matching of candidate rows (k x |S|) against a query.

    Returns a list of (candidate position, gamma or None)."""
    ok_in = ((in_rows - want_in[None, :]) % mods[None, :] == 0).all(axis=1)
    if mode == "exact":
        ok = ok_in & ((out_rows - want_out[None, :]) % mods[None, :] == 0).all(axis=1)
        return [(int(k), None) for k in np.nonzero(ok)[0]]
    if mode != "up_to_scaling":
        raise ValueError(f"unknown mode {mode}")
    res = []
    gam = units_mod(ell, n_prec)
    for k in np.nonzero(ok_in)[0]:
        prod = (gam[:, None] * out_rows[k][None, :] - want_out[None, :]) % mods[None, :]
        hits = np.nonzero((prod == 0).all(axis=1))[0]
        if len(hits):
            res.append((int(k), int(gam[hits[0]])))
    return res


def solve_extension(graph: DecoratedGraph, query: ExtensionQuery, mode: str = "exact") -> list[Witness]:
    validate_query(graph, query)
    S_idx = np.array([graph.index[s] for s in query.S], dtype=np.int64)
    cand = np.ones(graph.n, dtype=bool)
    cand[S_idx] = False
    cand &= (graph.f == query.n) & (graph.g == query.alpha)
    cidx = np.nonzero(cand)[0]
    if len(cidx) == 0:
        return []
    n_prec = min(query.n, graph.cap)
    mods = np.array([graph.ell ** min(n_prec, int(graph.prec[s])) for s in S_idx], dtype=np.int64)
    want_out = np.array([query.out_labels[s] for s in query.S], dtype=np.int64)
    want_in = np.array([query.in_labels[s] for s in query.S], dtype=np.int64)
    out_rows = graph.labels[np.ix_(cidx, S_idx)]
    in_rows = graph.labels[np.ix_(S_idx, cidx)].T
    hits = match_rows(graph.ell, out_rows, in_rows, want_out, want_in, mods, n_prec, mode)
    return [Witness(graph.ids[cidx[k]], gm) for k, gm in hits]


def query_for_vertex(graph: DecoratedGraph, v, S) -> ExtensionQuery:
    """The query that v itself answers over S (useful for tests and demos)."""
    i = graph.index[v]
    n = int(graph.f[i])
    outl, inl = {}, {}
    for s in S:
        j = graph.index[s]
        m = graph.ell ** min(n, graph.cap, int(graph.prec[j]))
        outl[s] = int(graph.labels[i, j] % m)
        inl[s] = int(graph.labels[j, i] % m)
    return ExtensionQuery(tuple(S), n, int(graph.g[i]), outl, inl)


def random_query(rng: np.random.Generator, ell, flavor, cap, inf_ids, S, n, prec_of, parity_of,
                 alpha=None) -> ExtensionQuery:
    """Uniform admissible query over S at level n (forced entries computed)."""
    v1, v2 = inf_ids
    if alpha is None:
        u = units_mod(ell, n)
        alpha = int(u[rng.integers(len(u))])
    outl, inl = {}, {}
    digits = min(n, cap)
    for s in S:
        m = ell ** min(digits, prec_of(s))
        if s in (v1, v2):
            outl[s] = 0
            inl[s] = int(rng.integers(m))
        else:
            outl[s] = int(rng.integers(m))
            inl[s] = int(rng.integers(m))
            if flavor == "two-reciprocity":
                bit = (outl[s] - parity_of(s) * (n == 1)) % 2
                inl[s] = inl[s] - inl[s] % 2 + bit
    if ell != 2 or n >= 2:
        inl[v1] = cyclotomic_value(ell, n, alpha, digits)
    if ell == 2:
        x = inl[v2]
        inl[v2] = x - x % 2 + (1 if n == 1 else 0)
    return ExtensionQuery(tuple(S), n, alpha, outl, inl)


def random_query_for(graph: DecoratedGraph, rng, S, n, alpha=None) -> ExtensionQuery:
    return random_query(rng, graph.ell, graph.flavor, graph.cap, graph.ids[:2], S, n,
                        lambda s: int(graph.prec[graph.index[s]]),
                        lambda s: int(graph.labels[1, graph.index[s]] % 2), alpha)


# sampling


def unit_from_index(k, ell):
    """The k-th unit (0-based) among 1..ell^f-1 in increasing order."""
    return k + k // (ell - 1) + 1


def sample_random(ell: int, flavor: str, per_f_supply: int, max_f: int, cap: int, seed) -> DecoratedGraph:
    if flavor not in FLAVORS:
        raise ValueError(f"unknown flavor {flavor}")
    if (flavor == "odd") == (ell == 2):
        raise ValueError("flavor 'odd' needs odd ell; 'two' flavors need ell = 2")
    if per_f_supply < 0 or max_f < 1 or cap < max(2, max_f):
        raise ValueError("need per_f_supply >= 0, max_f >= 1, cap >= max(2, max_f)")
    rng = np.random.default_rng(seed)
    m = per_f_supply * max_f
    fs = np.tile(np.arange(1, max_f + 1, dtype=np.int64), per_f_supply)
    width = max(4, len(str(max(m - 1, 0))))
    ids = INF_IDS + tuple(f"v{i:0{width}d}" for i in range(m))
    f = np.concatenate([[0, 0], fs]).astype(np.int64)
    nunits = (ell - 1) * ell ** (fs - 1)
    g = np.concatenate([[0, 0], unit_from_index(rng.integers(0, nunits), ell)]).astype(np.int64)
    n = m + 2
    prec = np.where(f == 0, cap, f)
    mods = ell ** np.minimum.outer(prec, prec)
    lab = rng.integers(0, mods)
    lab[:, :2] = 0
    lab[0, 1] = lab[1, 0] = 0
    np.fill_diagonal(lab, 0)
    fin = np.arange(2, n)
    if ell != 2:
        for i in fin:
            lab[0, i] = cyclotomic_value(ell, int(f[i]), int(g[i]), int(f[i]))
    else:
        par = (f[fin] == 1).astype(np.int64)
        lab[1, fin] = lab[1, fin] - lab[1, fin] % 2 + par
        for i in fin:
            if f[i] >= 2:
                lab[0, i] = cyclotomic_value(2, int(f[i]), int(g[i]), int(f[i]))
        if flavor == "two-reciprocity" and m > 1:
            sub = lab[np.ix_(fin, fin)]
            upper = np.triu(np.ones((m, m), dtype=bool), 1)
            want = (sub.T + np.outer(par, par)) % 2  # parity forced on lambda(w, v), w > v
            low = sub - sub % 2 + want
            sub = np.where(upper.T, low, sub)
            lab[np.ix_(fin, fin)] = sub
    return DecoratedGraph(ell, flavor, cap, ids, f, g, lab)


# weak Rado -> Rado up to scaling


def witness_ok(graph: DecoratedGraph, query: ExtensionQuery, vertex, gamma) -> bool:
    validate_query(graph, query)
    i = graph.index[vertex]
    if vertex in query.S or graph.f[i] != query.n or graph.g[i] != query.alpha:
        return False
    n_prec = min(query.n, graph.cap)
    if gamma % graph.ell == 0:
        return False
    for s in query.S:
        j = graph.index[s]
        m = graph.ell ** min(n_prec, int(graph.prec[j]))
        if (graph.labels[j, i] - query.in_labels[s]) % m:
            return False
        if (gamma * graph.labels[i, j] - query.out_labels[s]) % m:
            return False
    return True


def derive_rado_scaling(graph: DecoratedGraph, witness_book) -> ScalingVector:
    seen = set()
    vals = {v: 1 for v in graph.finite_ids}
    for query, vertex, gamma in witness_book:
        if vertex in seen:
            raise ValueError(f"duplicate witness vertex {vertex}")
        seen.add(vertex)
        if not witness_ok(graph, query, vertex, gamma):
            raise ValueError(f"invalid witness {vertex} (gamma={gamma})")
        vals[vertex] = gamma % graph.ell ** int(graph.prec[graph.index[vertex]])
    return ScalingVector(vals)
