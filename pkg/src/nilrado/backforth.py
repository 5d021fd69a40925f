"""Back-and-forth construction of partial isomorphisms between decorated graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Protocol

import numpy as np

from nilrado.graph import DecoratedGraph, ExtensionQuery, Witness, check_query, solve_extension


class GraphOracle(Protocol):
    ell: int
    flavor: str
    cap: int
    inf_ids: tuple

    def finite_order(self) -> Iterator[str]: ...

    def info(self, v) -> tuple: ...

    def prec(self, v) -> int: ...

    def label(self, v, w) -> int: ...

    def rank(self, v): ...

    def answer(self, query: ExtensionQuery, mode: str, fresh: bool = False) -> Witness | None: ...


class GraphAsOracle:
    """In-memory graph; witnesses are the first matching vertex in vertex order."""

    def __init__(self, graph: DecoratedGraph):
        self.graph = graph
        self.ell = graph.ell
        self.flavor = graph.flavor
        self.cap = graph.cap
        self.inf_ids = graph.ids[:2]

    def finite_order(self):
        return iter(self.graph.finite_ids)

    def info(self, v):
        return self.graph.f_of(v), self.graph.g_of(v)

    def prec(self, v):
        return int(self.graph.prec[self.graph.index[v]])

    def label(self, v, w):
        return self.graph.label_int(v, w)

    def rank(self, v):
        return self.graph.index[v]

    def answer(self, query, mode, fresh=False):
        """First witness in vertex order; with fresh, only vertices after all of S qualify."""
        hits = solve_extension(self.graph, query, mode)
        if fresh:
            last = max(self.graph.index[s] for s in query.S)
            hits = [h for h in hits if self.graph.index[h.vertex] > last]
        return hits[0] if hits else None

    def count_witnesses(self, query, mode="exact"):
        return len(solve_extension(self.graph, query, mode))


def as_oracle(x) -> GraphOracle:
    return GraphAsOracle(x) if isinstance(x, DecoratedGraph) else x


@dataclass
class PartialIso:
    pairs: list
    rounds: int = 0
    mode: str = "exact"
    scaling: dict = field(default_factory=dict)  # B-side units, finite matched vertices
    oriented: bool = False

    def forward(self) -> dict:
        return dict(self.pairs)

    def backward(self) -> dict:
        return {b: a for a, b in self.pairs}

    def to_json(self) -> dict:
        return {"pairs": [list(p) for p in self.pairs], "rounds": self.rounds, "mode": self.mode,
                "oriented": self.oriented, "scaling": {k: int(v) for k, v in self.scaling.items()}}


@dataclass
class BackForthResult:
    iso: PartialIso
    trace: list
    failure: dict | None = None

    @property
    def ok(self) -> bool:
        return self.failure is None

    def to_json(self) -> dict:
        return {"iso": self.iso.to_json(), "trace": self.trace, "failure": self.failure}


def _next_unmatched(order: Iterator, matched: set):
    for v in order:
        if v not in matched:
            return v
    return None


def _transport_query(src, dst, w, S_src, S_dst, out_scale, in_scale, oriented=False) -> ExtensionQuery:
    """Query for dst built from the labels of src-vertex w against S_src -> S_dst.

    With oriented, the witness will follow all of S_dst, so a pair whose order differs on the
    source side has both labels negated."""
    ell = src.ell
    n, alpha = src.info(w)
    digits = min(n, dst.cap)
    outl, inl = {}, {}
    rw = src.rank(w) if oriented else None
    for t, s in zip(S_src, S_dst):
        m = ell ** min(digits, dst.prec(s))
        sign = -1 if oriented and src.rank(t) > rw else 1
        outl[s] = sign * out_scale(s) * src.label(w, t) % m
        inl[s] = sign * in_scale(s) * src.label(t, w) % m
    return ExtensionQuery(tuple(S_dst), n, alpha % ell**n, outl, inl)


def run_back_and_forth(A, B, rounds: int, mode: str = "exact", oriented: bool = False) -> BackForthResult:
    """Alternate extensions A->B (odd rounds) and B->A (even rounds).

    oriented: match labels up to the sign of order reversal, lambda_A(a1, a2) = eps gamma lambda_B(b1, b2)
    with eps = -1 when the pair is ordered differently on the two sides; witnesses are taken after S.
    This is the form under which the matching induces a map of the truncated groups."""
    A, B = as_oracle(A), as_oracle(B)
    if (A.ell, A.flavor) != (B.ell, B.flavor):
        raise ValueError("oracles must share ell and flavor")
    if A.cap != B.cap:
        raise ValueError("oracles must share the precision cap")
    if mode not in ("exact", "up_to_scaling"):
        raise ValueError(f"unknown mode {mode}")
    ell = A.ell
    pairs = list(zip(A.inf_ids, B.inf_ids))
    iso = PartialIso(pairs, 0, mode, {}, oriented)
    trace: list = []
    orders = {"A": A.finite_order(), "B": B.finite_order()}
    for r in range(1, rounds + 1):
        matched_a = {a for a, _ in iso.pairs}
        matched_b = {b for _, b in iso.pairs}
        S_a = [a for a, _ in iso.pairs]
        S_b = [b for _, b in iso.pairs]
        gam = iso.scaling

        def inv(x):
            return pow(int(x), -1, ell**A.cap)

        if r % 2 == 1:
            w = _next_unmatched(orders["A"], matched_a)
            side = "A->B"
            if w is None:
                trace.append({"round": r, "side": side, "target_vertex": None, "exhausted": True})
                break
            q = _transport_query(A, B, w, S_a, S_b, lambda s: 1,
                                 lambda s: inv(gam.get(s, 1)), oriented)
            _check(B, q)
            hit = B.answer(q, mode, fresh=True) if oriented else B.answer(q, mode)
        else:
            w = _next_unmatched(orders["B"], matched_b)
            side = "B->A"
            if w is None:
                trace.append({"round": r, "side": side, "target_vertex": None, "exhausted": True})
                break
            back = dict(zip(S_a, S_b))
            q = _transport_query(B, A, w, S_b, S_a, lambda t: 1,
                                 lambda t: gam.get(back[t], 1), oriented)
            _check(A, q)
            hit = A.answer(q, mode, fresh=True) if oriented else A.answer(q, mode)
        entry = {"round": r, "side": side, "target_vertex": w, "query": q.to_json(),
                 "witness": None if hit is None else hit.vertex}
        if hit is None:
            trace.append(entry)
            return BackForthResult(iso, trace, {"round": r, "side": side, "target_vertex": w,
                                                "query": q.to_json()})
        if mode == "up_to_scaling":
            entry["gamma"] = hit.gamma
        trace.append(entry)
        if side == "A->B":
            iso.pairs.append((w, hit.vertex))
            if mode == "up_to_scaling":
                gam[hit.vertex] = hit.gamma % ell ** B.prec(hit.vertex)
        else:
            iso.pairs.append((hit.vertex, w))
            if mode == "up_to_scaling":
                gam[w] = pow(hit.gamma, -1, ell ** B.prec(w))
        iso.rounds = r
    return BackForthResult(iso, trace, None)


def _check(oracle, q):
    check_query(oracle.ell, oracle.flavor, oracle.cap, oracle.inf_ids, oracle.prec,
                lambda s: oracle.label(oracle.inf_ids[1], s) % 2, q)


@dataclass(frozen=True)
class Discrepancy:
    kind: str
    where: tuple
    detail: str = ""

    def __str__(self):
        return f"{self.kind} at {self.where}: {self.detail}"


def verify_partial_iso(A, B, iso: PartialIso) -> list[Discrepancy]:
    """All f, g and label mismatches; labels compared up to the iso's scaling (and orientation)."""
    A, B = as_oracle(A), as_oracle(B)
    out: list[Discrepancy] = []
    ell = A.ell
    a_side = [a for a, _ in iso.pairs]
    b_side = [b for _, b in iso.pairs]
    if len(set(a_side)) != len(a_side) or len(set(b_side)) != len(b_side):
        out.append(Discrepancy("not a bijection", ()))
    for a, b in iso.pairs:
        fa, ga = A.info(a)
        fb, gb = B.info(b)
        if fa != fb:
            out.append(Discrepancy("level", (a, b), f"{fa} != {fb}"))
        elif fa is not None and ga % ell**fa != gb % ell**fb:
            out.append(Discrepancy("generator", (a, b), f"{ga} != {gb}"))
    infs = set(A.inf_ids)
    for a1, b1 in iso.pairs:
        for a2, b2 in iso.pairs:
            if a1 == a2 or (a1 in infs and a2 in infs):
                continue
            if b1 == b2 or (b1 in set(B.inf_ids) and b2 in set(B.inf_ids)):
                out.append(Discrepancy("label", (a1, a2), "target pair carries no label"))
                continue
            m = ell ** min(A.prec(a1), A.prec(a2), B.prec(b1), B.prec(b2))
            gam = iso.scaling.get(b1, 1)
            if iso.oriented and (A.rank(a1) < A.rank(a2)) != (B.rank(b1) < B.rank(b2)):
                gam = -gam
            la = A.label(a1, a2)
            lb = B.label(b1, b2)
            if (la - gam * lb) % m:
                out.append(Discrepancy("label", (a1, a2), f"{la} != {gam}*{lb} mod {m}"))
    return out


def oracle_subgraph(oracle, ids) -> DecoratedGraph:
    """Finite decorated graph on the given vertices (plus the infinite pair), in oracle order."""
    oracle = as_oracle(oracle)
    fin = sorted((v for v in ids if v not in oracle.inf_ids), key=oracle.rank)
    order = list(oracle.inf_ids) + fin
    n = len(order)
    f = np.zeros(n, dtype=np.int64)
    g = np.zeros(n, dtype=np.int64)
    for i, v in enumerate(fin, start=2):
        f[i], g[i] = oracle.info(v)
    lab = np.zeros((n, n), dtype=np.int64)
    for i, v in enumerate(order):
        for j, w in enumerate(order):
            if i != j and not (i < 2 and j < 2):
                lab[i, j] = oracle.label(v, w)
    gr = DecoratedGraph(oracle.ell, oracle.flavor, oracle.cap, tuple(order), f, g, lab)
    return gr.with_labels(gr.labels % gr.moduli)
