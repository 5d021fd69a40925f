"""Experiment runners producing JSON reports with pass/fail verdicts."""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from nilrado import quadfield as qf
from nilrado.backforth import (BackForthResult, PartialIso, oracle_subgraph, run_back_and_forth,
                               verify_partial_iso)
from nilrado.ffield import legendre, primes_upto
from nilrado.graph import (InvalidQuery, cyclotomic_value, random_query_for, sample_random,
                           solve_extension, units_mod, validate)
from nilrado.labels import (ArithmeticOracle, build_arithmetic_graph_data, chebotarev_marginals,
                            random_arithmetic_query, weakrado_probe)
from nilrado.nilgroup import GroupMap, build_group
from nilrado.resring import cyclotomic_log

SCHEMA = "nilrado.report/1"


@dataclass
class Verdict:
    criterion: int
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ExperimentReport:
    experiment: str
    parameters: dict
    outcomes: list = field(default_factory=list)
    aggregate: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def ok(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, name: str) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "experiment": self.experiment, "parameters": self.parameters,
                "outcomes": self.outcomes, "aggregate": self.aggregate,
                "verdicts": [asdict(v) for v in self.verdicts], "ok": self.ok,
                "wall_clock": round(self.wall_clock, 3)}

    def summary(self) -> str:
        lines = [f"{self.experiment}  ({self.wall_clock:.1f} s)"]
        for v in self.verdicts:
            mark = "PASS" if v.passed else "FAIL"
            lines.append(f"  [{mark}] criterion {v.criterion}: {v.name}  {v.detail}")
        return "\n".join(lines)


def within_sigma(observed: int, total: int, p: float, k: float = 3.0) -> tuple:
    """(ok, z) for a binomial count against success probability p."""
    if total == 0:
        return False, float("nan")
    sd = math.sqrt(total * p * (1 - p))
    if sd == 0:
        return observed == total * p, 0.0
    z = (observed - total * p) / sd
    return abs(z) <= k, z


# probability-1 sampling


def match_probability(ell: int, flavor: str, cap: int, query, prec_of) -> float:
    """Chance that a sampled vertex of level n outside S satisfies an exact-mode query."""
    n = query.n
    digits = min(n, cap)
    p = 1 / len(units_mod(ell, n))
    v1, v2 = query.S[0], query.S[1]
    for s in query.S:
        m = ell ** min(digits, prec_of(s))
        if s == v1:
            p *= 1 if (ell != 2 or n >= 2) else 1 / m
        elif s == v2:
            p *= 1 / m if ell != 2 else 2 / m
        else:
            p *= (2 if flavor == "two-reciprocity" else 1) / (m * m)
    return p


def _prob1_trial(args) -> dict:
    ell, flavor, supply, max_f, cap, query_depth, n, queries, seed, t = args
    graph = sample_random(ell, flavor, supply, max_f, cap, [seed, t])
    rng = np.random.default_rng([seed, t, 1])
    fin = graph.finite_ids
    succ, pred = 0, []
    for _ in range(queries):
        k = min(query_depth - 2, len(fin))
        S = list(graph.ids[:2]) + [fin[i] for i in rng.choice(len(fin), k, replace=False)] if k > 0 \
            else list(graph.ids[:2])
        q = random_query_for(graph, rng, S, n)
        succ += bool(solve_extension(graph, q, "exact"))
        rho = match_probability(ell, flavor, cap, q, lambda s: int(graph.prec[graph.index[s]]))
        supply_n = sum(1 for v in fin if graph.f_of(v) == n and v not in S)
        pred.append(1 - (1 - rho) ** supply_n)
    return {"trial": t, "queries": queries, "successes": succ, "predicted": float(np.mean(pred)),
            "predicted_var": float(np.sum([x * (1 - x) for x in pred]))}


def experiment_prob1(ell: int, flavor: str, supply: int, max_f: int, cap: int, trials: int,
                     query_depth: int, seed: int, n: int = 1, queries: int = 100,
                     jobs: int = 1) -> ExperimentReport:
    t0 = time.perf_counter()
    params = dict(ell=ell, flavor=flavor, supply=supply, max_f=max_f, cap=cap, trials=trials,
                  query_depth=query_depth, seed=seed, n=n, queries=queries)
    work = [(ell, flavor, supply, max_f, cap, query_depth, n, queries, seed, t) for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            outcomes = list(ex.map(_prob1_trial, work))
    else:
        outcomes = [_prob1_trial(w) for w in work]
    total = sum(o["queries"] for o in outcomes)
    succ = sum(o["successes"] for o in outcomes)
    pred = sum(o["predicted"] * o["queries"] for o in outcomes) / total if total else 0.0
    var = sum(o["predicted_var"] for o in outcomes)
    rate = succ / total if total else 0.0
    z = (succ - pred * total) / math.sqrt(var) if var > 0 else (0.0 if succ == pred * total else math.inf)
    rep = ExperimentReport("prob1", params, outcomes,
                           {"queries": total, "successes": succ, "rate": rate, "predicted_rate": pred,
                            "z": z})
    rep.verdicts.append(Verdict(2, "success rate matches the finite-supply prediction (3 sigma)",
                                abs(z) <= 3, f"rate {rate:.4f} vs predicted {pred:.4f}, z = {z:.2f}"))
    rep.wall_clock = time.perf_counter() - t0
    return rep


def experiment_backforth(ell: int, flavor: str, supply: int, max_f: int, cap: int, rounds: int,
                         seeds: int, seed: int, mode: str = "exact", need: float = 0.99) -> ExperimentReport:
    t0 = time.perf_counter()
    params = dict(ell=ell, flavor=flavor, supply=supply, max_f=max_f, cap=cap, rounds=rounds,
                  seeds=seeds, seed=seed, mode=mode)
    outcomes = []
    for k in range(seeds):
        A = sample_random(ell, flavor, supply, max_f, cap, [seed, k, 0])
        B = sample_random(ell, flavor, supply, max_f, cap, [seed, k, 1])
        res = run_back_and_forth(A, B, rounds, mode)
        bad = verify_partial_iso(A, B, res.iso)
        outcomes.append({"seed": k, "completed": res.ok, "rounds": res.iso.rounds,
                         "failed_round": None if res.ok else res.failure["round"],
                         "discrepancies": len(bad)})
    good = sum(o["completed"] and o["discrepancies"] == 0 for o in outcomes)
    fails = [o["failed_round"] for o in outcomes if o["failed_round"] is not None]
    rep = ExperimentReport("backforth", params, outcomes,
                           {"verified": good, "seeds": seeds,
                            "median_failed_round": float(np.median(fails)) if fails else None})
    rep.verdicts.append(Verdict(2, f"{rounds} rounds verified in >= {need:.0%} of seeds",
                                good >= math.ceil(need * seeds), f"{good}/{seeds}"))
    rep.wall_clock = time.perf_counter() - t0
    return rep


# arithmetic experiments


def _eligible(d: int, ell: int) -> tuple:
    try:
        K = qf.field_init(d)
    except qf.FieldError as e:
        return None, [str(e)]
    el = qf.eligibility(K, ell)
    return (K if el.ok else None), list(el.reasons)


def legendre_parity(K: qf.QuadField, v: qf.PlaceData, w: qf.PlaceData, e2w: int) -> int:
    """lambda(v, w) mod 2 recomputed from Legendre symbols (sign-free, no discrete logs)."""
    p = v.p
    if v.split_type == "split":
        x = (w.alpha.x + w.alpha.y * v.root) * pow(2, -1, p) % p
    else:
        # alpha is a square in F_p^2 iff its norm is a square in F_p
        x = K.norm(w.alpha) % p
    bit = 0 if legendre(x, p) == 1 else 1
    if v.f == 1:
        bit ^= e2w
    return bit


def experiment_reciprocity(d: int, prime_bound: int, cap: int = 4, flip: str | None = None,
                           legendre_rows: int = 200) -> ExperimentReport:
    t0 = time.perf_counter()
    params = dict(d=d, ell=2, prime_bound=prime_bound, cap=cap, flip=flip)
    K, reasons = _eligible(d, 2)
    if K is None:
        rep = ExperimentReport("reciprocity", params, aggregate={"rejected": reasons})
        rep.verdicts.append(Verdict(6, "field eligible at 2", False, "; ".join(reasons)))
        rep.wall_clock = time.perf_counter() - t0
        return rep
    AG = build_arithmetic_graph_data(K, 2, prime_bound, cap, e2_flip=(flip,) if flip else ())
    G = AG.graph
    viol = validate(G)
    kinds = {}
    for v in viol:
        kinds[v.axiom] = kinds.get(v.axiom, 0) + 1
    lab, fin = G.labels, G.finite
    par = lab[1, fin] % 2
    # independent recomputation of the same identities
    cyc_bad = sum(1 for i, pl in zip(fin, AG.places)
                  if pl.f >= 2 and lab[0, i] != cyclotomic_value(2, pl.f, pl.g, int(G.prec[i])))
    cyc_log_bad = sum(1 for i, pl in zip(fin, AG.places)
                      if lab[0, i] != cyclotomic_log(pl.q, 2, int(G.prec[i])))
    parity_bad = int(((par == 1) != (G.f[fin] == 1)).sum())
    sub = lab[np.ix_(fin, fin)] % 2
    lhs = (sub + sub.T + np.outer(par, par)) % 2
    np.fill_diagonal(lhs, 0)
    bad_pairs = list(zip(*np.nonzero(np.triu(lhs))))
    e2s = AG.e2_values
    # Legendre-symbol oracle for the mod-2 labels on the first rows
    leg_bad = 0
    rows = min(legendre_rows, len(AG.places))
    for a in range(rows):
        v = AG.places[a]
        for b, w in enumerate(AG.places):
            if a != b and legendre_parity(K, v, w, e2s[b]) != sub[a, b]:
                leg_bad += 1
    dump = []
    for a, b in bad_pairs[:20]:
        v, w = AG.places[a], AG.places[b]
        dump.append({"pair": [v.id, w.id], "lambda_vw": int(lab[fin[a], fin[b]]),
                     "lambda_wv": int(lab[fin[b], fin[a]]), "parity_v": int(par[a]),
                     "parity_w": int(par[b]), "alpha_v": v.alpha.to_json(), "alpha_w": w.alpha.to_json(),
                     "e2_v": int(e2s[a]), "e2_w": int(e2s[b]), "q_v": v.q, "q_w": w.q})
    rep = ExperimentReport("reciprocity", params, dump,
                           {"places": len(AG.places), "pairs": len(fin) * (len(fin) - 1) // 2,
                            "reciprocity_violations": len(bad_pairs), "parity_violations": parity_bad,
                            "cyclotomic_violations": cyc_bad + cyc_log_bad,
                            "legendre_mismatches": leg_bad, "legendre_rows": rows,
                            "validate": kinds, "anticyclotomic": AG.anticyclotomic.calibration})
    rep.verdicts += [
        Verdict(6, "reciprocity identity", not bad_pairs, f"{len(bad_pairs)} violations"),
        Verdict(6, "parity axiom", parity_bad == 0, f"{parity_bad} violations"),
        Verdict(6, "cyclotomic row", cyc_bad + cyc_log_bad == 0, f"{cyc_bad + cyc_log_bad} violations"),
        Verdict(6, "Legendre recomputation of mod-2 labels", leg_bad == 0,
                f"{leg_bad} mismatches over {rows} rows"),
    ]
    rep.wall_clock = time.perf_counter() - t0
    return rep


def experiment_field_iso(d1: int, d2: int, ell: int, rounds: int, prime_bound: int, cap: int,
                         spot_checks: int = 1000, seed: int = 0) -> ExperimentReport:
    t0 = time.perf_counter()
    params = dict(d1=d1, d2=d2, ell=ell, rounds=rounds, prime_bound=prime_bound, cap=cap,
                  spot_checks=spot_checks, seed=seed)
    K1, r1 = _eligible(d1, ell)
    K2, r2 = _eligible(d2, ell)
    if K1 is None or K2 is None:
        rej = {str(d): r for d, K, r in ((d1, K1, r1), (d2, K2, r2)) if K is None}
        rep = ExperimentReport("field_iso", params, aggregate={"rejected": rej, "scanned": 0})
        rep.verdicts.append(Verdict(9, "both fields eligible", False, str(rej)))
        rep.wall_clock = time.perf_counter() - t0
        return rep
    A = ArithmeticOracle(K1, ell, cap, prime_bound)
    B = ArithmeticOracle(K2, ell, cap, prime_bound) if d2 != d1 else A
    if d1 == d2:
        # the identity on the first places; fresh-witness search would skip every vertex of S
        ids = list(itertools.islice(A.finite_order(), rounds))
        iso = PartialIso(list(zip(A.inf_ids, A.inf_ids)) + [(v, v) for v in ids], len(ids),
                         "up_to_scaling", {v: 1 for v in ids}, True)
        res = BackForthResult(iso, [{"round": r + 1, "identity": v} for r, v in enumerate(ids)], None)
    else:
        res = run_back_and_forth(A, B, rounds, "up_to_scaling", oriented=True)
    bad = verify_partial_iso(A, B, res.iso)
    ga = oracle_subgraph(A, [a for a, _ in res.iso.pairs])
    gb = oracle_subgraph(B, [b for _, b in res.iso.pairs])
    GA, GB = build_group(ga), build_group(gb)
    psi = GroupMap(GB, GA, [(GA.index[a], GB.index[b]) for a, b in res.iso.pairs],
                   {GB.index[b]: u for b, u in res.iso.scaling.items()})
    hom = psi.spot_check(spot_checks, seed)
    scans = [p.to_json() for p in A.probes + B.probes]
    rep = ExperimentReport("field_iso", params, res.trace,
                           {"completed_rounds": res.iso.rounds, "failure": res.failure,
                            "pairs": [list(p) for p in res.iso.pairs],
                            "scaling": {k: int(v) for k, v in res.iso.scaling.items()},
                            "scanned": sum(s["scanned"] for s in scans), "probes": scans,
                            "discrepancies": [str(x) for x in bad], "homomorphism": hom,
                            "group_orders": [str(GB.order), str(GA.order)]})
    detail = "identity (same field)" if d1 == d2 else "complete" if res.ok else (f"no witness below {prime_bound} at round {res.failure['round']} "
                                        f"({res.failure['side']})")
    rep.verdicts += [
        Verdict(9, f"{rounds} back-and-forth rounds", res.ok, detail),
        Verdict(9, "partial isomorphism verified", not bad, f"{len(bad)} discrepancies"),
        Verdict(9, "induced group map is a homomorphism", hom["ok"],
                f"{hom['failures']} failures in {hom['samples']} pairs"),
    ]
    rep.wall_clock = time.perf_counter() - t0
    return rep


def experiment_chebotarev(d: int, ell: int, query_spec: dict, prime_bound: int, trials: int,
                          seed: int, need: float = 0.95) -> ExperimentReport:
    """Random admissible probes plus Dirichlet-density checks of the f and g marginals.

    The marginals are counted over every split prime up to the bound, not along the probes' scans,
    whose stopping rule biases them toward matches."""
    t0 = time.perf_counter()
    n = int(query_spec.get("n", 1))
    size = int(query_spec.get("S", 3))
    pool = int(query_spec.get("pool", 30))
    params = dict(d=d, ell=ell, query_spec=dict(query_spec), prime_bound=prime_bound, trials=trials,
                  seed=seed)
    K, reasons = _eligible(d, ell)
    if K is None:
        rep = ExperimentReport("chebotarev", params, aggregate={"rejected": reasons})
        rep.verdicts.append(Verdict(8, "field eligible", False, "; ".join(reasons)))
        rep.wall_clock = time.perf_counter() - t0
        return rep
    cap = max(2, n)
    O = ArithmeticOracle(K, ell, cap, prime_bound)
    alpha = query_spec.get("alpha")
    if alpha is not None and int(alpha) % ell == 0:
        rep = ExperimentReport("chebotarev", params, aggregate={"rejected": [f"alpha {alpha} is not a unit"],
                                                                "scanned": 0})
        rep.verdicts.append(Verdict(8, "query admissible", False, f"alpha {alpha} is not a unit"))
        rep.wall_clock = time.perf_counter() - t0
        return rep
    rng = np.random.default_rng(seed)
    first = []
    for pl in O.places():
        first.append(pl.id)
        if len(first) >= pool:
            break
    outcomes = []
    for _ in range(trials):
        extra = [first[i] for i in sorted(rng.choice(len(first), size - 2, replace=False))]
        S = list(O.inf_ids) + extra
        try:
            q = random_arithmetic_query(O, rng, S, n, alpha)
            r = weakrado_probe(O, q)
        except InvalidQuery as e:
            outcomes.append({"S": S, "rejected": str(e)})
            continue
        outcomes.append({"S": S, "query": q.to_json(), **r.to_json()})
    witnessed = sum(1 for o in outcomes if o.get("witness"))
    # marginals over split primes (one count per prime: conjugate places share f and g)
    split = f_hits = fg_hits = 0
    a_target = int(alpha) if alpha is not None else 1
    for p in primes_upto(prime_bound):
        if p in (2, ell) or qf.splitting(K, p) != "split":
            continue
        split += 1
        f, g = qf.level_and_unit(p, ell)
        if f == n:
            f_hits += 1
            fg_hits += g == a_target % ell**n
    pred = chebotarev_marginals(ell, n, a_target)
    ok_f, z_f = within_sigma(f_hits, split, pred["f"])
    ok_g, z_g = within_sigma(fg_hits, f_hits, pred["g_given_f"])
    rep = ExperimentReport("chebotarev", params, outcomes,
                           {"witnessed": witnessed, "trials": trials,
                            "split_primes": split, "f_hits": f_hits, "fg_hits": fg_hits,
                            "f_density": f_hits / split if split else None, "f_predicted": pred["f"],
                            "g_density": fg_hits / f_hits if f_hits else None,
                            "g_predicted": pred["g_given_f"], "z_f": z_f, "z_g": z_g,
                            "mean_scanned": float(np.mean([o["scanned"] for o in outcomes if "scanned" in o]))
                            if outcomes else None})
    rep.verdicts += [
        Verdict(8, f"witnessed >= {need:.0%} of probes", witnessed >= math.ceil(need * trials),
                f"{witnessed}/{trials}"),
        Verdict(8, "f-marginal within 3 sigma", ok_f, f"{f_hits}/{split} vs {pred['f']:.4f}, z = {z_f:.2f}"),
        Verdict(8, "g-marginal within 3 sigma", ok_g,
                f"{fg_hits}/{f_hits} vs {pred['g_given_f']:.4f}, z = {z_g:.2f}"),
    ]
    rep.wall_clock = time.perf_counter() - t0
    return rep
