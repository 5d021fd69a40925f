"""Command line interface: nilrado <command> <subcommand> [options]."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from nilrado import grpcoh, harness, labels, nilgroup
from nilrado import quadfield as qf
from nilrado.backforth import run_back_and_forth, verify_partial_iso
from nilrado.graph import FLAVORS, DecoratedGraph, ExtensionQuery, InvalidGraph, InvalidQuery, sample_random, validate

CACHE_ENV = "NILRADO_CACHE"


def _emit(obj, args) -> None:
    text = json.dumps(obj, indent=None if getattr(args, "compact", False) else 1, default=str)
    out = getattr(args, "output", None)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _load(path: str) -> dict:
    return json.loads(Path(path).read_text())


def _ints(s: str) -> list:
    return [int(x) for x in s.split(",") if x]


# graph


def cmd_graph_sample(args) -> int:
    g = sample_random(args.ell, args.flavor, args.supply, args.max_f, args.cap, args.seed)
    _emit(g.to_json(), args)
    return 0


def cmd_graph_validate(args) -> int:
    g = DecoratedGraph.from_json(_load(args.graph))
    bad = validate(g)
    if args.summary:
        print(f"{len(bad)} violations")
        for v in bad[:20]:
            print(" ", v)
    else:
        _emit({"violations": [str(v) for v in bad], "ok": not bad}, args)
    return 0 if not bad else 1


# iso


def cmd_iso(args) -> int:
    A = DecoratedGraph.from_json(_load(args.a))
    B = DecoratedGraph.from_json(_load(args.b))
    res = run_back_and_forth(A, B, args.rounds, args.mode, oriented=args.oriented)
    bad = verify_partial_iso(A, B, res.iso)
    out = res.to_json()
    out["discrepancies"] = [str(x) for x in bad]
    if args.summary:
        state = "complete" if res.ok else f"failed at round {res.failure['round']}"
        print(f"{res.iso.rounds} rounds, {state}, {len(bad)} discrepancies")
        for a, b in res.iso.pairs:
            print(f"  {a} -> {b}")
    else:
        _emit(out, args)
    return 0 if res.ok and not bad else 1


# group


def cmd_group(args) -> int:
    g = DecoratedGraph.from_json(_load(args.graph))
    try:
        G = nilgroup.build_group(g)
    except InvalidGraph as e:
        print(f"invalid graph: {e}", file=sys.stderr)
        return 1
    out = {"ids": list(G.ids), "order": str(G.order), "kernel_order": str(G.kernel_order)}
    ok = True
    if args.action == "axioms":
        rep = nilgroup.check_rado_group_axioms(G, args.samples, args.seed)
        out["axioms"] = rep
        ok = rep["ok"]
    elif args.action == "roundtrip":
        back = nilgroup.roundtrip_labels(G, args.method)
        ok = back.same_as(g)
        out["roundtrip_exact"] = ok
    elif args.action == "reconstruct":
        out["reconstruction"] = nilgroup.reconstruction_test(G)
    elif args.action == "multiply":
        x = G.element_from_json(json.loads(args.x))
        y = G.element_from_json(json.loads(args.y))
        out["product"] = G.element_to_json(G.mul(x, y))
    _emit(out, args)
    return 0 if ok else 1


# cohom


def cmd_cohom(args) -> int:
    if args.action == "census":
        A = grpcoh.FinAbGroup(args.ell, _ints(args.exps))
        try:
            c = grpcoh.h2_census(A, args.coeff, bound=args.bound)
        except grpcoh.BoundExceeded as e:
            print(f"bound exceeded: {e}", file=sys.stderr)
            return 1
        out = {"group": f"exps {args.exps} at ell={args.ell}", "coeff_exp": args.coeff, "Z2": c.Z2,
               "B2": c.B2, "H2": c.H2, "Ext": c.Ext, "Hom_wedge": c.Hom_wedge, "method": c.method,
               "matches_ext_times_wedge": c.H2 == c.Ext * c.Hom_wedge}
        if args.summary:
            print(f"|H2| = {c.H2} = |Ext| {c.Ext} * |Hom(wedge)| {c.Hom_wedge}  ({c.method})")
            return 0
        _emit(out, args)
        return 0 if out["matches_ext_times_wedge"] else 1
    th = grpcoh.carry_cocycle(args.f, args.g, args.ell)
    order = grpcoh.class_order(th)
    _emit({"ell": args.ell, "f": args.f, "g": args.g, "class_order": order,
           "expected": args.ell**args.f}, args)
    return 0 if order == args.ell**args.f else 1


# field


def _cache_path(d, ell, bound, cap):
    root = os.environ.get(CACHE_ENV)
    if not root:
        return None
    p = Path(root)
    p.mkdir(parents=True, exist_ok=True)
    return p / f"field_d{d}_l{ell}_b{bound}_c{cap}.json"


def cmd_field_graph(args) -> int:
    cached = _cache_path(args.d, args.ell, args.bound, args.cap)
    if cached is not None and cached.exists():
        obj = json.loads(cached.read_text())
    else:
        try:
            K = qf.field_init(args.d)
            AG = labels.build_arithmetic_graph_data(K, args.ell, args.bound, args.cap)
        except qf.FieldError as e:
            print(f"ineligible: {e}", file=sys.stderr)
            return 1
        obj = AG.to_json()
        bad = validate(AG.graph)
        obj["provenance"]["violations"] = [str(v) for v in bad]
        if cached is not None:
            cached.write_text(json.dumps(obj))
    if args.summary:
        prov = obj["provenance"]
        print(f"d={prov['d']} ell={prov['ell']} h={prov['h']} bound={prov['bound']}: "
              f"{len(obj['vertices']) - 2} places, {len(prov['violations'])} violations")
    else:
        _emit(obj, args)
    return 0 if not obj["provenance"]["violations"] else 1


def cmd_field_probe(args) -> int:
    obj = _load(args.graph)
    prov = obj.get("provenance")
    if not prov:
        print("graph file has no provenance block", file=sys.stderr)
        return 2
    K = qf.field_init(int(prov["d"]))
    O = labels.ArithmeticOracle(K, int(prov["ell"]), int(obj["cap"]), args.bound)
    q = ExtensionQuery.from_json(_load(args.query))
    try:
        res = labels.weakrado_probe(O, q)
    except InvalidQuery as e:
        print(f"invalid query: {e}", file=sys.stderr)
        return 1
    _emit(res.to_json(), args)
    return 0 if res.witness else 1


def cmd_local(args) -> int:
    table = labels.hilbert_table_check(labels.LocalTwoContext(args.m))
    ok = [tuple(r) for r in table] == [tuple(r) for r in labels.EXPECTED_HILBERT]
    if args.summary:
        for r in table:
            print(" ".join(str(x) for x in r))
    else:
        out = {"basis": ["2+sqrt5", "-1", "2sqrt5-5"], "table": table}
        if args.check_table:
            out["expected"] = [list(r) for r in labels.EXPECTED_HILBERT]
            out["ok"] = ok
        _emit(out, args)
    return 0 if ok or not args.check_table else 1


# experiments


def cmd_experiment(args) -> int:
    name = args.name
    if name == "prob1":
        rep = harness.experiment_prob1(args.ell, args.flavor, args.supply, args.max_f, args.cap,
                                       args.trials, args.query_depth, args.seed, n=args.n,
                                       queries=args.queries, jobs=args.jobs)
    elif name == "backforth":
        rep = harness.experiment_backforth(args.ell, args.flavor, args.supply, args.max_f, args.cap,
                                           args.rounds, args.trials, args.seed)
    elif name == "field-iso":
        rep = harness.experiment_field_iso(args.d1, args.d2, args.ell, args.rounds, args.bound, args.cap,
                                           args.spot_checks, args.seed)
    elif name == "reciprocity":
        rep = harness.experiment_reciprocity(args.d1, args.bound, args.cap, flip=args.flip)
    else:
        rep = harness.experiment_chebotarev(args.d1, args.ell, {"n": args.n, "S": args.query_depth},
                                            args.bound, args.trials, args.seed)
    if args.summary:
        print(rep.summary())
    else:
        _emit(rep.to_json(), args)
    return 0 if rep.ok else 1


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--summary", action="store_true", help="human-readable output")
    common.add_argument("--compact", action="store_true", help="single-line JSON")
    common.add_argument("-o", "--output", help="write JSON here instead of stdout")
    ap = argparse.ArgumentParser(prog="nilrado", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graph").add_subparsers(dest="action", required=True)
    p = g.add_parser("sample", parents=[common])
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--flavor", choices=FLAVORS, required=True)
    p.add_argument("--supply", type=int, default=30)
    p.add_argument("--max-f", type=int, default=3)
    p.add_argument("--cap", type=int, default=4)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(func=cmd_graph_sample)
    p = g.add_parser("validate", parents=[common])
    p.add_argument("graph")
    p.set_defaults(func=cmd_graph_validate)

    p = sub.add_parser("iso", parents=[common])
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--mode", choices=("exact", "up_to_scaling"), default="exact")
    p.add_argument("--oriented", action="store_true")
    p.set_defaults(func=cmd_iso)

    p = sub.add_parser("group", parents=[common])
    p.add_argument("action", choices=("axioms", "roundtrip", "reconstruct", "multiply"))
    p.add_argument("graph")
    p.add_argument("--method", choices=("invariants", "cochains", "both"), default="invariants")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--x", default="{}")
    p.add_argument("--y", default="{}")
    p.set_defaults(func=cmd_group)

    p = sub.add_parser("cohom", parents=[common])
    p.add_argument("action", choices=("census", "carry"))
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--exps", default="1")
    p.add_argument("--coeff", type=int, default=1)
    p.add_argument("--bound", type=int, default=81)
    p.add_argument("--f", type=int, default=1)
    p.add_argument("--g", type=int, default=1)
    p.set_defaults(func=cmd_cohom)

    f = sub.add_parser("field").add_subparsers(dest="action", required=True)
    p = f.add_parser("graph", parents=[common])
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--ell", type=int, required=True)
    p.add_argument("--bound", type=int, required=True)
    p.add_argument("--cap", type=int, default=4)
    p.set_defaults(func=cmd_field_graph)
    p = f.add_parser("probe", parents=[common])
    p.add_argument("--graph", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--bound", type=int, required=True)
    p.set_defaults(func=cmd_field_probe)

    p = sub.add_parser("local").add_subparsers(dest="action", required=True).add_parser("hilbert", parents=[common])
    p.add_argument("--check-table", action="store_true")
    p.add_argument("--m", type=int, default=6, help="work modulo 2^m")
    p.set_defaults(func=cmd_local)

    p = sub.add_parser("experiment", parents=[common])
    p.add_argument("name", choices=("prob1", "backforth", "field-iso", "reciprocity", "chebotarev"))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--ell", type=int, default=2)
    p.add_argument("--flavor", choices=FLAVORS, default="odd")
    p.add_argument("--supply", type=int, default=200)
    p.add_argument("--max-f", type=int, default=2)
    p.add_argument("--cap", type=int, default=2)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--queries", type=int, default=100)
    p.add_argument("--query-depth", type=int, default=3)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--rounds", type=int, default=6)
    p.add_argument("--d1", type=int, default=-11)
    p.add_argument("--d2", type=int, default=-19)
    p.add_argument("--bound", type=int, default=10**5)
    p.add_argument("--spot-checks", type=int, default=1000)
    p.add_argument("--flip", help="place id whose 2-adic correction is inverted (negative control)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_experiment)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
