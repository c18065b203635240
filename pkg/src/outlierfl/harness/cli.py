"""Command-line front end.

Exit codes: 0 success, 1 usage or malformed input, 2 infeasible instance,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from ..dual import check_bound, check_dual_feasible, dual_from_dict, dual_to_dict, dump_certificate
from ..errors import GuardError, InfeasibleError, StructuralError
from ..metric import DistanceOracle
from ..model import instance_to_dict, load_instance, save_instance
from ..oracle import opt_penalty, opt_plain, opt_robust
from ..model import Variant
from .generators import PlantedClusters, RandomGraph, RandomMetric, tiny_instance
from .runs import solve_distributed, solve_sequential

COLUMNS = ["instance", "seed", "variant", "eps", "k", "alg_cost", "opt_cost", "ratio",
           "dual_obj", "feasible", "bound_ok", "charged_rounds"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _emit(args, payload: dict, rows: list[dict] | None = None) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows or []:
            w.writerow(r)
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _cluster_for(args, inst):
    from ..distsim import make_cluster

    n = inst.metric.n
    return make_cluster(n, n if args.congested_clique else args.k, seed=args.seed,
                        bandwidth_words=args.bandwidth_words, congested_clique=args.congested_clique)


def _dist_kwargs(args):
    return {"cohen_c": args.cohen_c, "mssp_backend": args.mssp_backend, "distance_backend": args.distance_backend}


def cmd_gen(args):
    kind = args.generator
    if kind == "random-metric":
        inst = RandomMetric(args.facilities, args.clients, seed=args.seed, w_max=args.w_max).build(
            args.variant, args.coverage, args.f_max, args.pen_max)
    elif kind == "random-graph":
        m = args.edges if args.edges is not None else 2 * args.vertices
        inst = RandomGraph(args.vertices, m, args.w_max, seed=args.seed).build(
            args.variant, args.coverage, args.f_max, args.pen_max)
    elif kind == "planted":
        inst = PlantedClusters(args.centers, args.spread, seed=args.seed, size=args.size).build(
            args.variant, args.coverage, args.f_max, args.pen_max)
    else:
        inst = tiny_instance(args.seed, args.variant)
    if args.out:
        save_instance(inst, args.out)
    else:
        sys.stdout.write(json.dumps(instance_to_dict(inst), sort_keys=True) + "\n")
    return 0


def _with_oracle(args):
    return {"auto": None, "yes": True, "no": False}[args.oracle]


def cmd_solve(args):
    inst = load_instance(args.instance)
    rep = solve_sequential(inst, args.eps, _with_oracle(args))
    payload = {"row": rep.row(args.instance, args.seed), "solution": rep.solution.to_dict()}
    if rep.dual is not None:
        payload["certificate"] = dual_to_dict(rep.dual, rep.feasibility)
        payload["bound"] = vars(rep.bound)
        if args.cert_out:
            dump_certificate(rep.dual, rep.feasibility, args.cert_out)
    _emit(args, payload, [rep.row(args.instance, args.seed)])
    return 0


def cmd_simulate(args):
    inst = load_instance(args.instance)
    rep = solve_distributed(inst, _cluster_for(args, inst), args.eps, args.seed, _with_oracle(args), **_dist_kwargs(args))
    tr = rep.extra["transcript"]
    payload = {
        "row": rep.row(args.instance, args.seed),
        "solution": rep.solution.to_dict(),
        "transcript": tr.to_dict(),
        "certificate": {"objective": rep.dual.objective, "feasible": rep.feasibility.ok, "bound": vars(rep.bound)},
    }
    if args.transcript_out:
        tr.dump(args.transcript_out)
    _emit(args, payload, [rep.row(args.instance, args.seed)])
    return 0


def cmd_oracle(args):
    inst = load_instance(args.instance)
    fn = {Variant.ROBUST: opt_robust, Variant.PENALTY: opt_penalty, Variant.PLAIN: opt_plain}[inst.variant]
    res = fn(inst)
    row = {c: "" for c in COLUMNS}
    row.update(instance=args.instance, seed=args.seed, variant=inst.variant.value, eps=args.eps, opt_cost=res.opt_cost)
    _emit(args, {"opt_cost": res.opt_cost, "enumerated": res.enumerated, "witness": res.witness.to_dict()}, [row])
    return 0


def cmd_certify(args):
    """Check a stored certificate; ``feasible=false`` is a report, not an error."""
    inst = load_instance(args.instance)
    d = json.loads(Path(args.certificate).read_text())
    dual = dual_from_dict(d, inst)
    feas = check_dual_feasible(dual, inst)
    payload = {"feasible": feas.ok, "worst": feas.worst, "violations": feas.violations,
               "objective": dual.objective, "binding": len(feas.binding)}
    row = {c: "" for c in COLUMNS}
    row.update(instance=args.instance, seed=args.seed, variant=inst.variant.value, eps=args.eps,
               dual_obj=dual.objective, feasible=feas.ok)
    if args.cost is not None:
        kind = "robust" if inst.variant is Variant.ROBUST else "penalty"
        b = check_bound(args.cost, dual, kind, args.anchor_cost, args.eps, args.distributed)
        payload["bound"] = vars(b)
        row.update(alg_cost=args.cost, bound_ok=b.ok)
    _emit(args, payload, [row])
    return 0


def cmd_bench(args):
    rows, payload = [], []
    ks = [int(k) for k in args.k_list.split(",")] if args.k_list else [args.k]
    from ..distsim import make_cluster

    for trial in range(args.trials):
        seed = args.seed + trial
        inst = tiny_instance(seed, args.variant) if args.generator == "tiny" else \
            RandomGraph(args.vertices, 2 * args.vertices, args.w_max, seed=seed).build(args.variant, f_max=args.f_max)
        name = f"{args.generator}-{seed}"
        if args.mode == "seq":
            rep = solve_sequential(inst, args.eps, _with_oracle(args))
            rows.append(rep.row(name, seed))
        else:
            for k in ks:
                cl = make_cluster(inst.metric.n, k, seed=seed, bandwidth_words=args.bandwidth_words)
                rep = solve_distributed(inst, cl, args.eps, seed, _with_oracle(args), **_dist_kwargs(args))
                rows.append(rep.row(name, seed))
    payload = {"rows": rows}
    _emit(args, payload, rows)
    return 0


def cmd_distances(args):
    inst = load_instance(args.instance)
    o = DistanceOracle(inst.metric, args.eps, args.distance_backend, args.seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["source", "target", "distance"])
    m = o.matrix
    for u in range(o.n):
        for v in range(o.n):
            w.writerow([u, v, repr(float(m[u, v]))])
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--eps", type=float, default=0.05)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    dist = _Parser(add_help=False)
    dist.add_argument("--k", type=int, default=4, help="number of machines")
    dist.add_argument("--bandwidth-words", type=int, default=16)
    dist.add_argument("--cohen-c", type=float, default=8.0)
    dist.add_argument("--mssp-backend", choices=["charged", "bellman-ford"], default="charged")
    dist.add_argument("--distance-backend", choices=["exact", "rounded"], default="rounded")
    dist.add_argument("--congested-clique", action="store_true", help="one vertex per machine")

    oracle = _Parser(add_help=False)
    oracle.add_argument("--oracle", choices=["auto", "yes", "no"], default="auto",
                        help="compare against the exact optimum (auto: small instances only)")

    p = _Parser(prog="outlierfl", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", parents=[common], help="generate a random instance")
    g.add_argument("--generator", choices=["random-metric", "random-graph", "planted", "tiny"], default="random-graph")
    g.add_argument("--variant", choices=[v.value for v in Variant], default="robust")
    g.add_argument("--facilities", type=int, default=6)
    g.add_argument("--clients", type=int, default=8)
    g.add_argument("--vertices", type=int, default=16)
    g.add_argument("--edges", type=int, default=None)
    g.add_argument("--w-max", type=int, default=10)
    g.add_argument("--f-max", type=int, default=10)
    g.add_argument("--pen-max", type=float, default=None)
    g.add_argument("--coverage", type=int, default=None)
    g.add_argument("--centers", type=int, default=3)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--size", type=int, default=4)
    g.set_defaults(fn=cmd_gen)

    s = sub.add_parser("solve", parents=[common, oracle], help="sequential solver with dual certificate")
    s.add_argument("instance")
    s.add_argument("--cert-out", default=None, help="also write the certificate JSON here")
    s.set_defaults(fn=cmd_solve)

    m = sub.add_parser("simulate", parents=[common, dist, oracle], help="distributed solver on the simulator")
    m.add_argument("instance")
    m.add_argument("--transcript-out", default=None)
    m.set_defaults(fn=cmd_simulate)

    o = sub.add_parser("oracle", parents=[common], help="exact optimum by enumeration")
    o.add_argument("instance")
    o.set_defaults(fn=cmd_oracle)

    c = sub.add_parser("certify", parents=[common], help="check a stored dual certificate")
    c.add_argument("instance")
    c.add_argument("certificate")
    c.add_argument("--cost", type=float, default=None, help="solution cost to test against the bound")
    c.add_argument("--anchor-cost", type=float, default=0.0)
    c.add_argument("--distributed", action="store_true")
    c.set_defaults(fn=cmd_certify)

    b = sub.add_parser("bench", parents=[common, dist, oracle], help="batch of generated instances")
    b.add_argument("--mode", choices=["seq", "dist"], default="seq")
    b.add_argument("--generator", choices=["tiny", "random-graph"], default="tiny")
    b.add_argument("--variant", choices=["robust", "penalty"], default="robust")
    b.add_argument("--trials", type=int, default=10)
    b.add_argument("--k-list", default=None, help="comma-separated machine counts")
    b.add_argument("--vertices", type=int, default=32)
    b.add_argument("--w-max", type=int, default=10)
    b.add_argument("--f-max", type=int, default=10)
    b.set_defaults(fn=cmd_bench)

    d = sub.add_parser("distances", parents=[common], help="dump reported distances as CSV")
    d.add_argument("instance")
    d.add_argument("--distance-backend", choices=["exact", "rounded"], default="exact")
    d.set_defaults(fn=cmd_distances)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InfeasibleError,) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except (StructuralError, GuardError, UsageError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
