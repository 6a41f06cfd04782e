"""Command-line front end; every subcommand prints JSON on stdout.

Exit codes: 0 success, 1 a verification found a violation, 2 bad input or
an exceeded budget.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction
from pathlib import Path

from . import counterexample as CE
from . import forcing as F
from . import lemmas as L
from .gadgets import (
    GadgetDescriptor,
    build_Qk,
    build_color_gadget,
    eval_decorated_P_density,
    eval_P_rooted,
    eval_Qk,
    verify_color_gadget,
)
from .graphs import Graph, GraphError, QuantumGraph, format_fraction, named_graph
from .kernel import BudgetExceeded, KernelError, StepKernel, check_minimality, hom_density, random_kernel
from .powersums import IrrationalMeasures
from .sbm import empirical_hom_density, sample_graph

NAMED = {f"k{i}" for i in range(1, 8)} | {"c4", "p3", "p4"}

USAGE_ERRORS = (KernelError, GraphError, BudgetExceeded, IrrationalMeasures, CE.Singular,
                CE.NoConvergence, CE.ConstraintViolated, ValueError, OSError, KeyError, json.JSONDecodeError)


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True) + "\n")


def _read(path: str) -> str:
    return Path(path).read_text()


def load_kernel(path: str, check_minimal: bool = False) -> StepKernel:
    return StepKernel.from_json(_read(path), check_minimal=check_minimal)


def load_graph(spec: str) -> Graph:
    if spec.lower() in NAMED:
        return named_graph(spec)
    p = Path(spec)
    if not p.exists():
        raise UsageError(f"{spec!r} is neither a named graph ({', '.join(sorted(NAMED))}) nor a file")
    text = p.read_text()
    if p.suffix == ".g6":
        return Graph.from_graph6(text.strip())
    return Graph.from_edgelist(text)


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.replace(",", " ").split()]


def _numbers(text: str) -> list:
    out = []
    for x in text.replace(",", " ").split():
        out.append(float(x) if any(c in x for c in ".eE") else Fraction(x))
    return out


# -- subcommands ---------------------------------------------------------------

def cmd_kernel(args) -> int:
    if args.random is not None:
        if args.seed is None:
            raise UsageError("--random needs --seed")
        u = random_kernel(args.random, random.Random(args.seed), graphon=not args.signed,
                          distinct_degrees=args.distinct_degrees)
    elif args.kernel:
        u = load_kernel(args.kernel)
    else:
        raise UsageError("give --kernel FILE or --random Q")
    minimal, pair = check_minimality(u)
    if args.minimize:
        u = u.minimal_form()[0]
    fmt = format_fraction if u.exact else float
    _emit({"kernel": u.to_dict(), "minimal": minimal, "duplicate_parts": pair,
           "degrees": [fmt(d) for d in u.degrees()]})
    return 0


def cmd_density(args) -> int:
    u = load_kernel(args.kernel)
    if args.quantum:
        qg = QuantumGraph.from_json(_read(args.quantum))
        t = sum((c * hom_density(g, u) for c, g in qg), Fraction(0) if u.exact else 0.0)
    else:
        t = hom_density(load_graph(args.h), u)
    _emit({"t": format_fraction(t) if u.exact else float(t)})
    return 0


def _descriptor_from_args(args) -> GadgetDescriptor:
    if args.gadget:
        return GadgetDescriptor.from_json(_read(args.gadget))
    if args.type == "Qk":
        if args.k is None:
            raise UsageError("Qk needs --k")
        return GadgetDescriptor("Qk", k=args.k)
    if not args.s:
        raise UsageError("P needs --s")
    deco = [tuple(_ints(e)) for e in (args.decorations or [])]
    return GadgetDescriptor("P", s=tuple(_ints(args.s)), decorations=tuple(deco))


def cmd_gadget(args) -> int:
    if args.action == "verify":
        if args.q is None or not args.s:
            raise UsageError("gadget verify needs --q and --s")
        rep = verify_color_gadget(build_color_gadget(args.q, _ints(args.s)))
        _emit(rep)
        return 0 if rep["ok"] else 1
    desc = _descriptor_from_args(args)
    if args.action == "build":
        out = {"descriptor": desc.to_dict(), "vertices": desc.vertex_count()}
        if args.expand and desc.kind == "Qk":
            qg = build_Qk(desc.k, expansion_limit=args.expansion_limit, merge=True)
            if isinstance(qg, GadgetDescriptor):
                raise BudgetExceeded("expansion exceeds --expansion-limit")
            out["quantum_graph"] = json.loads(qg.to_json())
        _emit(out)
        return 0
    u = load_kernel(args.kernel)
    if desc.kind == "Qk":
        t = eval_Qk(u, desc.k)
    elif args.roots:
        t = eval_P_rooted(desc, u, _ints(args.roots))
    else:
        t = eval_decorated_P_density(desc, u)
    _emit({"descriptor": desc.to_dict(), "t": format_fraction(t) if u.exact else float(t)})
    return 0


def _pair(args):
    u = load_kernel(args.u, check_minimal=True)
    u2 = load_kernel(args.u2)
    return u, u2


def cmd_force(args) -> int:
    u, u2 = _pair(args)
    cert = F.forcing_pipeline(u, u2)
    _emit(cert.to_dict())
    return 2 if cert.verdict == "Inconclusive" else 0


def cmd_degree_force(args) -> int:
    u, u2 = _pair(args)
    cert = F.degree_forcing_pipeline(u, u2)
    _emit(cert.to_dict())
    return 2 if cert.verdict == "Inconclusive" else 0


def cmd_distinguish(args) -> int:
    u, u2 = _pair(args)
    res = F.distinguishing_graph(u, u2)
    if res is None:
        _emit({"weakly_isomorphic": True, "witness": None})
        return 0
    g, a, b = res
    _emit({"weakly_isomorphic": False, "witness": g.to_edgelist(), "vertices": g.n,
           "densities": {"U": format_fraction(a), "U2": format_fraction(b)}})
    return 0


def cmd_counterexample(args) -> int:
    if not args.a:
        raise UsageError("counterexample needs --a")
    a = [float(x) for x in _numbers(args.a)]
    if args.q is not None and args.q != len(a):
        raise UsageError("--q must equal the number of values in --a")
    u, u2, rep = CE.build_counterexample_pair(a, args.delta, args.tol)
    _emit({"U": u.to_dict(), "U2": u2.to_dict(), "report": rep})
    return 0 if rep["ok"] else 1


def cmd_sample(args) -> int:
    if args.seed is None:
        raise UsageError("sample needs --seed")
    u = load_kernel(args.kernel)
    g = sample_graph(u, args.n, args.seed)
    if args.out:
        Path(args.out).write_text(g.to_edgelist())
    counts = [int((g.labels == i + 1).sum()) for i in range(u.q)]
    _emit({"n": g.n, "m": g.m, "seed": args.seed, "out": args.out, "part_sizes": counts})
    return 0


def cmd_estimate(args) -> int:
    if args.seed is None:
        raise UsageError("estimate needs --seed")
    h = load_graph(args.h)
    g = Graph.from_edgelist(_read(args.graph))
    est = empirical_hom_density(h, g, int(float(args.samples)), args.seed)
    _emit(est.to_dict())
    return 0


def cmd_verify_lemma(args) -> int:
    runner = L.RUNNERS[args.lemma]
    kw = {"seed": args.seed if args.seed is not None else 0, "threads": args.threads}
    if args.q is not None:
        kw["q"] = args.q
    if args.kernel:
        kw["kernel"] = load_kernel(args.kernel, check_minimal=True)
    if args.count is not None:
        kw["count"] = args.count
    rep = runner(**kw)
    _emit(rep)
    return 0 if rep["ok"] else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="quasiforce", description="Forcing families for step kernels.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *names):
        if "kernel" in names:
            sp.add_argument("--kernel", help="kernel JSON file")
        if "seed" in names:
            sp.add_argument("--seed", type=int)
        if "q" in names:
            sp.add_argument("--q", type=int)
        if "threads" in names:
            sp.add_argument("--threads", type=int, default=1)
        return sp

    k = common(sub.add_parser("kernel", help="validate, minimize or generate a kernel"), "kernel", "seed")
    k.add_argument("--random", type=int, metavar="Q", help="generate a random minimal Q-step kernel")
    k.add_argument("--signed", action="store_true", help="allow negative values")
    k.add_argument("--distinct-degrees", action="store_true")
    k.add_argument("--minimize", action="store_true")
    k.set_defaults(func=cmd_kernel)

    d = common(sub.add_parser("density", help="exact homomorphism density"), "kernel")
    d.add_argument("--h", default="k2", help="edge-list file, .g6 file or a named graph")
    d.add_argument("--quantum", help="quantum graph JSON file")
    d.set_defaults(func=cmd_density)

    g = common(sub.add_parser("gadget", help="build, verify or evaluate gadgets"), "kernel", "q")
    g.add_argument("action", choices=("build", "verify", "eval"))
    g.add_argument("--type", choices=("Qk", "P"), default="P")
    g.add_argument("--k", type=int)
    g.add_argument("--s", help="group sizes, e.g. 4,4")
    g.add_argument("--decorations", nargs="*", help="root pairs like 0,1")
    g.add_argument("--gadget", help="descriptor JSON file")
    g.add_argument("--roots", help="part of each root (rooted evaluation)")
    g.add_argument("--expand", action="store_true")
    g.add_argument("--expansion-limit", type=int, default=10**6)
    g.set_defaults(func=cmd_gadget)

    for name, fn, hlp in (("force", cmd_force, "decide weak isomorphism with <= 4q^2-q vertex graphs"),
                          ("distinguish", cmd_distinguish, "find one graph with differing density"),
                          ("degree-force", cmd_degree_force, "decide with <= 2q+1 vertex graphs (distinct degrees)")):
        sp = sub.add_parser(name, help=hlp)
        sp.add_argument("--u", required=True, help="reference kernel (minimal)")
        sp.add_argument("--u2", required=True, help="kernel to compare")
        sp.set_defaults(func=fn)

    c = common(sub.add_parser("counterexample", help="pair agreeing on all graphs with <= q vertices"), "q")
    c.add_argument("--a", help="measures a_1..a_q, e.g. 0.2,0.4")
    c.add_argument("--delta", type=float, default=0.01)
    c.add_argument("--tol", type=float, default=1e-12)
    c.set_defaults(func=cmd_counterexample)

    s = common(sub.add_parser("sample", help="sample a stochastic block model graph"), "kernel", "seed")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    e = common(sub.add_parser("estimate", help="empirical homomorphism density"), "seed")
    e.add_argument("--h", required=True)
    e.add_argument("--graph", required=True, help="edge-list file")
    e.add_argument("--samples", default="100000")
    e.set_defaults(func=cmd_estimate)

    v = common(sub.add_parser("verify-lemma", help="run a self-check"), "kernel", "seed", "q", "threads")
    v.add_argument("lemma", choices=L.LEMMA_IDS)
    v.add_argument("--count", type=int)
    v.set_defaults(func=cmd_verify_lemma)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, *USAGE_ERRORS) as exc:
        print(f"quasiforce {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
