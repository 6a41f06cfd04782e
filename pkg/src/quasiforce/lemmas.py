"""Self-checks of the constructions, one runner per property.

Every runner returns a JSON-ready report with an ``ok`` flag; the
``verify-lemma`` subcommand maps them to exit codes.
"""

from __future__ import annotations

import math
import random
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from itertools import product
from typing import Optional

import numpy as np

from . import forcing as F
from .catalog import pair_catalog
from .gadgets import (
    GadgetDescriptor,
    build_color_gadget,
    closed_form_c0,
    closed_form_d0,
    eval_P_rooted,
    eval_Qk,
    p_factors,
    pattern_roots,
    verify_color_gadget,
)
from .graphs import format_fraction
from .kernel import StepKernel, quantum_density, random_kernel, weakly_isomorphic
from .powersums import multiset_from_power_sums, power_sums

LEMMA_IDS = ("3.1", "3.2", "3.3", "3.4", "4.1", "4.2", "4.3", "4.4", "thm9", "thm10")


def example_kernel() -> StepKernel:
    h = Fraction(1, 2)
    return StepKernel([Fraction(1, 3), Fraction(2, 3)], [[h, Fraction(1, 4)], [Fraction(1, 4), Fraction(3, 4)]])


def corner_sizes(q: int) -> list[tuple]:
    lo, hi = q + 2, 2 * q + 2
    return [(lo,) * q, (hi,) * q, tuple(lo if i % 2 == 0 else hi for i in range(q))]


def _kernels(q, count, seed, kernel):
    if kernel is not None:
        return [kernel]
    rng = random.Random(seed)
    return [random_kernel(q, rng) for _ in range(count)]


def lemma_3_1(q: int = 2, count: int = 5, seed: int = 0, kernel: Optional[StepKernel] = None, **_) -> dict:
    bad = []
    ks = _kernels(q, count, seed, kernel)
    for u in ks:
        top, over = eval_Qk(u, u.q), eval_Qk(u, u.q + 1, method="full")
        if not (top > 0 and over == 0):
            bad.append({"kernel": u.to_dict(), "Q_q": format_fraction(top), "Q_q+1": format_fraction(over)})
    return {"lemma": "3.1", "checked": len(ks), "violations": bad, "ok": not bad}


def color_gadgets(q: int) -> dict:
    reports = [verify_color_gadget(build_color_gadget(q, s)) for s in corner_sizes(q)]
    return {"q": q, "reports": reports, "ok": all(r["ok"] for r in reports)}


def lemma_3_2(q: int = 2, **_) -> dict:
    if q % 2:
        raise ValueError("this construction is for even q")
    return {"lemma": "3.2", **color_gadgets(q)}


def lemma_3_3(q: int = 3, **_) -> dict:
    if q % 2 == 0:
        raise ValueError("this construction is for odd q")
    return {"lemma": "3.3", **color_gadgets(q)}


def selector_values(u: StepKernel, s: tuple, random_samples: int, seed: int, full_limit: int = 10**5) -> dict:
    """Values of the rooted selector over root placements; expected {0, d0}."""
    q = len(s)
    desc = GadgetDescriptor("P", s=s)
    d0 = closed_form_d0(u)
    k = sum(s)
    if u.q ** k <= full_limit:
        placements = product(range(u.q), repeat=k)
        mode = "all"
    else:
        rng = random.Random(seed)
        pats = [pattern_roots(s, p) for p in product(range(u.q), repeat=q)]
        rand = ([rng.randrange(u.q) for _ in range(k)] for _ in range(random_samples))
        placements = (x for it in (pats, rand) for x in it)
        mode = "patterns+random"
    values = set()
    wrong_support = 0
    checked = 0
    for roots in placements:
        checked += 1
        v = eval_P_rooted(desc, u, roots)
        values.add(v)
        groups = [{roots[r] for r in grp} for grp in _group_ranges(s)]
        injective = all(len(g) == 1 for g in groups) and len(set(min(g) for g in groups)) == q
        if (v != 0) != injective:
            wrong_support += 1
    return {"s": list(s), "mode": mode, "checked": checked, "values": sorted(format_fraction(v) for v in values),
            "d0": format_fraction(d0), "wrong_support": wrong_support,
            "ok": values <= {Fraction(0), d0} and d0 in values and wrong_support == 0}


def _integer_scaled(u: StepKernel):
    """Integer arrays proportional to the measures and to D."""
    la = math.lcm(*(Fraction(x).denominator for x in u.measures))
    ld = math.lcm(*(Fraction(x).denominator for r in u.D for x in r))
    A = np.array([int(x * la) for x in u.measures], dtype=object)
    E = np.array([[int(x * ld) for x in r] for r in u.D], dtype=np.int64)
    return A, E


def exhaustive_selector_values(u: StepKernel, s: tuple) -> dict:
    """Selector values over every one of the q^(sum s) root placements.

    A factor of P_s touches the roots of two groups only, so whether it
    vanishes is tabulated over pairs of group assignments in exact integer
    arithmetic.  The combined table marks the placements where no factor
    vanishes; exactly those are evaluated in rationals.
    """
    if not u.exact:
        raise ValueError("exhaustive check needs an exact kernel")
    q = u.q
    A, E = _integer_scaled(u)
    sizes = list(s)
    offsets = np.cumsum([0] + sizes)
    digits = [np.indices((q,) * k).reshape(k, -1).T for k in sizes]
    ngroups = len(sizes)
    alive = np.ones(tuple(q ** k for k in sizes), dtype=bool)
    for i, j, _, edges in p_factors(tuple(s)):
        di, dj = digits[i], digits[j]
        total = np.zeros((len(di), len(dj)), dtype=object)
        for y in range(q):
            term = np.full((len(di), len(dj)), int(A[y]), dtype=object)
            for v, w in edges:
                pv, pw = v - offsets[i], w - offsets[j]
                diff = E[dj[:, pw], y][None, :] - E[di[:, pv], y][:, None]
                term = term * diff
            total = total + term
        nz = (total != 0).astype(bool)
        shape = [1] * ngroups
        shape[i], shape[j] = nz.shape
        alive &= nz.reshape(shape)
    desc = GadgetDescriptor("P", s=tuple(s))
    d0 = closed_form_d0(u)
    values = {Fraction(0)} if not alive.all() else set()
    wrong_support = 0
    for idx in zip(*np.nonzero(alive)):
        roots = [int(x) for g, k in zip(idx, digits) for x in k[g]]
        v = eval_P_rooted(desc, u, roots)
        values.add(v)
        groups = [set(roots[r] for r in grp) for grp in _group_ranges(s)]
        injective = all(len(g) == 1 for g in groups) and len({min(g) for g in groups}) == ngroups
        wrong_support += (v != 0) != injective
    injective_count = math.perm(q, ngroups)
    nonzero = int(alive.sum())
    return {"s": list(s), "mode": "exhaustive", "checked": q ** sum(s), "nonzero_placements": nonzero,
            "values": sorted(format_fraction(v) for v in values), "d0": format_fraction(d0),
            "wrong_support": wrong_support + abs(nonzero - injective_count),
            "ok": values <= {Fraction(0), d0} and d0 in values and wrong_support == 0
            and nonzero == injective_count}


def _group_ranges(s):
    off = 0
    for x in s:
        yield range(off, off + x)
        off += x


def lemma_3_4(q: int = 2, kernel: Optional[StepKernel] = None, seed: int = 0, random_samples: int = 2000,
              **_) -> dict:
    u = kernel or (example_kernel() if q == 2 else random_kernel(q, random.Random(seed)))
    s = (u.q + 2,) * u.q
    if u.exact:
        rep = exhaustive_selector_values(u, s)
    else:
        rep = selector_values(u, s, random_samples, seed)
    return {"lemma": "3.4", "kernel": u.to_dict(), **rep}


def _closed_vs_eval(name, gadget, closed, u, expand):
    vals = {"factored": gadget.density(u), "closed_form": closed}
    if expand:
        vals["expanded"] = quantum_density(gadget.expand(), u)
    ok = len(set(vals.values())) == 1
    return {"gadget": name, **{k: format_fraction(v) for k, v in vals.items()}, "ok": ok}


def lemma_4_1(q: int = 2, kernel: Optional[StepKernel] = None, seed: int = 0, count: int = 3, **_) -> dict:
    rows = []
    for u in _kernels(q, count, seed, kernel):
        Z = sorted(set(u.part_densities()))
        rows.append(_closed_vs_eval("R", F.r_gadget(u.q, Z), F.r_closed_form(u, Z), u, u.q == 2))
        Z2 = Z[:1]
        rows.append(_closed_vs_eval("R_partial", F.r_gadget(u.q, Z2), F.r_closed_form(u, Z2), u, False))
    return {"lemma": "4.1", "rows": rows, "ok": all(r["ok"] for r in rows)}


def lemma_4_2(q: int = 2, kernel: Optional[StepKernel] = None, seed: int = 0, count: int = 3, **_) -> dict:
    rows = []
    for u in _kernels(q, count, seed, kernel):
        Z = sorted(set(u.pair_densities()))
        rows.append(_closed_vs_eval("S", F.s_gadget(u.q, Z), F.s_closed_form(u, Z), u, u.q == 2))
    return {"lemma": "4.2", "rows": rows, "ok": all(r["ok"] for r in rows)}


def automorphism_measure_sum(u: StepKernel, D) -> Fraction:
    """sum over arrangements pi matching D of prod a_{pi(i)}^(q+2)."""
    q = u.q
    return sum((math.prod((u.measures[p[i]] ** (q + 2) for i in range(q)), start=Fraction(1))
                for p in F.matrix_matchings(u, D)), Fraction(0))


def lemma_4_3(q: int = 2, kernel: Optional[StepKernel] = None, seed: int = 0, count: int = 3, **_) -> dict:
    rows = []
    for u in _kernels(q, count, seed, kernel):
        c0 = closed_form_c0(u, u.D)
        closed = c0 * automorphism_measure_sum(u, u.D)
        row = _closed_vs_eval("T", F.t_gadget(u.D), closed, u, False)
        row["c0"] = format_fraction(c0)
        rows.append(row)
    return {"lemma": "4.3", "rows": rows, "ok": all(r["ok"] for r in rows)}


def lemma_4_4(q: int = 3, seed: int = 0, count: int = 10, kernel: Optional[StepKernel] = None, **_) -> dict:
    rng = random.Random(seed)
    bad = []
    ks = _kernels(q, count, seed, kernel)
    for u in ks:
        got = F.recover_measures(u, u.q)
        if got != sorted(u.measures):
            bad.append(u.to_dict())
    for _ in range(count):
        vals = [Fraction(rng.randint(1, 40), rng.randint(1, 40)) for _ in range(rng.randint(1, 6))]
        if multiset_from_power_sums(power_sums(vals)) != sorted(vals):
            bad.append([format_fraction(v) for v in vals])
    return {"lemma": "4.4", "checked": len(ks) + count, "violations": bad, "ok": not bad}


def _thm9_case(args):
    kind, u, u2 = args
    cert = F.forcing_pipeline(u, u2)
    return _case_report(kind, u, u2, cert, F.theorem9_budget(u.q))


def _thm10_case(args):
    kind, u, u2 = args
    cert = F.degree_forcing_pipeline(u, u2)
    return _case_report(kind, u, u2, cert, F.theorem10_budget(u.q))


def _case_report(kind, u, u2, cert, budget):
    truth = weakly_isomorphic(u, u2)
    agrees = (cert.verdict == "WeaklyIsomorphic") == truth and cert.verdict != "Inconclusive"
    within = cert.max_vertices <= budget and (cert.witness is None or cert.witness.n <= budget)
    return {"kind": kind, "verdict": cert.verdict, "stage": cert.failed_stage, "truth": truth,
            "agrees": agrees, "max_vertices": cert.max_vertices, "budget": budget, "within_budget": within,
            "witness_vertices": None if cert.witness is None else cert.witness.n}


def _run_cases(fn, cases, threads):
    if threads and threads > 1:
        with ProcessPoolExecutor(threads) as ex:
            return list(ex.map(fn, cases))
    return [fn(c) for c in cases]


def degree_pair_catalog(q: int, count: int, seed: int = 0):
    """Pairs whose reference kernel has distinct part degrees."""
    rng = random.Random(seed)
    out = []
    for kind, u, u2 in pair_catalog(q, 4 * count + 20, seed):
        if len(out) == count:
            break
        if len(set(u.degrees())) == q:
            out.append((kind, u, u2))
    while len(out) < count:
        u = random_kernel(q, rng, distinct_degrees=True)
        perm = list(range(q))
        rng.shuffle(perm)
        out.append(("scrambled", u, u.permuted(perm)))
    return out


def theorem_9(q: int = 2, count: int = 10, seed: int = 0, threads: int = 1, **_) -> dict:
    rows = _run_cases(_thm9_case, list(pair_catalog(q, count, seed)), threads)
    return {"lemma": "thm9", "q": q, "cases": rows,
            "ok": all(r["agrees"] and r["within_budget"] for r in rows)}


def theorem_10(q: int = 2, count: int = 10, seed: int = 0, threads: int = 1, **_) -> dict:
    rows = _run_cases(_thm10_case, degree_pair_catalog(q, count, seed), threads)
    return {"lemma": "thm10", "q": q, "cases": rows,
            "ok": all(r["agrees"] and r["within_budget"] for r in rows)}


RUNNERS = {
    "3.1": lemma_3_1, "3.2": lemma_3_2, "3.3": lemma_3_3, "3.4": lemma_3_4,
    "4.1": lemma_4_1, "4.2": lemma_4_2, "4.3": lemma_4_3, "4.4": lemma_4_4,
    "thm9": theorem_9, "thm10": theorem_10,
}
