"""Random pairs of rational step kernels that exercise every forcing stage."""

from __future__ import annotations

import random
import warnings
from fractions import Fraction
from typing import Iterator

from .kernel import StepKernel, check_minimality, random_kernel, random_measures, refine

PAIR_KINDS = (
    "scrambled",
    "refined",
    "measure_perturbed",
    "measures_permuted",
    "entry_perturbed",
    "offdiagonal_rearranged",
    "unrelated",
    "other_step_count",
)


def _kernel(measures, D):
    u = StepKernel(measures, D, graphon=True, check_minimal=False)
    return u if check_minimality(u)[0] else None


def _variant(kind: str, u: StepKernel, rng: random.Random):
    q = u.q
    perm = list(range(q))
    rng.shuffle(perm)
    if kind == "scrambled":
        return u.permuted(perm)
    if kind == "refined":
        i = rng.randrange(q)
        f = Fraction(rng.randint(1, 5), 6) * u.measures[i]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return refine(u, i, [f, u.measures[i] - f])
    if kind == "measure_perturbed":
        return _kernel(random_measures(q, rng), u.D)
    if kind == "measures_permuted":
        return _kernel([u.measures[p] for p in perm], u.D)
    if kind == "entry_perturbed":
        i, j = rng.randrange(q), rng.randrange(q)
        D = [list(r) for r in u.D]
        D[i][j] = D[j][i] = Fraction(rng.randint(0, 12), 12)
        return _kernel(u.measures, D)
    if kind == "offdiagonal_rearranged":
        offs = [(i, j) for i in range(q) for j in range(i + 1, q)]
        vals = [u.D[i][j] for i, j in offs]
        rng.shuffle(vals)
        D = [list(r) for r in u.D]
        for (i, j), v in zip(offs, vals):
            D[i][j] = D[j][i] = v
        return _kernel(u.measures, D)
    if kind == "unrelated":
        return random_kernel(q, rng)
    if kind == "other_step_count":
        return random_kernel(q + rng.choice((-1, 1)) if q > 1 else 2, rng)
    raise ValueError(kind)


# every kind except "refined" keeps the second kernel minimal as well
MINIMAL_KINDS = tuple(k for k in PAIR_KINDS if k != "refined")


def pair_catalog(q: int, count: int, seed=0, kinds=PAIR_KINDS) -> Iterator[tuple[str, StepKernel, StepKernel]]:
    """``count`` (kind, u, u2) triples with u minimal, cycling through ``kinds``."""
    unknown = set(kinds) - set(PAIR_KINDS)
    if unknown or not kinds:
        raise ValueError(f"unknown pair kinds {sorted(unknown)}")
    rng = random.Random(seed)
    made = 0
    while made < count:
        kind = kinds[made % len(kinds)]
        u = random_kernel(q, rng)
        u2 = _variant(kind, u, rng)
        if u2 is None:
            continue
        made += 1
        yield kind, u, u2
