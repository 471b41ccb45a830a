"""Index contraction over graph edges.

A contraction is a list of factors, each reading a few index variables.
Variables range over ``range(dim)``; a variable is summed as soon as the
first factor mentioning it is reached, and a zero factor prunes the branch.
Free variables are collected into groups and the result is keyed by the
sorted values of each group, i.e. summed over all tuples with that sorted
form.  Dividing by the number of arrangements then gives the symmetrized
tensor at the sorted index.
"""

from __future__ import annotations

from itertools import product
from typing import Callable, Sequence

from gmpy2 import mpq

from .series import index_arrangements

Lookup = Callable[[tuple[int, ...]], object]


def contract(factors: Sequence[tuple[Sequence[int], Lookup]], dim: int, one,
             free_groups: Sequence[Sequence[int]] = ()) -> dict[tuple, object]:
    """Sum of products of factor values over all index assignments.

    ``lookup`` returns ``None`` for a zero value.  The result maps a tuple of
    sorted free-group values to the accumulated sum.
    """
    seen: set[int] = set()
    plan = []
    for vars_, lookup in factors:
        new = []
        for v in vars_:
            if v not in seen:
                seen.add(v)
                new.append(v)
        plan.append((tuple(vars_), tuple(new), lookup))
    for grp in free_groups:
        for v in grp:
            if v not in seen:
                raise ValueError(f"free variable {v} is not read by any factor")
    assign = {}
    results: dict[tuple, object] = {}
    groups = [tuple(g) for g in free_groups]
    n = len(plan)

    def rec(i, acc):
        if i == n:
            key = tuple(tuple(sorted(assign[v] for v in g)) for g in groups)
            prev = results.get(key)
            results[key] = acc if prev is None else prev + acc
            return
        vars_, new, lookup = plan[i]
        for vals in product(range(dim), repeat=len(new)):
            for v, x in zip(new, vals):
                assign[v] = x
            val = lookup(tuple(assign[v] for v in vars_))
            if val is None:
                continue
            rec(i + 1, val if acc is None else acc * val)

    rec(0, None)
    if n == 0:
        results[tuple(() for _ in groups)] = one
    return results


def symmetrize(raw: dict[tuple, object]) -> dict[tuple, object]:
    """Divide each sorted-key sum by the number of tuples with that sorted form."""
    out = {}
    for key, val in raw.items():
        count = 1
        for idx in key:
            count *= index_arrangements(idx)
        out[key] = val if count == 1 else val * mpq(1, count)
    return out
