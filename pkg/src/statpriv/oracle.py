"""Brute-force reference implementations used to validate the pipeline.

Everything here recomputes results from first principles: joint enumeration
over template and database realizations, compensated summation and an
exhaustive rejection-set search. No aggregation code is shared with the
sampling pipeline, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import itertools
import math

from .dist import DatabaseModel, Pmf, Query
from .errors import EnumerationBudgetError
from .sampling import TemplateDistribution

DEFAULT_ORACLE_BUDGET = 10_000_000


def _round12(x: float) -> float:
    # deliberate duplicate of the pipeline's canonical answer rounding
    if x == 0.0 or not math.isfinite(x):
        return x + 0.0
    return round(x, 11 - math.floor(math.log10(abs(x))))


class _Kahan:
    """Compensated accumulator."""

    __slots__ = ("total", "_c")

    def __init__(self):
        self.total = 0.0
        self._c = 0.0

    def add(self, v: float) -> None:
        y = v - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def _answer_law(db, technique, q, budget):
    """Joint enumeration of (template, database realization) pairs."""
    grid = db.outcome_grid
    states = len(technique.items) * len(grid) ** db.n
    if states > budget:
        raise EnumerationBudgetError(states, budget)
    acc: dict[float, _Kahan] = {}
    for t, pt in technique.items:
        for row in itertools.product(grid, repeat=db.n):
            weight = pt
            for entry, value in zip(db.entries, row):
                weight *= entry.prob(value)
            if t.indices:
                sample = tuple(row[i - 1] for i in t.indices)
                a = _round12(float(q.evaluator(sample)))
            else:
                a = _round12(float(q.empty_answer))
            acc.setdefault(a, _Kahan()).add(weight)
    return {a: k.total for a, k in acc.items()}


def brute_force_divergence(
    db_a: DatabaseModel,
    db_b: DatabaseModel,
    technique: TemplateDistribution,
    q: Query,
    eps: float,
    budget: int = DEFAULT_ORACLE_BUDGET,
) -> float:
    """Hockey-stick divergence of sampled answers, from the exact joint law."""
    eps = float(eps)
    if not (math.isfinite(eps) and eps >= 0.0):
        raise ValueError(f"eps must be finite and nonnegative, got {eps}")
    if technique.n != db_a.n or technique.n != db_b.n:
        raise ValueError("technique size must match both models")
    law_a = _answer_law(db_a, technique, q, budget)
    law_b = _answer_law(db_b, technique, q, budget)
    scale = math.exp(eps)
    acc = _Kahan()
    for a in sorted(law_a):
        wa = law_a[a]
        wb = law_b.get(a, 0.0)
        diff = wa if wb == 0.0 else wa - scale * wb
        if diff > 0.0:
            acc.add(diff)
    return min(1.0, acc.total)


def brute_force_tradeoff(mu: Pmf, nu: Pmf, alpha: float, max_support: int = 12) -> float:
    """Optimal type II error at type I level alpha, by exhaustive search.

    Scans every rejection subset of the union support, collects the
    achievable (type I, type II) pairs and evaluates their lower convex
    envelope at alpha; the envelope accounts for randomized tests.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    union = sorted(set(mu.support) | set(nu.support))
    if len(union) > max_support:
        raise EnumerationBudgetError(2 ** len(union), 2 ** max_support)
    points = []
    for bits in range(2 ** len(union)):
        type1 = _Kahan()
        type2 = _Kahan()
        for i, a in enumerate(union):
            if bits >> i & 1:
                type1.add(nu.prob(a))
            else:
                type2.add(mu.prob(a))
        points.append((type1.total, type2.total))
    points.sort()
    floor: list[tuple[float, float]] = []
    for pt in points:
        if floor and pt[0] == floor[-1][0]:
            if pt[1] < floor[-1][1]:
                floor[-1] = pt
            continue
        floor.append(pt)
    hull: list[tuple[float, float]] = []
    for pt in floor:
        while len(hull) >= 2:
            (x0, y0), (x1, y1) = hull[-2], hull[-1]
            if (x1 - x0) * (pt[1] - y0) - (y1 - y0) * (pt[0] - x0) <= 1e-15:
                hull.pop()
            else:
                break
        hull.append(pt)
    a = min(max(alpha, hull[0][0]), hull[-1][0])
    for (x0, y0), (x1, y1) in zip(hull, hull[1:]):
        if x0 <= a <= x1:
            if x1 == x0:
                return min(y0, y1)
            t = (a - x0) / (x1 - x0)
            return y0 + t * (y1 - y0)
    return hull[-1][1]
