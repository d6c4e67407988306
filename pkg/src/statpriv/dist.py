"""Finite discrete distributions, product database models and queries.

Positions are 1-based throughout: a model over n entries is indexed 1..n,
matching the convention used by sampling templates.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .errors import AlreadyFixedError, EnumerationBudgetError

DEFAULT_BUDGET = 10_000_000
WEIGHT_TOL = 1e-12
SIG_DIGITS = 12


def round_significant(x: float, digits: int = SIG_DIGITS) -> float:
    """Round to `digits` significant digits.

    This is the canonical precision at which query answers are merged and
    compared everywhere in the package.
    """
    if x == 0.0 or not math.isfinite(x):
        return x + 0.0
    return round(x, digits - 1 - math.floor(math.log10(abs(x))))


@dataclass(frozen=True)
class Pmf:
    """Probability mass function on a finite, strictly increasing outcome grid.

    Zero weights are allowed so that a conditioned entry can stay on the
    common outcome grid of its model; `support` lists the outcomes that
    actually carry mass.
    """

    outcomes: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "outcomes", tuple(float(a) for a in self.outcomes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if len(self.outcomes) != len(self.weights):
            raise ValueError("outcomes and weights must have equal length")
        if not self.outcomes:
            raise ValueError("a pmf needs at least one outcome")
        for a in self.outcomes:
            if not math.isfinite(a):
                raise ValueError(f"non-finite outcome {a}")
        for prev, nxt in zip(self.outcomes, self.outcomes[1:]):
            if not nxt > prev:
                raise ValueError("outcomes must be strictly increasing")
        for w in self.weights:
            if not (math.isfinite(w) and w >= 0.0):
                raise ValueError(f"invalid weight {w}")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {total}, not 1")

    @cached_property
    def as_dict(self) -> dict[float, float]:
        return dict(zip(self.outcomes, self.weights))

    @cached_property
    def support(self) -> tuple[float, ...]:
        return tuple(a for a, w in zip(self.outcomes, self.weights) if w > 0.0)

    def prob(self, a: float) -> float:
        return self.as_dict.get(float(a), 0.0)

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[float, float]], drop_zero: bool = True) -> "Pmf":
        """Build a pmf from (outcome, weight) pairs, merging equal outcomes.

        Outcomes are canonicalized to 12 significant digits before merging.
        """
        acc: dict[float, float] = {}
        for a, w in pairs:
            key = round_significant(float(a))
            acc[key] = acc.get(key, 0.0) + float(w)
        items = sorted(acc.items())
        if drop_zero:
            items = [(a, w) for a, w in items if w > 0.0]
        if not items:
            raise ValueError("no outcomes with positive weight")
        return Pmf(tuple(a for a, _ in items), tuple(w for _, w in items))

    @staticmethod
    def point(value: float) -> "Pmf":
        return Pmf((round_significant(float(value)),), (1.0,))

    @staticmethod
    def point_on(value: float, outcomes: Sequence[float]) -> "Pmf":
        """One-hot pmf at `value` kept on a wider outcome grid."""
        value = float(value)
        outcomes = tuple(float(a) for a in outcomes)
        if value not in outcomes:
            raise ValueError(f"value {value} is not on the grid {outcomes}")
        return Pmf(outcomes, tuple(1.0 if a == value else 0.0 for a in outcomes))

    @staticmethod
    def bernoulli(p: float) -> "Pmf":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli parameter {p} outside [0, 1]")
        return Pmf((0.0, 1.0), (1.0 - float(p), float(p)))

    @staticmethod
    def mixture(components: Sequence[tuple[float, "Pmf"]]) -> "Pmf":
        """Weighted mixture of pmfs; coefficients must sum to 1."""
        pairs = []
        for coef, pmf in components:
            if coef < 0.0:
                raise ValueError(f"negative mixture coefficient {coef}")
            for a, w in zip(pmf.outcomes, pmf.weights):
                pairs.append((a, coef * w))
        return Pmf.from_pairs(pairs)


@dataclass(frozen=True, eq=False)
class Query:
    """Numeric query over a tuple of entry values.

    The evaluator may assume a nonempty input; `empty_answer` is the declared
    answer for an empty sample. `symmetric` asserts permutation invariance and
    `monotone` coordinatewise monotonicity, both trusted as declared.
    """

    name: str
    evaluator: Callable[[tuple[float, ...]], float]
    monotone: bool
    symmetric: bool = True
    empty_answer: float = 0.0

    def answer(self, values: tuple[float, ...]) -> float:
        if not values:
            return float(self.empty_answer)
        return float(self.evaluator(values))


def sum_query() -> Query:
    return Query("sum", lambda values: math.fsum(values), monotone=True)


def count_query() -> Query:
    """Number of strictly positive values in the sample."""
    return Query(
        "count",
        lambda values: float(sum(1 for x in values if x > 0.0)),
        monotone=True,
    )


def mean_query() -> Query:
    return Query(
        "mean",
        lambda values: math.fsum(values) / len(values),
        monotone=True,
        empty_answer=0.0,
    )


_QUERIES = {"sum": sum_query, "count": count_query, "mean": mean_query}


def query_by_name(name: str) -> Query:
    try:
        return _QUERIES[name]()
    except KeyError:
        raise ValueError(f"unknown query {name!r}; available: {sorted(_QUERIES)}") from None


@dataclass(frozen=True)
class DatabaseModel:
    """Product distribution over independent entries with a shared outcome grid.

    `fixed` records positions already conditioned to a value. Those entries
    are one-hot pmfs on the common grid, so a conditioned model is still a
    pure product and all operations apply unchanged.
    """

    entries: tuple[Pmf, ...]
    fixed: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        entries = tuple(self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ValueError("a model needs at least one entry")
        grid = entries[0].outcomes
        for e in entries[1:]:
            if e.outcomes != grid:
                raise ValueError("all entries must share one outcome grid")
        fixed = tuple(sorted((int(j), float(w)) for j, w in self.fixed))
        object.__setattr__(self, "fixed", fixed)
        seen = set()
        for j, w in fixed:
            if not 1 <= j <= len(entries):
                raise ValueError(f"fixed position {j} out of range 1..{len(entries)}")
            if j in seen:
                raise ValueError(f"position {j} fixed twice")
            seen.add(j)
            if entries[j - 1].prob(w) != 1.0:
                raise ValueError(f"entry {j} is not concentrated on its fixed value {w}")

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def outcome_grid(self) -> tuple[float, ...]:
        return self.entries[0].outcomes

    @cached_property
    def is_iid(self) -> bool:
        return not self.fixed and all(e == self.entries[0] for e in self.entries)

    def entry(self, j: int) -> Pmf:
        if not 1 <= j <= self.n:
            raise ValueError(f"position {j} out of range 1..{self.n}")
        return self.entries[j - 1]

    def is_fixed(self, j: int) -> bool:
        return any(j == pos for pos, _ in self.fixed)

    @staticmethod
    def iid(entry: Pmf, n: int) -> "DatabaseModel":
        if n < 1:
            raise ValueError(f"need at least one entry, got n={n}")
        return DatabaseModel((entry,) * n)


def condition(db: DatabaseModel, j: int, w: float) -> DatabaseModel:
    """Fix entry j to outcome w, returning the conditioned model.

    Raises AlreadyFixedError if j was conditioned before and ValueError for a
    position out of range or a value off the common outcome grid.
    """
    if not 1 <= j <= db.n:
        raise ValueError(f"position {j} out of range 1..{db.n}")
    w = float(w)
    if w not in db.outcome_grid:
        raise ValueError(f"value {w} is not on the outcome grid {db.outcome_grid}")
    if db.is_fixed(j):
        raise AlreadyFixedError(f"position {j} is already fixed")
    entries = list(db.entries)
    entries[j - 1] = Pmf.point_on(w, db.outcome_grid)
    return DatabaseModel(tuple(entries), db.fixed + ((j, w),))


def pushforward(db: DatabaseModel, q: Query, budget: int = DEFAULT_BUDGET) -> Pmf:
    """Exact answer distribution of q over the full product model.

    Enumerates the product of per-entry supports and merges answers at the
    canonical 12-digit precision. Raises EnumerationBudgetError when the
    state count exceeds `budget`.
    """
    supports = []
    states = 1
    for e in db.entries:
        pos = tuple((a, w) for a, w in zip(e.outcomes, e.weights) if w > 0.0)
        supports.append(pos)
        states *= len(pos)
        if states > budget:
            raise EnumerationBudgetError(states, budget)
    acc: dict[float, float] = {}
    for combo in itertools.product(*supports):
        weight = 1.0
        for _, w in combo:
            weight *= w
        a = round_significant(q.answer(tuple(v for v, _ in combo)))
        acc[a] = acc.get(a, 0.0) + weight
    items = sorted(acc.items())
    return Pmf(tuple(a for a, _ in items), tuple(w for _, w in items))


def mismatch_distance(db_a: DatabaseModel, db_b: DatabaseModel) -> int:
    """Entries that cannot be matched to an equal entry, plus the size gap."""
    ca = Counter(db_a.entries)
    cb = Counter(db_b.entries)
    common = sum((ca & cb).values())
    small, large = sorted((db_a.n, db_b.n))
    return (small - common) + (large - small)
