"""Hockey-stick divergence, privacy loss and exact privacy curves."""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .dist import (
    DEFAULT_BUDGET,
    DatabaseModel,
    Pmf,
    Query,
    condition,
    pushforward,
)

CURVE_TOL = 1e-12


def default_eps_grid() -> tuple[float, ...]:
    """Epsilon grid 0 to 3 in steps of 0.05, the package-wide default."""
    return tuple(round(0.05 * i, 10) for i in range(61))


def privacy_loss(mu: Pmf, nu: Pmf, a: float) -> float:
    """Log likelihood ratio log(mu(a) / nu(a)) with the usual conventions.

    0/0 is 0, positive/0 is +inf, 0/positive is -inf. Outcomes listed by
    neither pmf are rejected.
    """
    a = float(a)
    if a not in mu.as_dict and a not in nu.as_dict:
        raise ValueError(f"outcome {a} is outside both outcome grids")
    pa = mu.prob(a)
    qa = nu.prob(a)
    if pa == 0.0 and qa == 0.0:
        return 0.0
    if qa == 0.0:
        return math.inf
    if pa == 0.0:
        return -math.inf
    return math.log(pa / qa)


def hockey_stick_divergence(mu: Pmf, nu: Pmf, eps: float) -> float:
    """sum over outcomes of max(0, mu(a) - e^eps nu(a)), capped at 1.

    At eps = 0 this is the total variation distance.
    """
    if eps < 0.0 or not math.isfinite(eps):
        raise ValueError(f"eps must be finite and nonnegative, got {eps}")
    scale = math.exp(eps)
    nud = nu.as_dict
    terms = []
    for a, wa in zip(mu.outcomes, mu.weights):
        wb = nud.get(a, 0.0)
        diff = wa if wb == 0.0 else wa - scale * wb
        if diff > 0.0:
            terms.append(diff)
    return min(1.0, math.fsum(terms))


@dataclass(frozen=True)
class PrivacyCurve:
    """Delta values of a privacy curve on an increasing epsilon grid."""

    grid: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(e) for e in self.grid))
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if len(self.grid) != len(self.values):
            raise ValueError("grid and values must have equal length")
        if not self.grid:
            raise ValueError("a curve needs at least one grid point")
        for e in self.grid:
            if not (math.isfinite(e) and e >= 0.0):
                raise ValueError(f"invalid grid epsilon {e}")
        for prev, nxt in zip(self.grid, self.grid[1:]):
            if not nxt > prev:
                raise ValueError("epsilon grid must be strictly increasing")
        for v in self.values:
            if not (-CURVE_TOL <= v <= 1.0 + CURVE_TOL):
                raise ValueError(f"delta value {v} outside [0, 1]")
        for prev, nxt in zip(self.values, self.values[1:]):
            if nxt > prev + CURVE_TOL:
                raise ValueError("delta values must be nonincreasing in epsilon")

    def value_at(self, eps: float, extrapolate: bool = False) -> float:
        """Linear interpolation on the grid.

        Epsilons outside the grid raise unless `extrapolate` is set, which
        clamps to the nearest end value.
        """
        eps = float(eps)
        if eps < self.grid[0] or eps > self.grid[-1]:
            if not extrapolate:
                raise ValueError(
                    f"eps={eps} outside the curve grid "
                    f"[{self.grid[0]}, {self.grid[-1]}]; "
                    "pass extrapolate=True to clamp"
                )
            return self.values[0] if eps < self.grid[0] else self.values[-1]
        i = bisect_left(self.grid, eps)
        if i < len(self.grid) and self.grid[i] == eps:
            return self.values[i]
        g0, g1 = self.grid[i - 1], self.grid[i]
        v0, v1 = self.values[i - 1], self.values[i]
        t = (eps - g0) / (g1 - g0)
        return min(1.0, max(0.0, v0 + t * (v1 - v0)))


def privacy_curve(
    db: DatabaseModel,
    q: Query,
    grid: tuple[float, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> PrivacyCurve:
    """Worst-pair hockey-stick divergence of conditioned answer distributions.

    For every epsilon on the grid this maximizes
    hockey_stick_divergence(answers | entry j = v, answers | entry j = w, eps)
    over positions j and ordered pairs (v, w) from the outcome grid. With
    i.i.d. entries and a symmetric query one position suffices, so only j = 1
    is scanned.

    The generic path enumerates conditioned pushforwards once per (j, w).
    Models with i.i.d. two-valued entries under a sum or count query use a
    Binomial convolution instead, which keeps n in the thousands tractable.
    """
    if grid is None:
        grid = default_eps_grid()
    grid = tuple(float(e) for e in grid)
    if db.fixed:
        raise ValueError("privacy_curve needs a pure product model, got fixed positions")
    per_position = _conditioned_answer_pmfs(db, q, budget)
    outcomes = db.outcome_grid
    values = []
    for eps in grid:
        best = 0.0
        for pmfs in per_position:
            for v in outcomes:
                for w in outcomes:
                    if v == w:
                        continue
                    d = hockey_stick_divergence(pmfs[v], pmfs[w], eps)
                    if d > best:
                        best = d
        values.append(best)
    return PrivacyCurve(grid, tuple(values))


def _conditioned_answer_pmfs(db, q, budget):
    """One dict per scanned position mapping conditioning value to answers."""
    if db.is_iid and q.symmetric:
        fast = _counting_conditioned_pmfs(db.entries[0], q, db.n)
        if fast is not None:
            return [fast]
        positions = (1,)
    else:
        positions = tuple(j for j in range(1, db.n + 1) if not db.is_fixed(j))
    out = []
    for j in positions:
        out.append(
            {w: pushforward(condition(db, j, w), q, budget) for w in db.outcome_grid}
        )
    return out


def _counting_conditioned_pmfs(entry, q, n):
    """Binomial fast path for i.i.d. two-valued entries under sum or count.

    The n - 1 unconditioned entries contribute a Binomial number of high
    outcomes; the conditioned entry shifts the answer deterministically.
    Returns None when the fast path does not apply.
    """
    if q.name not in ("sum", "count"):
        return None
    if len(entry.outcomes) != 2:
        return None
    lo, hi = entry.outcomes
    if q.name == "sum":
        p = entry.weights[1]
        shift = {lo: lo, hi: hi}
        step = hi - lo
        base = lambda k: lo * (n - 1) + step * k
    else:
        p = math.fsum(w for a, w in zip(entry.outcomes, entry.weights) if a > 0.0)
        shift = {a: (1.0 if a > 0.0 else 0.0) for a in entry.outcomes}
        base = lambda k: float(k)
    rest = _binomial_weights(n - 1, p)
    out = {}
    for v in entry.outcomes:
        pairs = [(shift[v] + base(k), wk) for k, wk in enumerate(rest)]
        out[v] = Pmf.from_pairs(pairs)
    return out


def _binomial_weights(n: int, p: float) -> list[float]:
    """Binomial(n, p) weights by iterated convolution."""
    weights = np.array([1.0])
    kernel = np.array([1.0 - p, p])
    for _ in range(n):
        weights = np.convolve(weights, kernel)
    return [float(w) for w in weights]


@dataclass(frozen=True)
class HalfLineResult:
    """Outcome of a half-line check; falsy with a witness on failure."""

    ok: bool
    eps: float | None = None
    outcome: float | None = None

    def __bool__(self) -> bool:
        return self.ok


def half_line_check(
    mu: Pmf,
    nu: Pmf,
    eps_grid: tuple[float, ...] | None = None,
    strict: bool = True,
) -> HalfLineResult:
    """Check that every optimal distinguishing set is a half line.

    For each epsilon on the grid, the outcomes with mu(a) - e^eps nu(a) > 0,
    taken in increasing order over the union support, must form a prefix, a
    suffix or the empty set. With strict=False, outcomes where the
    difference is exactly 0 may be absorbed into the chosen half line, so
    only the order of strictly positive and strictly negative outcomes
    matters; that weaker condition is the one the with-replacement bound
    needs, since a maximizing set only has to be choosable as a half line.

    The first violation is returned as a witness: its epsilon and the
    outcome completing the second sign change (strict mode: the outcome
    opening the second positive run, or the run start when a single interior
    run touches neither end). The check is grid-limited; epsilons between
    grid points are not examined.
    """
    if eps_grid is None:
        eps_grid = default_eps_grid()
    union = sorted(set(mu.support) | set(nu.support))
    for eps in eps_grid:
        scale = math.exp(float(eps))
        diffs = []
        for a in union:
            pa = mu.prob(a)
            qa = nu.prob(a)
            diffs.append(pa if qa == 0.0 else pa - scale * qa)
        if strict:
            failure = _strict_violation(union, diffs)
        else:
            failure = _sign_change_violation(union, diffs)
        if failure is not None:
            return HalfLineResult(False, float(eps), failure)
    return HalfLineResult(True)


def _strict_violation(union, diffs):
    """Witness outcome if the positive set is no prefix or suffix, else None."""
    positive = [i for i, d in enumerate(diffs) if d > 0.0]
    if not positive:
        return None
    first, last = positive[0], positive[-1]
    contiguous = last - first + 1 == len(positive)
    if contiguous and (first == 0 or last == len(union) - 1):
        return None
    for cur, nxt in zip(positive, positive[1:]):
        if nxt > cur + 1:
            return union[nxt]
    return union[first]


def _sign_change_violation(union, diffs):
    """Witness outcome at the second sign change, ignoring zeros, else None."""
    previous = 0
    changes = 0
    for i, d in enumerate(diffs):
        sign = 1 if d > 0.0 else -1 if d < 0.0 else 0
        if sign == 0:
            continue
        if previous != 0 and sign != previous:
            changes += 1
            if changes == 2:
                return union[i]
        previous = sign
    return None
