"""Privacy amplification bounds for subsampled queries."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dist import DEFAULT_BUDGET, DatabaseModel, Pmf, Query, condition
from .divergence import (
    PrivacyCurve,
    default_eps_grid,
    half_line_check,
    hockey_stick_divergence,
    privacy_curve,
)
from .errors import NotSamplableError, ZeroProbabilityError
from .sampling import (
    TemplateDistribution,
    apply_template,
    matched_coupling,
    sampling_curve,
    sampling_curve_max,
)

PARAM_TOL = 1e-12


@dataclass(frozen=True)
class AmplifiedParams:
    """A single (eps', delta') point produced by an amplification bound."""

    eps_prime: float
    delta_prime: float

    def __post_init__(self):
        if not (math.isfinite(self.eps_prime) and self.eps_prime >= 0.0):
            raise ValueError(f"invalid eps' {self.eps_prime}")
        if not -PARAM_TOL <= self.delta_prime <= 1.0 + PARAM_TOL:
            raise ValueError(f"delta' {self.delta_prime} outside [0, 1]")
        object.__setattr__(
            self, "delta_prime", min(1.0, max(0.0, float(self.delta_prime)))
        )


def shrink_epsilon(eps: float, rate: float) -> float:
    """log(1 + rate (e^eps - 1)); rate 1 returns eps unchanged."""
    eps = float(eps)
    if not (math.isfinite(eps) and eps >= 0.0):
        raise ValueError(f"eps must be finite and nonnegative, got {eps}")
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    if rate == 1.0:
        return eps
    return math.log1p(rate * math.expm1(eps))


def _stretch_epsilon(eps: float, n: int, m: int) -> float:
    """Inverse of shrink_epsilon at rate m/n; m = n returns eps unchanged."""
    if m == n:
        return float(eps)
    return math.log1p((n / m) * math.expm1(float(eps)))


def _check_model(db: DatabaseModel, n: int) -> None:
    if n != db.n:
        raise ValueError(f"n={n} does not match the model size {db.n}")
    if db.fixed:
        raise ValueError("amplification bounds need a pure product model")


def _sampled_curve_values(db, q, n, m, grid, budget):
    """Sampled curve for m-of-n without replacement, as a value tuple.

    i.i.d. models with a symmetric query collapse to the privacy curve of an
    m-entry model, which also unlocks the Binomial fast path.
    """
    if db.is_iid and q.symmetric:
        return privacy_curve(DatabaseModel.iid(db.entries[0], m), q, grid, budget).values
    technique = TemplateDistribution.without_replacement(n, m, budget)
    return sampling_curve_max(db, q, technique, grid, budget).values


def without_replacement_bound(
    db: DatabaseModel,
    q: Query,
    n: int,
    m: int,
    grid: tuple[float, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> tuple[AmplifiedParams, ...]:
    """Amplified (eps', delta') pairs for m-of-n sampling without replacement.

    For each grid epsilon, eps' = log(1 + (m/n)(e^eps - 1)) and delta' is m/n
    times the sampled privacy curve at eps, maximized over positions.
    """
    _check_model(db, n)
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    if grid is None:
        grid = default_eps_grid()
    grid = tuple(float(e) for e in grid)
    rate = m / n
    values = _sampled_curve_values(db, q, n, m, grid, budget)
    return tuple(
        AmplifiedParams(shrink_epsilon(e, rate), rate * v)
        for e, v in zip(grid, values)
    )


def without_replacement_bound_iid(
    entry: Pmf,
    q: Query,
    n: int,
    m: int,
    grid: tuple[float, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> tuple[AmplifiedParams, ...]:
    """without_replacement_bound for n i.i.d. copies of one entry pmf."""
    return without_replacement_bound(DatabaseModel.iid(entry, n), q, n, m, grid, budget)


def viability_ratio(
    entry: Pmf,
    q: Query,
    n: int,
    m: int,
    eps: float,
    budget: int = DEFAULT_BUDGET,
) -> float:
    """Bound delta at the matched epsilon over the unsampled delta.

    The numerator evaluates the m-entry curve at log(1 + (n/m)(e^eps - 1)),
    the stretch that shrinks back to eps, and scales by m/n. Values below 1
    mean sampling m of n entries improves delta at level eps. Raises
    ZeroDivisionError when the unsampled curve is 0 at eps.
    """
    if not 1 <= m <= n:
        raise ValueError(f"need 1 <= m <= n, got m={m}, n={n}")
    eps = float(eps)
    if not (math.isfinite(eps) and eps >= 0.0):
        raise ValueError(f"eps must be finite and nonnegative, got {eps}")
    base = privacy_curve(DatabaseModel.iid(entry, n), q, (eps,), budget).values[0]
    if base == 0.0:
        raise ZeroDivisionError(f"unsampled curve is 0 at eps={eps}; ratio undefined")
    stretched = _stretch_epsilon(eps, n, m)
    top = privacy_curve(DatabaseModel.iid(entry, m), q, (stretched,), budget).values[0]
    return (m / n) * top / base


def poisson_bound(
    db: DatabaseModel,
    q: Query,
    n: int,
    rate: float,
    grid: tuple[float, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> PrivacyCurve:
    """Delta curve for Poisson sampling with inclusion probability `rate`.

    Decomposes by realized sample size m: the m-of-n sampled curve at the
    stretched epsilon log(1 + (n/m)(e^eps - 1)) enters with the
    Binomial(n, rate) weight of m, scaled by m/n. The empty sample
    contributes nothing. The output curve is indexed by the input epsilon.
    """
    _check_model(db, n)
    rate = float(rate)
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    if grid is None:
        grid = default_eps_grid()
    grid = tuple(float(e) for e in grid)
    terms: list[list[float]] = [[] for _ in grid]
    for m in range(1, n + 1):
        weight = math.comb(n, m) * rate ** m * (1.0 - rate) ** (n - m)
        if weight == 0.0:
            continue
        stretched = tuple(_stretch_epsilon(e, n, m) for e in grid)
        values = _sampled_curve_values(db, q, n, m, stretched, budget)
        factor = weight * m / n
        for gi, v in enumerate(values):
            terms[gi].append(factor * v)
    out = tuple(min(1.0, math.fsum(ts)) for ts in terms)
    return PrivacyCurve(grid, out)


def occurrence_weights(n: int, m: int) -> tuple[float, ...]:
    """P(K = k) for k = 0..m with K ~ Binomial(m, 1/n).

    K is how often one fixed entry appears in m uniform draws with
    replacement from n entries.
    """
    if n < 1 or m < 1:
        raise ValueError(f"need n >= 1 and m >= 1, got n={n}, m={m}")
    miss = 1.0 - 1.0 / n
    return tuple(
        math.comb(m, k) * (1.0 / n) ** k * miss ** (m - k) for k in range(m + 1)
    )


def with_replacement_bound(
    db: DatabaseModel,
    q: Query,
    n: int,
    m: int,
    grid: tuple[float, ...] | None = None,
    budget: int = DEFAULT_BUDGET,
) -> tuple[AmplifiedParams, ...]:
    """Amplified (eps', delta') pairs for m uniform draws with replacement.

    Needs a monotone query and the samplability precondition certified by
    _check_half_line_scope (half-line choosability on same-template pairs,
    the coupled mean value inequality on cross pairs); a failure raises
    NotSamplableError with the witness. eps' shrinks by the probability
    1 - (1 - 1/n)^m that the sensitive entry is drawn at all; delta' mixes
    sampled curves conditioned on its exact draw count k with
    Binomial(m, 1/n) weights.
    """
    _check_model(db, n)
    if m < 1:
        raise ValueError(f"need m >= 1, got m={m}")
    if not q.monotone:
        raise ValueError("the with-replacement bound needs a monotone query")
    if grid is None:
        grid = default_eps_grid()
    grid = tuple(float(e) for e in grid)
    technique = TemplateDistribution.with_replacement(n, m, budget)
    if db.is_iid and q.symmetric:
        positions = (1,)
    else:
        positions = tuple(range(1, n + 1))
    _check_half_line_scope(db, q, technique, positions, grid, budget)
    weights = occurrence_weights(n, m)
    per_k: list[tuple[float, tuple[float, ...]]] = []
    for k in range(1, m + 1):
        if weights[k] == 0.0:
            continue
        best = None
        for j in positions:
            view = technique.given_count(j, k)
            vals = sampling_curve(db, q, view, j, grid, budget).values
            best = vals if best is None else tuple(map(max, best, vals))
        per_k.append((weights[k], best))
    stay_out = 1.0 - 1.0 / n
    drawn_rate = 1.0 - stay_out ** m
    out = []
    for gi, e in enumerate(grid):
        delta = math.fsum(wk * vals[gi] for wk, vals in per_k)
        out.append(AmplifiedParams(shrink_epsilon(e, drawn_rate), min(1.0, delta)))
    return tuple(out)


def _check_half_line_scope(db, q, technique, positions, grid, budget):
    """Samplability precondition over every answer pair the proof compares.

    Per position j, two families are certified on the epsilon grid:

    Same-template pairs: for each template drawing j and ordered
    conditioning values (v, w), some maximizing set of the divergence must
    be choosable as a half line (half_line_check with strict=False; zero
    differences count as free to include).

    Coupled cross pairs: for each (template with j, partner without j) pair
    from the matched coupling and each value v, the mean value inequality
    divergence(conditioned v through the template, unconditioned through the
    partner) <= max over w of the same-template divergence is verified
    directly. The literal half-line condition routinely fails on these pairs
    for interleaved answer supports even though the inequality the proof
    actually uses holds, so the inequality itself is checked.

    Raises NotSamplableError with a witness on the first failure.
    """
    outcomes = db.outcome_grid
    for j in positions:
        drawn = technique.given_drawn(j)
        conditioned = {w: condition(db, j, w) for w in outcomes}
        cache: dict[tuple[float | None, tuple[int, ...]], Pmf] = {}

        def answers(w, t):
            key = (w, tuple(sorted(t.indices)) if q.symmetric else t.indices)
            pmf = cache.get(key)
            if pmf is None:
                model = db if w is None else conditioned[w]
                pmf = apply_template(model, t, q, budget)
                cache[key] = pmf
            return pmf

        for t, _ in drawn.items:
            for v in outcomes:
                for w in outcomes:
                    if v == w:
                        continue
                    res = half_line_check(answers(v, t), answers(w, t), grid, strict=False)
                    if not res:
                        raise NotSamplableError(
                            res.eps,
                            res.outcome,
                            context=f"j={j}, template={t.indices}, pair=({v}, {w})",
                        )
        try:
            avoided = technique.given_not_drawn(j)
        except ZeroProbabilityError:
            continue
        for t_in, t_out, _ in matched_coupling(drawn, avoided, j):
            right = answers(None, t_out)
            for v in outcomes:
                left = answers(v, t_in)
                for eps in grid:
                    cross = hockey_stick_divergence(left, right, eps)
                    ceiling = max(
                        hockey_stick_divergence(left, answers(w, t_in), eps)
                        for w in outcomes
                    )
                    if cross > ceiling + PARAM_TOL:
                        witness = max(
                            left.outcomes,
                            key=lambda a: left.prob(a) - math.exp(eps) * right.prob(a),
                        )
                        raise NotSamplableError(
                            eps,
                            witness,
                            context=(
                                f"j={j}, coupled templates {t_in.indices} and "
                                f"{t_out.indices}, conditioned to {v}: cross "
                                f"divergence {cross} exceeds the same-template "
                                f"ceiling {ceiling}"
                            ),
                        )


def normal_approximation_delta(n: int, p: float, eps: float) -> float:
    """Large-n counting shortcut min(1, 10 / (n p (1 - p) eps^2))."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    if not 0.0 < p < 1.0:
        raise ValueError(f"need 0 < p < 1, got {p}")
    if not eps > 0.0:
        raise ValueError(f"need eps > 0, got {eps}")
    return min(1.0, 10.0 / (n * p * (1.0 - p) * eps * eps))


def dp_subsample(eps: float, delta: float, rate: float) -> AmplifiedParams:
    """Classic DP subsampling: (log(1 + rate (e^eps - 1)), rate delta)."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta {delta} outside [0, 1]")
    return AmplifiedParams(shrink_epsilon(eps, rate), rate * float(delta))


def dp_poisson_bound(
    curve: PrivacyCurve,
    n: int,
    rate: float,
    eps: float,
    extrapolate: bool = False,
) -> float:
    """Size-decomposed Poisson bound applied to an arbitrary delta curve.

    Evaluates the curve at the stretched epsilons by linear interpolation.
    Stretches beyond the grid raise unless `extrapolate` is set, which clamps
    to the end value; the clamp is anti-conservative above the grid, hence
    off by default.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    rate = float(rate)
    if not 0.0 < rate <= 1.0:
        raise ValueError(f"rate must be in (0, 1], got {rate}")
    eps = float(eps)
    if not (math.isfinite(eps) and eps >= 0.0):
        raise ValueError(f"eps must be finite and nonnegative, got {eps}")
    terms = []
    for m in range(1, n + 1):
        weight = math.comb(n, m) * rate ** m * (1.0 - rate) ** (n - m)
        if weight == 0.0:
            continue
        value = curve.value_at(_stretch_epsilon(eps, n, m), extrapolate=extrapolate)
        terms.append(weight * m / n * value)
    return min(1.0, math.fsum(terms))
