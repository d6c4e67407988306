"""Command line interface: curves, amplification bounds, figures, verification.

Exit codes: 0 success, 1 usage or parse errors, 2 enumeration budget
exceeded, 3 verification or samplability failures.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys

from .amplify import (
    dp_poisson_bound,
    dp_subsample,
    poisson_bound,
    viability_ratio,
    with_replacement_bound,
    without_replacement_bound,
)
from .dist import (
    DEFAULT_BUDGET,
    DatabaseModel,
    Pmf,
    condition,
    query_by_name,
    sum_query,
)
from .divergence import default_eps_grid, hockey_stick_divergence, privacy_curve
from .errors import EnumerationBudgetError, NotSamplableError
from .oracle import brute_force_divergence
from .sampling import TemplateDistribution, sampled_pushforward


class UsageError(Exception):
    """Bad flags, bad config or malformed parameter syntax."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on its own; 2 is reserved for budget
    # overruns here, so errors are converted and mapped to exit 1 in main.
    def error(self, message):
        raise UsageError(message)


def _parse_float(token: str, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise UsageError(f"{what}: expected a number, got {token!r}") from None


def _parse_int(token: str, what: str, minimum: int = 1) -> int:
    try:
        value = int(token)
    except ValueError:
        raise UsageError(f"{what}: expected an integer, got {token!r}") from None
    if value < minimum:
        raise UsageError(f"{what}: need at least {minimum}, got {value}")
    return value


def parse_entry(token: str) -> Pmf:
    """bern:p, point:v or discrete:v@w,v@w,..."""
    name, _, params = token.partition(":")
    if name == "bern":
        p = _parse_float(params, "--entry bern")
        if not 0.0 <= p <= 1.0:
            raise UsageError(f"--entry bern: parameter {p} outside [0, 1]")
        return Pmf.bernoulli(p)
    if name == "point":
        return Pmf.point(_parse_float(params, "--entry point"))
    if name == "discrete":
        pairs = []
        for part in params.split(","):
            value, sep, weight = part.partition("@")
            if not sep:
                raise UsageError(
                    f"--entry discrete: expected value@weight, got {part!r}"
                )
            pairs.append(
                (
                    _parse_float(value, "--entry discrete value"),
                    _parse_float(weight, "--entry discrete weight"),
                )
            )
        try:
            return Pmf.from_pairs(pairs)
        except ValueError as exc:
            raise UsageError(f"--entry discrete: {exc}") from None
    raise UsageError(f"unknown entry kind {name!r}; use bern, point or discrete")


def _parse_one_eps(token: str) -> float:
    token = token.strip()
    if token.startswith("ln"):
        x = _parse_float(token[2:], "--eps ln")
        if x <= 0.0:
            raise UsageError(f"--eps: ln argument must be positive, got {x}")
        value = math.log(x)
    else:
        value = _parse_float(token, "--eps")
    if value < 0.0:
        raise UsageError(f"--eps: epsilon must be nonnegative, got {value}")
    return value


def parse_eps(token: str) -> tuple[float, ...]:
    """Single value, comma list, start:stop:step grid; ln<x> for log values."""
    from .dist import round_significant

    if ":" in token:
        parts = token.split(":")
        if len(parts) != 3:
            raise UsageError(f"--eps: grid needs start:stop:step, got {token!r}")
        start = _parse_float(parts[0], "--eps start")
        stop = _parse_float(parts[1], "--eps stop")
        step = _parse_float(parts[2], "--eps step")
        if step <= 0.0 or stop < start or start < 0.0:
            raise UsageError(f"--eps: bad grid {token!r}")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round_significant(start + i * step) for i in range(count))
    values = tuple(_parse_one_eps(part) for part in token.split(","))
    for prev, nxt in zip(values, values[1:]):
        if nxt <= prev:
            raise UsageError("--eps: grid values must be strictly increasing")
    return values


def parse_technique(token: str):
    """none, wor:n,m, poisson:n,rate or wr:n,m."""
    if token == "none":
        return ("none",)
    name, _, params = token.partition(":")
    parts = params.split(",")
    if name in ("wor", "wr"):
        if len(parts) != 2:
            raise UsageError(f"--technique {name}: expected {name}:n,m")
        n = _parse_int(parts[0], f"--technique {name} n")
        m = _parse_int(parts[1], f"--technique {name} m")
        return (name, n, m)
    if name == "poisson":
        if len(parts) != 2:
            raise UsageError("--technique poisson: expected poisson:n,rate")
        n = _parse_int(parts[0], "--technique poisson n")
        rate = _parse_float(parts[1], "--technique poisson rate")
        if not 0.0 < rate <= 1.0:
            raise UsageError(f"--technique poisson: rate {rate} outside (0, 1]")
        return (name, n, rate)
    raise UsageError(f"unknown technique {name!r}; use none, wor, poisson or wr")


_CONFIG_KEYS = ("entry", "n", "query", "technique", "eps", "out", "budget")


def read_config(path: str) -> dict[str, str]:
    """key=value lines; # comments and blank lines are skipped."""
    try:
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    out: dict[str, str] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(
                f"{path}:{lineno}:{len(line) + 1}: expected '=' in {line!r}"
            )
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}:1: unknown key {key!r}")
        if not value:
            raise UsageError(f"{path}:{lineno}:{len(key) + 2}: empty value for {key!r}")
        out[key] = value
    return out


def _picker(args):
    cfg = read_config(args.config) if getattr(args, "config", None) else {}

    def pick(key, default=None):
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            return value
        return cfg.get(key, default)

    return pick


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required option {flag}")
    return value


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    x = float(value)
    if x == math.floor(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _write_csv(path, header, rows):
    def emit(handle):
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])

    if path:
        with open(path, "w", newline="", encoding="utf-8") as handle:
            emit(handle)
    else:
        emit(sys.stdout)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--entry", help="entry pmf: bern:p, point:v, discrete:v@w,...")
    p.add_argument("--n", help="number of database entries")
    p.add_argument("--query", help="query name: count, sum or mean")
    p.add_argument("--technique", help="none, wor:n,m, poisson:n,rate or wr:n,m")
    p.add_argument("--eps", help="epsilon: value, comma list or start:stop:step")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--budget", help="enumeration state budget")
    p.add_argument("--config", help="key=value config file; flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="statpriv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("curve", help="exact privacy curve of an i.i.d. model")
    _add_common(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("amplify", help="subsampling amplification bounds")
    _add_common(p)
    p.set_defaults(func=cmd_amplify)

    p = sub.add_parser("figures", help="reproduce the figure data as CSV")
    p.add_argument("which", choices=("fig1", "fig2", "fig3"))
    _add_common(p)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="cross-check the pipeline against the oracle")
    p.add_argument("--max-n", dest="max_n", help="largest model size (default 3)")
    p.add_argument("--out", help="output CSV path (default stdout)")
    p.add_argument("--budget", help="enumeration state budget")
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="classic against size-decomposed Poisson route")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    return parser


def _common_inputs(pick, *, need_entry=True):
    entry = parse_entry(_require(pick("entry"), "--entry")) if need_entry else None
    q = query_by_name(pick("query", "count"))
    budget = (
        _parse_int(pick("budget"), "--budget") if pick("budget") else DEFAULT_BUDGET
    )
    return entry, q, budget


def cmd_curve(args) -> int:
    pick = _picker(args)
    entry, q, budget = _common_inputs(pick)
    n = _parse_int(_require(pick("n"), "--n"), "--n")
    technique = parse_technique(pick("technique", "none"))
    if technique[0] != "none":
        raise UsageError("curve computes the raw curve; use amplify for techniques")
    grid = parse_eps(pick("eps")) if pick("eps") else default_eps_grid()
    curve = privacy_curve(DatabaseModel.iid(entry, n), q, grid, budget)
    _write_csv(
        pick("out"),
        ("epsilon", "delta"),
        list(zip(curve.grid, curve.values)),
    )
    return 0


def cmd_amplify(args) -> int:
    pick = _picker(args)
    entry, q, budget = _common_inputs(pick)
    technique = parse_technique(_require(pick("technique"), "--technique"))
    if technique[0] == "none":
        raise UsageError("amplify needs a sampling technique, not none")
    kind, n, param = technique
    if pick("n") is not None and _parse_int(pick("n"), "--n") != n:
        raise UsageError(f"--n disagrees with the technique size {n}")
    grid = parse_eps(pick("eps")) if pick("eps") else default_eps_grid()
    db = DatabaseModel.iid(entry, n)
    if kind == "wor":
        params = without_replacement_bound(db, q, n, param, grid, budget)
        rows = [(e, a.eps_prime, a.delta_prime) for e, a in zip(grid, params)]
    elif kind == "wr":
        params = with_replacement_bound(db, q, n, param, grid, budget)
        rows = [(e, a.eps_prime, a.delta_prime) for e, a in zip(grid, params)]
    else:
        curve = poisson_bound(db, q, n, param, grid, budget)
        rows = [(e, e, d) for e, d in zip(curve.grid, curve.values)]
    _write_csv(pick("out"), ("epsilon", "eps_prime", "delta_prime"), rows)
    return 0


def _lambda_grid() -> tuple[float, ...]:
    return tuple(round(0.1 * i, 10) for i in range(1, 11))


def _eps_file(stem: str, eps: float) -> str:
    if stem.endswith(".csv"):
        stem = stem[:-4]
    return f"{stem}_eps{_fmt(eps)}.csv"


def cmd_figures(args) -> int:
    pick = _picker(args)
    entry, q, budget = _common_inputs(pick)
    stem = _require(pick("out"), "--out")
    if args.which == "fig1":
        eps_list = parse_eps(pick("eps")) if pick("eps") else (0.1, 0.3, 1.0)
        for eps in eps_list:
            rows = []
            for n in range(10, 201, 10):
                curve = privacy_curve(DatabaseModel.iid(entry, n), q, (eps,), budget)
                rows.append((n, curve.values[0]))
            _write_csv(_eps_file(stem, eps), ("n", "delta"), rows)
        return 0
    eps_list = parse_eps(pick("eps")) if pick("eps") else (0.025, 0.05, 0.075, 0.1)
    if args.which == "fig2":
        n = _parse_int(pick("n", "100"), "--n")
        for eps in eps_list:
            rows = []
            for lam in _lambda_grid():
                m = min(n, max(1, round(lam * n)))
                rows.append((lam, viability_ratio(entry, q, n, m, eps, budget)))
            _write_csv(_eps_file(stem, eps), ("lambda", "ratio"), rows)
        return 0
    n = _parse_int(pick("n", "20"), "--n")
    db = DatabaseModel.iid(entry, n)
    for eps in eps_list:
        base = privacy_curve(db, q, (eps,), budget).values[0]
        if base == 0.0:
            raise UsageError(f"unsampled curve is 0 at eps={eps}; ratio undefined")
        rows = []
        for lam in _lambda_grid():
            star = poisson_bound(db, q, n, lam, (eps,), budget).values[0]
            rows.append((lam, star / base))
        _write_csv(_eps_file(stem, eps), ("lambda", "ratio"), rows)
    return 0


def cmd_verify(args) -> int:
    max_n = _parse_int(args.max_n, "--max-n", minimum=2) if args.max_n else 3
    budget = _parse_int(args.budget, "--budget") if args.budget else DEFAULT_BUDGET
    q = sum_query()
    agreement_tol = 1e-12
    dominance_tol = 1e-10
    rows = []
    failures = 0
    faulty = bool(args.inject_fault)

    def record(case, quantity, pipeline, reference, ok):
        nonlocal failures
        if not ok:
            failures += 1
        rows.append(
            (case, quantity, pipeline, reference, abs(pipeline - reference), ok)
        )

    for p in (0.3, 0.5):
        entry = Pmf.bernoulli(p)
        for n in range(2, max_n + 1):
            db = DatabaseModel.iid(entry, n)
            techniques = [
                (f"wor n={n} m={m}", TemplateDistribution.without_replacement(n, m))
                for m in range(1, n + 1)
            ]
            techniques.append((f"poisson n={n} rate=0.5", TemplateDistribution.poisson(n, 0.5)))
            techniques.extend(
                (f"wr n={n} m={m}", TemplateDistribution.with_replacement(n, m))
                for m in range(1, 3)
            )
            high = condition(db, 1, 1.0)
            low = condition(db, 1, 0.0)
            for label, technique in techniques:
                for eps in (0.0, 0.5, 1.0):
                    pipe = hockey_stick_divergence(
                        sampled_pushforward(high, technique, q, budget),
                        sampled_pushforward(low, technique, q, budget),
                        eps,
                    )
                    if faulty:
                        pipe = -pipe
                        faulty = False
                    reference = brute_force_divergence(
                        high, low, technique, q, eps, budget
                    )
                    record(
                        f"{label} p={p} eps={_fmt(eps)}",
                        "divergence",
                        pipe,
                        reference,
                        abs(pipe - reference) <= agreement_tol,
                    )

            def direct_delta(technique, eps):
                forward = brute_force_divergence(high, low, technique, q, eps, budget)
                backward = brute_force_divergence(low, high, technique, q, eps, budget)
                return max(forward, backward)

            for m in range(1, n + 1):
                technique = TemplateDistribution.without_replacement(n, m)
                for eps, bound in zip(
                    (0.0, 0.5, 1.0),
                    without_replacement_bound(db, q, n, m, (0.0, 0.5, 1.0), budget),
                ):
                    direct = direct_delta(technique, bound.eps_prime)
                    record(
                        f"wor n={n} m={m} p={p} eps={_fmt(eps)}",
                        "wor_dominance",
                        bound.delta_prime,
                        direct,
                        direct <= bound.delta_prime + dominance_tol,
                    )
            technique = TemplateDistribution.poisson(n, 0.5)
            curve = poisson_bound(db, q, n, 0.5, (0.0, 0.5, 1.0), budget)
            for eps, star in zip(curve.grid, curve.values):
                direct = direct_delta(technique, eps)
                record(
                    f"poisson n={n} rate=0.5 p={p} eps={_fmt(eps)}",
                    "poisson_dominance",
                    star,
                    direct,
                    direct <= star + dominance_tol,
                )
            for m in range(1, 3):
                technique = TemplateDistribution.with_replacement(n, m)
                try:
                    bounds = with_replacement_bound(db, q, n, m, (0.0, 0.5, 1.0), budget)
                except NotSamplableError:
                    # The gate refused this model; nothing to compare.
                    continue
                for eps, bound in zip((0.0, 0.5, 1.0), bounds):
                    direct = direct_delta(technique, bound.eps_prime)
                    record(
                        f"wr n={n} m={m} p={p} eps={_fmt(eps)}",
                        "wr_dominance",
                        bound.delta_prime,
                        direct,
                        direct <= bound.delta_prime + dominance_tol,
                    )
    _write_csv(
        args.out,
        ("case", "quantity", "pipeline", "oracle", "abs_diff", "pass"),
        rows,
    )
    return 3 if failures else 0


def cmd_compare(args) -> int:
    """Classic rate-scaled route against the size-decomposed route.

    Both are applied to the same unsampled delta curve, so the difference
    isolates the decomposition by realized sample size.
    """
    pick = _picker(args)
    entry, q, budget = _common_inputs(pick)
    technique = parse_technique(_require(pick("technique"), "--technique"))
    if technique[0] != "poisson":
        raise UsageError("compare needs --technique poisson:n,rate")
    _, n, rate = technique
    eps_list = parse_eps(pick("eps")) if pick("eps") else default_eps_grid()
    db = DatabaseModel.iid(entry, n)
    needed = set()
    for eps in eps_list:
        needed.add(math.log1p(math.expm1(eps) / rate))
        for m in range(1, n + 1):
            needed.add(eps if m == n else math.log1p((n / m) * math.expm1(eps)))
    curve = privacy_curve(db, q, tuple(sorted(needed)), budget)
    rows = []
    for eps in eps_list:
        matched = math.log1p(math.expm1(eps) / rate)
        classic = dp_subsample(matched, curve.value_at(matched), rate).delta_prime
        sized = dp_poisson_bound(curve, n, rate, eps)
        rows.append((eps, classic, sized))
    _write_csv(pick("out"), ("epsilon", "delta_classic", "delta_sized"), rows)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EnumerationBudgetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NotSamplableError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
