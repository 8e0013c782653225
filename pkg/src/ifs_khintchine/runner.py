"""
Experiment runner: turns a validated ExperimentConfig into result tables
and writes them with the configured formatter.
"""

import logging
import math
import os
from fractions import Fraction
from typing import Callable, Dict, List

import numpy as np

from .config import ExperimentConfig
from .dimension import attractor_dimension
from .errors import ValidationError
from .experiments import (
    example21_montecarlo,
    example21_report,
    example22_check,
    leading_block_construction,
    leading_block_dimension,
    leading_block_scan,
)
from .formatters.factory import create_formatter, resolve_format
from .formatters.markdown import MarkdownFormatter
from .ifs_core import check_budget, check_separation, fixed_point, natural_sampler, point_of_coding
from .khintchine import ApproxFunction, ZPoint, dufschaeffer_ratio, limsup_hit_experiment
from .massxfer import critical_exponent_scan
from .models.algebraic import QuadraticIrrational, RationalPoint
from .models.ifs import format_word, parse_fraction
from .models.results import ResultTable
from .numtheory import (
    approx_exponent_estimate,
    continued_fraction_digits,
    detect_exact_overlap,
    map_height_constant,
    mass_transference_exponent,
    overlap_dimension_drop,
    quadratic_orbit_growth,
    rational_orbit_growth,
    well_approximable_coding,
)

logger = logging.getLogger(__name__)

DS_Q_MAX = 10 ** 6
FINITE_EVIDENCE = "finite-depth evidence only; limsup statements are not certified"


# Claims restated in summaries, keyed by a stable identifier
CLAIMS = {
    "similarity-dimension": (
        "Under separation the Hausdorff dimension of the attractor is the root of "
        "sum r_i^s = 1, or the zero of the pressure for conformal maps."
    ),
    "khintchine-dichotomy": (
        "If sum_I Psi(I)^dim_H diverges, almost every point of X (natural measure) lies in "
        "B(phi_I(z), Psi(I)) for infinitely many I; if it converges, almost none does."
    ),
    "divergence-without-full-measure": (
        "For {3x/4, x/4 + 3/4} and balls B(phi_I(0), 2^-|I|) the Khintchine sum diverges, "
        "yet the limsup set has Lebesgue measure zero."
    ),
    "restricted-convergence": (
        "With Psi(I) = 2^-|I| |I|^-2 on words beginning with J and 2^-|I| otherwise, the "
        "restricted sum converges, so almost no point of X_J is approximated infinitely "
        "often, while the global sum diverges."
    ),
    "leading-block-dichotomy": (
        "A coding whose leading block recurs only finitely often yields a Khintchine "
        "dichotomy without monotonicity of theta."
    ),
    "mass-transference": (
        "dim_H W((Diam(X_I) theta(|I|))^t, z) = dim_H(X) / t when the theta sum diverges."
    ),
    "rational-orbit-heights": (
        "For a rational IFS, H(phi_I(a)) <= C^|I| H(a); with Diam(X_I) decaying "
        "geometrically this yields points of X approximable by rationals to any exponent."
    ),
    "quadratic-orbit-heights": (
        "H(1/(alpha + i)) <= 3 i^2 H(alpha), so H(phi_I(alpha)) <= (max 3 i^2)^|I| H(alpha)."
    ),
    "overlap-dimension-drop": (
        "An exact overlap phi_I = phi_J lowers the similarity dimension of the level-k "
        "system once a copy is removed, which rules out approximation regularity."
    ),
}


def claim(key: str) -> str:
    """The claim text prefixed with its identifier."""
    return f"[{key}] {CLAIMS[key]}"


def _decades(limit: int) -> List[int]:
    """1, 2, 5, 10, 20, 50, ... up to limit, plus limit itself."""
    points = sorted({
        m * 10 ** e for e in range(int(math.log10(limit)) + 1) for m in (1, 2, 5)
        if m * 10 ** e <= limit
    } | {limit})
    return points


def run_dim(config: ExperimentConfig) -> List[ResultTable]:
    ifs = config.resolve_ifs()
    params = config.params
    result = attractor_dimension(ifs, n=params["n"], tol=params["tol"],
                                  budget=config.budgets.pressure)
    separation = check_separation(ifs)
    table = ResultTable(
        name="dim",
        columns=["preset", "kind", "method", "lower", "upper", "level", "tolerance", "separation"],
        claim=claim("similarity-dimension"),
    )
    table.add_row(ifs.name, ifs.kind, result.method, result.lower, result.upper,
                  result.level, result.tolerance, separation.label)
    table.summary.append(f"dimension in [{result.lower:.12g}, {result.upper:.12g}]")
    if not result.hausdorff_certified:
        table.summary.append("separation not certified: the value is an upper bound for dim_H")
    return [table]


def run_khintchine(config: ExperimentConfig) -> List[ResultTable]:
    ifs = config.resolve_ifs()
    params = config.params
    check_budget(params["samples"], config.budgets.samples, "samples")
    dim_h = attractor_dimension(ifs, budget=config.budgets.pressure).midpoint
    af = ApproxFunction.parse(params["theta"], params["exponent_ratio"] or 1.0,
                              params["ignore_diameter"])
    z = ZPoint.parse(params["z"], ifs, max(params["ranks"], config.budgets.depth))
    sampler = natural_sampler(ifs, dim_h, config.seed)
    stats = limsup_hit_experiment(
        ifs, z, af, params["ranks"], params["samples"], params["k_min"], sampler,
        dim_h=dim_h, min_rank=params["min_rank"], measure_budget=params["measure_budget"],
        max_depth=config.budgets.depth,
    )
    k_columns = [f"hitter_fraction_k{k}" for k in range(1, params["k_min"] + 1)]
    table = ResultTable(
        name="khintchine",
        columns=["rank", "balls", "sum_term", "partial_sum", "covered_measure", *k_columns],
        claim=claim("khintchine-dichotomy"),
    )
    per_rank = ResultTable(name="ranks", columns=["rank", "rank_hit_fraction", "mean_hits"])
    running = stats.running_hitter_fractions()
    for offset, rank in enumerate(range(stats.min_rank, stats.n_ranks + 1)):
        table.add_row(
            rank,
            stats.ball_counts[rank],
            stats.sum_term(rank),
            stats.partial_sums[rank - 1],
            stats.covered_measure[rank],
            *running[offset],
        )
        per_rank.add_row(rank, stats.rank_hit_fraction(rank), stats.mean_hit_count(None, rank))
    hitters = ResultTable(name="hitters", columns=["k", "fraction"])
    for k, fraction in enumerate(stats.hitter_fractions(), start=1):
        hitters.add_row(k, fraction)

    report = dufschaeffer_ratio(af, dim_h, DS_Q_MAX)
    ratios = ResultTable(name="duffin_schaeffer", columns=["q", "ratio"])
    for q in _decades(DS_Q_MAX):
        ratios.add_row(q, report.ratios[q - 1])

    independence = stats.quasi_independence_ratio()
    table.summary.extend([
        f"theta = {af.describe()}, dim_H = {dim_h:.12g}, separation {check_separation(ifs).label}",
        f"theta monotone decreasing: {'yes' if af.is_monotone_decreasing else 'not established'}",
        f"S_N at N = {stats.n_ranks}: {stats.partial_sums[-1]:.12g}",
        f"share of samples hit at >= {params['k_min']} ranks: {hitters.rows[-1][1]:.12g}",
        "quasi-independence ratio: "
        + ("undefined (no hits)" if independence is None else f"{independence:.12g}"),
        f"Duffin-Schaeffer ratio A_Q/B_Q: max {report.max_ratio:.12g}, "
        f"at Q = {report.reference_q}: {report.reference_ratio:.12g}, "
        f"{'bounded' if report.bounded else 'not bounded'} over Q <= {DS_Q_MAX}",
        FINITE_EVIDENCE,
    ])
    if not ifs.is_similarity:
        table.summary.insert(-1, "samples follow a block measure comparable to the natural measure")
    return [table, hitters, per_rank, ratios]


def run_example21(config: ExperimentConfig) -> List[ResultTable]:
    params = config.params
    check_budget(2 * params["samples"], config.budgets.samples, "samples")
    report = example21_report(params["m_max"], params["tail_n"], params["enumeration"],
                              params["threshold"])
    table = ResultTable(
        name="example21",
        columns=["m", "sigma_count", "hoeffding_bound", "sigma_share", "bound_share"],
        claim=claim("divergence-without-full-measure"),
    )
    for row in report.rows():
        table.add_row(*row)
    tail = ResultTable(name="tail", columns=["n", "geometric", "exact_partial", "enumeration"])
    tail.add_row(report.tail.n, report.tail.geometric, report.tail.exact_partial,
                 report.tail.enumeration_bound)

    windows = ResultTable(name="windows",
                          columns=["start", "end", "fraction", "stderr", "contrast_fraction"])
    for estimate in example21_montecarlo(
        params["ranks"], params["samples"], config.seed, params["window"], params["step"],
        params["k"], params["contrast_c"], config.budgets.depth,
    ):
        windows.add_row(estimate.start, estimate.end, estimate.fraction, estimate.stderr,
                        estimate.contrast_fraction)
    first, last = windows.rows[0], windows.rows[-1]
    table.summary.extend([
        f"#Sigma_m <= Hoeffding bound for 8 <= m <= {params['m_max']}",
        f"tail from N = {report.tail.n}: {report.tail.geometric:.12g} (closed form), "
        f"{report.tail.exact_partial:.12g} (exact counts)",
        f"hit share in window [{first[0]}, {first[1]}]: {first[2]:.12g}; "
        f"in [{last[0]}, {last[1]}]: {last[2]:.12g}",
        f"contrast radius {params['contrast_c']} Diam(X_I): share {last[4]:.12g} in the last window",
        FINITE_EVIDENCE,
    ])
    return [table, tail, windows]


def run_example22(config: ExperimentConfig) -> List[ResultTable]:
    params = config.params
    check_budget(params["samples"], config.budgets.samples, "samples")
    report = example22_check(
        params["j"], params["ranks"], params["samples"], config.seed, params["k"],
        params["window_start"], params["series_n"], config.budgets.depth,
    )
    table = ResultTable(
        name="example22",
        columns=["n", "restricted_sum", "global_sum"],
        claim=claim("restricted-convergence"),
    )
    for n in _decades(params["series_n"]):
        table.add_row(n, report.restricted[n - 1], report.global_sums[n - 1])
    union = ResultTable(name="union", columns=["rank", "union_measure", "ball_length_sum"])
    for row in report.union_rows:
        union.add_row(*row)
    hits = ResultTable(name="hits", columns=["j", "window_start", "window_end", "fraction", "stderr"])
    hits.add_row(report.j, report.window[0], report.window[1], report.fraction, report.stderr)
    bound = 10
    table.summary.extend([
        f"restricted tail past n = {params['series_n']}: {report.restricted_tail:.12g}",
        f"global partial sum exceeds {bound} at N = {report.ranks_to_exceed(bound)}",
        f"share of X_({format_word(report.j)}) hit in [{report.window[0]}, {report.window[1]}]: "
        f"{report.fraction:.12g} +- {report.stderr:.3g}",
        FINITE_EVIDENCE,
    ])
    return [table, union, hits]


def run_leadingblock(config: ExperimentConfig) -> List[ResultTable]:
    params = config.params
    ifs = config.resolve_ifs() if (config.preset or config.ifs_section) else None
    coding = params["coding"]
    prefix_length = params["l"]
    if coding is None:
        coding = leading_block_construction(
            ifs.size if ifs else 2, params["digit"], params["block_length"], params["blocks"],
            config.seed,
        )
        prefix_length = 2 * params["block_length"]
    elif ifs is not None:
        ifs.check_word(coding)
    scan = leading_block_scan(coding, prefix_length)
    table = ResultTable(
        name="leadingblock",
        columns=["position"],
        claim=claim("leading-block-dichotomy"),
    )
    for position in scan.positions:
        table.add_row(position)
    table.summary.extend([
        f"prefix ({format_word(scan.prefix)}) in a coding of length {scan.length}",
        scan.verdict,
    ])
    tables = [table]
    if ifs is not None and ifs.is_similarity:
        dims = ResultTable(name="dimension", columns=["block_length", "dim_s", "dim_s_reduced"])
        full = attractor_dimension(ifs, budget=config.budgets.pressure).midpoint
        for n in range(1, params["block_length"] + 1):
            dims.add_row(n, full, leading_block_dimension(ifs, params["digit"], n).midpoint)
        tables.append(dims)
    return tables


def run_masstransfer(config: ExperimentConfig) -> List[ResultTable]:
    ifs = config.resolve_ifs()
    params = config.params
    dim_s = attractor_dimension(ifs, budget=config.budgets.pressure).midpoint
    grid = np.linspace(params["s_min"] * dim_s, params["s_max"] * dim_s, params["grid"])
    result = critical_exponent_scan(ifs, params["t"], params["n"], grid, budget=config.budgets.words)
    table = ResultTable(
        name="masstransfer",
        columns=["s", "rate", "verdict"],
        claim=claim("mass-transference"),
    )
    for rate in result.rates:
        table.add_row(rate.s, rate.rate, rate.verdict)
    target = dim_s / params["t"]
    table.summary.extend([
        f"cover-sum rate crosses 1 in [{result.lower:.12g}, {result.upper:.12g}]",
        f"dim_S / t = {target:.12g} ({'inside' if result.contains(target) else 'outside'} the bracket)",
        "the scan bounds the dimension from above only; the lower bound is not computed",
    ])
    return [table]


def _mahler_point(config: ExperimentConfig, ifs, start: Fraction, depth: int):
    """x from 'p/q' or 'construct:<t>'; returns (value, error, description)."""
    text = str(config.params["x"]).strip()
    if not text.startswith("construct:"):
        return parse_fraction(text, "mahler.x"), Fraction(0), text
    try:
        t = float(text.split(":", 1)[1])
    except ValueError:
        raise ValidationError(f"bad exponent in {text!r}", "mahler.x")
    fill = next((d for d in ifs.digits if fixed_point(ifs.map_for(d)) == start), None)
    if fill is None:
        raise ValidationError(f"no map of {ifs.name} fixes {start}", "mahler.start")
    breaker = next(d for d in ifs.digits if d != fill)
    blocks = 1
    coding = well_approximable_coding(fill, breaker, t, blocks)
    while len(coding) <= 2 * depth:
        blocks += 1
        coding = well_approximable_coding(fill, breaker, t, blocks)
    value, error = point_of_coding(ifs, coding, len(coding))
    return value, error, f"coding ({format_word(coding[:24])}...)"


def run_mahler(config: ExperimentConfig) -> List[ResultTable]:
    ifs = config.resolve_ifs()
    params = config.params
    start = RationalPoint.from_fraction(params["start"])
    records = rational_orbit_growth(ifs, start, params["depth"], config.budgets.words)
    x, error, description = _mahler_point(config, ifs, start.value, params["depth"])
    estimate = approx_exponent_estimate(
        x, error, [(r.value.value, r.height, format_word(r.word)) for r in records]
    )
    table = ResultTable(
        name="mahler",
        columns=["rank", "word", "value", "height", "bound", "multiplicity", "tau",
                 "running_max", "indeterminate"],
        claim=claim("rational-orbit-heights"),
    )
    for record, exponent in zip(records, estimate.records):
        table.add_row(record.rank, record.word, record.value.value, record.height, record.bound,
                      record.multiplicity, exponent.tau, exponent.running_max,
                      exponent.indeterminate)
    top = ResultTable(name="top", columns=["word", "height", "tau"])
    for exponent in estimate.top(params["top"]):
        top.add_row(exponent.label, exponent.height, exponent.tau)
    constant = max(map_height_constant(m) for m in ifs.maps)
    gamma = max(ifs.ratios)
    threshold = mass_transference_exponent(gamma, constant, start.height)
    table.summary.extend([
        f"x = {description}, certified error {float(error):.3g}",
        f"{len(records)} distinct images, every height within C^|I| H(a) for C = {constant}",
        f"largest tau: {estimate.best if estimate.best is None else format(estimate.best, '.12g')}",
        f"{len(estimate.indeterminate)} indeterminate pairs",
        f"exponent threshold l log C / log(1/gamma) at l = 1: {threshold:.12g}",
        FINITE_EVIDENCE,
    ])
    return [table, top]


def _parse_alpha(text: str) -> QuadraticIrrational:
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) not in (3, 4):
        raise ValidationError(f"expected 'a,b,c[,+|-]', got {text!r}", "quadratic.alpha")
    try:
        a, b, c = (int(p) for p in parts[:3])
    except ValueError:
        raise ValidationError(f"integer coefficients required, got {text!r}", "quadratic.alpha")
    return QuadraticIrrational(a, b, c, parts[3] if len(parts) == 4 else "+")


def run_quadratic(config: ExperimentConfig) -> List[ResultTable]:
    params = config.params
    alpha = _parse_alpha(params["alpha"])
    records = quadratic_orbit_growth(params["digits"], alpha, params["depth"], config.budgets.words)
    table = ResultTable(
        name="quadratic",
        columns=["rank", "word", "polynomial", "root", "height", "bound", "value",
                 "residual", "partial_quotients"],
        claim=claim("quadratic-orbit-heights"),
    )
    worst = Fraction(0)
    for record in records:
        quotients = continued_fraction_digits(record.numeric, record.rank + 2)
        table.add_row(record.rank, record.word, record.value.polynomial_string(), record.value.root,
                      record.height, record.bound, record.numeric,
                      record.value.residual(record.numeric),
                      " ".join(str(q) for q in quotients))
        worst = max(worst, Fraction(record.height, record.bound))
    table.summary.extend([
        f"alpha = {alpha}, H(alpha) = {alpha.height}, digits {format_word(tuple(params['digits']))}",
        f"{len(records)} words checked, no bound violated; largest H / bound = {float(worst):.12g}",
    ])
    return [table]


def run_overlap(config: ExperimentConfig) -> List[ResultTable]:
    ifs = config.resolve_ifs()
    params = config.params
    pairs = detect_exact_overlap(ifs, params["k"], config.budgets.words)
    table = ResultTable(
        name="overlap",
        columns=["word_i", "word_j"],
        claim=claim("overlap-dimension-drop"),
    )
    for first, second in pairs:
        table.add_row(first, second)
    tables = [table]
    if not pairs:
        table.summary.append(f"no exact overlap at level {params['k']}")
        if params["delete"] is not None:
            raise ValidationError("no duplicated word to delete", "overlap.delete")
        return tables
    table.summary.append(f"{len(pairs)} coinciding pairs at level {params['k']}")
    if ifs.is_similarity:
        drop = overlap_dimension_drop(ifs, params["k"], params["delete"] or pairs[0][1],
                                      budget=config.budgets.words)
        dims = ResultTable(name="dimension", columns=["k", "deleted", "dim_s", "dim_s_reduced"])
        dims.add_row(drop.k, drop.deleted, drop.full.midpoint, drop.reduced.midpoint)
        tables.append(dims)
        table.summary.append(
            f"dim_S = {drop.full.midpoint:.12g}; without ({format_word(drop.deleted)}) "
            f"at level {drop.k}: {drop.reduced.midpoint:.12g}"
        )
    return tables


RUNNERS: Dict[str, Callable[[ExperimentConfig], List[ResultTable]]] = {
    "dim": run_dim,
    "khintchine": run_khintchine,
    "example21": run_example21,
    "example22": run_example22,
    "leadingblock": run_leadingblock,
    "masstransfer": run_masstransfer,
    "mahler": run_mahler,
    "quadratic": run_quadratic,
    "overlap": run_overlap,
}


def run(config: ExperimentConfig) -> List[ResultTable]:
    """Run one validated experiment and return its tables, the primary one first."""
    logger.info(f"Running {config.experiment} (seed {config.seed})")
    tables = RUNNERS[config.experiment](config)
    logger.info(f"Finished {config.experiment}: {sum(len(t.rows) for t in tables)} rows")
    return tables


def default_output_path(config: ExperimentConfig) -> str:
    extension = create_formatter(config.output_format).extension
    return os.path.join("results", f"{config.experiment}.{extension}")


def emit(tables: List[ResultTable], out: str, output_format: str = "csv") -> List[str]:
    """
    Write the primary table to `out`, every further table to `<stem>_<name><ext>`
    and the claims and observations of all tables to `<out>.summary.md`.

    Returns:
        Paths written, primary first
    """
    output_format = resolve_format(output_format)
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    stem, extension = os.path.splitext(out)
    paths = []
    for index, table in enumerate(tables):
        path = out if index == 0 else f"{stem}_{table.name}{extension}"
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            create_formatter(output_format, f).format_table(table)
        paths.append(path)
        logger.info(f"Wrote {len(table.rows)} rows to {path}")
    summary_path = f"{out}.summary.md"
    with open(summary_path, "w", encoding="utf-8", newline="\n") as f:
        formatter = MarkdownFormatter(f, include_rows=False)
        for table in tables:
            if table.claim or table.summary:
                formatter.format_table(table)
    paths.append(summary_path)
    return paths


def run_config(config: ExperimentConfig) -> Dict[str, List[str]]:
    """Run every experiment of a config and emit its artefacts."""
    written = {}
    for entry in config.runs():
        tables = run(entry)
        out = entry.out or default_output_path(entry)
        written[out] = emit(tables, out, entry.output_format)
    return written
