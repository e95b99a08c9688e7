"""Monte Carlo harness for the convergence-rate scenarios.

For each sample size n the harness draws M independent normalized sums
Z_n, forms their empirical CDF, and measures its distance to the standard
normal limit — once with the weighted metric, once with the classical
(q = 0) Kolmogorov–Smirnov metric.  Repetitions with distinct substreams
give error bars.

Because the law of Z_n is itself approximated by M replicates, every
estimate carries a Monte Carlo floor of order 1/sqrt(M).  The harness can
calibrate that floor explicitly: the identical estimator run with exact
standard-normal draws in place of Z_n ("floor rows", flagged in the
output).  Slope fits must exclude sample sizes whose means sit within a
small factor of the floor — see :func:`fit_scenario_slopes`.

CSV schema (fixed; the plotting component consumes it):
``scenario,metric,n,mean,stderr,M,seed,floor``
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import rng
from .distributions import DistributionModel, Gaussian
from .errors import BudgetExceededError, InvalidConfigError
from .exhaustion import ExhaustionSpec, WeightConfig, absolute
from .metric import EmpiricalCDF, simulate_normalized_sums, weighted_distance_to_model
from .theory import BoundConstants, evaluate_tradeoff_bound, truncation_analysis

__all__ = [
    "ScenarioConfig",
    "ConvergenceRow",
    "run_convergence",
    "loglog_slope",
    "fit_scenario_slopes",
    "run_tailscan",
    "rows_to_csv",
    "rows_from_csv",
    "CSV_HEADER",
]

CSV_HEADER = "scenario,metric,n,mean,stderr,M,seed,floor"

_STD_NORMAL = Gaussian(0.0, 1.0)


@dataclass(frozen=True)
class ScenarioConfig:
    """One convergence scenario.

    ``metrics`` maps metric ids to weight configs; the default pair is the
    scenario's weighted metric plus the unweighted KS control (q = 0 on
    the same exhaustion).  ``max_draws`` caps n * M for any single grid
    point — that product is one simulation's memory/time budget.
    """

    scenario: str
    model: DistributionModel
    weight_cfg: WeightConfig
    n_grid: tuple
    M: int
    repetitions: int = 4
    seed: int = 0
    calibrate_floor: bool = True
    refinement: int = 8
    max_draws: float = 1.0e9
    metrics: tuple = ("weighted", "ks")

    def __post_init__(self) -> None:
        ns = tuple(int(n) for n in self.n_grid)
        if len(ns) == 0 or any(n < 1 for n in ns) or list(ns) != sorted(ns):
            raise InvalidConfigError("n_grid must be nonempty and sorted ascending")
        object.__setattr__(self, "n_grid", ns)
        if self.M < 2:
            raise InvalidConfigError("M must be >= 2")
        if self.repetitions < 1:
            raise InvalidConfigError("repetitions must be >= 1")
        bad = [m for m in self.metrics if m not in ("weighted", "ks")]
        if bad:
            raise InvalidConfigError(f"unknown metric ids: {bad}")
        worst = max(ns) * self.M
        if worst > self.max_draws:
            raise BudgetExceededError(
                f"n*M = {worst:.3g} exceeds the draw budget {self.max_draws:.3g}"
            )

    def metric_config(self, metric: str) -> WeightConfig:
        if metric == "weighted":
            return self.weight_cfg
        return WeightConfig(self.weight_cfg.exhaustion, 0.0)


@dataclass(frozen=True)
class ConvergenceRow:
    scenario: str
    metric: str
    n: int
    mean_distance: float
    std_error: float
    M: int
    seed: int
    floor: int  # 1 = calibration row (exact N(0,1) draws), 0 = scenario row


def _distance(values: np.ndarray, cfg: WeightConfig, refinement: int) -> float:
    ecdf = EmpiricalCDF.from_sample(values)
    return weighted_distance_to_model(ecdf, _STD_NORMAL, cfg, refinement).value


def _floor_draws(seed: int, M: int) -> np.ndarray:
    u = rng.uniform_open01(rng.generator(seed), M)
    return special.ndtri(u)


def run_convergence(cfg: ScenarioConfig, threads: int = 1) -> list[ConvergenceRow]:
    """Run the scenario; returns rows in a fixed, thread-count-independent order.

    Work item (n, metric, repetition) draws from substream
    (seed, scenario, n, metric, repetition); floor items tag in an extra
    "floor" component.  Aggregation only depends on the item key, so any
    degree of parallelism produces identical rows.
    """
    items = []
    for n in cfg.n_grid:
        for metric in cfg.metrics:
            for rep in range(cfg.repetitions):
                items.append((n, metric, rep, False))
                if cfg.calibrate_floor:
                    items.append((n, metric, rep, True))

    def compute(item) -> float:
        n, metric, rep, is_floor = item
        mcfg = cfg.metric_config(metric)
        if is_floor:
            sub = rng.substream_seed(cfg.seed, cfg.scenario, n, metric, "floor", rep)
            values = _floor_draws(sub, cfg.M)
        else:
            sub = rng.substream_seed(cfg.seed, cfg.scenario, n, metric, rep)
            values = simulate_normalized_sums(cfg.model, n, cfg.M, sub).values
        return _distance(values, mcfg, cfg.refinement)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(items, pool.map(compute, items)))
    else:
        results = {item: compute(item) for item in items}

    rows: list[ConvergenceRow] = []
    for n in cfg.n_grid:
        for metric in cfg.metrics:
            for is_floor in (False, True) if cfg.calibrate_floor else (False,):
                vals = np.array(
                    [results[(n, metric, rep, is_floor)] for rep in range(cfg.repetitions)]
                )
                stderr = (
                    float(np.std(vals, ddof=1)) / math.sqrt(len(vals)) if len(vals) > 1 else 0.0
                )
                rows.append(
                    ConvergenceRow(
                        scenario=cfg.scenario,
                        metric=metric,
                        n=n,
                        mean_distance=float(np.mean(vals)),
                        std_error=stderr,
                        M=cfg.M,
                        seed=cfg.seed,
                        floor=int(is_floor),
                    )
                )
    return rows


def loglog_slope(rows, n_range: tuple | None = None) -> tuple[float, float, float]:
    """OLS fit of ln(mean_distance) on ln(n).

    Returns (slope, intercept, r2).  Needs at least 3 rows in range; rows
    with nonpositive means are rejected (log undefined).
    """
    sel = [
        r
        for r in rows
        if (n_range is None or n_range[0] <= r.n <= n_range[1]) and not r.floor
    ]
    if any(r.mean_distance <= 0 for r in sel):
        raise InvalidConfigError("mean_distance must be positive for a log-log fit")
    if len(sel) < 3:
        raise InvalidConfigError("need at least 3 rows for a slope fit")
    x = np.log(np.array([r.n for r in sel], dtype=np.float64))
    y = np.log(np.array([r.mean_distance for r in sel]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return float(slope), float(intercept), float(r2)


def fit_scenario_slopes(rows, floor_factor: float = 2.0) -> dict:
    """Per-metric slope fits, excluding floor-dominated sample sizes.

    A grid point enters the fit only when its scenario mean exceeds
    ``floor_factor`` times the calibrated floor at the same (metric, n).
    Without floor rows, all points are used.
    """
    out: dict = {}
    metrics = sorted({r.metric for r in rows})
    for metric in metrics:
        scen = [r for r in rows if r.metric == metric and not r.floor]
        floors = {r.n: r.mean_distance for r in rows if r.metric == metric and r.floor}
        usable = [
            r for r in scen if r.n not in floors or r.mean_distance > floor_factor * floors[r.n]
        ]
        entry: dict = {
            "n_used": [r.n for r in usable],
            "n_excluded": [r.n for r in scen if r not in usable],
        }
        try:
            slope, intercept, r2 = loglog_slope(usable)
            entry.update({"slope": slope, "intercept": intercept, "r2": r2})
        except InvalidConfigError as exc:
            entry["error"] = str(exc)
        out[metric] = entry
    return out


def run_tailscan(
    model: DistributionModel,
    exhaustion: ExhaustionSpec,
    delta: float,
    R_grid,
    reference_n: int = 1000,
    q: float = 1.0,
    consts: BoundConstants = BoundConstants(),
) -> list[dict]:
    """Truncation analytics along an R grid, with bound terms at a fixed n.

    One row per R: (R, M3, tau_R2, tail_remainder, term_core, term_tail,
    term_weight, total).
    """
    Rs = [float(R) for R in R_grid]
    if not Rs or any(R <= 0 for R in Rs) or Rs != sorted(Rs):
        raise InvalidConfigError("R_grid must be nonempty, positive, sorted")
    rows = []
    for R in Rs:
        ta = truncation_analysis(model, exhaustion, R, delta)
        terms = evaluate_tradeoff_bound(ta, reference_n, q, consts)
        rows.append(
            {
                "R": R,
                "M3": ta.M3,
                "tau_R2": ta.tau_R2,
                "tail_remainder": ta.tail_remainder,
                "term_core": terms.term_core,
                "term_tail": terms.term_tail,
                "term_weight": terms.term_weight,
                "total": terms.total,
                "n": reference_n,
                "q": q,
                "delta": delta,
            }
        )
    return rows


# ---------------------------------------------------------------------------
# CSV round trip (fixed formatting so identical runs are byte-identical)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def rows_to_csv(rows, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in rows:
            fh.write(
                f"{r.scenario},{r.metric},{r.n},{_fmt(r.mean_distance)},"
                f"{_fmt(r.std_error)},{r.M},{r.seed},{r.floor}\n"
            )


def rows_from_csv(path: str) -> list[ConvergenceRow]:
    rows = []
    with open(path, "r") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise InvalidConfigError(
                f"unexpected CSV header {header!r}; expected {CSV_HEADER!r}"
            )
        for line in fh:
            if not line.strip():
                continue
            scenario, metric, n, mean, stderr, M, seed, floor = line.strip().split(",")
            rows.append(
                ConvergenceRow(
                    scenario=scenario,
                    metric=metric,
                    n=int(n),
                    mean_distance=float(mean),
                    std_error=float(stderr),
                    M=int(M),
                    seed=int(seed),
                    floor=int(floor),
                )
            )
    return rows


def tailscan_to_csv(rows: list[dict], path: str) -> None:
    if not rows:
        raise InvalidConfigError("no tailscan rows to write")
    cols = list(rows[0].keys())
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols) + "\n")
