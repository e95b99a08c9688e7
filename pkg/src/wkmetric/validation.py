"""Model-validation machinery: bootstrap calibration, tail backtest, verdict.

The acceptance rule is a pure conjunction:

    accept  <=>  core_pass (weighted-distance gate)  AND  tail_pass (Kupiec).

The core gate works on the grid-robust statistic d_rob = max over q in Q of
d_{K,h,q} — an anti-gaming device: since the metric is nonincreasing in q,
d_rob is attained at min(Q), but the whole per-q profile is reported so a
model cannot look good merely because one convenient q was chosen.

Critical values and p-values come from a parametric bootstrap of the fitted
model; the tail safeguard is Kupiec's proportion-of-failures test against
the model-implied VaR quantile.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .distributions import DistributionModel, model_to_json
from .errors import InvalidConfigError
from .exhaustion import ExhaustionSpec, WeightConfig, absolute
from .metric import EmpiricalCDF, weighted_distance_to_model

__all__ = [
    "ValidationPolicy",
    "BootstrapOutcome",
    "GridRobustResult",
    "ValidationVerdict",
    "bootstrap_null",
    "critical_value",
    "p_value",
    "kupiec_pof",
    "grid_robust_distance",
    "hybrid_validate",
]


@dataclass(frozen=True)
class ValidationPolicy:
    """Thresholds and grids for :func:`hybrid_validate`.

    Exactly one of ``eps_core`` (fixed threshold on d_rob) or
    ``alpha_core`` (bootstrap level) must be set.  ``var_level`` is the
    VaR tail probability p for the Kupiec backtest, tested at
    ``alpha_tail``.
    """

    Q: tuple
    var_level: float = 0.01
    alpha_tail: float = 0.05
    eps_core: float | None = None
    alpha_core: float | None = None
    B: int = 500
    seed: int = 0
    exhaustion: ExhaustionSpec = field(default_factory=absolute)
    refinement: int = 8

    def __post_init__(self) -> None:
        qs = tuple(float(q) for q in self.Q)
        if len(qs) == 0 or any(q <= 0 for q in qs) or list(qs) != sorted(qs):
            raise InvalidConfigError("Q must be a nonempty sorted grid of positive q values")
        object.__setattr__(self, "Q", qs)
        if (self.eps_core is None) == (self.alpha_core is None):
            raise InvalidConfigError("set exactly one of eps_core or alpha_core")
        if self.eps_core is not None and not self.eps_core > 0:
            raise InvalidConfigError("eps_core must be > 0")
        if self.alpha_core is not None and not 0.0 < self.alpha_core < 1.0:
            raise InvalidConfigError("alpha_core must lie in (0, 1)")
        if not 0.0 < self.var_level < 1.0:
            raise InvalidConfigError("var_level must lie in (0, 1)")
        if not 0.0 < self.alpha_tail < 1.0:
            raise InvalidConfigError("alpha_tail must lie in (0, 1)")
        if self.B < 100:
            raise InvalidConfigError("B must be >= 100")


@dataclass(frozen=True)
class BootstrapOutcome:
    critical_value: float
    p_value: float
    B: int
    observed: float
    seed: int


@dataclass(frozen=True)
class GridRobustResult:
    d_rob: float
    per_q: tuple  # ((q, value), ...) in grid order
    argmax_q: float


@dataclass(frozen=True)
class ValidationVerdict:
    core_pass: bool
    tail_pass: bool
    accept: bool
    diagnostics: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "core_pass": self.core_pass,
                "tail_pass": self.tail_pass,
                "accept": self.accept,
                "diagnostics": self.diagnostics,
            },
            sort_keys=True,
        )


# ---------------------------------------------------------------------------
# parametric bootstrap


def _cache_key(model: DistributionModel, n: int, cfg_desc: str, B: int, seed: int) -> str:
    payload = f"{model_to_json(model)}|n={n}|{cfg_desc}|B={B}|seed={seed}"
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


def _statistic_null_sample(
    model: DistributionModel,
    n: int,
    B: int,
    seed: int,
    statistic,
    cfg_desc: str,
    cache_dir: str | None = None,
) -> np.ndarray:
    """B replicates of statistic(ECDF of n model draws), substream (seed, b).

    With ``cache_dir`` the table round-trips through a keyed CSV file, so
    repeated validations against the same model reuse it.
    """
    if B < 100:
        raise InvalidConfigError("B must be >= 100")
    if not math.isfinite(model.sigma2):
        raise InvalidConfigError("model must have finite variance")
    path = None
    if cache_dir is not None:
        key = _cache_key(model, n, cfg_desc, B, seed)
        path = os.path.join(cache_dir, f"bootstrap-{key}.csv")
        if os.path.exists(path):
            return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=1)
    out = np.empty(B)
    for b in range(B):
        sample = EmpiricalCDF.from_sample(model.sample_with(rng.generator(seed, b), n))
        out[b] = statistic(sample)
    if path is not None:
        os.makedirs(cache_dir, exist_ok=True)
        np.savetxt(path, out, delimiter=",", header="d_star", comments="")
    return out


def bootstrap_null(
    model: DistributionModel,
    n: int,
    cfg: WeightConfig,
    B: int,
    seed: int,
    refinement: int = 8,
    cache_dir: str | None = None,
) -> np.ndarray:
    """B values of d* = d_{K,h,q}(F-hat*_n, F_theta) under H0: data ~ model."""
    stat = lambda ecdf: weighted_distance_to_model(ecdf, model, cfg, refinement).value
    desc = f"q={cfg.q}|exh={cfg.exhaustion.kind}:{cfg.exhaustion.center}|r={refinement}"
    return _statistic_null_sample(model, n, B, seed, stat, desc, cache_dir)


def critical_value(null_dist: np.ndarray, alpha: float) -> float:
    """Empirical (1 - alpha) quantile of the bootstrap sample.

    Order-statistic convention: the ceil((1-alpha) * B)-th smallest value,
    so alpha = 0 returns the sample maximum.
    """
    d = np.sort(np.asarray(null_dist, dtype=np.float64))
    if d.size == 0:
        raise InvalidConfigError("empty null distribution")
    if not 0.0 <= alpha < 1.0:
        raise InvalidConfigError("alpha must lie in [0, 1)")
    k = max(1, int(math.ceil((1.0 - alpha) * d.size)))
    return float(d[k - 1])


def p_value(observed: float, null_dist: np.ndarray) -> float:
    """(1/B) * #{d* >= observed}; in [0, 1], nonincreasing in observed."""
    d = np.asarray(null_dist, dtype=np.float64)
    if d.size == 0:
        raise InvalidConfigError("empty null distribution")
    return float(np.mean(d >= observed))


# ---------------------------------------------------------------------------
# Kupiec proportion-of-failures


def _xlogy(x: float, y: float) -> float:
    """x * log(y) with the 0 * log(0) = 0 convention."""
    return 0.0 if x == 0.0 else x * math.log(y)


def kupiec_pof(exceptions: int, n: int, p: float) -> tuple[float, float]:
    """Kupiec's unconditional-coverage likelihood ratio and its p-value.

    LR = -2 ln[(1-p)^(n-x) p^x] + 2 ln[(1-x/n)^(n-x) (x/n)^x], asymptotically
    chi-square(1) under correct coverage.  The chi-square(1) survival
    function has the closed form erfc(sqrt(LR/2)), used here directly.
    """
    if not 0 <= exceptions <= n:
        raise InvalidConfigError("need 0 <= exceptions <= n")
    if not 0.0 < p < 1.0:
        raise InvalidConfigError("p must lie in (0, 1)")
    x = exceptions
    rate = x / n
    log_null = _xlogy(n - x, 1.0 - p) + _xlogy(x, p)
    log_alt = _xlogy(n - x, 1.0 - rate) + _xlogy(x, rate)
    lr = max(0.0, -2.0 * log_null + 2.0 * log_alt)  # clamp -0.0 at x = n*p
    pval = math.erfc(math.sqrt(lr / 2.0))
    return lr, pval


# ---------------------------------------------------------------------------
# grid-robust statistic and the hybrid verdict


def grid_robust_distance(
    sample: EmpiricalCDF,
    model: DistributionModel,
    exhaustion: ExhaustionSpec,
    Q,
    refinement: int = 8,
) -> GridRobustResult:
    """d_rob = max over q in Q of d_{K,h,q}(F-hat, F_theta).

    The per-q values are nonincreasing in q (the weights shrink), so the
    max sits at min(Q); this is asserted, and the full profile is returned
    for the stability-certificate diagnostics.
    """
    qs = tuple(float(q) for q in Q)
    if not qs:
        raise InvalidConfigError("Q must be nonempty")
    if sorted(qs) != list(qs) or any(q <= 0 for q in qs):
        raise InvalidConfigError("Q must be sorted and positive")
    vals = [
        (q, weighted_distance_to_model(sample, model, WeightConfig(exhaustion, q), refinement).value)
        for q in qs
    ]
    values = [v for _, v in vals]
    assert all(values[i] >= values[i + 1] - 1e-12 for i in range(len(values) - 1)), (
        "per-q distances must be nonincreasing in q"
    )
    return GridRobustResult(d_rob=max(values), per_q=tuple(vals), argmax_q=qs[0])


def hybrid_validate(
    returns,
    model: DistributionModel,
    policy: ValidationPolicy,
    cache_dir: str | None = None,
) -> ValidationVerdict:
    """Core gate (grid-robust distance) + tail gate (Kupiec), conjoined.

    Core: d_rob against either the fixed eps_core or a bootstrap critical
    value at level alpha_core (the bootstrap resamples d_rob itself under
    H0).  Tail: exceptions are returns strictly below the model-implied
    VaR quantile at the policy's var_level.  Both gates are always
    computed; accept = core_pass and tail_pass.
    """
    data = EmpiricalCDF.from_sample(returns)
    n = data.n

    grid = grid_robust_distance(data, model, policy.exhaustion, policy.Q, policy.refinement)
    diagnostics: dict = {
        "d_rob": grid.d_rob,
        "per_q": {f"{q:g}": v for q, v in grid.per_q},
        "worst_q": grid.argmax_q,
        "n": n,
    }

    if policy.eps_core is not None:
        core_pass = grid.d_rob <= policy.eps_core
        diagnostics["eps_core"] = policy.eps_core
    else:
        stat = lambda ecdf: grid_robust_distance(
            ecdf, model, policy.exhaustion, policy.Q, policy.refinement
        ).d_rob
        desc = (
            f"d_rob|Q={','.join(f'{q:g}' for q in policy.Q)}"
            f"|exh={policy.exhaustion.kind}:{policy.exhaustion.center}|r={policy.refinement}"
        )
        null = _statistic_null_sample(model, n, policy.B, policy.seed, stat, desc, cache_dir)
        crit = critical_value(null, policy.alpha_core)
        outcome = BootstrapOutcome(
            critical_value=crit,
            p_value=p_value(grid.d_rob, null),
            B=policy.B,
            observed=grid.d_rob,
            seed=policy.seed,
        )
        core_pass = grid.d_rob <= crit
        diagnostics["bootstrap"] = {
            "critical_value": outcome.critical_value,
            "p_value": outcome.p_value,
            "B": outcome.B,
            "alpha_core": policy.alpha_core,
        }

    v_p = model.quantile(policy.var_level)
    exceptions = int(np.sum(np.asarray(returns, dtype=np.float64) < v_p))
    lr, pval = kupiec_pof(exceptions, n, policy.var_level)
    tail_pass = pval >= policy.alpha_tail
    diagnostics["kupiec"] = {
        "var_level": policy.var_level,
        "var_quantile": v_p,
        "exceptions": exceptions,
        "LR": lr,
        "p_value": pval,
        "alpha_tail": policy.alpha_tail,
    }

    return ValidationVerdict(
        core_pass=bool(core_pass),
        tail_pass=bool(tail_pass),
        accept=bool(core_pass and tail_pass),
        diagnostics=diagnostics,
    )
