"""Truncation analytics behind the convergence-rate guarantees.

Splitting summands at {h <= R} vs {h > R} decomposes the CDF error into
three terms: a Berry–Esseen term on the truncated core, a tail-moment
remainder, and a weight-decay term (1 + R)**(-q).  This module computes
the ingredients by adaptive quadrature, evaluates the three-term bound,
scans it over R, and selects the rate plan (beta, q) with R_n = n**beta.

Absolute constants are never certified here: they default to 1.0 and are
user-configurable, so bound outputs are shape-correct rather than
certified numeric bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.integrate import quad

from . import rng
from .distributions import DistributionModel, Pareto
from .errors import InvalidConfigError, NumericalError
from .exhaustion import ExhaustionSpec

__all__ = [
    "TruncationAnalysis",
    "BoundConstants",
    "BoundTerms",
    "RatePlan",
    "truncation_analysis",
    "evaluate_tradeoff_bound",
    "minimize_bound_over_R",
    "select_rate_parameters",
]


@dataclass(frozen=True)
class TruncationAnalysis:
    """Truncated-moment report at threshold R.

    M3 = E[|X-mu|^3 ; h <= R], tau_R2 = Var((X-mu) 1{h <= R}),
    tail_remainder = E[|X-mu|^(2+delta) ; h > R].  sigma2 rides along so
    the bound evaluator can normalize the tail term.
    """

    R: float
    M3: float
    tau_R2: float
    tail_remainder: float
    delta: float
    sigma2: float


@dataclass(frozen=True)
class BoundConstants:
    """The bound's absolute constants; all configurable, all default 1."""

    C_CS: float = 1.0
    C1: float = 1.0
    C2: float = 1.0
    A_delta: float = 1.0
    B_delta: float = 1.0
    C_delta: float = 1.0

    def __post_init__(self) -> None:
        for name in ("C_CS", "C1", "C2", "A_delta", "B_delta", "C_delta"):
            if not getattr(self, name) > 0:
                raise InvalidConfigError(f"constant {name} must be > 0")


class BoundTerms(NamedTuple):
    term_core: float
    term_tail: float
    term_weight: float
    total: float


@dataclass(frozen=True)
class RatePlan:
    """Chosen (beta, q) with the guaranteed rate exponent.

    ``feasible`` reflects the three sufficient conditions evaluated at the
    returned pair: beta*(1-delta) <= 1/2, beta*eta >= 1/2, beta*q >= 1/2.
    When they cannot hold simultaneously the plan maximizes
    min(beta*eta, beta*q, 1/2 - (beta*(1-delta) - 1/2)+) instead and the
    resulting ``achieved_exponent`` is honestly below 1/2.
    """

    beta: float
    q: float
    eta: float
    delta: float
    feasible: bool
    achieved_exponent: float
    conditions: dict


def _core_interval(exhaustion: ExhaustionSpec, R: float) -> tuple[float, float]:
    if exhaustion.kind == "custom":
        raise InvalidConfigError(
            "truncation analytics need a centered exhaustion ({h <= R} must be an interval)"
        )
    c = exhaustion.center
    return c - R, c + R


def _quad_checked(f, lo: float, hi: float, points=None) -> float:
    # full_output silences quad's IntegrationWarning; judge the reported
    # error estimate ourselves (roundoff-level wobble is fine, real
    # non-convergence is not)
    out = quad(
        f, lo, hi, epsrel=1e-10, epsabs=1e-300, limit=400, points=points, full_output=1
    )
    val, abserr = out[0], out[1]
    if abserr > max(1e-7 * abs(val), 1e-12):
        raise NumericalError(
            f"quadrature on [{lo:g}, {hi:g}] did not converge (err {abserr:g}, value {val:g})"
        )
    return val


def _piece(f, lo: float, hi: float, interior: Sequence[float] = ()) -> float:
    """integral of f on [lo, hi] (endpoints may be infinite).

    The stretch beyond a few hundred units is integrated in u = 1/x
    coordinates: that turns slowly decaying power tails into bounded
    integrals and keeps quad's subdivision from drowning in roundoff on
    huge intervals.  Interior anchor points always land in the middle
    piece by construction of the split radius.
    """
    if hi <= lo:
        return 0.0
    pts = sorted(p for p in interior if lo < p < hi)
    anchor = max((abs(p) for p in pts), default=1.0)
    A = 2.0 * max(anchor, 1.0) + 100.0
    total = 0.0
    mid_lo, mid_hi = max(lo, -A), min(hi, A)
    if mid_hi > mid_lo:
        total += _quad_checked(f, mid_lo, mid_hi, points=pts or None)
    if hi > A:
        left = max(A, lo)
        total += _quad_checked(lambda u: f(1.0 / u) / (u * u), 1.0 / hi, 1.0 / left)
    if lo < -A:
        right = max(A, -hi)
        total += _quad_checked(lambda u: f(-1.0 / u) / (u * u), -1.0 / lo, 1.0 / right)
    return total


def _tail_piece(f, a: float, interior: Sequence[float] = ()) -> float:
    """integral of f on [a, inf)."""
    return _piece(f, a, math.inf, interior)


def truncation_analysis(
    model: DistributionModel,
    exhaustion: ExhaustionSpec,
    R: float,
    delta: float,
    mc_check: int | None = None,
    seed: int = 0,
) -> TruncationAnalysis:
    """Truncated moments at threshold R by adaptive quadrature.

    The core region {h <= R} is the interval [c - R, c + R] around the
    exhaustion center.  Relative quadrature accuracy is ~1e-8; pass
    ``mc_check`` (e.g. 10**6) to cross-check every quantity against a
    Monte Carlo estimate within 3 standard errors — a hard error if the
    routes disagree.

    Raises when delta sits at or above the moment-existence boundary.
    """
    if R <= 0:
        raise InvalidConfigError("R must be > 0")
    if not 0.0 < delta <= 1.0:
        raise InvalidConfigError("delta must lie in (0, 1]")
    if 2.0 + delta >= model.tail_index:
        raise InvalidConfigError(
            f"E|X-mu|^(2+delta) diverges: 2+delta={2 + delta} >= tail index {model.tail_index}"
        )
    lo, hi = _core_interval(exhaustion, R)
    mu = model.mu
    dens = model.density
    scale = math.sqrt(model.sigma2)
    floor = model.xm if isinstance(model, Pareto) else -math.inf
    lo_eff = max(lo, floor)  # density vanishes below a Pareto's support floor
    anchors = (mu - 10.0 * scale, mu, mu + 10.0 * scale)

    m3 = _piece(lambda x: abs(x - mu) ** 3 * dens(x), lo_eff, hi, anchors)
    m1 = _piece(lambda x: (x - mu) * dens(x), lo_eff, hi, anchors)
    m2 = _piece(lambda x: (x - mu) ** 2 * dens(x), lo_eff, hi, anchors)
    tau2 = max(m2 - m1 * m1, 0.0)

    p = 2.0 + delta
    f_mom = lambda x: abs(x - mu) ** p * dens(x)
    tail = _tail_piece(f_mom, hi)
    if floor > -math.inf:
        tail += _piece(f_mom, floor, min(lo, hi))  # 0 when lo <= floor
    else:
        tail += _tail_piece(lambda y: f_mom(-y), -lo)

    ta = TruncationAnalysis(
        R=R, M3=m3, tau_R2=tau2, tail_remainder=tail, delta=delta, sigma2=model.sigma2
    )
    if mc_check:
        _mc_crosscheck(model, lo, hi, ta, mc_check, seed)
    return ta


def _mc_crosscheck(
    model: DistributionModel, lo: float, hi: float, ta: TruncationAnalysis, n: int, seed: int
) -> None:
    x = model.sample_with(rng.generator(seed, "truncation-mc"), n)
    d = x - model.mu
    core = (x >= lo) & (x <= hi)
    p = 2.0 + ta.delta

    def _within(sample_vals: np.ndarray, target: float, label: str) -> None:
        est = float(np.mean(sample_vals))
        se = float(np.std(sample_vals, ddof=1)) / math.sqrt(n)
        if abs(est - target) > 3.0 * se + 1e-12:
            raise NumericalError(
                f"quadrature/Monte-Carlo disagreement for {label}: "
                f"quad={target:.6g}, mc={est:.6g} +- {se:.2g}"
            )

    _within(np.abs(d) ** 3 * core, ta.M3, "M3")
    _within(np.abs(d) ** p * (~core), ta.tail_remainder, "tail_remainder")
    dc = d * core
    est_var = float(np.var(dc, ddof=1))
    # variance needs its own error bar: use the sample variance of (dc - mean)^2
    se_var = float(np.std((dc - np.mean(dc)) ** 2, ddof=1)) / math.sqrt(n)
    if abs(est_var - ta.tau_R2) > 3.0 * se_var + 1e-12:
        raise NumericalError(
            f"quadrature/Monte-Carlo disagreement for tau_R2: "
            f"quad={ta.tau_R2:.6g}, mc={est_var:.6g} +- {se_var:.2g}"
        )


def evaluate_tradeoff_bound(
    ta: TruncationAnalysis, n: int, q: float, consts: BoundConstants = BoundConstants()
) -> BoundTerms:
    """The three-term bound at sample size n and weight exponent q.

    term_core = C_CS * M3(R) / (tau_R^3 * sqrt(n)), term_tail =
    C1 * tail_remainder / sigma^(2+delta), term_weight = C2 * (1+R)^(-q).
    """
    if n < 1:
        raise InvalidConfigError("n must be >= 1")
    if ta.tau_R2 <= 0.0:
        raise NumericalError("degenerate truncation: tau_R2 = 0 (empty core)")
    tau3 = ta.tau_R2 ** 1.5
    core = consts.C_CS * ta.M3 / (tau3 * math.sqrt(n))
    tail = consts.C1 * ta.tail_remainder / ta.sigma2 ** ((2.0 + ta.delta) / 2.0)
    wgt = consts.C2 * (1.0 + ta.R) ** (-q)
    return BoundTerms(core, tail, wgt, core + tail + wgt)


def minimize_bound_over_R(
    model: DistributionModel,
    exhaustion: ExhaustionSpec,
    n: int,
    q: float,
    delta: float,
    consts: BoundConstants = BoundConstants(),
    R_grid: Sequence[float] = (),
) -> tuple[float, float]:
    """Grid argmin of the total bound over R.

    The truncation/tail tradeoff can be balanced analytically; this is the
    numerical counterpart.  Returns (R_opt, total at R_opt); the minimum is
    over the supplied grid only.
    """
    Rs = np.asarray(R_grid, dtype=np.float64)
    if Rs.size == 0 or np.any(Rs <= 0) or np.any(np.diff(Rs) <= 0):
        raise InvalidConfigError("R_grid must be nonempty, positive, strictly increasing")
    best_R, best_total = None, math.inf
    for R in Rs:
        ta = truncation_analysis(model, exhaustion, float(R), delta)
        try:
            total = evaluate_tradeoff_bound(ta, n, q, consts).total
        except NumericalError:
            # window too small to hold any mass (e.g. pareto support not yet
            # reached): the bound is vacuous there, skip the grid point
            continue
        if total < best_total:
            best_R, best_total = float(R), total
    if best_R is None:
        raise NumericalError("every grid point left an empty truncation window")
    return best_R, best_total


def _exponent_objective(beta: float, eta: float, q: float, delta: float) -> float:
    penalty = max(0.0, beta * (1.0 - delta) - 0.5)
    return min(beta * eta, beta * q, 0.5 - penalty)


def select_rate_parameters(
    eta: float, delta: float, q_user: float | None = None
) -> RatePlan:
    """Choose (beta, q) for R_n = n**beta.

    Balanced choice: beta = 1/(2 eta) (or 1/(2 q) if a larger user q
    binds), q = max(eta, q_user).  Feasibility needs all three of
    beta*(1-delta) <= 1/2, beta*eta >= 1/2, beta*q >= 1/2 — impossible
    when eta < 1 - delta, in which case the returned beta maximizes
    min(beta*eta, beta*q, 1/2 - (beta*(1-delta) - 1/2)+), i.e.
    beta = 1/(eta + 1 - delta), and achieved_exponent drops below 1/2.
    """
    if not eta > 0:
        raise InvalidConfigError("eta must be > 0: no rate guarantee is possible")
    if math.isinf(eta):
        raise InvalidConfigError("eta must be finite (power-tailed families only)")
    if not 0.0 < delta <= 1.0:
        raise InvalidConfigError("delta must lie in (0, 1]")
    if q_user is not None and q_user <= 0:
        raise InvalidConfigError("q_user must be > 0")

    q = max(eta, q_user) if q_user is not None else eta
    beta = max(1.0 / (2.0 * eta), 1.0 / (2.0 * q))

    def _conditions(b: float) -> dict:
        return {
            "core: beta*(1-delta) <= 1/2": b * (1.0 - delta) <= 0.5 + 1e-12,
            "tail: beta*eta >= 1/2": b * eta >= 0.5 - 1e-12,
            "weight: beta*q >= 1/2": b * q >= 0.5 - 1e-12,
        }

    cond = _conditions(beta)
    if all(cond.values()):
        return RatePlan(
            beta=beta,
            q=q,
            eta=eta,
            delta=delta,
            feasible=True,
            achieved_exponent=_exponent_objective(beta, eta, q, delta),
            conditions=cond,
        )

    # infeasible: trade core decay against the tail/weight exponents
    beta_fb = 1.0 / (min(eta, q) + 1.0 - delta)
    cond_fb = _conditions(beta_fb)
    return RatePlan(
        beta=beta_fb,
        q=q,
        eta=eta,
        delta=delta,
        feasible=False,
        achieved_exponent=_exponent_objective(beta_fb, eta, q, delta),
        conditions=cond_fb,
    )
