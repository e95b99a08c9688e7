"""Exhaustion functions and the weights they induce.

An exhaustion function h measures distance from a chosen center of the real
line (origin, a fixed point, or a model-implied value-at-risk level) and must
grow like |t| far out: c1*|t| <= h(t) <= c2*|t| for |t| >= t0.  The induced
weight w_q(t) = (1 + h(t))**(-q) downweights CDF discrepancies far from the
center; q > 0 controls how aggressively.

All types here are immutable and evaluation is pure, so they are safe to
share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ComparabilityError, InvalidConfigError

_KINDS = ("absolute", "centered", "var_centered", "custom")

# Verification grid for custom exhaustions: log-spaced magnitudes out to 1e6,
# mirrored to the negative axis.
_CHECK_POINTS = 10_001
_CHECK_REACH = 1.0e6


@dataclass(frozen=True)
class ExhaustionSpec:
    """A validated exhaustion function.

    Use the module-level constructors (:func:`absolute`, :func:`centered`,
    :func:`var_centered`, :func:`custom`) instead of instantiating directly;
    they fill in the comparability constants and run the required checks.

    Attributes
    ----------
    kind : str
        One of ``absolute``, ``centered``, ``var_centered``, ``custom``.
    center : float
        The point where h vanishes (0 for ``absolute``).  For
        ``var_centered`` this is the model quantile v_alpha, computed once
        at construction and frozen — never re-estimated from data.
    alpha : float or None
        The VaR level behind a ``var_centered`` spec, kept for
        serialization; ``None`` otherwise.
    c1, c2, t0 : float
        Comparability constants: c1*|t| <= h(t) <= c2*|t| for |t| >= t0.
    fn : callable or None
        The raw callable for ``custom`` kind.
    """

    kind: str
    center: float = 0.0
    alpha: float | None = None
    c1: float = 1.0
    c2: float = 1.0
    t0: float = 0.0
    fn: Callable[[np.ndarray], np.ndarray] | None = field(
        default=None, repr=False, compare=False
    )

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise InvalidConfigError(f"unknown exhaustion kind {self.kind!r}")
        if not (self.c1 > 0 and self.c2 > 0 and self.c1 <= self.c2):
            raise InvalidConfigError("need 0 < c1 <= c2")
        if self.t0 < 0:
            raise InvalidConfigError("t0 must be >= 0")
        if self.kind == "custom" and self.fn is None:
            raise InvalidConfigError("custom exhaustion needs a callable")

    def __call__(self, t):
        """Evaluate h(t); accepts scalars or arrays, returns like input."""
        arr = np.asarray(t, dtype=np.float64)
        if self.kind == "custom":
            out = np.asarray(self.fn(arr), dtype=np.float64)
        else:
            out = np.abs(arr - self.center)
        return out if arr.ndim else float(out)

    def max_on_window(self, R: float) -> float:
        """max of h over the symmetric window [-R, R].

        Closed form for the built-in kinds (|t - c| peaks at the endpoint
        farther from c, giving R + |c|); a dense grid scan for ``custom``.
        """
        if R < 0:
            raise InvalidConfigError("window radius must be >= 0")
        if self.kind != "custom":
            return R + abs(self.center)
        grid = np.linspace(-R, R, 20_001)
        return float(np.max(self(grid)))


def absolute() -> ExhaustionSpec:
    """h(t) = |t|: the canonical exhaustion, centered at the origin."""
    return ExhaustionSpec(kind="absolute")


def centered(center: float) -> ExhaustionSpec:
    """h(t) = |t - center| for a fixed, known center.

    For heavy-tailed models prefer a model median or quantile as the
    anchor; the sample mean is deliberately not offered.
    """
    return ExhaustionSpec(kind="centered", center=float(center))


def var_centered(model, alpha: float) -> ExhaustionSpec:
    """h(t) = |t - v_alpha| with v_alpha = model.quantile(alpha), frozen.

    The center comes from the calibrated model, not from data, and is
    computed exactly once here.
    """
    if not 0.0 < alpha < 1.0:
        raise InvalidConfigError("alpha must lie in (0, 1)")
    v = float(model.quantile(alpha))
    return ExhaustionSpec(kind="var_centered", center=v, alpha=float(alpha))


def custom(
    fn: Callable[[np.ndarray], np.ndarray],
    c1: float,
    c2: float,
    t0: float,
) -> ExhaustionSpec:
    """Wrap a user callable after verifying the declared growth envelope.

    The callable must be vectorized over numpy arrays, nonnegative and
    finite everywhere, and satisfy c1*|t| <= fn(t) <= c2*|t| for
    |t| >= t0.  The bound is sampled on a mirrored log-spaced grid of
    10,001 points per side reaching 1e6; violations raise
    :class:`ComparabilityError`.
    """
    spec = ExhaustionSpec(kind="custom", c1=float(c1), c2=float(c2), t0=float(t0), fn=fn)
    lo = max(t0, 1e-3)
    mags = np.logspace(np.log10(lo), np.log10(_CHECK_REACH), _CHECK_POINTS)
    for sign in (1.0, -1.0):
        t = sign * mags
        h = np.asarray(fn(t), dtype=np.float64)
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise ComparabilityError("custom exhaustion must be finite and >= 0")
        mask = np.abs(t) >= t0
        a = np.abs(t[mask])
        if np.any(h[mask] < c1 * a - 1e-12 * a) or np.any(h[mask] > c2 * a + 1e-12 * a):
            raise ComparabilityError(
                f"h(t) leaves the declared envelope [{c1}|t|, {c2}|t|] beyond t0={t0}"
            )
    # core sanity: finite and nonnegative near the center too
    core = np.linspace(-max(t0, 1.0), max(t0, 1.0), 2_001)
    hc = np.asarray(fn(core), dtype=np.float64)
    if not np.all(np.isfinite(hc)) or np.any(hc < 0):
        raise ComparabilityError("custom exhaustion must be finite and >= 0 on the core")
    return spec


@dataclass(frozen=True)
class WeightConfig:
    """An exhaustion together with the weight exponent q > 0.

    q = 0 is accepted as an explicit degenerate case: the weight is then
    identically 1 and the metric collapses to classical Kolmogorov–Smirnov
    (useful as an oracle).
    """

    exhaustion: ExhaustionSpec
    q: float

    def __post_init__(self) -> None:
        if self.q < 0:
            raise InvalidConfigError("q must be >= 0")


def weight(t, cfg: WeightConfig):
    """w_q(t) = (1 + h(t))**(-q), always in (0, 1]."""
    h = cfg.exhaustion(t)
    return (1.0 + h) ** (-cfg.q)


def min_weight_on_window(R: float, cfg: WeightConfig) -> float:
    """c_R = min of the weight over [-R, R] = (1 + max h on window)**(-q).

    For the absolute exhaustion this is exactly (1 + R)**(-q).
    """
    if R <= 0:
        raise InvalidConfigError("R must be > 0")
    return (1.0 + cfg.exhaustion.max_on_window(R)) ** (-cfg.q)


def weight_ratio_bounds(
    a: ExhaustionSpec,
    b: ExhaustionSpec,
    q: float,
    t_grid: np.ndarray,
) -> tuple[float, float]:
    """Empirical bounds of w_a(t)/w_b(t) over a grid.

    Both exhaustions comparable to |t| at infinity force the ratio into a
    fixed positive band; this returns the observed (min, max) so callers
    can check the equivalence constants numerically.
    """
    t = np.asarray(t_grid, dtype=np.float64)
    if t.size == 0:
        raise InvalidConfigError("t_grid must be nonempty")
    ratio = ((1.0 + a(t)) / (1.0 + b(t))) ** (-q)
    return float(np.min(ratio)), float(np.max(ratio))


def weight_config_to_json(cfg: WeightConfig) -> str:
    """Serialize to the documented JSON shape.

    ``custom`` exhaustions carry an arbitrary callable and are rejected.
    """
    spec = cfg.exhaustion
    if spec.kind == "custom":
        raise InvalidConfigError("custom exhaustions are not serializable")
    obj: dict = {"kind": spec.kind, "q": cfg.q}
    if spec.kind == "centered":
        obj["center"] = spec.center
    elif spec.kind == "var_centered":
        obj["center"] = spec.center
        obj["alpha"] = spec.alpha
    return json.dumps(obj)


def weight_config_from_json(text: str) -> WeightConfig:
    """Inverse of :func:`weight_config_to_json`.

    A ``var_centered`` object round-trips through its frozen center; the
    model is not needed again.
    """
    obj = json.loads(text)
    kind = obj.get("kind")
    q = float(obj.get("q", -1.0))
    if kind == "absolute":
        spec = absolute()
    elif kind == "centered":
        spec = centered(float(obj["center"]))
    elif kind == "var_centered":
        spec = ExhaustionSpec(
            kind="var_centered",
            center=float(obj["center"]),
            alpha=float(obj["alpha"]) if obj.get("alpha") is not None else None,
        )
    else:
        raise InvalidConfigError(f"cannot deserialize exhaustion kind {kind!r}")
    return WeightConfig(exhaustion=spec, q=q)
