"""Render charts from the metric toolkit's CSV rows.

Three figure kinds are supported:

* ``convergence_compare`` -- log-log mean distance vs n, one line per
  metric id, floor rows shaded as a band, dashed reference-slope guides.
* ``convergence_single``  -- same layout for a CSV holding one metric.
* ``grid_certificate``    -- per-q distance curves (one per scenario
  label) on linear axes with a horizontal acceptance-threshold line.

No statistic is computed here beyond axis transforms; fitted slopes are
read from the companion ``<csv>.slopes.json`` files when they exist.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

EXPECTED_COLUMNS = ("scenario", "metric", "n", "mean", "stderr", "M", "seed", "floor")
KINDS = ("convergence_compare", "convergence_single", "grid_certificate")

# the two standard series get stable colors; anything else cycles
_SERIES_COLORS = {"weighted": "tab:orange", "ks": "tab:blue"}
_FALLBACK_COLORS = ("tab:green", "tab:red", "tab:purple", "tab:brown", "tab:gray")


class SchemaError(ValueError):
    """Input CSV columns do not match the expected schema."""


class SpecError(ValueError):
    """Figure spec is malformed or inconsistent with its inputs."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: tuple[str, ...]
    out: str
    reference_slopes: tuple[float, ...] = ()
    threshold: float | None = None
    title: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SpecError("at least one input CSV is required")
        root, ext = os.path.splitext(self.out)
        if ext not in (".svg", ".png") or not root:
            raise SpecError(f"output path must end in .svg or .png, got {self.out!r}")

    @staticmethod
    def from_json(path: str) -> "FigureSpec":
        with open(path) as fh:
            obj = json.load(fh)
        try:
            inputs = obj.get("inputs", None)
            if inputs is None:
                inputs = [obj["input"]]
            return FigureSpec(
                kind=obj["kind"],
                inputs=tuple(str(p) for p in inputs),
                out=str(obj["out"]),
                reference_slopes=tuple(float(s) for s in obj.get("reference_slopes", ())),
                threshold=None if obj.get("threshold") is None else float(obj["threshold"]),
                title=obj.get("title"),
            )
        except KeyError as exc:
            raise SpecError(f"figure spec is missing required field {exc}") from None


def read_rows(path: str) -> list[dict]:
    """Parse one CSV against the expected schema; exact header match."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        found = tuple(reader.fieldnames or ())
        if found != EXPECTED_COLUMNS:
            missing = [c for c in EXPECTED_COLUMNS if c not in found]
            unexpected = [c for c in found if c not in EXPECTED_COLUMNS]
            raise SchemaError(
                f"{path}: columns do not match the expected schema; "
                f"missing {missing}, unexpected {unexpected}, "
                f"expected exactly {list(EXPECTED_COLUMNS)}"
            )
        rows = []
        for raw in reader:
            rows.append(
                {
                    "scenario": raw["scenario"],
                    "metric": raw["metric"],
                    "n": int(raw["n"]),
                    "mean": float(raw["mean"]),
                    "stderr": float(raw["stderr"]),
                    "M": int(raw["M"]),
                    "seed": int(raw["seed"]),
                    "floor": int(raw["floor"]),
                }
            )
    return rows


def _slope_labels(inputs) -> dict[str, float]:
    """Fitted slopes from companion JSON files, keyed by metric id."""
    out: dict[str, float] = {}
    for path in inputs:
        companion = path + ".slopes.json"
        if not os.path.exists(companion):
            continue
        with open(companion) as fh:
            fits = json.load(fh)
        for metric, entry in fits.items():
            if isinstance(entry, dict) and "slope" in entry:
                out[metric] = float(entry["slope"])
    return out


def _series_color(name: str, index: int) -> str:
    return _SERIES_COLORS.get(name, _FALLBACK_COLORS[index % len(_FALLBACK_COLORS)])


def _group(rows, key):
    out: dict[str, list[dict]] = {}
    for r in rows:
        out.setdefault(r[key], []).append(r)
    return out


def _render_convergence(spec: FigureSpec, rows, ax) -> None:
    scen = [r for r in rows if not r["floor"]]
    floors = [r for r in rows if r["floor"]]
    series = _group(scen, "metric")
    if not series:
        raise SpecError("no scenario rows (floor=0) found in the inputs")
    slopes = _slope_labels(spec.inputs)

    for i, (metric, pts) in enumerate(sorted(series.items())):
        if len(pts) < 2:
            raise SpecError(f"series {metric!r} has {len(pts)} rows; need >= 2 to draw a line")
        pts = sorted(pts, key=lambda r: r["n"])
        x = [r["n"] for r in pts]
        y = [r["mean"] for r in pts]
        err = [2.0 * r["stderr"] for r in pts]
        label = metric
        if metric in slopes:
            label = f"{metric} (fit slope {slopes[metric]:+.2f})"
        ax.errorbar(
            x, y, yerr=err, marker="o", ms=4, capsize=2,
            color=_series_color(metric, i), label=label,
        )

    # one dashed guide per reference slope, anchored at the first point of
    # the matching series (cycling when there are more guides than series)
    ordered = [sorted(pts, key=lambda r: r["n"]) for _, pts in sorted(series.items())]
    for j, s in enumerate(spec.reference_slopes):
        pts = ordered[j % len(ordered)]
        x0, y0 = pts[0]["n"], pts[0]["mean"]
        xs = [r["n"] for r in pts]
        ys = [y0 * (x / x0) ** s for x in xs]
        ax.plot(xs, ys, ls="--", lw=1.0, color="0.35")
        ax.annotate(
            f"slope {s:g}", (xs[-1], ys[-1]), textcoords="offset points",
            xytext=(4, -4), fontsize=8, color="0.35",
        )

    if floors:
        by_n: dict[int, list[dict]] = {}
        for r in floors:
            by_n.setdefault(r["n"], []).append(r)
        ns = sorted(by_n)
        lo = [max(min(r["mean"] - 2 * r["stderr"] for r in by_n[n]), 1e-12) for n in ns]
        hi = [max(r["mean"] + 2 * r["stderr"] for r in by_n[n]) for n in ns]
        ax.fill_between(ns, lo, hi, color="0.8", alpha=0.5, label="estimation floor", lw=0)

    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sample size n")
    ax.set_ylabel("mean distance")


def _render_grid(spec: FigureSpec, rows, ax) -> None:
    scen = [r for r in rows if not r["floor"]]
    series = _group(scen, "scenario")
    if not series:
        raise SpecError("no rows with floor=0 found in the inputs")
    for i, (label, pts) in enumerate(sorted(series.items())):
        if len(pts) < 2:
            raise SpecError(f"series {label!r} has {len(pts)} rows; need >= 2 to draw a line")
        try:
            pts = sorted(pts, key=lambda r: float(r["metric"]))
            q = [float(r["metric"]) for r in pts]
        except ValueError:
            raise SpecError(
                "grid_certificate expects the metric column to hold numeric q values"
            ) from None
        ax.plot(
            q, [r["mean"] for r in pts], marker="o", ms=4,
            color=_FALLBACK_COLORS[i % len(_FALLBACK_COLORS)], label=label,
        )
    if spec.threshold is not None:
        ax.axhline(spec.threshold, ls="--", color="tab:red", lw=1.2)
        ax.annotate(
            f"threshold {spec.threshold:g}",
            (0.02, spec.threshold), xycoords=("axes fraction", "data"),
            textcoords="offset points", xytext=(0, 4), fontsize=8, color="tab:red",
        )
    ax.set_xlabel("weight exponent q")
    ax.set_ylabel("distance")
    ax.set_ylim(bottom=0.0)


def render(spec: FigureSpec) -> list[str]:
    """Draw the figure and write it as both SVG and PNG.

    Returns the list of files written.  Identical inputs produce
    byte-identical files (fixed hash salt, no embedded dates).
    """
    rows: list[dict] = []
    for path in spec.inputs:
        rows.extend(read_rows(path))

    plt.rcParams["svg.hashsalt"] = "wkfigures"
    plt.rcParams["svg.fonttype"] = "none"  # keep labels as text, not paths
    fig, ax = plt.subplots(figsize=(6.4, 4.2), dpi=120)
    try:
        if spec.kind in ("convergence_compare", "convergence_single"):
            _render_convergence(spec, rows, ax)
            if spec.threshold is not None:
                ax.axhline(spec.threshold, ls="--", color="tab:red", lw=1.2)
        else:
            _render_grid(spec, rows, ax)
        if spec.title:
            ax.set_title(spec.title)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend(loc="best", fontsize=9)
        fig.tight_layout()

        root, _ = os.path.splitext(spec.out)
        svg_path, png_path = root + ".svg", root + ".png"
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        fig.savefig(png_path, format="png", metadata={"Software": "wkfigures"})
    finally:
        plt.close(fig)
    return [svg_path, png_path]
