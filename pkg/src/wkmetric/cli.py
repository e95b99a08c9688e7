"""Command-line interface.

Subcommands share conventions: ``--config`` accepts JSON or TOML, every
randomized subcommand requires an explicit ``--seed``, tabular results go
to ``--out`` as CSV, and structured results print as JSON on stdout.

Exit codes: 0 success (``validate``: accept), 1 ``validate`` reject,
2 usage/configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import experiments, exhaustion, theory, validation
from .distributions import model_from_json
from .errors import InvalidConfigError, NumericalError
from .exhaustion import ExhaustionSpec, WeightConfig
from .metric import EmpiricalCDF, weighted_distance_to_model, weighted_distance_two_sample


def _load_config(path: str) -> dict:
    import tomli

    with open(path, "rb") as fh:
        raw = fh.read()
    if path.endswith(".toml"):
        try:
            return tomli.loads(raw.decode())
        except tomli.TOMLDecodeError as exc:
            raise InvalidConfigError(f"cannot parse {path}: {exc}") from exc
    try:
        return json.loads(raw.decode())
    except json.JSONDecodeError:
        try:
            return tomli.loads(raw.decode())
        except tomli.TOMLDecodeError:
            raise InvalidConfigError(f"cannot parse {path} as JSON or TOML") from None


def _read_series(path: str) -> np.ndarray:
    """One numeric column; a single non-numeric header line is tolerated."""
    vals = []
    with open(path) as fh:
        for i, line in enumerate(fh):
            s = line.strip().split(",")[0]
            if not s:
                continue
            try:
                vals.append(float(s))
            except ValueError:
                if i == 0:
                    continue
                raise InvalidConfigError(f"non-numeric value {s!r} in {path}")
    if not vals:
        raise InvalidConfigError(f"no data in {path}")
    return np.asarray(vals)


def _exhaustion_from_obj(obj: dict) -> ExhaustionSpec:
    kind = obj.get("kind", "absolute")
    if kind == "absolute":
        return exhaustion.absolute()
    if kind == "centered":
        return exhaustion.centered(float(obj["center"]))
    if kind == "var_centered":
        if "center" in obj:  # already frozen
            return ExhaustionSpec(
                kind="var_centered", center=float(obj["center"]), alpha=obj.get("alpha")
            )
        model = model_from_json(json.dumps(obj["model"]))
        return exhaustion.var_centered(model, float(obj["alpha"]))
    raise InvalidConfigError(f"cannot build exhaustion kind {kind!r} from CLI input")


def _model_from_file(path: str):
    with open(path) as fh:
        return model_from_json(fh.read())


def _exhaustion_from_cli(text: str) -> ExhaustionSpec:
    """Parse the flag form: ``absolute`` or ``centered:<c>``."""
    if text == "absolute":
        return exhaustion.absolute()
    if text.startswith("centered:"):
        return exhaustion.centered(float(text.split(":", 1)[1]))
    raise InvalidConfigError(f"cannot parse exhaustion flag {text!r}")


def _weight_config(args, cfg_obj: dict | None = None) -> WeightConfig:
    obj = cfg_obj or {}
    if "exhaustion" in obj:
        exh = _exhaustion_from_obj(obj["exhaustion"])
    else:
        exh = _exhaustion_from_cli(getattr(args, "exhaustion", "absolute"))
    q = obj.get("q", getattr(args, "q", None))
    if q is None:
        raise InvalidConfigError("q is required")
    return WeightConfig(exh, float(q))


# ---------------------------------------------------------------------------
# subcommand bodies


def _cmd_convergence(args) -> int:
    cfg_obj = _load_config(args.config)
    model = model_from_json(json.dumps(cfg_obj["model"]))
    wcfg = WeightConfig(_exhaustion_from_obj(cfg_obj.get("exhaustion", {})), float(cfg_obj["q"]))
    cfg = experiments.ScenarioConfig(
        scenario=cfg_obj.get("scenario", "scenario"),
        model=model,
        weight_cfg=wcfg,
        n_grid=tuple(cfg_obj["n_grid"]),
        M=int(cfg_obj["M"]),
        repetitions=int(cfg_obj.get("repetitions", 4)),
        seed=args.seed,
        calibrate_floor=bool(cfg_obj.get("calibrate_floor", True)),
        refinement=int(cfg_obj.get("refinement", 8)),
        metrics=tuple(cfg_obj.get("metrics", ("weighted", "ks"))),
    )
    rows = experiments.run_convergence(cfg, threads=args.threads)
    experiments.rows_to_csv(rows, args.out)
    slopes = experiments.fit_scenario_slopes(rows)
    slope_path = args.out + ".slopes.json"
    with open(slope_path, "w") as fh:
        json.dump(slopes, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps({"rows": len(rows), "out": args.out, "slopes": slopes}, sort_keys=True))
    return 0


def _cmd_tailscan(args) -> int:
    cfg_obj = _load_config(args.config)
    model = model_from_json(json.dumps(cfg_obj["model"]))
    exh = _exhaustion_from_obj(cfg_obj.get("exhaustion", {}))
    rows = experiments.run_tailscan(
        model,
        exh,
        delta=float(cfg_obj["delta"]),
        R_grid=cfg_obj["R_grid"],
        reference_n=int(cfg_obj.get("n", 1000)),
        q=float(cfg_obj.get("q", 1.0)),
    )
    experiments.tailscan_to_csv(rows, args.out)
    print(json.dumps({"rows": len(rows), "out": args.out}))
    return 0


def _cmd_params(args) -> int:
    plan = theory.select_rate_parameters(args.eta, args.delta, args.q)
    obj = {
        "beta": plan.beta,
        "q": plan.q,
        "eta": plan.eta,
        "delta": plan.delta,
        "feasible": plan.feasible,
        "achieved_exponent": plan.achieved_exponent,
        "conditions": plan.conditions,
    }
    if args.json:
        print(json.dumps(obj, sort_keys=True))
    else:
        print(f"{'parameter':<22}{'value'}")
        for key in ("beta", "q", "eta", "delta", "feasible", "achieved_exponent"):
            print(f"{key:<22}{obj[key]}")
        for name, ok in plan.conditions.items():
            print(f"{name:<40}{'PASS' if ok else 'FAIL'}")
    return 0


def _cmd_metric(args) -> int:
    data = _read_series(args.data)
    model = _model_from_file(args.model)
    cfg = _weight_config(args)
    ecdf = EmpiricalCDF.from_sample(data)
    res = weighted_distance_to_model(ecdf, model, cfg, refinement=args.refinement)
    print(json.dumps(res.to_json_dict(cfg, ecdf.n), sort_keys=True))
    return 0


def _cmd_two_sample(args) -> int:
    a = EmpiricalCDF.from_sample(_read_series(args.data_a))
    b = EmpiricalCDF.from_sample(_read_series(args.data_b))
    cfg = _weight_config(args)
    res = weighted_distance_two_sample(a, b, cfg)
    print(json.dumps(res.to_json_dict(cfg, a.n), sort_keys=True))
    return 0


def _cmd_bootstrap(args) -> int:
    model = _model_from_file(args.model)
    cfg = _weight_config(args)
    null = validation.bootstrap_null(
        model, args.n, cfg, args.B, args.seed, refinement=args.refinement,
        cache_dir=args.cache_dir,
    )
    out = {
        "B": int(null.size),
        "critical_value": validation.critical_value(null, args.alpha),
        "alpha": args.alpha,
    }
    if args.observed is not None:
        out["p_value"] = validation.p_value(args.observed, null)
        out["observed"] = args.observed
    if args.out:
        np.savetxt(args.out, null, delimiter=",", header="d_star", comments="")
    print(json.dumps(out, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    data = _read_series(args.data)
    model = _model_from_file(args.model)
    with open(args.policy) as fh:
        pol_obj = json.load(fh)
    policy = validation.ValidationPolicy(
        Q=tuple(pol_obj["Q"]),
        var_level=float(pol_obj.get("var_level", 0.01)),
        alpha_tail=float(pol_obj.get("alpha_tail", 0.05)),
        eps_core=pol_obj.get("eps_core"),
        alpha_core=pol_obj.get("alpha_core"),
        B=int(pol_obj.get("B", 500)),
        seed=args.seed,
        exhaustion=_exhaustion_from_obj(pol_obj.get("exhaustion", {})),
        refinement=int(pol_obj.get("refinement", 8)),
    )
    verdict = validation.hybrid_validate(data, model, policy, cache_dir=args.cache_dir)
    print(verdict.to_json())
    return 0 if verdict.accept else 1


def _cmd_grid(args) -> int:
    data = _read_series(args.data)
    model = _model_from_file(args.model)
    exh = _exhaustion_from_cli(args.exhaustion)
    Q = tuple(float(q) for q in args.Q.split(","))
    res = validation.grid_robust_distance(
        EmpiricalCDF.from_sample(data), model, exh, Q, refinement=args.refinement
    )
    print(
        json.dumps(
            {"d_rob": res.d_rob, "argmax_q": res.argmax_q, "per_q": dict((f"{q:g}", v) for q, v in res.per_q)},
            sort_keys=True,
        )
    )
    if args.out:
        rows = [
            experiments.ConvergenceRow(
                scenario=args.label,
                metric=f"{q:g}",
                n=len(data),
                mean_distance=v,
                std_error=0.0,
                M=1,
                seed=args.seed if args.seed is not None else 0,
                floor=0,
            )
            for q, v in res.per_q
        ]
        if args.append:
            existing = experiments.rows_from_csv(args.out)
            rows = existing + rows
        experiments.rows_to_csv(rows, args.out)
    return 0


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wkm", description="Weighted Kolmogorov metric toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def add_weight_flags(sp, need_q=True):
        sp.add_argument("--q", type=float, required=need_q, help="weight exponent q")
        sp.add_argument(
            "--exhaustion", default="absolute", help="exhaustion kind (absolute|centered:<c>)"
        )
        sp.add_argument("--refinement", type=int, default=8)

    sp = sub.add_parser("convergence", help="run a convergence scenario, emit CSV + slope JSON")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--threads", type=int, default=1)
    sp.set_defaults(fn=_cmd_convergence)

    sp = sub.add_parser("tailscan", help="truncation analytics along an R grid")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=_cmd_tailscan)

    sp = sub.add_parser("params", help="select the (beta, q) rate plan")
    sp.add_argument("--eta", type=float, required=True)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--q", type=float, default=None)
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(fn=_cmd_params)

    sp = sub.add_parser("metric", help="one-sample weighted distance, JSON to stdout")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    add_weight_flags(sp)
    sp.set_defaults(fn=_cmd_metric)

    sp = sub.add_parser("two-sample", help="two-sample weighted distance (exact)")
    sp.add_argument("--data-a", required=True)
    sp.add_argument("--data-b", required=True)
    add_weight_flags(sp)
    sp.set_defaults(fn=_cmd_two_sample)

    sp = sub.add_parser("bootstrap", help="parametric bootstrap null table / critical value")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--B", type=int, default=500)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--observed", type=float, default=None)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out", default=None)
    sp.add_argument("--cache-dir", default=None)
    add_weight_flags(sp)
    sp.set_defaults(fn=_cmd_bootstrap)

    sp = sub.add_parser("validate", help="hybrid core+tail validation; exit 0 accept, 1 reject")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--policy", required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--cache-dir", default=None)
    sp.set_defaults(fn=_cmd_validate)

    sp = sub.add_parser("grid", help="grid-robust distance profile over Q")
    sp.add_argument("--data", required=True)
    sp.add_argument("--model", required=True)
    sp.add_argument("--Q", required=True, help="comma-separated q grid, e.g. 0.5,1.0,2.5")
    sp.add_argument("--exhaustion", default="absolute")
    sp.add_argument("--refinement", type=int, default=8)
    sp.add_argument("--label", default="data")
    sp.add_argument("--out", default=None)
    sp.add_argument("--append", action="store_true")
    sp.add_argument("--seed", type=int, default=None)
    sp.set_defaults(fn=_cmd_grid)

    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (InvalidConfigError, FileNotFoundError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
