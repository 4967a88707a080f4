"""Command-line interface: single-shot inference subcommands and a
config-driven simulation driver.

Every subcommand is a thin wrapper over one library call. Results are
written as JSON with sorted keys and infinities rendered as the strings
"inf" and "-inf", so identical inputs, flags, and seed always produce
byte-identical output. Probabilities on the command line are decimal
strings and are converted to exact rationals before use.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .applications import pac_rank, select, selection_threshold
from .core import (
    Levels,
    as_fraction,
    order_statistics,
)
from .covshift import batch_pi_covshift
from .engine import (
    EXACT,
    SampledMode,
    batch_mean,
    batch_sum,
    batch_pi,
    rank_order_from_h,
)
from .errors import BatchPIError, SchemaError
from .harness import (
    SimConfig,
    fit_logistic_propensity,
    run_coverage_experiment,
)
from .quantiles import QuantileTarget, multi_quantile_bounds, quantile_interval

SAMPLED_MODE_STREAM = 3


def _provenance(seed: Optional[int]) -> dict:
    try:
        described = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            check=False,
        )
        version = described.stdout.strip() or __version__
    except OSError:
        version = __version__
    return {"version": version, "seed": seed}


def _json_value(value):
    if isinstance(value, float):
        if value == float("inf"):
            return "inf"
        if value == float("-inf"):
            return "-inf"
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, dict):
        return {k: _json_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v) for v in value]
    return value


def _write_json(payload: dict, out: Optional[str]) -> None:
    text = json.dumps(_json_value(payload), sort_keys=True, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_column(path: str, column: str) -> list[float]:
    import csv as _csv

    with open(path, newline="") as handle:
        reader = _csv.DictReader(handle)
        if reader.fieldnames is None or column not in reader.fieldnames:
            raise SchemaError(f"{path}: missing required column {column!r}")
        values = []
        for row_number, row in enumerate(reader, start=2):
            raw = row[column]
            try:
                values.append(float(raw))
            except ValueError as exc:
                raise SchemaError(
                    f"{path}:{row_number}: column {column!r} value {raw!r} "
                    "is not a number"
                ) from exc
    return values


def _read_features(path: str) -> tuple[list[list[float]], list[dict]]:
    import csv as _csv

    with open(path, newline="") as handle:
        reader = _csv.DictReader(handle)
        names = [
            f for f in (reader.fieldnames or []) if f.startswith("feature_")
        ]
        if not names:
            raise SchemaError(f"{path}: no feature_* columns found")
        names.sort(key=lambda f: int(f.split("_", 1)[1]))
        rows = list(reader)
    features = [[float(row[f]) for f in names] for row in rows]
    return features, rows


def _parse_probability(raw: Optional[str], flag: str) -> Optional[Fraction]:
    if raw is None:
        return None
    try:
        return as_fraction(raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise SchemaError(f"{flag} value {raw!r} is not a probability") from exc


def _levels_from_args(args) -> Levels:
    alpha = _parse_probability(args.alpha, "--alpha")
    beta = _parse_probability(args.beta, "--beta")
    gamma = _parse_probability(args.gamma, "--gamma")
    if alpha is None and (beta is None or gamma is None):
        raise SchemaError(
            "pass --alpha, or both --beta and --gamma, to fix the miscoverage"
        )
    if alpha is None:
        return Levels(alpha=beta + gamma, beta=beta, gamma=gamma)
    if beta is None and gamma is None:
        return Levels.symmetric(alpha)
    if beta is None:
        beta = alpha - gamma
    if gamma is None:
        gamma = alpha - beta
    return Levels(alpha=alpha, beta=beta, gamma=gamma)


def _range_from_args(args) -> tuple[float, float]:
    raw = getattr(args, "range", None)
    if raw is None:
        return (float("-inf"), float("inf"))
    parts = raw.split(",")
    if len(parts) != 2:
        raise SchemaError(f"--range must be lo,hi, got {raw!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError as exc:
        raise SchemaError(f"--range must be numeric, got {raw!r}") from exc
    return (lo, hi)


def _mode_from_args(args):
    raw = getattr(args, "mode", "exact")
    if raw == "exact":
        return EXACT
    if raw.startswith("sampled:"):
        count = raw.split(":", 1)[1]
        if not count.isdigit():
            raise SchemaError(f"--mode sampled:<count> needs an integer, got {raw!r}")
        import numpy as np

        seed = int(
            np.random.default_rng(
                np.random.SeedSequence((args.seed, SAMPLED_MODE_STREAM))
            ).integers(0, 2**63 - 1)
        )
        return SampledMode(count=int(count), seed=seed)
    raise SchemaError(f"--mode must be exact or sampled:<count>, got {raw!r}")


def _interval_payload(interval) -> dict:
    return {"lower": interval.lower, "upper": interval.upper}


def cmd_quantile(args) -> dict:
    scores = order_statistics(
        _read_column(args.scores, "score"), score_range=_range_from_args(args)
    )
    levels = _levels_from_args(args)
    delta = _parse_probability(args.delta, "--delta")
    if delta is None:
        raise SchemaError("quantile needs --delta for the target rank")
    target = QuantileTarget.for_batch(delta, args.m)
    interval = quantile_interval(scores, args.m, target, levels)
    return {
        "interval": _interval_payload(interval),
        "parameters": {
            "alpha": levels.alpha,
            "beta": levels.beta,
            "gamma": levels.gamma,
            "delta": delta,
            "m": args.m,
            "n": scores.n,
            "zeta": target.zeta,
        },
    }


def cmd_mean(args) -> dict:
    scores = order_statistics(
        _read_column(args.scores, "score"), score_range=_range_from_args(args)
    )
    levels = _levels_from_args(args)
    mode = _mode_from_args(args)
    h = batch_mean(args.m)
    order = rank_order_from_h(batch_sum(args.m))
    interval = batch_pi(scores, args.m, h, order, levels, mode)
    return {
        "interval": _interval_payload(interval),
        "parameters": {
            "alpha": levels.alpha,
            "beta": levels.beta,
            "gamma": levels.gamma,
            "m": args.m,
            "mode": args.mode,
            "n": scores.n,
        },
    }


def cmd_multiq(args) -> dict:
    scores = order_statistics(_read_column(args.scores, "score"))
    alpha = _parse_probability(args.alpha, "--alpha")
    if alpha is None:
        raise SchemaError("multiq needs --alpha")
    try:
        t_list = tuple(int(part) for part in args.t.split(","))
    except ValueError as exc:
        raise SchemaError(f"--t must be comma-separated integers, got {args.t!r}") from exc
    bounds = multi_quantile_bounds(scores, args.m, t_list, alpha)
    return {
        "bounds": {"L": list(bounds.L), "U": list(bounds.U)},
        "parameters": {
            "alpha": alpha,
            "m": args.m,
            "n": scores.n,
            "t": list(t_list),
        },
    }


def cmd_pac(args) -> dict:
    scores = order_statistics(_read_column(args.scores, "score"))
    alpha = _parse_probability(args.alpha, "--alpha")
    delta = _parse_probability(args.delta, "--delta")
    if alpha is None or delta is None:
        raise SchemaError("pac needs --alpha and --delta")
    result = pac_rank(scores.n, args.m, delta, alpha)
    return {
        "rank": result.r,
        "threshold": scores.order_stat(result.r),
        "parameters": {
            "alpha": alpha,
            "delta": delta,
            "m": args.m,
            "m_delta": result.m_delta,
            "n": scores.n,
        },
    }


def cmd_select(args) -> dict:
    cal = _read_column(args.scores, "score")
    alpha = _parse_probability(args.alpha, "--alpha")
    if alpha is None:
        raise SchemaError("select needs --alpha")
    result = selection_threshold(
        order_statistics(cal), args.m, args.eta, alpha
    )
    payload = {
        "threshold": result.threshold,
        "parameters": {
            "alpha": alpha,
            "eta": args.eta,
            "m": args.m,
            "n": len(cal),
        },
    }
    if args.test:
        predictions = _read_column(args.test, "score")
        if len(predictions) != args.m:
            raise SchemaError(
                f"{args.test}: expected {args.m} test rows, got {len(predictions)}"
            )
        chosen = select(predictions, result)
        payload["selected"] = sorted(chosen)
    return payload


def cmd_covshift(args) -> dict:
    cal_features, cal_rows = _read_features(args.scores)
    cal_scores = _read_column(args.scores, "score")
    test_features, _ = _read_features(args.test)
    m = len(test_features)
    levels = _levels_from_args(args)
    mode = _mode_from_args(args)
    c = _parse_probability(args.c, "--c")
    if c is None:
        raise SchemaError("covshift needs --c, the propensity lower bound")
    labels = [1] * len(cal_features) + [0] * len(test_features)
    model = fit_logistic_propensity(
        cal_features + test_features, labels, c_clip=float(c)
    )
    h = batch_mean(m)
    order = rank_order_from_h(batch_sum(m))
    interval = batch_pi_covshift(
        list(zip(cal_features, cal_scores)),
        m,
        model,
        h,
        order,
        levels,
        mode,
        seed=args.seed,
    )
    return {
        "interval": _interval_payload(interval),
        "parameters": {
            "alpha": levels.alpha,
            "beta": levels.beta,
            "c": c,
            "gamma": levels.gamma,
            "m": m,
            "mode": args.mode,
            "n": len(cal_scores),
        },
    }


CONFIG_SCHEMA = {
    "design": str,
    "p": int,
    "n_train": int,
    "n": int,
    "m": int,
    "trials": int,
    "seed": int,
    "methods": list,
    "alpha": (str, int, float),
    "params": dict,
}

PARAMS_SCHEMA = {
    "delta": (str, int, float),
    "sigma": (int, float),
    "cutoff": (int, float),
    "strength": (int, float),
    "estimate_propensity": bool,
    "model_kind": str,
}

REQUIRED_CONFIG_KEYS = ("design", "p", "n_train", "n", "m", "trials", "seed", "methods")


def parse_config(path: str) -> SimConfig:
    """Strictly validated JSON-to-SimConfig loader. Unknown keys are
    rejected with the offending key path in the error message.
    """
    try:
        document = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(document, dict):
        raise SchemaError(f"{path}: top level must be an object")
    for key in document:
        if key not in CONFIG_SCHEMA:
            raise SchemaError(f"{path}: unknown key {key!r}")
    for key in REQUIRED_CONFIG_KEYS:
        if key not in document:
            raise SchemaError(f"{path}: missing required key {key!r}")
    for key, expected in CONFIG_SCHEMA.items():
        if key in document and not isinstance(document[key], expected):
            raise SchemaError(
                f"{path}: key {key!r} has the wrong type"
            )
    params = document.get("params", {})
    for key, value in params.items():
        if key not in PARAMS_SCHEMA:
            raise SchemaError(f"{path}: unknown key 'params.{key}'")
        if not isinstance(value, PARAMS_SCHEMA[key]):
            raise SchemaError(f"{path}: key 'params.{key}' has the wrong type")
    methods = document["methods"]
    if not all(isinstance(mth, str) for mth in methods):
        raise SchemaError(f"{path}: key 'methods' must be a list of strings")
    if "delta" in params:
        params = dict(params)
        params["delta"] = as_fraction(str(params["delta"]))
    alpha = as_fraction(str(document.get("alpha", "0.1")))
    try:
        return SimConfig(
            design=document["design"],
            p=document["p"],
            n_train=document["n_train"],
            n=document["n"],
            m=document["m"],
            trials=document["trials"],
            seed=document["seed"],
            methods=tuple(methods),
            alpha=alpha,
            params=params,
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from exc


def cmd_simulate(args) -> dict:
    config = parse_config(args.config)
    report = run_coverage_experiment(config)
    if args.csv:
        report.write_csv(args.csv)
    return report.summary_dict()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="batchpi",
        description="Distribution-free prediction intervals for batch targets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, scores: bool = True) -> None:
        if scores:
            p.add_argument("--scores", required=True, help="calibration CSV with a score column")
        p.add_argument("--alpha", help="total miscoverage level")
        p.add_argument("--beta", help="lower-tail share of the miscoverage")
        p.add_argument("--gamma", help="upper-tail share of the miscoverage")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--mode", default="exact", help="exact or sampled:<count>")
        p.add_argument("--range", help="known score range lo,hi for the sentinels")
        p.add_argument("--out", help="output JSON path (default stdout)")

    p_quantile = sub.add_parser("quantile", help="interval for a batch order statistic")
    common(p_quantile)
    p_quantile.add_argument("--m", type=int, required=True)
    p_quantile.add_argument("--delta", required=True, help="target the ceil((1-delta)m)-th order statistic")
    p_quantile.set_defaults(run=cmd_quantile)

    p_mean = sub.add_parser("mean", help="interval for the batch mean")
    common(p_mean)
    p_mean.add_argument("--m", type=int, required=True)
    p_mean.set_defaults(run=cmd_mean)

    p_multiq = sub.add_parser("multiq", help="simultaneous bounds for several batch quantiles")
    common(p_multiq)
    p_multiq.add_argument("--m", type=int, required=True)
    p_multiq.add_argument("--t", required=True, help="comma-separated target ranks, e.g. 25,50,75")
    p_multiq.set_defaults(run=cmd_multiq)

    p_pac = sub.add_parser("pac", help="PAC prediction-set rank and threshold")
    common(p_pac)
    p_pac.add_argument("--m", type=int, required=True)
    p_pac.add_argument("--delta", required=True, help="per-batch miscoverage fraction")
    p_pac.set_defaults(run=cmd_pac)

    p_select = sub.add_parser("select", help="selection threshold with k-FWER control")
    common(p_select)
    p_select.add_argument("--m", type=int, required=True)
    p_select.add_argument("--eta", type=int, required=True, help="tolerated false selections")
    p_select.add_argument("--test", help="optional test CSV with a score column of predictions")
    p_select.set_defaults(run=cmd_select)

    p_cov = sub.add_parser("covshift", help="batch mean interval under covariate shift")
    common(p_cov)
    p_cov.add_argument("--test", required=True, help="test CSV with feature_* columns")
    p_cov.add_argument("--c", required=True, help="propensity lower bound")
    p_cov.set_defaults(run=cmd_covshift)

    p_sim = sub.add_parser("simulate", help="run a Monte Carlo coverage experiment")
    p_sim.add_argument("--config", required=True, help="JSON experiment config")
    p_sim.add_argument("--csv", help="per-trial CSV output path")
    p_sim.add_argument("--out", help="summary JSON path (default stdout)")
    p_sim.add_argument("--seed", type=int, default=0, help="unused; the config seed governs")
    p_sim.set_defaults(run=cmd_simulate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        payload = args.run(args)
        payload["provenance"] = _provenance(getattr(args, "seed", None))
        _write_json(payload, args.out)
    except BatchPIError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
