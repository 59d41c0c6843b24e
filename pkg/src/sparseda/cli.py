"""Command-line interface.

Subcommands: `simulate` runs a phase-transition experiment described by
a TOML config and writes the results CSV; `sample` draws a labeled
dataset from a model spec; `fit` runs the penalized discriminant on a
dataset CSV; `decode` runs the exhaustive support search; `theory`
evaluates thresholds and recovery limits; `risk` computes error rates
of a fitted direction.  Exit codes: 0 success, 2 invalid input, 3
numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .decoder import ENUMERATION_CAP, exhaustive_decode
from .exceptions import DataFormatError, NumericError
from .harness import (
    ExperimentConfig,
    run_correlation_sweep,
    run_phase_transition,
)
from .model import (
    COVARIANCE_KINDS,
    CovarianceSpec,
    dataset_from_csv,
    dataset_to_csv,
    make_model,
    sample_dataset,
)
from .risk import bayes_risk, conditional_error_rate
from .sda import fit_sda
from .theory import lambda_of, lambda_sda, phi_close, phi_far, tau_min, theory_report

_MODEL_KEYS = {"p", "support_size", "mean_gap", "amplitude", "priors", "seed", "covariance"}
_COVARIANCE_KEYS = {"kind", "dimension", "rho"}
_CONFIG_KEYS = {
    "regimes",
    "p_list",
    "theta_grid",
    "replications",
    "covariance_kind",
    "covariance_rho",
    "lambda_rule",
    "lambda_value",
    "support_threshold",
    "base_seed",
    "rho_list",
}


def _load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValueError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(allowed)}")


def model_from_toml(path):
    """Build a model from a TOML spec.

    Keys: p (required); either mean_gap (explicit vector) or
    support_size with an optional seed for the random-sign draw;
    amplitude, priors, and a [covariance] table with kind, dimension
    (defaults to p), and rho.
    """
    data = _load_toml(path)
    _check_keys(data, _MODEL_KEYS, f"model spec {path}")
    if "p" not in data:
        raise ValueError(f"model spec {path} is missing 'p'")
    p = data["p"]
    cov = dict(data.get("covariance", {}))
    _check_keys(cov, _COVARIANCE_KEYS, f"[covariance] of {path}")
    spec = CovarianceSpec(
        kind=cov.get("kind", "identity"),
        dimension=cov.get("dimension", p),
        rho=cov.get("rho", 0.0),
    )
    priors = data.get("priors", (0.5, 0.5))
    if "mean_gap" in data:
        if "support_size" in data or "seed" in data or "amplitude" in data:
            raise ValueError("mean_gap excludes support_size, seed, and amplitude")
        gap = [float(v) for v in data["mean_gap"]]
        size = sum(1 for v in gap if v != 0.0)
        return make_model(p, size, spec, mu_scheme=gap, priors=tuple(priors))
    if "support_size" not in data:
        raise ValueError(f"model spec {path} needs either 'mean_gap' or 'support_size'")
    return make_model(
        p,
        data["support_size"],
        spec,
        priors=tuple(priors),
        seed=data.get("seed", 0),
        amplitude=data.get("amplitude", 1.0),
    )


def config_from_toml(path):
    """Read an ExperimentConfig (plus optional rho_list) from TOML.

    Keys mirror the ExperimentConfig field names; an extra `rho_list`
    requests a correlation sweep over those values.
    """
    data = _load_toml(path)
    _check_keys(data, _CONFIG_KEYS, f"config {path}")
    rho_list = data.pop("rho_list", None)
    return ExperimentConfig(**data), rho_list


def _emit(payload: dict, out) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_simulate(args) -> int:
    config, rho_list = config_from_toml(args.config)
    if args.quick:
        config = ExperimentConfig(
            regimes=config.regimes,
            p_list=(min(config.p_list),),
            theta_grid=config.theta_grid,
            replications=min(config.replications, 50),
            covariance_kind=config.covariance_kind,
            covariance_rho=config.covariance_rho,
            lambda_rule=config.lambda_rule,
            lambda_value=config.lambda_value,
            support_threshold=config.support_threshold,
            base_seed=config.base_seed,
        )
    if rho_list is None:
        table = run_phase_transition(config, workers=args.workers)
    else:
        table = run_correlation_sweep(config, rho_list, workers=args.workers)
    table.write_csv(args.out)
    print(f"wrote {len(table.rows)} rows to {args.out}")
    for (regime, p, rho), theta in table.crossing_thetas().items():
        label = f"{theta}" if theta is not None else "not reached on this grid"
        print(f"crossing theta (rate >= 0.99) regime={regime} p={p} rho={rho}: {label}")
    return 0


def _cmd_sample(args) -> int:
    model = model_from_toml(args.model)
    dataset = sample_dataset(model, args.n, seed=args.seed)
    dataset_to_csv(dataset, args.out)
    print(f"wrote {dataset.n} observations of dimension {dataset.p} to {args.out}")
    return 0


def _pick_lambda(args, dataset) -> float:
    if args.lam is not None:
        if args.lambda_rule is not None:
            raise ValueError("give either --lam or --lambda-rule, not both")
        return args.lam
    if args.lambda_rule is None:
        raise ValueError("fit needs --lam or --lambda-rule")
    if args.model is None:
        raise ValueError(f"--lambda-rule {args.lambda_rule} needs --model for the population quantities")
    model = model_from_toml(args.model)
    if args.lambda_rule == "paper_sda":
        return lambda_sda(model, dataset.n)
    return lambda_of(model, dataset.n)


def _cmd_fit(args) -> int:
    dataset = dataset_from_csv(args.data)
    lam = _pick_lambda(args, dataset)
    fit = fit_sda(dataset, lam, tol=args.tol, max_iter=args.max_iter)
    _emit(fit.to_json(), args.out)
    return 0


def _cmd_decode(args) -> int:
    dataset = dataset_from_csv(args.data)
    result = exhaustive_decode(dataset, args.s, enumeration_cap=args.cap)
    _emit(result.to_json(), args.out)
    return 0


def _cmd_theory(args) -> int:
    if args.model is not None:
        if args.n is None:
            raise ValueError("theory with --model needs --n")
        model = model_from_toml(args.model)
        report = theory_report(model, args.n, alpha=args.alpha)
        _emit(report.to_json(), args.out)
        return 0
    # limits-only mode: recovery limits of a covariance family at sparsity s
    if args.covariance is None or args.dimension is None or args.s is None:
        raise ValueError("theory needs --model, or --covariance with --dimension and --s")
    spec = CovarianceSpec(kind=args.covariance, dimension=args.dimension, rho=args.rho)
    payload = {
        "phi_close": phi_close(spec, args.s),
        "phi_far": phi_far(spec, args.s),
    }
    if args.n is not None:
        payload["tau_min"] = tau_min(spec, args.s, args.n)
    _emit(payload, args.out)
    return 0


def _cmd_risk(args) -> int:
    model = model_from_toml(args.model)
    dataset = dataset_from_csv(args.data)
    if (args.fit is None) == (args.lam is None):
        raise ValueError("risk needs exactly one of --fit or --lam")
    if args.fit is not None:
        try:
            payload = json.loads(Path(args.fit).read_text())
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{args.fit}: {exc.msg}", line=exc.lineno, column=exc.colno) from None
        if "v_hat" not in payload:
            raise ValueError(f"{args.fit} has no 'v_hat' field")
        direction = np.asarray(payload["v_hat"], dtype=np.float64)
    else:
        direction = fit_sda(dataset, args.lam).v_hat
    bayes = bayes_risk(model)
    conditional = conditional_error_rate(model, direction, dataset.mean1, dataset.mean2)
    _emit(
        {
            "bayes_risk": bayes,
            "conditional_error_rate": conditional,
            "excess_risk": conditional - bayes,
        },
        args.out,
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sparseda",
        description="Sparse linear discriminant analysis: fits, decoding, theory, simulations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a phase-transition experiment from a TOML config")
    sim.add_argument("--config", required=True, help="TOML config mirroring ExperimentConfig")
    sim.add_argument("--out", required=True, help="results CSV path")
    sim.add_argument("--workers", type=int, default=1, help="parallel cell workers")
    sim.add_argument(
        "--quick", action="store_true", help="cap replications at 50 and keep only the smallest p"
    )
    sim.set_defaults(func=_cmd_simulate)

    smp = sub.add_parser("sample", help="draw a labeled dataset CSV from a model spec")
    smp.add_argument("--model", required=True, help="model TOML spec")
    smp.add_argument("--n", type=int, required=True)
    smp.add_argument("--seed", type=int, default=0)
    smp.add_argument("--out", required=True, help="dataset CSV path")
    smp.set_defaults(func=_cmd_sample)

    fit = sub.add_parser("fit", help="fit the penalized discriminant on a dataset CSV")
    fit.add_argument("--data", required=True, help="dataset CSV")
    fit.add_argument("--lam", type=float, help="penalty value")
    fit.add_argument(
        "--lambda-rule", choices=("paper_sda", "theorem3"), help="derive the penalty from a model"
    )
    fit.add_argument("--model", help="model TOML (needed by --lambda-rule)")
    fit.add_argument("--tol", type=float, default=1e-10)
    fit.add_argument("--max-iter", type=int, default=100_000)
    fit.add_argument("--out", help="write fit JSON here instead of stdout")
    fit.set_defaults(func=_cmd_fit)

    dec = sub.add_parser("decode", help="exhaustive-search support decoding on a dataset CSV")
    dec.add_argument("--data", required=True, help="dataset CSV")
    dec.add_argument("--s", type=int, required=True, help="support size to search")
    dec.add_argument("--cap", type=int, default=ENUMERATION_CAP, help="max subsets to scan")
    dec.add_argument("--out", help="write decoder JSON here instead of stdout")
    dec.set_defaults(func=_cmd_decode)

    theo = sub.add_parser("theory", help="thresholds and recovery limits")
    theo.add_argument("--model", help="model TOML for a full report")
    theo.add_argument("--n", type=int, help="sample size")
    theo.add_argument("--alpha", type=float, default=0.0)
    theo.add_argument(
        "--covariance", choices=COVARIANCE_KINDS, help="covariance family for limits-only mode"
    )
    theo.add_argument("--dimension", type=int, help="covariance dimension p")
    theo.add_argument("--rho", type=float, default=0.0)
    theo.add_argument("--s", type=int, help="sparsity for limits-only mode")
    theo.add_argument("--out", help="write JSON here instead of stdout")
    theo.set_defaults(func=_cmd_theory)

    rsk = sub.add_parser("risk", help="error rates of a fitted direction under a model")
    rsk.add_argument("--model", required=True, help="model TOML")
    rsk.add_argument("--data", required=True, help="dataset CSV (class means)")
    rsk.add_argument("--fit", help="fit JSON with v_hat")
    rsk.add_argument("--lam", type=float, help="fit here at this penalty instead")
    rsk.add_argument("--out", help="write JSON here instead of stdout")
    rsk.set_defaults(func=_cmd_risk)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
