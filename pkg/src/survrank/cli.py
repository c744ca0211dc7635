"""Command-line interface: simulate, fit, evaluate, rank, verify-bounds, experiment."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bounds as bounds_mod
from .censoring import (
    ExponentialCensoring,
    FixedCensoring,
    UniformCensoring,
    apply_censoring,
    calibrate_exponential_rate,
    fit_km_censoring,
    read_dataset_csv,
    write_dataset_csv,
    Dataset,
)
from .estimators import (
    entropic_regularizer,
    fit_cox,
    fit_fy,
    fit_mle,
    fit_pairwise_model,
    fit_smooth_c,
    squared_regularizer,
)
from .experiments import (
    metadata_text,
    parse_experiment_config,
    rows_to_csv,
    run_experiment,
)
from .metrics import gaussian_covariates, harrell_c, uno_c
from .models import (
    CoxPH,
    HeteroscedasticAFT,
    LogNormalAFT,
    exp_rate_family,
    model_from_config,
    one_hot,
)
from .optim import OptConfig
from .ranking import (
    mwfas_exact,
    mwfas_greedy,
    mwfas_local_search,
    read_tournament_csv,
)

FIT_METHODS = ("mse-ipcw", "mle-exp", "mle-weibull", "mle-lognormal", "cox", "smooth-c", "pairwise")


def _parse_censoring(spec: str):
    if spec == "none":
        return None
    kind, _, arg = spec.partition(":")
    if kind == "exponential":
        return ExponentialCensoring(rate=float(arg))
    if kind == "uniform":
        return UniformCensoring(high=float(arg))
    if kind == "fixed":
        return FixedCensoring(time=float(arg))
    if kind == "target":
        return ("target", float(arg))
    raise ValueError(f"unknown censoring spec {spec!r}")


def _cmd_simulate(args) -> int:
    with open(args.model) as fh:
        model = model_from_config(fh.read())
    rng = np.random.default_rng(args.seed)
    if model.kind == "dice_cycle":
        X = one_hot(rng.integers(0, model.n_groups, size=args.n), model.n_groups)
    else:
        d = np.asarray(model.beta if hasattr(model, "beta") else model.params).size
        X = rng.standard_normal((args.n, d))
    t = model.sample_times(X, rng)
    cmodel = _parse_censoring(args.censoring)
    if isinstance(cmodel, tuple):  # calibrated target fraction
        target = cmodel[1]
        cmodel = ExponentialCensoring(calibrate_exponential_rate(t, target)) if target > 0 else None
    if cmodel is None:
        u, delta = t, np.ones(args.n, dtype=np.uint8)
    else:
        u, delta = apply_censoring(t, cmodel, rng)
    write_dataset_csv(Dataset(x=X, u=u, delta=delta), args.out)
    print(f"wrote {args.n} rows to {args.out} (censored fraction {1.0 - delta.mean():.3f})")
    return 0


def _fit_report(method: str, dataset, model, report) -> str:
    lines = [
        f"method = {method}",
        f"n = {dataset.n}",
        f"d = {dataset.d}",
        f"censored_fraction = {dataset.censored_fraction:.4f}",
        f"converged = {report.converged}",
        f"iters = {report.iters}",
        f"final_grad_norm = {report.final_grad_norm:.3e}",
        f"final_loss = {report.loss_trace[-1]:.6f}",
    ]
    return "\n".join(lines) + "\n"


def _cmd_fit(args) -> int:
    dataset = read_dataset_csv(args.data)
    curve = fit_km_censoring(dataset, floor_eps=args.floor_eps)
    config = OptConfig(max_iters=args.max_iters, grad_tol=args.grad_tol)
    method = args.method
    if method == "pairwise":
        pm = fit_pairwise_model(dataset, curve, config=config, pair_cap=args.cap_pairs, seed=args.seed)
        with open(args.out, "w") as fh:
            fh.write("kind = pairwise\n")
            fh.write("weights = " + ", ".join(repr(w) for w in pm.weights) + "\n")
            fh.write("center = " + ", ".join(repr(c) for c in pm.center) + "\n")
        report = pm.fit_report
        sys.stdout.write(_fit_report(method, dataset, pm, report))
        return 0
    if method == "mse-ipcw":
        reg = entropic_regularizer() if args.regularizer == "entropic" else squared_regularizer()
        model, report = fit_fy(dataset, curve, reg, config)
    elif method == "mle-exp":
        model, report = fit_mle("exp_ph", dataset, config)
    elif method == "mle-weibull":
        model, report = fit_mle("weibull_shape", dataset, config)
    elif method == "mle-lognormal":
        model, report = fit_mle("lognormal_aft", dataset, config)
    elif method == "cox":
        model, report = fit_cox(dataset, config)
    elif method == "smooth-c":
        model, report = fit_smooth_c(
            dataset, curve, sigma=args.sigma, config=config, seed=args.seed, pair_cap=args.cap_pairs
        )
    else:
        raise ValueError(f"unknown method {method!r}")
    header = ",".join(f"beta{i + 1}" for i in range(dataset.d)) + ",intercept"
    row = ",".join(repr(float(b)) for b in model.beta) + f",{model.intercept!r}"
    with open(args.out, "w") as fh:
        fh.write(header + "\n" + row + "\n")
    sys.stdout.write(_fit_report(method, dataset, model, report))
    return 0


def _cmd_evaluate(args) -> int:
    dataset = read_dataset_csv(args.data)
    scores = np.loadtxt(args.scores, delimiter=",", skiprows=1, ndmin=2)
    if scores.shape[1] != 2:
        raise ValueError("scores CSV must have columns row_id,score")
    order = np.argsort(scores[:, 0])
    s = scores[order, 1]
    if s.size != dataset.n:
        raise ValueError("scores and dataset row counts differ")
    if args.estimator == "harrell":
        if np.any(dataset.delta == 0):
            raise ValueError("harrell requires uncensored data; use --estimator uno")
        result = harrell_c(s, dataset.u)
    else:
        curve = fit_km_censoring(dataset, floor_eps=args.floor_eps)
        result = uno_c(s, dataset, curve)
    text = f"estimator,value,n_pairs\n{args.estimator},{result.value:.6f},{result.n_comparable_pairs}\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def _cmd_rank(args) -> int:
    tournament = read_tournament_csv(args.tournament)
    if args.solver == "exact":
        ranking = mwfas_exact(tournament)
    elif args.solver == "greedy":
        ranking = mwfas_greedy(tournament)
    else:
        ranking = mwfas_local_search(tournament, mwfas_greedy(tournament))
    lines = ["item,rank"] + [f"{i},{r}" for i, r in enumerate(ranking.perm)]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0


def _bound_fixtures(d: int):
    rng = np.random.default_rng(2024)
    raw = rng.standard_normal(d)
    beta = raw / np.linalg.norm(raw)
    return [
        CoxPH(beta=beta),
        LogNormalAFT(beta=beta),
        HeteroscedasticAFT(beta=beta),
        exp_rate_family(beta),
    ]


def _cmd_verify_bounds(args) -> int:
    sampler = gaussian_covariates(args.d)
    lines = ["check,model,seed,lhs,rhs,margin,holds,L,gamma,n_mc"]
    all_hold = True
    for model in _bound_fixtures(args.d):
        for seed in range(args.seeds):
            rng = np.random.default_rng(seed)
            L = bounds_mod.lipschitz_constant(model, sampler, rng=np.random.default_rng(seed + 1))
            rep = bounds_mod.pairwise_lipschitz_margin(model, sampler, args.n_mc, rng, L=L)
            reports = [rep]
            f_star = model.optimal_ordering_score
            noise = np.random.default_rng(seed + 2).standard_normal(args.d)

            def f_hat(X, _noise=noise, _f=f_star):
                return np.asarray(_f(X)) + 0.1 * (np.atleast_2d(X) @ _noise)

            reports.append(
                bounds_mod.check_score_distance_bound(model, f_hat, sampler, args.n_mc, rng, L=L)
            )
            if model.family in ("A", "B"):
                reg = squared_regularizer()

                def g_hat(X, _m=model):
                    ce = np.asarray(_m.conditional_expectation(X), dtype=float)
                    return ce + 0.05 * (np.atleast_2d(X) @ noise)

                reports.append(
                    bounds_mod.check_surrogate_excess_bound(model, reg, g_hat, sampler, args.n_mc, rng)
                )
            for rep in reports:
                all_hold &= rep.holds
                gamma = rep.constants.get("gamma", "")
                lines.append(
                    f"{rep.check},{rep.model},{seed},{rep.lhs:.6f},{rep.rhs:.6f},"
                    f"{rep.margin:.6f},{int(rep.holds)},{rep.constants.get('L', ''):.6f},"
                    f"{gamma if gamma == '' else format(gamma, '.6f')},{rep.n_mc}"
                )
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0 if all_hold else 1


def _cmd_experiment(args) -> int:
    with open(args.config) as fh:
        config = parse_experiment_config(fh.read())
    rows = run_experiment(config)
    csv_text = rows_to_csv(rows)
    with open(args.out, "w") as fh:
        fh.write(csv_text)
    with open(args.out + ".meta.txt", "w") as fh:
        fh.write(metadata_text(config))
    errors = [r for r in rows if r.error]
    for r in errors:
        print(f"error: {r.regime}/{r.method}/n={r.n_train}/rep={r.repeat}: {r.error}", file=sys.stderr)
    print(f"wrote {len(rows)} rows to {args.out}")
    return 1 if errors else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="survrank")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset from a model config")
    p.add_argument("--model", required=True, help="model config file (key = value lines)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--censoring",
        default="none",
        help="none | exponential:RATE | uniform:HIGH | fixed:TIME | target:FRAC",
    )
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("fit", help="fit a linear risk model or the pairwise model")
    p.add_argument("--data", required=True)
    p.add_argument("--method", choices=FIT_METHODS, required=True)
    p.add_argument("--sigma", type=float, default=1.0, help="smooth-c temperature")
    p.add_argument("--cap-pairs", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--regularizer", choices=("squared", "entropic"), default="squared")
    p.add_argument("--floor-eps", type=float, default=0.05)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--grad-tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_fit)

    p = sub.add_parser("evaluate", help="concordance of a score file against a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--scores", required=True, help="CSV with header row_id,score")
    p.add_argument("--estimator", choices=("harrell", "uno"), default="uno")
    p.add_argument("--floor-eps", type=float, default=0.05)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("rank", help="rank a tournament CSV")
    p.add_argument("--tournament", required=True)
    p.add_argument("--solver", choices=("exact", "greedy", "greedy+ls"), default="greedy+ls")
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_rank)

    p = sub.add_parser("verify-bounds", help="run the excess-risk bound checks")
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--n-mc", type=int, default=4000)
    p.add_argument("--out")
    p.set_defaults(fn=_cmd_verify_bounds)

    p = sub.add_parser("experiment", help="run a config-driven method sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
