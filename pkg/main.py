"""
Command-line entry point for the gentle certification toolkit.

Exit codes: 0 success (certify: null accepted), 1 failed check (certify:
null rejected), 2 usage or configuration error.
"""
import argparse
import json
import logging
import os
import sys
from typing import List, Optional

import numpy as np

from core import certify, config_parser, data_loader, designs, engine, error_rates
from core import gentle_povm, lowerbound, qmat, scaling
from experiments import power_sweep

logger = logging.getLogger("main")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _emit(payload: dict) -> None:
    print(json.dumps(payload, indent=2, default=float))


def cmd_verify_design(args: argparse.Namespace) -> int:
    design = designs.build_mub_design(args.dim)
    report = designs.verify_two_design(design, args.trials, qmat.make_rng(args.seed))
    _emit({"dim": design.dim, "count": design.count, "moment_residual": report.moment_residual,
           "frame_residual": report.frame_residual, "symmetric_residual": report.symmetric_residual,
           "mub_overlap_residual": designs.mub_overlap_residual(design), "passed": report.passed})
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_audit_povm(args: argparse.Namespace) -> int:
    povm = gentle_povm.GentlePovm.from_alpha(designs.build_mub_design(args.dim), args.alpha)
    rng = qmat.make_rng(args.seed)
    payload = {"dim": povm.dim, "count": povm.count, "alpha": povm.alpha, "delta": povm.delta,
               "completeness_analytic": gentle_povm.completeness_check(povm, "analytic")}
    if args.exact:
        if povm.count > gentle_povm.MAX_EXACT_D:
            raise ValueError(f"--exact needs D <= {gentle_povm.MAX_EXACT_D}, got D={povm.count}.")
        payload["completeness_exact"] = gentle_povm.completeness_check(povm, "exact")
    gentle = gentle_povm.gentleness_audit(povm, rng, n_pure=args.pure, n_mixed=args.mixed)
    privacy = gentle_povm.privacy_audit(povm, rng=rng)
    completeness_ok = all(v <= 1e-10 for k, v in payload.items() if k.startswith("completeness"))
    payload.update(max_trace_distance=gentle.max_distance, gentleness_bound=gentle.bound,
                   worst_kind=gentle.argmax_kind, max_log_ratio=privacy.max_log_ratio,
                   privacy_bound=privacy.bound, gentle_passed=gentle.passed, privacy_passed=privacy.passed)
    passed = completeness_ok and gentle.passed and privacy.passed
    payload["passed"] = passed
    _emit(payload)
    return EXIT_OK if passed else EXIT_FAIL


def _load_state(spec: str, d: int) -> np.ndarray:
    if spec == "mixed":
        return qmat.maximally_mixed(d).entries
    if spec == "pure0":
        state = np.zeros((d, d), dtype=np.complex128)
        state[0, 0] = 1.0
        return state
    if not os.path.isfile(spec):
        raise ValueError(f"--state must be 'mixed', 'pure0' or a JSON matrix file; {spec!r} not found.")
    with open(spec) as f:
        matrix = qmat.matrix_from_json(json.load(f))
    if matrix.shape != (d, d):
        raise ValueError(f"State file holds a {matrix.shape[0]}x{matrix.shape[1]} matrix, expected {d}x{d}.")
    return qmat.DensityMatrix(matrix).entries


def cmd_certify(args: argparse.Namespace) -> int:
    if args.n < 2:
        raise ValueError(f"--n must be at least 2, got {args.n}.")
    povm = gentle_povm.GentlePovm.from_alpha(designs.build_mub_design(args.dim), args.alpha)
    rho_true = _load_state(args.state, args.dim)
    rho0 = qmat.maximally_mixed(args.dim)
    result = certify.run_certification(povm, rho_true, rho0, args.n, args.epsilon,
                                       qmat.make_rng(args.seed), sampler=args.sampler)
    _emit(result.to_json_row(seed=args.seed, truth_distance=qmat.trace_norm_dist(rho_true, rho0)))
    return EXIT_FAIL if result.reject else EXIT_OK


def cmd_analyze_superop(args: argparse.Namespace) -> int:
    povm = gentle_povm.GentlePovm.from_alpha(designs.build_mub_design(args.dim), args.alpha)
    rng = qmat.make_rng(args.seed)
    s = lowerbound.gentle_superop(povm, mode=args.mode, rng=rng, samples=args.samples)
    eig_sum = lowerbound.eigenvalue_sum_check(s, povm.alpha)
    payload = {"superop": lowerbound.superop_to_json(s),
               "eigenvalue_sum": eig_sum.traceless_sum, "eigenvalue_bound": eig_sum.bound,
               "eigenvalue_passed": eig_sum.passed}
    passed = eig_sum.passed
    if povm.count <= gentle_povm.MAX_ENUMERATE_AUDIT_D:
        channel = lowerbound.verify_channel_properties(s, povm.materialize(), rng)
        payload["channel"] = {k: v for k, v in vars(channel).items()}
        passed = passed and channel.passed
    if args.epsilon is not None:
        payload["lower_bound"] = {mode: vars(lowerbound.lower_bound_report(args.dim, args.epsilon, povm.alpha, mode))
                                  for mode in ("fixed", "randomized")}
    payload["passed"] = passed
    directory = os.path.dirname(args.out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, default=float)
    print(f"Wrote super-operator analysis for d={args.dim}, alpha={args.alpha} to {args.out}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_sweep(args: argparse.Namespace) -> int:
    raw = config_parser.load_sweep_config(args.config)
    if raw is None:
        raise ValueError(f"Could not load sweep configuration {args.config}.")
    config = config_parser.parse_sweep_config(raw, defaults=power_sweep.get_default_config())
    records = engine.run_sweep(config, output=args.out)
    summary = error_rates.summarize(records)
    summary_path = os.path.splitext(args.out)[0] + ".summary.csv"
    data_loader.write_summary_csv(summary, summary_path)
    print(summary.to_string(index=False))
    print(f"Records: {args.out}\nSummary: {summary_path}")
    return EXIT_OK


def cmd_scaling(args: argparse.Namespace) -> int:
    records = data_loader.load_records(args.input)
    if records is None:
        raise ValueError(f"Could not load records from {args.input}.")
    summary = error_rates.summarize(records)
    n_stars = scaling.n_star_from_summary(summary, target=args.target)
    fits = []
    failed = False
    for (alpha, epsilon), group in n_stars.groupby(["alpha", "epsilon"]):
        try:
            fit = scaling.scaling_fit(group)
        except ValueError as e:
            logger.error("alpha=%s epsilon=%s: %s", alpha, epsilon, e)
            failed = True
            continue
        fits.append({"alpha": alpha, "epsilon": epsilon, "slope": fit.slope, "intercept": fit.intercept,
                     "residual": fit.residual, "dims": list(fit.dims), "n_stars": list(fit.n_stars)})
    if not fits:
        failed = True
    payload = {"target": args.target, "fits": fits}
    directory = os.path.dirname(args.out)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(args.out, "w") as f:
        json.dump(payload, f, indent=2, default=float)
    _emit(payload)
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Locally-gentle quantum state certification toolkit.")
    parser.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify-design", help="Build the MUB 2-design and check its moment identities.")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_design)

    p = sub.add_parser("audit-povm", help="Completeness, gentleness and privacy audits of the gentle POVM.")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--exact", action="store_true", help="Also sum all 2^D elements.")
    p.add_argument("--pure", type=int, default=1000, help="Haar pure states in the gentleness audit.")
    p.add_argument("--mixed", type=int, default=0, help="Random mixed states in the gentleness audit.")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_audit_povm)

    p = sub.add_parser("certify", help="One certification run against rho0 = I/d.")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--state", default="mixed", help="'mixed', 'pure0' or a JSON matrix file.")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sampler", choices=config_parser.SAMPLERS, default="outcomes")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("analyze-superop", help="Super-operator spectrum and lower-bound quantities.")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mode", choices=["classes", "exact", "mc"], default="classes")
    p.add_argument("--epsilon", type=float, default=None, help="Also report lower-bound sample sizes.")
    p.add_argument("--samples", type=int, default=20000, help="Outcomes for --mode mc.")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_analyze_superop)

    p = sub.add_parser("sweep", help="Run a configured sweep of certification trials.")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="Records file (NDJSON), appended to and resumed from.")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("scaling", help="Fit the d-exponent of the minimal sample size from records.")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", type=float, default=scaling.TARGET_ERROR)
    p.set_defaults(func=cmd_scaling)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if isinstance(e.code, int) else EXIT_USAGE
    logging.basicConfig(level=getattr(logging, args.log_level),
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ValueError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
