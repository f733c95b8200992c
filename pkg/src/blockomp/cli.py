"""Command line interface: coherence analysis, recovery, certification, sweeps.

Matrices and vectors are read from headerless CSV (one row per line).
All subcommands emit JSON except `sweep`, which also supports CSV and SVG.
"""

import argparse
import json
import sys

import numpy as np

from .certificates import certify_instance, check_appendix_bounds
from .coherence import BlockDictionary, coherence_profile
from .experiments import (
    DEFAULT_SIGMA_GRID,
    ExperimentConfig,
    SweepError,
    emit_results,
    run_sweep,
)
from .linalg import BlockPartition, load_matrix_csv, load_vector_csv
from .recovery import BlockSparseSignal, BlockSupport, StoppingRule, bomp


def _load_dictionary(args):
    A = load_matrix_csv(args.matrix)
    part = BlockPartition.for_length(A.shape[1], args.block_size)
    return BlockDictionary(A, part)


def _emit_json(payload, out):
    text = json.dumps(payload, indent=2) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_coherence(args):
    dic = _load_dictionary(args)
    _emit_json(coherence_profile(dic).to_dict(), args.out)
    return 0


def _cmd_recover(args):
    dic = _load_dictionary(args)
    y = load_vector_csv(args.measurements)
    if args.k is not None:
        stop = StoppingRule.known_k(args.k, max_iters=args.max_iters)
    else:
        stop = StoppingRule.residual_tol(args.epsilon, max_iters=args.max_iters)
    oracle = None
    if args.true_support:
        oracle = BlockSupport(tuple(int(v) for v in args.true_support.split(",")))
    trace = bomp(y, dic, stop, oracle_support=oracle)
    _emit_json(trace.to_dict(), args.out)
    return 0


def _cmd_certify(args):
    dic = _load_dictionary(args)
    x = load_vector_csv(args.signal)
    w = load_vector_csv(args.noise)
    signal = BlockSparseSignal.from_dense(x, dic.part)
    certs, dec, metrics = certify_instance(dic, signal, w)
    appendix = [
        check_appendix_bounds(dic, signal, w, k).to_dict()
        for k in range(signal.k)
    ]
    payload = {
        "metrics": metrics,
        "certificates": {kind.value: cert.to_dict() for kind, cert in certs.items()},
        "decomposition": {
            "omega": dec.omega,
            "omega_offsupport": dec.omega_offsupport,
            "x_block_min": dec.x_block_min,
            "support": list(dec.support_order),
        },
        "appendix_bounds": appendix,
    }
    _emit_json(payload, args.out)
    return 0


def _parse_float_list(text):
    return tuple(float(v) for v in text.split(",") if v != "")


def _parse_int_list(text):
    return tuple(int(v) for v in text.split(",") if v != "")


def _cmd_sweep(args):
    sigma_defaulted = False
    if args.config:
        with open(args.config) as fh:
            config = ExperimentConfig.from_dict(json.load(fh))
    else:
        missing = [name for name in ("m", "n", "d", "k_list", "trials")
                   if getattr(args, name) is None]
        if missing:
            raise SystemExit(f"sweep needs --config or all of: {', '.join(missing)}")
        sigma = _parse_float_list(args.sigma_list) if args.sigma_list else DEFAULT_SIGMA_GRID
        sigma_defaulted = args.sigma_list is None
        config = ExperimentConfig(
            m=args.m, n=args.n, d=args.d,
            k_values=_parse_int_list(args.k_list),
            sigma_w=sigma,
            trials=args.trials,
            base_seed=args.seed,
            solvers=tuple(args.solvers.split(",")),
        )
    try:
        result = run_sweep(config, workers=args.workers)
    except SweepError as err:
        print(f"sweep aborted: {err}", file=sys.stderr)
        print(f"replay seed entropy: {err.entropy}", file=sys.stderr)
        return 2
    result.metadata["sigma_grid_defaulted"] = sigma_defaulted
    if args.format == "json" and not args.out:
        _emit_json(result.to_dict(), None)
    else:
        if not args.out:
            raise SystemExit(f"--out is required for format {args.format}")
        emit_results(result, args.format, args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="blockomp",
        description="Block-sparse recovery via block orthogonal matching pursuit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coherence", help="coherence metrics of a block dictionary")
    p.add_argument("--matrix", required=True, help="dictionary CSV (rows = measurements)")
    p.add_argument("--block-size", type=int, required=True, help="columns per block")
    p.add_argument("--out", help="write JSON here instead of stdout")
    p.set_defaults(func=_cmd_coherence)

    p = sub.add_parser("recover", help="recover a block-sparse signal from measurements")
    p.add_argument("--matrix", required=True)
    p.add_argument("--block-size", type=int, required=True)
    p.add_argument("--measurements", required=True, help="measurement vector CSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--k", type=int, help="known block sparsity level")
    group.add_argument("--epsilon", type=float, help="residual-norm stopping threshold")
    p.add_argument("--true-support", help="comma-separated true block indices "
                   "(records the greedy selection ratio)")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_recover)

    p = sub.add_parser("certify", help="evaluate recovery certificates for an instance")
    p.add_argument("--matrix", required=True)
    p.add_argument("--block-size", type=int, required=True)
    p.add_argument("--signal", required=True, help="signal vector CSV (length n)")
    p.add_argument("--noise", required=True, help="noise vector CSV (length m)")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_certify)

    p = sub.add_parser("sweep", help="Monte Carlo success-rate sweep over (solver, K, sigma)")
    p.add_argument("--config", help="JSON config file (mirrors ExperimentConfig)")
    p.add_argument("--m", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--k-list", help="comma-separated block sparsity levels")
    p.add_argument("--sigma-list", help="comma-separated noise levels "
                   f"(default {','.join(str(s) for s in DEFAULT_SIGMA_GRID)})")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--solvers", default="bomp,omp")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", help="output path")
    p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
