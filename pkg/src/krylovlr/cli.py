"""Command line interface.

Subcommands: lowrank (one solve), experiment (preset sweeps to CSV),
spectrum (print a synthetic profile), diagnose (gap and starting-block
reports). Exit codes: 0 success, 2 configuration error, 1 runtime error.
"""

import argparse
import math
import os
import sys

import numpy as np

from .harness import PRESETS, preset_config, run_preset, write_csv
from .metrics import epsilon_empirical, gap_report, kl_goodness
from .operators import perturb_diagonal
from .solvers import SolverConfig, block_krylov, build_simulated_block
from .spectra import SpectrumSpec, as_operator, generate, read_matrix_market
from .validation import rng_from

DEFAULT_OUT_ENV = "KRYLOVLR_OUT"


def _spectrum_spec(args):
    kind = args.kind
    if kind == "exponential":
        return SpectrumSpec("exponential", n=args.n, alpha=args.alpha)
    if kind == "polynomial":
        return SpectrumSpec("polynomial", n=args.n, beta=args.beta)
    if kind == "paired_gap":
        return SpectrumSpec("paired_gap", n=args.n, alpha=args.alpha, g_min=args.gmin)
    if kind == "repeated_pairs":
        return SpectrumSpec("repeated_pairs", n=args.n, alpha=args.alpha, k=args.k)
    if kind == "wishart_lb":
        return SpectrumSpec("wishart_lb", n=args.n)
    raise ValueError(f"unknown spectrum kind {kind!r}")


def _add_common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--trials", type=int, default=None)


def _add_spectrum_args(p, required=True):
    p.add_argument("--kind", required=required, default="exponential",
                   choices=["exponential", "polynomial", "paired_gap",
                            "repeated_pairs", "wishart_lb"])
    p.add_argument("--alpha", type=float, default=1.1)
    p.add_argument("--beta", type=float, default=1.5)
    p.add_argument("--gmin", type=float, default=0.01)


def build_parser():
    parser = argparse.ArgumentParser(prog="krylovlr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lowrank", help="run one solve and print the error")
    _add_common(p)
    _add_spectrum_args(p, required=False)
    p.add_argument("--matrix", help="Matrix Market file instead of a synthetic kind")
    p.add_argument("--t", type=int, default=60)
    p.add_argument("--block", type=int, default=1)
    p.add_argument("--policy", choices=["full", "lanczos"], default="full")
    p.add_argument("--delta", type=float, default=None,
                   help="diagonal perturbation magnitude before solving")

    p = sub.add_parser("experiment", help="run a preset sweep and write CSV")
    _add_common(p)
    p.add_argument("--preset", required=True, choices=list(PRESETS))
    p.add_argument("--out", default=os.environ.get(DEFAULT_OUT_ENV, "."))
    p.add_argument("--scale", choices=["full", "fast"], default="full")

    p = sub.add_parser("spectrum", help="print a synthetic spectrum (4 d.p.)")
    _add_common(p)
    _add_spectrum_args(p)

    p = sub.add_parser("diagnose", help="print gap and starting-block reports")
    _add_common(p)
    _add_spectrum_args(p)
    p.add_argument("--ell", type=int, nargs="*", default=None)
    p.add_argument("--b", type=int, nargs="*", default=None)
    return parser


def _cmd_lowrank(args):
    if args.matrix:
        a = read_matrix_market(args.matrix)
        base = as_operator(a)
        target = a
    else:
        sigma = generate(_spectrum_spec(args))
        target = np.sort(sigma)[::-1]
        base = as_operator(sigma)
    op = base
    if args.delta is not None:
        # rectangular inputs perturb the Gram itself, PSD spectra the matrix
        operand = base if args.matrix else np.asarray(target)
        op = perturb_diagonal(operand, args.delta, args.seed)
    cfg = SolverConfig(target_rank=args.k, iterations=args.t,
                       block_size=args.block, ortho=args.policy, seed=args.seed)
    result = block_krylov(op, cfg)
    eps = epsilon_empirical(target, result.Q, args.k)
    print(f"eps_empirical {eps:.17g}")
    print(f"matvecs {result.matvecs}")
    print(f"subspace_dim {result.subspace_dim}")
    if result.rank_deficient:
        print("rank_deficient true")
    return 0


def _cmd_experiment(args):
    overrides = {}
    if args.trials is not None:
        overrides["trials"] = args.trials
    cfg = preset_config(args.preset, scale=args.scale, base_seed=args.seed, **overrides)
    records = run_preset(cfg)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.preset}.csv")
    write_csv(records, path)
    print(f"wrote {len(records)} records to {path}")
    return 0


def _cmd_spectrum(args):
    sigma = generate(_spectrum_spec(args))
    for v in sigma:
        print(f"{v:.4f}")
    return 0


def _cmd_diagnose(args):
    spec = _spectrum_spec(args)
    sigma = np.sort(generate(spec))[::-1]
    ells = args.ell if args.ell else [args.k, min(2 * args.k, args.n - 1)]
    bs = args.b if args.b else sorted({1, 2, args.k})
    report = gap_report(sigma, args.k, ell_list=ells, b_list=bs)
    print(f"g_min_over_next {report.g_min_over_next:.17g}")
    print(f"g_min_over_self {report.g_min_over_self:.17g}")
    for ell, v in report.g_k_to_ell.items():
        print(f"g_k_to_ell[{ell}] {v:.17g}")
    for b, v in report.g_min_b.items():
        print(f"g_min_b[{b}] {v:.17g}")
    # (k, L)-goodness of a seeded simulated start block on this spectrum
    trials = args.trials or 1
    u_k = np.eye(args.n)[:, : args.k]
    l_values = []
    for trial in range(trials):
        op = as_operator(sigma)
        x = rng_from(args.seed, trial).normal(size=args.n)
        s_block = build_simulated_block(op, x, args.k)
        l_values.append(kl_goodness(u_k, s_block, args.k).L)
    finite = [v for v in l_values if math.isfinite(v)]
    med = float(np.median(l_values)) if finite else math.inf
    print(f"simulated_start_L_median {med:.17g}")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors
        return int(exc.code or 0)
    handlers = {
        "lowrank": _cmd_lowrank,
        "experiment": _cmd_experiment,
        "spectrum": _cmd_spectrum,
        "diagnose": _cmd_diagnose,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, TypeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - surfaced as runtime failure
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
