"""Command-line entry point: ``interprofile {generate,fit,eval,profile}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io as fio
from .core import DEFAULT_SKIP_PREFIX, Vocabulary, assemble_observations
from .evaluation import MODELS, plan_folds, run_experiment
from .kernels import Family, KernelSpec
from .solver import THREADS_ENV, SolverConfig, default_workers, fit
from .synthgen import CombinationRule, GenConfig, generate, random_beta

log = logging.getLogger("interprofile")


def _kernel(args) -> KernelSpec:
    return KernelSpec(Family.parse(args.kernel), args.max_shift)


def _solver(args) -> SolverConfig:
    return SolverConfig(max_iterations=args.max_iter, tolerance=args.tol)


def _workers(args) -> int:
    return default_workers() if args.threads is None else max(1, args.threads)


def cmd_generate(args) -> int:
    kernel = _kernel(args)
    if args.truth:
        truth, vocab = fio.load_beta(args.truth)
        if truth.kernel.family is not kernel.family or truth.kernel.max_shift != kernel.max_shift:
            kernel = truth.kernel
        entities = truth.entity_count
    else:
        entities = args.entities
        truth = random_beta(entities, kernel, args.seed, active=args.active)
        vocab = Vocabulary.numbered(entities)
    cfg = GenConfig(entities, args.sequences, kernel, args.max_length, args.seed, args.rule)
    sequences = generate(truth, cfg)
    fio.save_sequences(args.out, sequences, vocab)
    if args.beta_out:
        fio.save_beta(args.beta_out, truth, vocab)
    rate = float(np.mean(np.concatenate([s.contagions for s in sequences]))) if sequences else 0.0
    print(f"wrote {len(sequences)} sequences over {entities} entities "
          f"(contagion rate {rate:.4f}) to {args.out}")
    return 0


def _load_observations(args):
    sequences, vocab = fio.load_sequences(args.data)
    if not sequences:
        raise ValueError("no data")
    obs = assemble_observations(sequences, args.max_shift, args.skip_prefix, len(vocab), args.min_gap)
    if len(obs) == 0:
        raise ValueError("no data: every exposure falls inside the skipped prefix")
    return sequences, vocab, obs


def cmd_fit(args) -> int:
    _, vocab, obs = _load_observations(args)
    result = fit(obs, _kernel(args), _solver(args), _workers(args))
    fio.save_beta(args.out, result.beta, vocab)
    print(f"nll={fio.fmt(result.final_nll)}")
    for target in sorted(result.iterations):
        print(f"target={vocab.label(target)} iterations={result.iterations[target]} "
              f"converged={int(result.converged[target])}")
    return 0


def _table(result, models) -> str:
    lines = [f"{'model':<8} {'RSS':>22} {'JS':>24} {'BCF1':>20} {'MSE beta':>22}"]
    for model in models:
        agg = result.aggregate(model)
        cells = []
        for metric in ("rss", "js", "bcf1", "mse_beta"):
            if metric in agg:
                mean, std = agg[metric]
                cells.append(f"{mean:.6g} +- {std:.2g}")
            else:
                cells.append("-")
        lines.append(f"{model:<8} {cells[0]:>22} {cells[1]:>24} {cells[2]:>20} {cells[3]:>22}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    for m in models:
        if m not in MODELS + ("perfect",):
            raise ValueError(f"unknown model {m!r}")
    sequences, vocab = fio.load_sequences(args.data)
    if not sequences:
        raise ValueError("no data")
    truth = None
    if args.truth_beta:
        beta, beta_vocab = fio.load_beta(args.truth_beta)
        truth = fio.align_beta(beta, beta_vocab, vocab)
    plan = plan_folds(len(sequences), args.folds, args.seed)
    result = run_experiment(sequences, models, plan, max_shift=args.max_shift,
                            solver=_solver(args), skip_prefix=args.skip_prefix,
                            min_gap=args.min_gap, entity_count=len(vocab), truth=truth,
                            workers=_workers(args))
    text = fio.format_report(result, models)
    if args.report:
        fio._write_text(args.report, text)
    print(_table(result, models))
    return 0


def cmd_profile(args) -> int:
    beta, vocab = fio.load_beta(args.beta)
    fio._write_text(args.out, fio.format_profile(beta, vocab))
    print(f"wrote {int(beta.fitted.sum()) * (beta.kernel.max_shift + 1)} rows to {args.out}")
    return 0


def _add_window(p) -> None:
    p.add_argument("--max-shift", type=int, default=20, help="largest gap S (default 20)")
    p.add_argument("--skip-prefix", type=int, default=DEFAULT_SKIP_PREFIX,
                   help="exposures at positions < this are never targets (default 10)")
    p.add_argument("--min-gap", type=int, default=0,
                   help="smallest gap paired; 1 drops the self pairing (default 0)")


def _add_solver(p) -> None:
    p.add_argument("--tol", type=float, default=1e-9, help="relative NLL decrease to stop at")
    p.add_argument("--max-iter", type=int, default=5000)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker processes (default: ${THREADS_ENV} or 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interprofile",
        description="Infer temporal interaction profiles from exposure/contagion sequences.",
        epilog=f"Environment: {THREADS_ENV} sets the default worker count.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a synthetic corpus from a random or given matrix")
    g.add_argument("--entities", type=int, default=5)
    g.add_argument("--sequences", type=int, default=20000)
    g.add_argument("--max-length", type=int, default=50)
    g.add_argument("--kernel", choices=["rbf", "exp", "RBF", "EXP"], default="rbf")
    g.add_argument("--max-shift", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rule", choices=[r.value for r in CombinationRule], default="independent")
    g.add_argument("--active", type=int, default=2,
                   help="nonzero interaction coefficients per pair in the random matrix "
                        "(default 2; -1 keeps them all)")
    g.add_argument("--truth", help="generate from this coefficient file instead of a random matrix")
    g.add_argument("--out", required=True)
    g.add_argument("--beta-out")
    g.set_defaults(func=cmd_generate)

    f = sub.add_parser("fit", help="fit the interaction model and write its coefficients")
    f.add_argument("--data", required=True)
    f.add_argument("--kernel", choices=["rbf", "exp", "RBF", "EXP"], default="rbf")
    _add_window(f)
    _add_solver(f)
    f.add_argument("--out", required=True)
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("eval", help="cross-validate models and report RSS/JS/BCF1/MSE beta")
    e.add_argument("--data", required=True)
    e.add_argument("--models", default="rbf,exp,icir,naive")
    e.add_argument("--folds", type=int, default=5)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--truth-beta")
    e.add_argument("--report")
    _add_window(e)
    _add_solver(e)
    e.set_defaults(func=cmd_eval)

    p = sub.add_parser("profile", help="export hazard and intensity per pair and gap as CSV")
    p.add_argument("--beta", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "active", None) is not None and args.active < 0:
        args.active = None
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
