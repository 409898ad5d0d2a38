"""noisy-bs: command-line harness for the simulation studies.

Every command echoes its configuration into the output metadata and is
byte-reproducible for a fixed --seed. Data is written as CSV (default) or
JSON; the study commands additionally render a matplotlib figure next to the
data file unless --no-plot is given. Exit codes: 0 success, 2 validation
error, 3 combinatorial budget or overflow error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .ensembles import RngSeed
from .errors import (
    BudgetExceededError,
    CombinatorialBlowupError,
    NoisyBSError,
    SizeLimitExceededError,
)
from .exact import NoiseModel
from .reporting import figure_path, summary_path, write_record
from .sampler import SamplerConfig
from .truncation import TruncationSpec
from . import studies

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BUDGET = 3


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=42, help="base RNG seed")
    p.add_argument("--threads", type=int, default=1, help="worker processes for trials")
    p.add_argument("--out", type=Path, default=None, help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--no-plot", action="store_true", help="skip the figure next to --out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noisy-bs",
        description="Classical simulation toolkit for lossy, partially distinguishable boson sampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("variance-study", help="variance of the interference orders, three scenarios")
    p.add_argument("--N", type=int, default=60, help="interferometer modes")
    p.add_argument("--n", type=int, default=None, help="custom scenario: input photons")
    p.add_argument("--m", type=int, default=None, help="custom scenario: detected photons")
    p.add_argument("--x", type=float, default=None, help="custom scenario: overlap x")
    p.add_argument("--trials", type=int, default=500)
    p.add_argument("--ensemble", choices=("haar", "gaussian"), default="haar")
    _common_flags(p)

    p = sub.add_parser("markov-study", help="distance distribution over Haar networks")
    p.add_argument("--N", type=int, default=15)
    p.add_argument("--n", type=int, default=5)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--trials", type=int, default=2000)
    _common_flags(p)

    p = sub.add_parser("k-eta-frontier", help="minimal truncation order vs transmission")
    p.add_argument("--epsilon", type=float, action="append", default=None,
                   help="accuracy target; repeatable (default 0.1 0.01 0.001)")
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--eta-start", type=float, default=0.30)
    p.add_argument("--eta-stop", type=float, default=0.99)
    p.add_argument("--eta-step", type=float, default=0.005)
    _common_flags(p)

    p = sub.add_parser("tradeoff-table", help="figure-of-merit table for published sources")
    p.add_argument("--epsilon", type=float, default=0.1)
    _common_flags(p)

    p = sub.add_parser("postselect", help="photon-loss margin for post-selected experiments")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--k", type=int, default=49)
    p.add_argument("--x-squared", type=float, default=0.939)
    p.add_argument("--epsilon", type=float, default=0.1)
    _common_flags(p)

    p = sub.add_parser("sample", help="Metropolis samples from the truncated distribution")
    p.add_argument("--N", type=int, default=12)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--k", type=int, default=None, help="truncation order (default m)")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--burn-in", type=int, default=10_000)
    p.add_argument("--thinning", type=int, default=1)
    p.add_argument("--proposal", choices=("uniform", "swap"), default="uniform")
    p.add_argument("--sampler", choices=("fixed", "joint", "full"), default="full")
    p.add_argument("--unitary", default="haar",
                   help='"haar", "beamsplitter", or a path to an .npy unitary')
    _common_flags(p)

    p = sub.add_parser("exact", help="full enumerated output distribution (desk scale)")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=1.0)
    p.add_argument("--unitary", default="haar")
    _common_flags(p)

    p = sub.add_parser("bounds", help="evaluate the closed-form bounds for one setting")
    p.add_argument("--x", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--C", type=float, default=None)
    _common_flags(p)

    return parser


def _emit(records, args) -> None:
    """Write the main record (plus summary/figure) or print to stdout."""
    record = records[0] if isinstance(records, tuple) else records
    extra = records[1] if isinstance(records, tuple) else None
    if args.out is None:
        import json

        from .reporting import format_value

        if args.format == "json":
            payload = {
                "study": record.name,
                "metadata": record.metadata,
                "columns": record.columns,
                "rows": [list(r) for r in record.rows],
            }
            print(json.dumps(payload, indent=2, allow_nan=False))
        else:
            for line in record.header_lines():
                print(line)
            print(",".join(record.columns))
            for row in record.rows:
                print(",".join(format_value(v) for v in row))
        return
    args.out.parent.mkdir(parents=True, exist_ok=True)
    write_record(record, args.out, args.format)
    written = [str(args.out)]
    if extra is not None:
        path = summary_path(args.out)
        write_record(extra, path, "json")
        written.append(str(path))
    if not args.no_plot:
        from .plotting import save_study_figure

        fig = save_study_figure(record, figure_path(args.out))
        if fig is not None:
            written.append(str(fig))
    print("wrote " + ", ".join(written))


def _run(args) -> None:
    seed = RngSeed(args.seed)
    if args.command == "variance-study":
        custom = [args.n, args.m, args.x]
        if any(v is not None for v in custom):
            if any(v is None for v in custom):
                raise NoisyBSError("custom scenario needs all of --n, --m and --x")
            scenarios = (
                studies.VarianceScenario("custom", args.n, args.m, args.x**2),
            )
        else:
            scenarios = studies.VARIANCE_SCENARIOS
        record = studies.run_variance_study(
            n_modes=args.N,
            trials=args.trials,
            seed=seed,
            workers=args.threads,
            ensemble=args.ensemble,
            scenarios=scenarios,
        )
        _emit(record, args)
    elif args.command == "markov-study":
        records = studies.run_markov_study(
            n_modes=args.N, n=args.n, m=args.m, x=args.x, k=args.k,
            trials=args.trials, seed=seed, workers=args.threads,
        )
        _emit(records, args)
    elif args.command == "k-eta-frontier":
        record = studies.run_k_eta_frontier(
            epsilons=tuple(args.epsilon) if args.epsilon else (0.1, 0.01, 0.001),
            eta_start=args.eta_start, eta_stop=args.eta_stop,
            eta_step=args.eta_step, x=args.x,
        )
        _emit(record, args)
    elif args.command == "tradeoff-table":
        _emit(studies.run_tradeoff_table(epsilon=args.epsilon), args)
    elif args.command == "postselect":
        _emit(
            studies.run_postselect(
                n=args.n, k=args.k, x_squared=args.x_squared, epsilon=args.epsilon
            ),
            args,
        )
    elif args.command == "sample":
        noise = NoiseModel(x=args.x, eta=args.eta, n=args.n, m=args.m)
        k = args.m if args.k is None else args.k
        record = studies.run_sample(
            n_modes=args.N,
            noise=noise,
            spec=TruncationSpec(k=k),
            cfg=SamplerConfig(
                burn_in=args.burn_in, thinning=args.thinning, proposal=args.proposal
            ),
            count=args.count,
            seed=seed,
            sampler=args.sampler,
            unitary=args.unitary,
        )
        _emit(record, args)
    elif args.command == "exact":
        record = studies.run_exact(
            n_modes=args.N, n=args.n, x=args.x, eta=args.eta,
            seed=seed, unitary=args.unitary,
        )
        _emit(record, args)
    elif args.command == "bounds":
        record = studies.run_bounds_report(
            x=args.x, eta=args.eta, n=args.n, m=args.m, k=args.k,
            epsilon=args.epsilon, delta=args.delta, c=args.C,
        )
        _emit(record, args)
    else:  # pragma: no cover - argparse enforces the choices
        raise NoisyBSError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _run(args)
    except (CombinatorialBlowupError, BudgetExceededError, SizeLimitExceededError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (NoisyBSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
