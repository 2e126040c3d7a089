"""Command-line entry point: ``cascade-fano <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys

from .bounds import (
    fano_threshold_continuous,
    fano_threshold_discrete,
    kl_bound_discrete,
    kl_report,
    kl_sweep,
    mi_exact_single_sample,
    mi_pairwise_bound,
)
from .errors import CascadeFanoError
from .files import write_cascades
from .harness import fmt, read_config, results_csv, run_experiment, write_results
from .inference import Dataset
from .model import Hypothesis, ModelParams, simulate_continuous_times, simulate_discrete_times
from .suites import SUITES
from .transmission import FAMILIES, TransmissionSpec

KL_COLUMNS = "pA,pB,overlap,exact_kl,bound"
THRESHOLD_COLUMNS = "p,k,theta0,model,kappa_ratio,numerator,denominator,n_star,n_floor,vacuous"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _hypothesis(text: str) -> Hypothesis:
    try:
        return Hypothesis(tuple(sorted(int(x) for x in text.split(","))))
    except (ValueError, CascadeFanoError) as exc:
        raise argparse.ArgumentTypeError(f"bad parent set {text!r}: {exc}") from None


def _add_params(sp, model=True):
    if model:
        sp.add_argument("--model", choices=("discrete", "continuous"), default="discrete")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--theta0", type=float, required=True)


def _add_transmission(sp):
    sp.add_argument("--family", choices=FAMILIES, default="exponential")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--sigma", type=float)
    sp.add_argument("--mu", type=float)
    sp.add_argument("--T", type=float)


def _spec(args) -> TransmissionSpec | None:
    if args.model != "continuous":
        return None
    if args.T is None:
        raise UsageError("continuous model needs --T")
    return TransmissionSpec(args.family, args.T, lam=args.lam, sigma=args.sigma, mu=args.mu)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cascade-fano", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="simulate cascades to a file")
    _add_params(sp)
    _add_transmission(sp)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--truth", type=_hypothesis, help="true parent set, e.g. 1,2 (default: 1..k)")
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("kl", help="exact pairwise KL and its closed-form bound")
    _add_params(sp)
    _add_transmission(sp)
    sp.add_argument("--piA", type=_hypothesis)
    sp.add_argument("--piB", type=_hypothesis)
    sp.add_argument("--sweep", action="store_true", help="all ordered hypothesis pairs")
    mode = sp.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="compute the exact KL (default)")
    mode.add_argument("--bound", action="store_true", help="report only the closed-form bound")
    sp.add_argument("--out")

    sp = sub.add_parser("mi", help="exact single-sample mutual information and its bounds")
    _add_params(sp, model=False)

    sp = sub.add_parser("threshold", help="Fano sample-size threshold")
    _add_params(sp)
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--kappa1", type=float)
    sp.add_argument("--kappa2", type=float)

    sp = sub.add_parser("experiment", help="run a Monte Carlo recovery experiment")
    sp.add_argument("--config", required=True)
    sp.add_argument("--out")
    sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("verify", help="run the exhaustive inequality suites")
    sp.add_argument("--lemma1", action="store_true")
    sp.add_argument("--lemma2", action="store_true")
    sp.add_argument("--mi-chain", dest="mi_chain", action="store_true")
    sp.add_argument("--pmax", type=int, default=None)
    sp.add_argument("--kmax", type=int, default=None)
    return parser


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "wb") as fh:
            fh.write(text.encode("utf-8"))
    else:
        sys.stdout.write(text)


def cmd_simulate(args) -> int:
    params = ModelParams(args.p, args.k, args.theta0)
    truth = args.truth or Hypothesis(tuple(range(1, params.k + 1)))
    spec = _spec(args)
    if spec is None:
        times = simulate_discrete_times(params, truth, args.n, args.seed)
    else:
        times = simulate_continuous_times(params, truth, spec, args.n, args.seed)
    write_cascades(args.out, Dataset(params, args.model, times, spec))
    return 0


def _kl_row(r) -> str:
    a, b = r.pair
    exact = "" if r.exact_kl is None else fmt(r.exact_kl)
    join = lambda h: ";".join(map(str, h.parents))  # noqa: E731
    return f"{join(a)},{join(b)},{r.overlap},{exact},{fmt(r.bound)}"


def cmd_kl(args) -> int:
    params = ModelParams(args.p, args.k, args.theta0)
    spec = _spec(args)
    exact = not args.bound
    if args.sweep:
        reports = kl_sweep(params, args.model, spec, exact=exact)
    else:
        if args.piA is None or args.piB is None:
            raise UsageError("kl needs --piA and --piB, or --sweep")
        reports = [kl_report(params, args.piA, args.piB, args.model, spec, exact=exact)]
    lines = [KL_COLUMNS] + [_kl_row(r) for r in reports]
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_mi(args) -> int:
    params = ModelParams(args.p, args.k, args.theta0)
    values = (
        mi_exact_single_sample(params),
        mi_pairwise_bound(1, params, exact=True),
        mi_pairwise_bound(1, params),
    )
    print("mi_exact,pairwise_exact_avg,pairwise_bound")
    print(",".join(fmt(v) for v in values))
    return 0


def threshold_row(r) -> str:
    ratio = "" if r.kappa_ratio is None else fmt(r.kappa_ratio)
    return (
        f"{r.p},{r.k},{fmt(r.theta0)},{r.model},{ratio},{fmt(r.numerator)},"
        f"{fmt(r.denominator)},{fmt(r.n_star)},{r.n_floor},{str(r.vacuous).lower()}"
    )


def cmd_threshold(args) -> int:
    if args.model == "discrete":
        report = fano_threshold_discrete(args.p, args.k, args.theta0)
    elif args.lam is not None or args.T is not None:
        report = fano_threshold_continuous(args.p, args.k, args.theta0, lam=args.lam, T=args.T)
    else:
        report = fano_threshold_continuous(args.p, args.k, args.theta0, args.kappa1, args.kappa2)
    print(THRESHOLD_COLUMNS)
    print(threshold_row(report))
    return 0


def cmd_experiment(args) -> int:
    config = read_config(args.config)
    result = run_experiment(config, jobs=args.jobs)
    out = args.out or config.out
    if out:
        write_results(out, result)
    else:
        sys.stdout.write(results_csv(result))
    return 0


def cmd_verify(args) -> int:
    chosen = [name for name, flag in (("lemma1", args.lemma1), ("lemma2", args.lemma2), ("mi-chain", args.mi_chain)) if flag]
    if not chosen:
        raise UsageError("verify needs at least one of --lemma1, --lemma2, --mi-chain")
    kwargs = {}
    if args.pmax is not None:
        kwargs["pmax"] = args.pmax
    if args.kmax is not None:
        kwargs["kmax"] = args.kmax
    failed = 0
    for name in chosen:
        for outcome in SUITES[name](**kwargs):
            print(outcome.line())
            failed += not outcome.passed
    print(f"{'FAIL' if failed else 'PASS'} {failed} failing instance(s)")
    return 1 if failed else 0


COMMANDS = {
    "simulate": cmd_simulate,
    "kl": cmd_kl,
    "mi": cmd_mi,
    "threshold": cmd_threshold,
    "experiment": cmd_experiment,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except (UsageError, CascadeFanoError, OSError) as exc:
        print(f"cascade-fano: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
