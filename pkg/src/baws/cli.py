"""Batch command-line interface.

Subcommands:
    simulate     generate a scenario path and write it as CSV
    backtest     run one forecasting method over a losses/prices CSV
    experiment   replicate a scenario, run several methods, write metrics
    diagnose     closed-form rejection probabilities for the two-regime
                 Gaussian mean-shift model

A JSON config file (--config) may supply any long-option value under its
underscore name; explicit flags win.  Exit codes: 0 success, 1 usage or
configuration error, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import sys

from .bootstrap import BootstrapConfig
from .pipeline import (
    BacktestConfig,
    ConfigError,
    DataError,
    emit_results,
    load_price_csv,
    parse_method,
    run_backtest,
    run_experiment,
)
from .baselines import SAWSConfig
from .scenarios import SCENARIOS, generate
from .scoring import Mean, VaR, VaRES
from .selection import CandidateGridConfig, rejection_probability_gaussian


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _target(name: str, alpha: float):
    name = name.lower()
    if name == "mean":
        return Mean()
    if name == "var":
        return VaR(alpha)
    if name == "vares":
        return VaRES(alpha)
    raise ConfigError(f"unknown target {name!r}; expected mean, var, or vares")


def _grid(args) -> CandidateGridConfig:
    return CandidateGridConfig(k_min=args.k0, max_window=args.max_window)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of option defaults (flags win)")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=0)


def _add_method_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--target", default="var", help="mean | var | vares")
    p.add_argument("--alpha", type=float, default=0.95, help="tail level")
    p.add_argument("--beta", type=float, default=0.9, help="threshold level")
    p.add_argument("--B", dest="boot_b", type=int, default=500,
                   help="bootstrap replications")
    p.add_argument("--bootstrap-mode", default=None, choices=("iid", "block"))
    p.add_argument("--block-c", type=float, default=1.0)
    p.add_argument("--k0", type=int, default=20, help="minimum candidate window")
    p.add_argument("--max-window", type=int, default=None)
    p.add_argument("--t0", type=int, default=501, help="first forecast index")
    p.add_argument("--error-control", default="pcer", choices=("pcer", "fwer"))
    p.add_argument("--saws-alpha-tau", type=float, default=None)
    p.add_argument("--saws-c-tau", type=float, default=None)
    p.add_argument("--saws-family", default=None,
                   choices=("convex_smooth", "lipschitz"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="baws", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a scenario path as CSV")
    p.add_argument("--scenario", required=True,
                   help="A1, A2, A3, B1, B2, B3, or GARCH")
    p.add_argument("--T", dest="horizon", type=int, default=2000)
    p.add_argument("--alpha", type=float, default=0.95)
    _add_common(p)

    p = sub.add_parser("backtest", help="online forecasts over a losses CSV")
    p.add_argument("--input", required=True, help="CSV of prices or losses")
    p.add_argument("--method", default="baws", help="baws | saws | fixed:<k> | full")
    p.add_argument("--price-col", default=None)
    p.add_argument("--loss-col", default=None)
    p.add_argument("--date-col", default=None)
    p.add_argument("--format", default="wide", choices=("wide", "long"))
    _add_method_options(p)
    _add_common(p)

    p = sub.add_parser("experiment", help="replicated scenario comparison")
    p.add_argument("--scenario", required=True)
    p.add_argument("--methods", default="baws,saws,fixed:250,fixed:500,fixed:750,full",
                   help="comma-separated method specs")
    p.add_argument("--n", type=int, default=1000, help="number of replications")
    p.add_argument("--T", dest="horizon", type=int, default=2000)
    _add_method_options(p)
    _add_common(p)

    p = sub.add_parser("diagnose", help="two-regime rejection probability table")
    for flag in ("--mu1", "--mu2", "--var1", "--var2", "--tau"):
        p.add_argument(flag, required=True,
                       help="value or comma-separated list")
    p.add_argument("--k", required=True, help="value or comma-separated list")
    p.add_argument("--k0", dest="k0_list", required=True,
                   help="value or comma-separated list")
    p.add_argument("--config", help="JSON file of option defaults (flags win)")
    p.add_argument("--out", required=True)
    return parser


def _apply_config_file(parser, args, argv):
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                defaults = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config file {args.config}: {exc}") from exc
        if not isinstance(defaults, dict):
            raise ConfigError("config file must hold a JSON object")
        sub = next(a for a in parser._actions
                   if isinstance(a, argparse._SubParsersAction))
        command_parser = sub.choices[args.command]
        known = {a.dest for a in command_parser._actions}
        unknown = set(defaults) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        command_parser.set_defaults(**defaults)
        args = parser.parse_args(argv)  # explicit flags win over file defaults
    return args


def _saws_override(args, target) -> SAWSConfig | None:
    fields = (args.saws_alpha_tau, args.saws_c_tau, args.saws_family)
    if all(f is None for f in fields):
        return None
    from .pipeline import default_saws_config

    base = default_saws_config(target)
    return SAWSConfig(
        alpha_tau=base.alpha_tau if args.saws_alpha_tau is None else args.saws_alpha_tau,
        c_tau=base.c_tau if args.saws_c_tau is None else args.saws_c_tau,
        family=base.family if args.saws_family is None else args.saws_family,
    )


def _check_scenario(name: str) -> str:
    if name.upper() not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; expected one of {SCENARIOS}")
    return name.upper()


def _cmd_simulate(args) -> None:
    scenario = _check_scenario(args.scenario)
    path = generate(scenario, T=args.horizon, seed=args.seed, alpha=args.alpha)
    emit_results(path, args.out)


def _cmd_backtest(args) -> None:
    series = load_price_csv(args.input, price_col=args.price_col,
                            loss_col=args.loss_col, date_col=args.date_col)
    target = _target(args.target, args.alpha)
    kind, fixed_k = parse_method(args.method)
    mode = args.bootstrap_mode or "block"  # real data is serially dependent
    boot = BootstrapConfig(beta=args.beta, replications=args.boot_b, mode=mode,
                           block_c=args.block_c, rng_seed=args.seed)
    cfg = BacktestConfig(method=kind, target=target, t0=args.t0, grid=_grid(args),
                         bootstrap=boot, saws=_saws_override(args, target),
                         fixed_k=fixed_k, seed=args.seed,
                         error_control=args.error_control)
    records = run_backtest(series, cfg)
    emit_results(records, args.out, fmt=args.format, target=target)


def _cmd_experiment(args) -> None:
    target = _target(args.target, args.alpha)
    scenario = _check_scenario(args.scenario)
    methods = [m for m in args.methods.split(",") if m.strip()]
    for spec in methods:
        parse_method(spec)
    report = run_experiment(
        scenario, methods, target,
        n=args.n, T=args.horizon, t0=args.t0, seed=args.seed, alpha=args.alpha,
        beta=args.beta, replications=args.boot_b, mode=args.bootstrap_mode,
        block_c=args.block_c, grid=_grid(args), error_control=args.error_control,
    )
    emit_results(report, args.out)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad numeric list {text!r}") from None


def _ints(text: str) -> list[int]:
    return [int(v) for v in _floats(text)]


def _cmd_diagnose(args) -> None:
    import csv as _csv

    combos = itertools.product(
        _floats(args.mu1), _floats(args.mu2), _floats(args.var1), _floats(args.var2),
        _ints(args.k), _ints(args.k0_list), _floats(args.tau),
    )
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = _csv.writer(fh)
        writer.writerow(["mu1", "mu2", "var1", "var2", "k", "k0", "tau",
                         "rejection_probability"])
        for mu1, mu2, var1, var2, k, k0, tau in combos:
            prob = rejection_probability_gaussian(mu1, mu2, var1, var2, k, k0, tau)
            writer.writerow([f"{mu1:.12g}", f"{mu2:.12g}", f"{var1:.12g}",
                             f"{var2:.12g}", str(k), str(k0), f"{tau:.12g}",
                             f"{prob:.12g}"])


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args = _apply_config_file(parser, args, argv)
        if args.command == "simulate":
            _cmd_simulate(args)
        elif args.command == "backtest":
            _cmd_backtest(args)
        elif args.command == "experiment":
            _cmd_experiment(args)
        elif args.command == "diagnose":
            _cmd_diagnose(args)
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - map anything else to exit 3
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
