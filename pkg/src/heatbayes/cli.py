"""Command line interface.

Subcommands
-----------
simulate        forward solve of the configured truth model, sensor CSV out
generate-data   synthetic noisy measurement sets
sensitivity     finite-difference identifiability report
infer           two-phase MCMC posterior sampling (one or more chains)
report          recompute summary/band from a stored chain

Configuration is layered: built-in defaults, then ``--preset``, then
``--config FILE``, then individual flags. Outputs land in ``--output`` if
given, else under ``$HEATBAYES_OUTPUT_ROOT`` (or the working directory),
in a folder named ``<preset-or-run>-<subcommand>``.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import available_presets, build_config
from .errors import ConfigError, HeatBayesError
from . import experiments

__all__ = ["main", "console_main"]

logger = logging.getLogger(__name__)

ENV_OUTPUT_ROOT = "HEATBAYES_OUTPUT_ROOT"


def _float_list(text: str):
    try:
        return [float(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _init_arg(text: str):
    if text in ("ones", "twos", "prior-shape"):
        return text
    return _float_list(text)


def _reference_arg(text: str):
    if text in ("truth", "ones"):
        return text
    return _float_list(text)


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("configuration")
    group.add_argument("--preset", help="named built-in configuration (see --list-presets)")
    group.add_argument("--config", help="JSON config file merged over the preset")
    group.add_argument("--output", help="output directory (default: derived from preset name)")
    group.add_argument("--force", action="store_true", help="write into a non-empty output directory")
    group.add_argument("--elements", type=int, help="number of finite elements")
    group.add_argument("--dt", type=float, help="time step in seconds")
    group.add_argument("--duration", type=float, help="total simulated time in seconds")


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("data")
    group.add_argument("--data", help="measurement CSV to load instead of generating")
    group.add_argument("--data-seed", type=int, help="RNG seed for synthetic noise")
    group.add_argument("--noise-off", action="store_true", help="zero the noise (keep sigma column)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="heatbayes",
        description="Bayesian recovery of temperature-dependent thermal conductivity "
        "from transient temperature measurements.",
    )
    parser.add_argument("--list-presets", action="store_true", help="list built-in presets and exit")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser("simulate", help="forward solve with the truth conductivity")
    _add_config_options(p_sim)
    p_sim.add_argument("--full-field", action="store_true", help="also write every node (field.csv)")

    p_gen = sub.add_parser("generate-data", help="write a synthetic measurement set")
    _add_config_options(p_gen)
    _add_data_options(p_gen)

    p_sens = sub.add_parser("sensitivity", help="finite-difference identifiability report")
    _add_config_options(p_sens)
    _add_data_options(p_sens)
    p_sens.add_argument(
        "--reference",
        type=_reference_arg,
        help="'truth', 'ones', or comma-separated parameter values",
    )
    p_sens.add_argument("--epsilon", type=float, help="relative step size")
    p_sens.add_argument("--dump-matrix", action="store_true", help="also write jacobian.csv")

    p_inf = sub.add_parser("infer", help="sample the conductivity posterior")
    _add_config_options(p_inf)
    _add_data_options(p_inf)
    p_inf.add_argument("--parametrization", choices=["coefficients", "conductivity_values", "piecewise"])
    p_inf.add_argument("--prior", choices=["uniform", "normal", "gmrf"], help="prior family")
    p_inf.add_argument("--scale", choices=["full", "desk"], default="full",
                       help="'desk' divides the sampler budgets by 10")
    p_inf.add_argument("--chains", type=int, default=1, help="independent chains to run")
    p_inf.add_argument("--workers", type=int, help="processes for multi-chain runs")
    p_inf.add_argument("--seed", type=int, help="sampler seed (chains spawn from it)")
    p_inf.add_argument("--n-adapt", type=int, help="adaptive-phase length")
    p_inf.add_argument("--n-steps", type=int, help="fixed-covariance phase length")
    p_inf.add_argument("--burn-in", type=int, help="samples discarded from the fixed phase")
    p_inf.add_argument(
        "--init", type=_init_arg, help="'ones', 'twos', 'prior-shape', or comma-separated values"
    )

    p_rep = sub.add_parser("report", help="recompute summary and band from a stored chain")
    p_rep.add_argument("chain_dir", help="chain directory written by infer")
    p_rep.add_argument("--output", help="write summary/band here instead of in place")
    p_rep.add_argument("--level", type=float, help="credible level, e.g. 0.99")
    p_rep.add_argument("--grid-points", type=int, help="temperature grid resolution")
    p_rep.add_argument("--burn-in", type=int, help="override the stored burn-in")

    return parser


def _deep_set(target: dict, path: tuple, value) -> None:
    node = target
    for key in path[:-1]:
        node = node.setdefault(key, {})
    node[path[-1]] = value


_OVERRIDE_MAP = {
    "elements": ("mesh", "n_elements"),
    "dt": ("physical", "dt"),
    "duration": ("physical", "duration"),
    "data": ("data", "path"),
    "data_seed": ("data", "seed"),
    "parametrization": ("parametrization",),
    "seed": ("sampler", "seed"),
    "n_adapt": ("sampler", "n_adapt"),
    "n_steps": ("sampler", "n_steps"),
    "burn_in": ("sampler", "burn_in"),
    "init": ("init",),
}


def _overrides_from_args(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    for attr, path in _OVERRIDE_MAP.items():
        value = getattr(args, attr, None)
        if value is not None:
            _deep_set(overrides, path, value)
    if getattr(args, "noise_off", False):
        _deep_set(overrides, ("noise", "scale"), 0.0)
    if getattr(args, "prior", None) is not None:
        _deep_set(overrides, ("prior", "kind"), args.prior)
    return overrides


def _resolve_output_dir(args: argparse.Namespace) -> Path:
    if args.output:
        out = Path(args.output)
    else:
        root = Path(os.environ.get(ENV_OUTPUT_ROOT, "."))
        name = args.preset if getattr(args, "preset", None) else None
        if name is None and getattr(args, "config", None):
            name = Path(args.config).stem
        if name is None:
            name = "run"
        out = root / f"{name}-{args.command}"
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ConfigError(
            f"output directory {out} is not empty (pass --force to write into it)"
        )
    return out


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    level = {0: logging.WARNING, 1: logging.INFO}.get(args.verbose, logging.DEBUG)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    if args.list_presets:
        for name in available_presets():
            print(name)
        return 0
    if args.command is None:
        parser.print_help()
        return 2

    try:
        if args.command == "report":
            experiments.run_report(
                args.chain_dir,
                out_dir=args.output,
                level=args.level,
                grid_points=args.grid_points,
                burn_in=args.burn_in,
            )
            print(f"wrote {args.output or args.chain_dir}")
            return 0

        overrides = _overrides_from_args(args)
        config = build_config(
            preset=args.preset, config_file=args.config, overrides=overrides
        )
        out_dir = _resolve_output_dir(args)

        if args.command == "simulate":
            experiments.run_simulate(config, out_dir, full_field=args.full_field)
        elif args.command == "generate-data":
            experiments.run_generate(config, out_dir)
        elif args.command == "sensitivity":
            experiments.run_sensitivity(
                config,
                out_dir,
                reference=args.reference,
                epsilon=args.epsilon,
                dump_matrix=args.dump_matrix,
            )
        elif args.command == "infer":
            config = experiments.apply_scale(config, args.scale)
            experiments.run_infer(config, out_dir, n_chains=args.chains, workers=args.workers)
        else:  # pragma: no cover - argparse restricts the choices
            parser.error(f"unknown command {args.command}")
        print(f"wrote {out_dir}")
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except HeatBayesError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def console_main() -> None:
    sys.exit(main(argv=None))
