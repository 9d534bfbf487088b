"""Command line interface: ``run``, ``sweep``, ``oracle-check`` and
``print-config-template``.

Defaults for ``--seed``, ``--grid-steps``, ``--regimes`` and ``--mc-paths``
can be supplied through the environment variables ``IMPACTEQ_SEED``,
``IMPACTEQ_GRID_STEPS``, ``IMPACTEQ_REGIMES`` and ``IMPACTEQ_MC_PATHS``;
explicit flags win.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from . import report
from .config import SWEEP_PARAMETERS, TEMPLATE, ScenarioConfig
from .errors import BadIndex, BadSweepValue, ConfigParse, ValidationError
from .model import Regime

EXIT_OK = 0
EXIT_ORACLE_FAIL = 1
EXIT_CONFIG = 3
EXIT_VALIDATION = 4
EXIT_IO = 5
EXIT_SWEEP = 6

ENV_PREFIX = "IMPACTEQ_"

log = logging.getLogger("impacteq")


def _env(name: str, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    return None if raw is None else cast(raw)


def _regimes(text: str | None) -> list[Regime] | None:
    if text is None:
        return None
    try:
        return [Regime(x.strip()) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigParse(f"--regimes: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="impacteq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="scenario YAML file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, default=_env("SEED", int))
        p.add_argument("--grid-steps", type=int, default=_env("GRID_STEPS", int))
        p.add_argument("--mc-paths", type=int, default=_env("MC_PATHS", int))

    run = sub.add_parser("run", help="compute the configured regimes")
    common(run)
    run.add_argument("--regimes", default=_env("REGIMES"), help="comma-separated regime names")
    run.add_argument("--timing", action="store_true", help="record wall time in summary.json")

    sw = sub.add_parser("sweep", help="sweep one parameter")
    common(sw)
    sw.add_argument("--parameter", choices=SWEEP_PARAMETERS)
    sw.add_argument("--values", help="comma-separated sweep values")

    oc = sub.add_parser("oracle-check", help="compare closed forms with the oracles")
    common(oc, config_required=False)
    oc.add_argument("--count", type=int, default=50, help="battery size without --config")
    oc.add_argument("--tol", type=float, default=1e-8)

    sub.add_parser("print-config-template", help="print an example config")
    return parser


def _load(args) -> ScenarioConfig:
    try:
        return ScenarioConfig.load(args.config)
    except OSError as exc:
        raise IOError(f"cannot read config: {exc}") from exc


def _emit(text: str, out_dir, name: str) -> None:
    if out_dir is None:
        sys.stdout.write(text)
        return
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, name), "w") as fh:
        fh.write(text)


def cmd_run(args) -> int:
    config = _load(args)
    rep = report.run_scenario(config, seed=args.seed, grid_steps=args.grid_steps,
                              regimes=_regimes(args.regimes), mc_paths=args.mc_paths,
                              timing=args.timing)
    if args.out is None:
        sys.stdout.write(report.format_json(rep.summary))
    else:
        for path in report.write_report(rep, args.out):
            log.info("wrote %s", path)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _load(args)
    spec = config.run.get("sweep") or {}
    parameter = args.parameter or spec.get("parameter")
    if parameter is None:
        raise BadSweepValue("no sweep parameter given on the command line or in the config")
    if args.values is not None:
        try:
            values = [float(v) for v in args.values.split(",")]
        except ValueError as exc:
            raise BadSweepValue(f"--values: {exc}") from exc
    else:
        values = spec.get("values") if spec.get("parameter") == parameter else None
        if not values:
            raise BadSweepValue(f"no values for sweep parameter {parameter}")
    result = report.sweep(config, parameter, values, seed=args.seed,
                          grid_steps=args.grid_steps, mc_paths=args.mc_paths)
    if args.out is None:
        sys.stdout.write(result.to_csv())
    else:
        report.write_sweep(result, args.out)
    return EXIT_OK


def cmd_oracle_check(args) -> int:
    if args.config is not None:
        config = _load(args)
        scn = config.scenario(seed=args.seed, grid_steps=args.grid_steps)
        summary = {"worst": report.oracle_deltas(scn)}
        gaps = [summary["worst"][k] for k in ("nash_fixed_point_gap", "nash_linear_solve_gap",
                                              "pointwise_best_response_gap")]
    else:
        summary = report.oracle_battery(args.count, num_steps=args.grid_steps or 100)
        worst = summary["worst"]
        gaps = [worst[k] for k in ("clearing", "rate_clearing", "nash_fixed_point_gap",
                                   "nash_linear_solve_gap", "pointwise_best_response_gap")]
    summary["tol"] = args.tol
    summary["passed"] = all(g <= args.tol for g in gaps)
    _emit(report.format_json(summary), args.out, "oracle_check.json")
    return EXIT_OK if summary["passed"] else EXIT_ORACLE_FAIL


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "print-config-template":
        sys.stdout.write(TEMPLATE)
        return EXIT_OK
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "oracle-check": cmd_oracle_check}
    try:
        return handlers[args.command](args)
    except ConfigParse as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG
    except BadSweepValue as exc:
        log.error("bad sweep: %s", exc)
        return EXIT_SWEEP
    except (ValidationError, BadIndex) as exc:
        log.error("validation failed: %s", exc)
        return EXIT_VALIDATION
    except OSError as exc:
        log.error("i/o failure: %s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
