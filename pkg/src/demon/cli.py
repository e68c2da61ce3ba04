"""Command line: run a program or template, sweep one parameter, run the property suite.

Examples:
  demon run --template carnot --n-steps 10000
  demon run program.txt --format csv --out ledger.csv
  demon sweep --template carnot --param T2 --range 0.1:1:10
  demon check --only swap_work parser

Exit codes: 0 success, 1 parse error, 2 precondition violation, 3 invariant failure.
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence

from pydantic import ValidationError

from demon.checks import PROPERTIES, run_checks
from demon.configuration import CONFIG, configure_logging
from demon.emit import emit
from demon.exceptions import DemonError, EnginePreconditionError, InvariantViolationError, ParseError
from demon.graph import run_program
from demon.models import (
    FieldRule,
    OutputFormat,
    PulseProgram,
    SweepParameter,
    SweepScale,
    SweepSpec,
    TemplateKnobs,
    TemplateName,
)
from demon.program import PARAM_NAMES, parse_program
from demon.sweep import run_sweep
from demon.templates import DEFAULT_PARAMS, build_template, run_template

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_PRECONDITION = 2
EXIT_INVARIANT = 3


def _assignments(pairs: Sequence[str]) -> Dict[str, float]:
    values = {}
    names = {n.upper(): n for n in PARAM_NAMES}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep or name.upper() not in names:
            raise EnginePreconditionError(f"--set expects NAME=VALUE with NAME in {', '.join(PARAM_NAMES)}")
        try:
            values[names[name.upper()]] = float(raw)
        except ValueError:
            raise EnginePreconditionError(f"--set {name}: malformed number {raw!r}") from None
    return values


def _knobs(args: argparse.Namespace) -> TemplateKnobs:
    changes = {"field_rule": FieldRule(args.field_rule)}
    if args.theta is not None:
        changes["theta"] = args.theta
    if args.n_steps is not None:
        changes["n_steps"] = args.n_steps
    if args.b_prime is not None:
        changes["B_prime"] = args.b_prime
    return TemplateKnobs(**changes)


def _base_program(args: argparse.Namespace) -> PulseProgram:
    """Program named by FILE, or the template's program with its default parameters."""
    overrides = _assignments(args.set or [])
    if args.file is not None:
        with open(args.file, encoding="utf-8", newline="") as handle:
            program = parse_program(handle)
        params = program.params.replace(**overrides) if overrides else program.params
        return program.model_copy(update={"params": params})
    name = TemplateName(args.template)
    params = DEFAULT_PARAMS[name].replace(**overrides)
    return build_template(name, params, _knobs(args))


def parse_range(text: str, parameter: SweepParameter) -> SweepSpec:
    """START:END:COUNT[:log] → SweepSpec."""
    parts = text.split(":")
    if len(parts) not in (3, 4):
        raise EnginePreconditionError(f"--range expects START:END:COUNT[:log], got {text!r}")
    try:
        start, end, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise EnginePreconditionError(f"--range has a malformed number: {text!r}") from None
    scale = SweepScale(parts[3].lower()) if len(parts) == 4 else SweepScale.LINEAR
    return SweepSpec(parameter=parameter, start=start, end=end, count=count, scale=scale)


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)
    logger.info(f"wrote {out}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    if args.file is None:
        name = TemplateName(args.template)
        params = DEFAULT_PARAMS[name].replace(**_assignments(args.set or []))
        outcome = run_template(name, params, _knobs(args))
    else:
        outcome = run_program(_base_program(args))
    _write(emit(outcome, OutputFormat(args.format)), args.out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    parameter = SweepParameter(args.param)
    spec = parse_range(args.range, parameter)
    base = _base_program(args)
    template = None if args.file is not None else TemplateName(args.template)
    table = run_sweep(base, spec, template=template, knobs=_knobs(args), max_workers=args.workers)
    _write(emit(table, OutputFormat(args.format)), args.out)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    unknown = [name for name in args.only or [] if name not in PROPERTIES]
    if unknown:
        raise EnginePreconditionError(f"unknown check(s): {', '.join(unknown)}")
    results = run_checks(args.only)
    for result in results:
        print(f"{'PASS' if result.passed else 'FAIL'} {result.name}: {result.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_source(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("file", nargs="?", default=None, help="Pulse-program file")
    parser.add_argument("--template", choices=[t.value for t in TemplateName], default=None,
                        help="Built-in program instead of FILE")
    parser.add_argument("--set", action="append", metavar="NAME=VALUE",
                        help="Override a physical parameter (repeatable)")
    parser.add_argument("--theta", type=float, default=None, help="Tilt angle of the tipped template")
    parser.add_argument("--n-steps", type=int, default=None,
                        help=f"Ramp discretization of the templates (default {CONFIG['engine']['default_n_steps']})")
    parser.add_argument("--field-rule", choices=[r.value for r in FieldRule], default=FieldRule.MATCHED.value)
    parser.add_argument("--b-prime", type=float, default=None, help="Erasure field of the erase template")
    parser.add_argument("--out", default=None, help="Write to PATH instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="demon", description="Two-spin quantum Maxwell-demon engine")
    parser.add_argument("--log-level", default=CONFIG["logging"]["default_level"],
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run a program or template and emit its ledger")
    _add_source(run)
    run.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
    run.set_defaults(handler=cmd_run)

    sweep = sub.add_parser("sweep", help="Sweep one parameter and tabulate the outcomes")
    _add_source(sweep)
    sweep.add_argument("--param", required=True, choices=[p.value for p in SweepParameter])
    sweep.add_argument("--range", required=True, metavar="START:END:COUNT[:log]")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.CSV.value)
    sweep.set_defaults(handler=cmd_sweep)

    check = sub.add_parser("check", help="Run the property suite")
    check.add_argument("--only", nargs="*", default=None, metavar="NAME")
    check.set_defaults(handler=cmd_check)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.log_level)

    if args.command in ("run", "sweep"):
        if (args.file is None) == (args.template is None):
            parser.error("give exactly one of FILE or --template")

    try:
        return args.handler(args)
    except ParseError as err:
        print(f"parse error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except (EnginePreconditionError, ValidationError, ValueError) as err:
        print(f"precondition violated: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except InvariantViolationError as err:
        print(f"invariant violated: {err}", file=sys.stderr)
        return EXIT_INVARIANT
    except OSError as err:
        print(f"cannot access file: {err}", file=sys.stderr)
        return EXIT_PRECONDITION
    except DemonError as err:
        print(f"precondition violated: {err}", file=sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    raise SystemExit(main())
