"""Command-line entry point: ``giesim <mode> [flags]``.

Data goes to stdout (or ``--output``); notes and errors go to stderr.
Exit codes: 0 success, 2 usage or configuration error, 3 numerical
precondition failure such as an insufficient Fock truncation.
"""

from __future__ import annotations

import argparse
import sys
from typing import Any, Sequence

from ..fieldmodel import planck_ratio_note
from ..qcore import DomainError, PreconditionError
from . import modes
from .config import MODES, PARAMETER_KEYS, SWEEP_VARIABLES, ConfigError, SweepSpec, load_config
from .records import SCHEMA_VERSION, SCHEMAS, emit, emit_partial, plot_data

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION = 0, 2, 3

WITNESS_NOTE = (
    "note: witness column is the projective stand-in W = I/2 - |T><T| with "
    "T = (|00> + |01> + |10> - |11>)/2; negative values certify entanglement"
)
ADAPTED_WITNESS_NOTE = (
    "note: witness column is the projective stand-in W = I/2 - |T><T| with T the "
    "maximally entangled state closest to the final mass-mass state"
)
PLOT_Y = {
    "phase": "phi",
    "run": "concurrence",
    "mediator": "concurrence",
    "decohere": "negativity",
    "threshold": "gamma_star",
    "nogo": "negativity",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _flag(group, name: str, **kw) -> None:
    kind, meaning = PARAMETER_KEYS[name]
    if kind is bool:
        group.add_argument(f"--{name}", action="store_true", default=argparse.SUPPRESS, help=meaning)
    else:
        group.add_argument(
            f"--{name}", type=kind, default=argparse.SUPPRESS, metavar=name.upper(), help=meaning, **kw
        )


def _shared(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("shared")
    g.add_argument("--config", help="JSON configuration file; flags override its values")
    g.add_argument("--output", default=argparse.SUPPRESS, help="output path, or - for stdout")
    g.add_argument("--format", choices=("csv", "json"), default=argparse.SUPPRESS)
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master random seed (u64)")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker pool size")
    g.add_argument("--schema", action="store_true", help="print the column header and exit")
    g.add_argument(
        "--keep-going", dest="keep_going", action="store_true", default=argparse.SUPPRESS,
        help="leave failed sweep points empty instead of aborting",
    )
    g.add_argument(
        "--plot-data", dest="plot_data", nargs="?", const="", default=None, metavar="X,Y",
        help="emit two-column CSV for gnuplot (default columns depend on the mode)",
    )


def _group(parser, title: str, names: Sequence[str]) -> None:
    g = parser.add_argument_group(title)
    for name in names:
        _flag(g, name)


GEOMETRY = ("mass", "d1", "d2", "L", "v", "dt", "exponent", "geometric")
MEDIATOR = ("w", "xi00", "xi01", "xi10", "xi11", "alpha0", "fock")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="giesim", description="Gravitationally induced entanglement simulator.")
    sub = parser.add_subparsers(dest="mode", metavar="MODE", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("phase", help="gravitational phase for one separation")
    _group(p, "phase", ("mass", "distance", "dt", "exponent"))

    p = sub.add_parser("run", help="one interferometer run from phases or geometry")
    _group(p, "phases", ("phi1", "dphi"))
    _group(p, "geometry", GEOMETRY)

    p = sub.add_parser("sweep", help="evaluate a grid over one variable")
    g = p.add_argument_group("sweep")
    g.add_argument("--var", choices=SWEEP_VARIABLES, default=argparse.SUPPRESS)
    g.add_argument("--from", dest="start", type=float, default=argparse.SUPPRESS)
    g.add_argument("--to", dest="stop", type=float, default=argparse.SUPPRESS)
    g.add_argument("--points", type=int, default=argparse.SUPPRESS)
    g.add_argument("--scale", choices=("linear", "log"), default=argparse.SUPPRESS)
    _group(p, "geometry", GEOMETRY)
    _group(p, "mediator", MEDIATOR + ("gamma",))

    p = sub.add_parser("nogo", help="randomized classical-mediator verification")
    _group(p, "nogo", ("trials", "depth", "dc"))

    p = sub.add_parser("mediator", help="field-mediated cycle without dephasing")
    _group(p, "mediator", MEDIATOR)

    p = sub.add_parser("decohere", help="field-mediated cycle with field dephasing")
    _group(p, "mediator", MEDIATOR)
    _group(p, "dephasing", ("gamma", "threshold", "tol"))

    for name in MODES:
        _shared(sub.choices[name])
    return parser


_SWEEP_FLAGS = {"var": "variable", "start": "from", "stop": "to", "points": "points", "scale": "scale"}


def _settings(args: argparse.Namespace) -> dict[str, Any]:
    settings: dict[str, Any] = {}
    if args.config:
        settings = load_config(args.config)
        mode = settings.pop("mode", args.mode)
        if mode != args.mode:
            raise ConfigError(f"{args.config}: config mode {mode!r} does not match subcommand {args.mode!r}")
    flags = vars(args)
    for key in PARAMETER_KEYS:
        if key in flags:
            settings[key] = flags[key]
    for flag, key in _SWEEP_FLAGS.items():
        if flag in flags:
            settings[f"sweep_{key}"] = flags[flag]
    if "output" in flags:
        settings["output_path"] = flags["output"]
    if "format" in flags:
        settings["output_format"] = flags["format"]
    threads = settings.get("threads", 1)
    if threads < 1:
        raise ConfigError("--threads must be >= 1")
    if settings.get("seed", 0) < 0 or settings.get("seed", 0) >= 2**64:
        raise ConfigError("--seed must be an unsigned 64-bit integer")
    return settings


def _sweep_spec(settings: dict[str, Any]) -> SweepSpec:
    missing = [k for k in ("variable", "from", "to", "points") if f"sweep_{k}" not in settings]
    if missing:
        raise ConfigError("sweep needs " + ", ".join(f"--{'var' if k == 'variable' else k}" for k in missing))
    return SweepSpec(
        settings["sweep_variable"],
        settings["sweep_from"],
        settings["sweep_to"],
        settings["sweep_points"],
        settings.get("sweep_scale", "linear"),
    )


def _schema_name(mode: str, settings: dict[str, Any]) -> str:
    if mode == "sweep":
        if "sweep_variable" not in settings:
            raise ConfigError("--schema for sweep needs --var")
        return modes.sweep_schema(settings["sweep_variable"])
    if mode == "decohere" and settings.get("threshold"):
        return "threshold"
    return mode


def _note(text: str) -> None:
    print(text, file=sys.stderr)


def _evaluate(mode: str, settings: dict[str, Any]):
    """Return ``(records, failure)`` where failure is ``(index, exception)`` or None."""
    if mode == "phase":
        rec = modes.evaluate_phase(settings)
        _note(planck_ratio_note(rec["planck_ratio"]))
        return [rec], None
    if mode == "run":
        _note(WITNESS_NOTE)
        return [modes.evaluate_run(settings)], None
    if mode == "mediator":
        _note(ADAPTED_WITNESS_NOTE)
        return [modes.evaluate_mediator(settings)], None
    if mode == "decohere":
        if settings.get("threshold"):
            if settings.get("gamma") is not None:
                raise ConfigError("give either --gamma or --threshold, not both")
            return [modes.evaluate_threshold(settings)], None
        return [modes.evaluate_decohere(settings)], None
    if mode == "nogo":
        records = modes.evaluate_nogo(settings)
        worst = max(r["negativity"] for r in records)
        _note(f"nogo: {len(records)} trials, max negativity {worst:.3g}")
        return records, None
    spec = _sweep_spec(settings)
    if modes.sweep_schema(spec.variable) == "run":
        _note(WITNESS_NOTE)
    keep_going = bool(settings.get("keep_going"))
    records, failures = modes.sweep(settings, spec, threads=settings.get("threads", 1), keep_going=keep_going)
    if keep_going:
        for index, exc in failures:
            _note(f"warning: point {index} failed and was left empty: {exc}")
        return records, None
    return records, (failures[0] if failures else None)


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, PreconditionError):
        return EXIT_PRECONDITION
    return EXIT_USAGE


def _run(argv: Sequence[str]) -> int:
    try:
        args = build_parser().parse_args(list(argv))
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    settings = _settings(args)
    mode = args.mode
    schema = _schema_name(mode, settings)
    columns = SCHEMAS[schema]
    if args.schema:
        print(f"# schema v{SCHEMA_VERSION} {schema}", file=sys.stderr)
        print(",".join(columns))
        return EXIT_OK

    fmt = settings.get("output_format", "csv")
    path = settings.get("output_path", "-")
    out = sys.stdout if path == "-" else open(path, "w", encoding="utf-8", newline="")
    try:
        records, failure = _evaluate(mode, settings)
        if args.plot_data is not None:
            x, y = (args.plot_data.split(",", 1) if args.plot_data else ("input", PLOT_Y[schema]))
            if x not in columns or y not in columns:
                raise ConfigError(f"--plot-data columns must be among {','.join(columns)}")
            text = plot_data(records, x, y)
        elif failure is not None:
            text = emit_partial(records, fmt, columns, failure[0], str(failure[1]))
        else:
            text = emit(records, fmt, columns)
        out.write(text)
        out.flush()
    finally:
        if out is not sys.stdout:
            out.close()
    if failure is not None:
        _note(f"error: sweep aborted at point {failure[0]}: {failure[1]}")
        return _exit_code(failure[1])
    return EXIT_OK


def run_cli(argv: Sequence[str] | None = None) -> int:
    """Run the command line and return the process exit code."""
    argv = sys.argv[1:] if argv is None else argv
    try:
        return _run(argv)
    except UsageError as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except PreconditionError as exc:
        _note(f"error: numerical precondition failed: {exc}")
        return EXIT_PRECONDITION
    except (ConfigError, DomainError, ValueError) as exc:
        _note(f"error: {exc}")
        return EXIT_USAGE
    except OSError as exc:
        _note(f"error: {exc.filename or ''}: {exc.strerror or exc}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run_cli())
