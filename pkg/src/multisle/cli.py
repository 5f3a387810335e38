"""Command line harness: ``multisle <experiment> [--config PATH] [flags]``.

Each experiment writes ``<experiment>.csv`` (check rows), ``<experiment>.json``
(configuration, summary and results) and experiment-specific artifacts to the
output directory, chosen by ``--out``, else the ``OUT_DIR`` environment
variable, else the ``out`` key of the configuration, else ``./multisle-out``.
The exit code is 0 when no check row failed, 1 when some row failed and 2 for
invalid input or an error during the run (rows gathered up to that point are
still written).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from importlib import resources
from pathlib import Path

import jsonschema

from . import __version__
from .experiments import RUNNERS, defaults_for
from .report import Report

__all__ = ["main", "load_schema", "build_config", "execute", "ConfigError", "EXPERIMENTS"]

EXPERIMENTS = ("identities", "bounds", "asymptotics", "terminal", "cascade",
               "martingale", "ising", "gff", "reproduce")
DEFAULT_OUT = "multisle-out"
SEED_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Configuration rejected by the schema or inconsistent with the command."""


def load_schema() -> dict:
    """The published JSON schema of experiment configurations."""
    text = resources.files("multisle").joinpath("schemas/experiment_config.schema.json").read_text()
    return json.loads(text)


def _validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, load_schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None


def build_config(kind: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the configuration file, then command line overrides.

    Raises
    ------
    ConfigError
        On unknown keys, values outside the schema or a file written for a
        different experiment.

    Examples
    --------
    >>> build_config("gff", {"N": [2]}, {"seed": 7})["N"], build_config("gff", None, {"seed": 7})["seed"]
    ([2], 7)
    >>> build_config("gff", {"colour": 1})
    Traceback (most recent call last):
    ...
    multisle.cli.ConfigError: invalid configuration at <root>: Additional properties are not allowed ('colour' was unexpected)
    """
    file_cfg = dict(file_cfg or {})
    _validate(file_cfg)
    other = file_cfg.pop("experiment", kind)
    if other != kind:
        raise ConfigError(f"configuration is for {other!r}, not {kind!r}")
    file_cfg.pop("schema_version", None)
    cfg = defaults_for(kind)
    cfg.update(file_cfg)
    cfg.update({k: v for k, v in (overrides or {}).items() if v is not None})
    _validate(cfg)
    return cfg


def resolve_out(flag: str | None, cfg: dict) -> Path:
    if flag:
        return Path(flag)
    env = os.environ.get("OUT_DIR")
    if env:
        return Path(env)
    return Path(cfg.get("out") or DEFAULT_OUT)


def execute(kind: str, cfg: dict, out: Path, name: str | None = None, quiet: bool = False) -> tuple[Report, int]:
    """Run one experiment and write its CSV and JSON files.

    Returns the report and the exit code.
    """
    name = name or kind
    out.mkdir(parents=True, exist_ok=True)
    rep = Report()
    results: dict = {}
    error = None
    try:
        results = RUNNERS[kind](cfg, out, rep)
    except Exception as exc:  # partial outputs are written below
        error = "".join(traceback.format_exception_only(type(exc), exc)).strip()
        if not quiet:
            traceback.print_exc()
    rep.to_csv(out / f"{name}.csv")
    doc = {
        "experiment": kind,
        "package_version": __version__,
        "config": {k: v for k, v in cfg.items() if k not in ("jobs", "out")},
        "summary": rep.summary(),
        "error": error,
        "results": results,
    }
    (out / f"{name}.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    code = 2 if error else (0 if rep.ok else 1)
    if not quiet:
        first = rep.first_failure()
        status = "error" if error else ("ok" if rep.ok else "FAILED")
        print(f"{name}: {len(rep.rows)} checks, {len(rep.failures)} failed [{status}] -> {out}")
        if first is not None:
            print(f"first failing row: {first.config_id} {first.check_name} lhs={first.lhs!r} "
                  f"rhs={first.rhs!r} margin={first.margin!r}", file=sys.stderr)
        if error:
            print(f"error: {error}", file=sys.stderr)
    return rep, code


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v <= SEED_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", metavar="PATH", help="JSON configuration file")
    g.add_argument("--seed", type=_seed, metavar="U64", help="master seed")
    g.add_argument("--jobs", type=_positive_int, metavar="N", help="worker processes")
    g.add_argument("--out", metavar="DIR", help="output directory")
    g.add_argument("-q", "--quiet", action="store_true", help="no progress output")

    mc = argparse.ArgumentParser(add_help=False)
    g = mc.add_argument_group("Monte Carlo options")
    g.add_argument("--samples", type=_positive_int, metavar="N", help="samples per estimate")
    g.add_argument("--dt", type=_positive_float, help="absolute base time step")
    g.add_argument("--eps-stop", type=_positive_float, dest="eps_stop", help="absolute stopping threshold")

    p = argparse.ArgumentParser(
        prog="multisle",
        description="Checks and simulations for multiple SLE(3) partition functions and Ising interfaces.",
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    helps = {
        "identities": "Pfaffian/Hafnian identities, gradients, covariance",
        "bounds": "two-sided bounds and B-function inequalities",
        "asymptotics": "collapse asymptotics of the Ising partition function",
        "terminal": "terminal law of the Ising-driven Loewner chain",
        "cascade": "cascade Monte Carlo for pure partition functions",
        "martingale": "martingale property of connection probabilities",
        "ising": "Ising interface crossing probabilities",
        "gff": "normalisation of boundary connection probabilities",
        "reproduce": "run the whole acceptance suite",
    }
    for kind in EXPERIMENTS:
        parents = [common]
        if kind in ("terminal", "cascade", "martingale", "ising"):
            parents.append(mc)
        sp = sub.add_parser(kind, parents=parents, help=helps[kind], description=helps[kind])
        if kind == "ising":
            sp.add_argument("-L", type=_positive_int, action="append", dest="L", metavar="L",
                            help="lattice size (repeatable)")
        if kind == "reproduce":
            sp.add_argument("--profile", choices=("quick", "full"), help="problem sizes (default full)")
    return p


def _overrides(args: argparse.Namespace) -> dict:
    keys = ("seed", "jobs", "samples", "dt", "eps_stop", "L", "profile")
    return {k: getattr(args, k, None) for k in keys}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    kind = args.experiment
    try:
        file_cfg = None
        if args.config:
            try:
                file_cfg = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from None
            if not isinstance(file_cfg, dict):
                raise ConfigError("the configuration must be a JSON object")
        over = _overrides(args)
        if kind != "ising":
            over.pop("L")
        if kind != "reproduce":
            over.pop("profile")
        cfg = build_config(kind, file_cfg, over)
    except ConfigError as exc:
        print(f"multisle: {exc}", file=sys.stderr)
        return 2
    out = resolve_out(args.out, cfg)
    if kind == "reproduce":
        from .reproduce import run_reproduce

        return run_reproduce(out, cfg["profile"], cfg["seed"], cfg["jobs"], quiet=args.quiet)
    _, code = execute(kind, cfg, out, quiet=args.quiet)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
