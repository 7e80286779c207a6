"""Command-line entry point.

Exit codes: 0 success, 1 unexpected error, 2 invalid configuration,
3 a declared assertion failed, 4 resource limit exceeded.
"""

import argparse
import logging
import sys

from . import __version__
from .exceptions import ConfigError, ResourceLimitError

EXIT_OK, EXIT_ERROR, EXIT_CONFIG, EXIT_ASSERTION, EXIT_RESOURCE = 0, 1, 2, 3, 4

log = logging.getLogger("gse")


def _parser():
    p = argparse.ArgumentParser(prog="gse", description="Generalized subspace expansion experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment configuration")
    run.add_argument("config")
    run.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE",
                     help="override a config entry, e.g. --set noise.n_tot=0.5 (repeatable)")
    run.add_argument("--out", help="output directory (default: output.dir/<experiment id>)")
    run.add_argument("--format", choices=["csv", "json", "both"], default="both")
    run.add_argument("--no-assert", action="store_true", help="exit 0 even if an assertion fails")

    val = sub.add_parser("validate", help="validate and print the resolved configuration")
    val.add_argument("config")
    val.add_argument("--set", dest="overrides", action="append", default=[], metavar="PATH=VALUE")

    orc = sub.add_parser("oracle", help="run built-in self-checks")
    orc.add_argument("names", nargs="*", help="oracle names (default: all)")
    orc.add_argument("--seed", type=int, default=0)
    orc.add_argument("--list", action="store_true")
    return p


def _cmd_run(args):
    from pathlib import Path

    from .experiments import emit_outputs, load_config, run_experiment

    cfg = load_config(args.config, args.overrides)
    out = Path(args.out) if args.out else Path(cfg["output"]["dir"]) / cfg["id"]
    log.info("running %s (seed %d)", cfg["id"], cfg["seed"])
    table, wall = run_experiment(cfg)
    formats = ("csv", "json") if args.format == "both" else (args.format,)
    paths = emit_outputs(table, cfg, out, wall, formats)
    for name, a in table.assertions.items():
        print(f"{'PASS' if a['passed'] else 'FAIL'} {name}: {a['detail']}")
    print(f"wrote {', '.join(sorted(paths.values()))}")
    if not table.passed and not args.no_assert:
        return EXIT_ASSERTION
    return EXIT_OK


def _cmd_validate(args):
    import yaml

    from .experiments import load_config

    cfg = load_config(args.config, args.overrides)
    sys.stdout.write(yaml.safe_dump(cfg, sort_keys=True))
    return EXIT_OK


def _cmd_oracle(args):
    from .oracles import ORACLES

    if args.list:
        print("\n".join(ORACLES))
        return EXIT_OK
    names = args.names or list(ORACLES)
    unknown = [n for n in names if n not in ORACLES]
    if unknown:
        raise ConfigError(f"unknown oracle(s) {', '.join(unknown)}; choose from {', '.join(ORACLES)}")
    ok = True
    for name in names:
        passed, detail = ORACLES[name](args.seed)
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return EXIT_OK if ok else EXIT_ASSERTION


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handler = {"run": _cmd_run, "validate": _cmd_validate, "oracle": _cmd_oracle}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
