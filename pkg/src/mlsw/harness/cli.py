"""Command-line entry point: ``mlsw run ...`` and ``mlsw validate --config FILE``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..exceptions import ClosureError, ConfigurationError, SolverAbort
from .config import make_config, parse_floats, read_config
from .runner import METRICS_FILE, run
from .scenarios import SCENARIOS, SCHEMES

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 2, 3

log = logging.getLogger("mlsw")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mlsw", description="Multilayer shallow-water benchmark runner")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a scenario")
    r.add_argument("--config", help="configuration file; flags override its values")
    r.add_argument("--scenario", choices=SCENARIOS)
    r.add_argument("--scheme", choices=SCHEMES)
    r.add_argument("--dt", type=float)
    r.add_argument("--theta", type=float)
    r.add_argument("--courant", type=float, help="target celerity Courant number (rk3)")
    r.add_argument("--layers", help="layer file, preset name or 'x_lo:x_hi:N[:l1,...];...' specification")
    r.add_argument("--tfinal", type=float)
    r.add_argument("--snapshots", help="comma-separated snapshot times")
    r.add_argument("--reference", help="directory caching reference runs; enables error metrics")
    r.add_argument("--tracer", action="store_true", help="also transport a passive tracer")
    r.add_argument("--out", help="output directory")
    r.add_argument("-v", "--verbose", action="store_true")
    v = sub.add_parser("validate", help="check a configuration file without running")
    v.add_argument("--config", required=True)
    return p


def _layers_arg(text: str) -> str:
    path = Path(text)
    if path.is_file():
        return ";".join(line.strip() for line in path.read_text().splitlines()
                        if line.strip() and not line.lstrip().startswith("#"))
    return text


def _run(args) -> int:
    name, over = (None, {})
    if args.config:
        name, over = read_config(args.config)
    if args.scenario:
        name = args.scenario
    if name is None:
        raise ConfigurationError("a scenario is required (--scenario or [scenario] name)")
    flags = {
        "scheme": args.scheme, "dt": args.dt, "theta": args.theta, "courant": args.courant,
        "t_final": args.tfinal, "reference_dir": args.reference, "out_dir": args.out,
    }
    over.update({k: v for k, v in flags.items() if v is not None})
    if args.layers:
        over["layers"] = _layers_arg(args.layers)
    if args.snapshots:
        over["snapshots"] = parse_floats(args.snapshots)
    if args.tracer:
        over["tracer"] = True
    cfg = make_config(name, over)
    if cfg.out_dir is None:
        raise ConfigurationError("an output directory is required (--out or [output] out_dir)")
    if "snapshots" not in over:
        cfg = cfg.with_(snapshots=())
    result = run(cfg)
    log.info("wrote %d files to %s", len(result.files), cfg.out_dir)
    print(Path(cfg.out_dir) / METRICS_FILE)
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.command == "validate":
            name, over = read_config(args.config)
            cfg = make_config(name, over)
            print(f"ok: {cfg.name}, {cfg.scheme}, {cfg.cells} cells, {cfg.layout().dof} degrees of freedom")
            return EXIT_OK
        return _run(args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SolverAbort, ClosureError) as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
