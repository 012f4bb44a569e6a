"""Command line interface.

    qtd run --scenario S.json [--out PATH] [--format csv|json] [--quiet]
    qtd run --preset reservoir-contact --format json --out traj.json
    qtd run --sweep A.json B.json --out DIR [--format csv|json]
    qtd check TRAJECTORY.json
    qtd presets [--dump NAME]
    qtd validate --scenario S.json

Exit codes: 0 ok, 1 invariant failure, 2 config error, 3 integration failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .dynamics import run as run_scenario
from .errors import ConfigError, IntegrationFailure, IoError, QTDError
from .io import emit, read_json
from .report import invariant_report
from .scenario import load_scenario, preset, preset_document, preset_names, PRESETS

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_INTEGRATION = 0, 1, 2, 3


def _load(args):
    if getattr(args, "preset", None):
        return preset(args.preset)
    if not args.scenario:
        raise ConfigError("one of --scenario or --preset is required", "$")
    return load_scenario(args.scenario)


def _run_one(scen, out, fmt, quiet) -> int:
    traj = run_scenario(scen)
    text = emit(traj, fmt, out)
    if out is None:
        sys.stdout.write(text)
    rep = invariant_report(traj)
    if not quiet:
        print(f"{scen.name or 'scenario'}: {len(traj)} records, status {traj.status}",
              file=sys.stderr)
        print(rep.text(), file=sys.stderr)
    return rep.exit_status


def _sweep_job(path: str, out_dir: str, fmt: str) -> tuple[str, int, str]:
    try:
        scen = load_scenario(path)
        traj = run_scenario(scen)
        dest = Path(out_dir) / f"{Path(path).stem}.{fmt}"
        emit(traj, fmt, dest)
        return path, invariant_report(traj).exit_status, str(dest)
    except ConfigError as exc:
        return path, EXIT_CONFIG, str(exc)
    except QTDError as exc:
        return path, EXIT_INTEGRATION, str(exc)


def cmd_run(args) -> int:
    if args.sweep:
        if not args.out:
            raise ConfigError("--sweep needs --out DIR", "--out")
        Path(args.out).mkdir(parents=True, exist_ok=True)
        workers = int(os.environ.get("QTD_THREADS", "0")) or None
        with ProcessPoolExecutor(max_workers=workers) as pool:
            jobs = [pool.submit(_sweep_job, p, args.out, args.format) for p in args.sweep]
            results = [j.result() for j in jobs]
        for path, code, msg in results:
            if not args.quiet:
                print(f"{path}: exit {code} ({msg})", file=sys.stderr)
        return max(code for _, code, _ in results)
    return _run_one(_load(args), args.out, args.format, args.quiet)


def cmd_check(args) -> int:
    traj = read_json(args.trajectory)
    rep = invariant_report(traj)
    if not args.quiet:
        print(rep.text())
    return rep.exit_status


def cmd_presets(args) -> int:
    if args.dump:
        print(json.dumps(preset_document(args.dump), indent=2))
        return EXIT_OK
    for name in preset_names():
        print(f"{name:<22} {PRESETS[name].get('description', '')}")
    return EXIT_OK


def cmd_validate(args) -> int:
    scen = _load(args)
    if not args.quiet:
        print(f"ok: {scen.name or args.scenario} (N={scen.dim}, mode={scen.environment.mode})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qtd", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate a scenario and emit the trajectory")
    r.add_argument("--scenario")
    r.add_argument("--preset", choices=preset_names())
    r.add_argument("--sweep", nargs="+", metavar="SCENARIO")
    r.add_argument("--out")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--quiet", action="store_true")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="invariant report on a stored JSON trajectory")
    c.add_argument("trajectory")
    c.add_argument("--quiet", action="store_true")
    c.set_defaults(func=cmd_check)

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.add_argument("--dump", metavar="NAME")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_presets)

    v = sub.add_parser("validate", help="parse and validate a scenario without running it")
    v.add_argument("--scenario")
    v.add_argument("--preset", choices=preset_names())
    v.add_argument("--quiet", action="store_true")
    v.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IntegrationFailure as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION
    except IoError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QTDError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
