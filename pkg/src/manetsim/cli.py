"""Command line: ``manetsim run|sweep|plotdata``."""

from __future__ import annotations

import argparse
import os
import sys
import time

from .config import ScenarioConfig, load_config
from .sweep import (emit_plotdata, expand_sweep, format_csv, load_sweep, preset_grid,
                    read_results, run_configs, write_results)

OUT_DIR_ENV = "MANETSIM_OUT_DIR"


def _out_dir(args) -> str:
    if args.out_dir:
        return args.out_dir
    return os.environ.get(OUT_DIR_ENV, "results")


def cmd_run(args) -> int:
    cfg = load_config(args.config) if args.config != "-" else ScenarioConfig()
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    if args.protocol:
        cfg = cfg.with_(protocol=args.protocol.upper())
    res = run_configs([cfg])
    out = _out_dir(args)
    path = write_results(res, out, "run")
    sys.stdout.write(format_csv(res.rows))
    print(f"wrote {path}", file=sys.stderr)
    return 1 if res.n_errors else 0


def cmd_sweep(args) -> int:
    if args.preset:
        spec = preset_grid(args.preset, args.seeds, args.horizon if args.horizon else 1800.0,
                          args.seed if args.seed is not None else 1)
    elif args.spec:
        spec = load_sweep(args.spec)
        if args.seed is not None:
            from dataclasses import replace
            spec = replace(spec, base_seed=args.seed)
    else:
        print("sweep: give a spec file or --preset", file=sys.stderr)
        return 2
    configs = expand_sweep(spec)
    print(f"{len(configs)} runs, {args.jobs} job(s)", file=sys.stderr)
    t0 = time.time()
    res = run_configs(configs, args.jobs)
    path = write_results(res, _out_dir(args))
    print(f"wrote {path} in {time.time() - t0:.1f} s; {res.n_errors} error(s)", file=sys.stderr)
    return 1 if res.n_errors else 0


def _group_by(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        for part in item.split(","):
            if not part.strip():
                continue
            if "=" not in part:
                raise SystemExit(f"--group-by expects key=value, got {part!r}")
            k, v = part.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def cmd_plotdata(args) -> int:
    rows = read_results(args.results)
    try:
        table = emit_plotdata(rows, _group_by(args.group_by), args.axis)
    except ValueError as exc:
        print(f"plotdata: {exc}", file=sys.stderr)
        return 2
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="manetsim", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run one scenario config ('-' for defaults)")
    r.add_argument("config")
    r.add_argument("--seed", type=int)
    r.add_argument("--protocol")
    r.add_argument("--out-dir")
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a sweep spec or a named preset")
    s.add_argument("spec", nargs="?")
    s.add_argument("--preset", choices=("lifetime", "pause", "scenarios"))
    s.add_argument("--seeds", type=int, help="replicates per point (presets)")
    s.add_argument("--horizon", type=float, help="horizon in seconds (presets)")
    s.add_argument("--seed", type=int, help="base seed")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--out-dir")
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("plotdata", help="lifetime-vs-axis table from a results CSV")
    d.add_argument("results")
    d.add_argument("--group-by", action="append", default=[], metavar="KEY=VALUE")
    d.add_argument("--axis", required=True)
    d.add_argument("--out")
    d.set_defaults(func=cmd_plotdata)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
