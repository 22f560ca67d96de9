"""Command line front end.

    rismec run   --config scenario.cfg [--set key=value]... --seed 7 --out dir/
    rismec sweep --axis tau --values 0.06:0.3:0.01 --seeds 50 [--out dir/]

`--set` accepts any configuration key (same syntax as the config file) and
wins over the file. Sweep axes: `tau` (slot duration, seconds), `perr:TYPE`
with TYPE one of INI_U, INI_R, SET_U, SET_R, and `ce` with values given as
`C_CE:MU` pairs. Value lists are comma separated; `lo:hi:step` expands to an
inclusive range.
"""

from __future__ import annotations

import argparse
import pathlib
import sys
from typing import List, Optional

import numpy as np

from .engine import run, summary_to_csv, sweep, trace_to_csv
from .scenario import ConfigError, config_metadata, load_config


def _load(args) -> "ScenarioConfig":
    text = ""
    if args.config:
        text = pathlib.Path(args.config).read_text()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        overrides[key.strip()] = val.strip()
    return load_config(text, overrides)


def _parse_values(spec: str, axis: str) -> List:
    if axis == "ce":
        return [v for v in spec.split(",") if v]
    vals: List[float] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            lo, hi, step = (float(x) for x in part.split(":"))
            n = int(round((hi - lo) / step)) + 1
            vals.extend(lo + i * step for i in range(n))
        else:
            vals.append(float(part))
    return vals


def _cmd_run(args) -> int:
    cfg = _load(args)
    if args.seed is not None:
        cfg = cfg.with_overrides(rng_seed=args.seed)
    chan_log = [] if args.dump_channels else None
    result = run(cfg, channel_log=chan_log)
    if args.dump_channels:
        from .channel import dump_direct_csv
        pathlib.Path(args.dump_channels).write_text(dump_direct_csv(chan_log))
    s = result.summary
    print(f"slots={cfg.num_slots} seed={cfg.rng_seed}")
    print(f"mean energy per slot  : {s.mean_energy:.6e} J")
    print(f"mean power            : {s.mean_power:.6e} W")
    print(f"max final latency     : {s.max_final_latency * 1e3:.3f} ms "
          f"(bound {cfg.latency_bound * 1e3:.0f} ms, "
          f"{'violated' if s.constraint_violated else 'met'})")
    t = s.timing
    print(f"slot split            : ini {t.tau_ini * 1e3:.4f} | "
          f"ce {t.tau_ce * 1e3:.4f} | ra {t.tau_ra * 1e3:.4f} | "
          f"set {t.tau_set * 1e3:.4f} | pay {t.tau_pay * 1e3:.4f} ms")
    if args.out:
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(trace_to_csv(result))
        # single-run summary: one row via the sweep writer for a uniform schema
        from .engine import SweepRow
        rows = [SweepRow(axis="run", value=cfg.slot, seed=cfg.rng_seed,
                         mean_energy=s.mean_energy, mean_power=s.mean_power,
                         max_final_latency=s.max_final_latency,
                         constraint_violated=s.constraint_violated)]
        (out / "summary.csv").write_text(summary_to_csv(rows, meta=s.metadata))
        print(f"wrote {out / 'trace.csv'} and {out / 'summary.csv'}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load(args)
    values = _parse_values(args.values, args.axis)
    rows = sweep(cfg, args.axis, values, args.seeds, workers=args.workers)
    meta = config_metadata(cfg)
    text = summary_to_csv(rows, meta=meta)
    if args.out:
        out = pathlib.Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(text)
        print(f"wrote {out / 'summary.csv'} ({len(rows)} rows)")
    else:
        sys.stdout.write(text)
    ok = [r for r in rows if not r.error]
    if ok:
        by_val = {}
        for r in ok:
            by_val.setdefault(r.value, []).append(r)
        print(f"# {len(ok)} runs over {len(by_val)} points", file=sys.stderr)
        for v, grp in by_val.items():
            lat = np.mean([g.max_final_latency for g in grp])
            en = np.mean([g.mean_energy for g in grp])
            print(f"#   {args.axis}={v}: latency {lat * 1e3:.1f} ms, "
                  f"energy {en * 1e3:.4f} mJ", file=sys.stderr)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="rismec", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario")
    p_run.add_argument("--config", help="key=value scenario file")
    p_run.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override any configuration key")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", help="directory for trace.csv / summary.csv")
    p_run.add_argument("--dump-channels", metavar="FILE",
                       help="debug: write raw direct channels as CSV")
    p_run.set_defaults(func=_cmd_run)

    p_sw = sub.add_parser("sweep", help="sweep one axis over values x seeds")
    p_sw.add_argument("--config", help="key=value scenario file")
    p_sw.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_sw.add_argument("--axis", required=True,
                      help="tau | perr:INI_U|INI_R|SET_U|SET_R | ce")
    p_sw.add_argument("--values", required=True,
                      help="comma list, lo:hi:step ranges, or C:MU pairs")
    p_sw.add_argument("--seeds", type=int, default=50)
    p_sw.add_argument("--workers", type=int, default=None)
    p_sw.add_argument("--out", help="directory for summary.csv")
    p_sw.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
