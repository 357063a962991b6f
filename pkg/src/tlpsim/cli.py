"""Experiment driver: trace generation, runs, ablations, sweeps, reports.

Config files are INI-style sectioned key-value text (see ``example.ini`` in
the repo or the README); command-line flags override file values. Exit
codes: 0 ok, 2 usage, 3 config, 4 I/O, 5 internal invariant violation.
"""

from __future__ import annotations

import argparse
import configparser
import os
import subprocess
import sys

from .engine import ConfigError, SimConfig, simulate, simulate_multicore
from .memhier import CacheGeometry
from .offchip import VARIANTS
from .perceptron import PerceptronConfig
from .stats import export_csv, export_json, stats_row
from .trace import (Pattern, SyntheticSpec, TraceError, generate, read_trace,
                    write_trace)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_IO = 4
EXIT_INTERNAL = 5

OUT_DIR_ENV = "TLPSIM_OUT"

SWEEP_AXES = ("tau_high", "tau_low", "tau_pref", "theta_train", "dram_bw")


class UsageError(Exception):
    pass


def _out_path(path):
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        os.makedirs(base, exist_ok=True)
        return os.path.join(base, path)
    return path


def parse_size(text):
    """Parse '64', '32K', '1M', '2G' into bytes."""
    t = text.strip().upper()
    mult = 1
    if t.endswith(("K", "M", "G")):
        mult = {"K": 1 << 10, "M": 1 << 20, "G": 1 << 30}[t[-1]]
        t = t[:-1]
    return int(t) * mult


# ---------------------------------------------------------------------------
# Config loading
# ---------------------------------------------------------------------------

def load_config(path=None, overrides=None) -> SimConfig:
    cfg = SimConfig()
    bad_keys = []
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise OSError(f"cannot read config file {path}")
        c = parser
        def geti(sec, key, default):
            return c.getint(sec, key, fallback=default)
        l1 = cfg.l1d
        cfg.l1d = CacheGeometry(
            geti("caches", "l1d_kb", l1.capacity // 1024) * 1024,
            geti("caches", "l1d_ways", l1.associativity),
            geti("caches", "l1d_latency", l1.hit_latency),
            geti("caches", "l1d_mshr", l1.mshr_entries))
        l2 = cfg.l2
        cfg.l2 = CacheGeometry(
            geti("caches", "l2_kb", l2.capacity // 1024) * 1024,
            geti("caches", "l2_ways", l2.associativity),
            geti("caches", "l2_latency", l2.hit_latency),
            geti("caches", "l2_mshr", l2.mshr_entries))
        cfg.llc_per_core_kb = geti("caches", "llc_per_core_kb",
                                   cfg.llc_per_core_kb)
        cfg.llc_latency = geti("caches", "llc_latency", cfg.llc_latency)
        cfg.dram_gbps_per_core = c.getfloat("dram", "gbps_per_core",
                                            fallback=cfg.dram_gbps_per_core)
        cfg.freq_ghz = c.getfloat("dram", "freq_ghz", fallback=cfg.freq_ghz)
        cfg.dram_service_latency = geti("dram", "service_latency",
                                        cfg.dram_service_latency)
        cfg.l1d_prefetcher = c.get("prefetch", "l1d",
                                   fallback=cfg.l1d_prefetcher)
        cfg.l1d_prefetch_degree = geti("prefetch", "degree",
                                       cfg.l1d_prefetch_degree)
        cfg.l2_prefetcher = c.get("prefetch", "l2", fallback=cfg.l2_prefetcher)
        cfg.variant = c.get("predictor", "variant", fallback=cfg.variant)
        p = cfg.perceptron
        p.tau_high = geti("predictor", "tau_high", p.tau_high)
        p.tau_low = geti("predictor", "tau_low", p.tau_low)
        p.tau_pref = geti("predictor", "tau_pref", p.tau_pref)
        p.theta_train = geti("predictor", "theta_train", p.theta_train)
        for feature in list(p.table_bits):
            p.table_bits[feature] = geti("predictor",
                                         f"table_bits_{feature}",
                                         p.table_bits[feature])
        cfg.cores = geti("engine", "cores", cfg.cores)
        cfg.window = geti("engine", "window", cfg.window)
        cfg.page_size = geti("engine", "page_size", cfg.page_size)
        seed = c.get("engine", "page_seed", fallback="")
        cfg.page_seed = int(seed) if seed else None
        known = {"caches", "dram", "prefetch", "predictor", "engine"}
        for sec in parser.sections():
            if sec not in known:
                bad_keys.append(f"[{sec}]")
    if bad_keys:
        raise ConfigError("unknown config sections: " + ", ".join(bad_keys))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "variant":
            cfg.variant = value
        elif key == "dram_gbps":
            cfg.dram_gbps_per_core = value
        elif key == "l1d_prefetcher":
            cfg.l1d_prefetcher = value
        elif key in ("tau_high", "tau_low", "tau_pref", "theta_train"):
            setattr(cfg.perceptron, key, value)
        elif key == "cores":
            cfg.cores = value
        elif key == "llc_latency":
            cfg.llc_latency = value
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def parse_component(text):
    """Parse 'kind,weight=1,footprint=64M,stride=64,exponent=0.8,pcs=1'."""
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise UsageError("empty component spec")
    kind = parts[0]
    weight = 1.0
    kw = {}
    for p in parts[1:]:
        if "=" not in p:
            raise UsageError(f"bad component field {p!r}; expected key=value")
        k, v = p.split("=", 1)
        k = k.strip()
        if k == "weight":
            weight = float(v)
        elif k == "footprint":
            kw["footprint"] = parse_size(v)
        elif k == "stride":
            kw["stride"] = parse_size(v)
        elif k == "exponent":
            kw["exponent"] = float(v)
        elif k == "pcs":
            kw["pc_count"] = int(v)
        elif k == "repeat":
            kw["repeat"] = float(v)
        elif k == "repeat_min":
            kw["repeat_min"] = int(v)
        elif k == "repeat_max":
            kw["repeat_max"] = int(v)
        elif k == "stream_footprint":
            kw["stream_footprint"] = parse_size(v)
        elif k == "phase_len":
            kw["phase_len"] = int(v)
        elif k == "stream_fraction":
            kw["stream_fraction"] = float(v)
        elif k == "flip_at":
            kw["flip_at"] = int(v)
        else:
            raise UsageError(f"unknown component field {k!r}")
    return weight, Pattern(kind, **kw)


def build_spec(args) -> SyntheticSpec:
    if args.component:
        patterns = tuple(parse_component(c) for c in args.component)
    else:
        kw = {}
        if args.footprint:
            kw["footprint"] = parse_size(args.footprint)
        if args.stride:
            kw["stride"] = parse_size(args.stride)
        if args.exponent is not None:
            kw["exponent"] = args.exponent
        if args.pcs:
            kw["pc_count"] = args.pcs
        patterns = ((1.0, Pattern(args.pattern, **kw)),)
    return SyntheticSpec(patterns=patterns, record_count=args.records,
                         seed=args.seed, mean_gap=args.mean_gap,
                         store_fraction=args.store_fraction)


def cmd_gen(args):
    try:
        spec = build_spec(args)
        spec.validate()
    except TraceError as e:
        raise UsageError(str(e))
    out = _out_path(args.out)
    n = write_trace(out, generate(spec))
    footprint = sum(p.footprint for _, p in spec.patterns)
    print(f"wrote {out}: {n} records, "
          f"{os.path.getsize(out)} bytes, footprint {footprint} bytes")
    return EXIT_OK


# ---------------------------------------------------------------------------
# run / ablate / sweep
# ---------------------------------------------------------------------------

def _run_one(cfg: SimConfig, trace_paths, seed=0):
    """Run one simulation (single- or multi-core); returns stats rows."""
    if len(trace_paths) == 1 and cfg.cores == 1:
        st = simulate(read_trace(trace_paths[0]), cfg)
        return [stats_row(st, variant=cfg.variant,
                          trace=os.path.basename(trace_paths[0]), seed=seed)]
    cfg.cores = len(trace_paths)
    all_stats = simulate_multicore(
        [list(read_trace(p)) for p in trace_paths], cfg)
    return [stats_row(st, variant=cfg.variant,
                      trace=os.path.basename(trace_paths[i]), core=i,
                      seed=seed)
            for i, st in enumerate(all_stats)]


def _write_outputs(rows, cfg, out_prefix, extra_columns=()):
    csv_path = _out_path(out_prefix + ".csv")
    json_path = _out_path(out_prefix + ".json")
    export_csv(rows, csv_path, extra_columns=extra_columns)
    export_json(rows, cfg.to_dict(), json_path)
    print(f"wrote {csv_path} and {json_path}")


def cmd_run(args):
    cfg = load_config(args.config, _overrides(args))
    for p in args.trace:
        if not os.path.exists(p):
            raise OSError(f"missing trace {p}")
    rows = _run_one(cfg, args.trace)
    _write_outputs(rows, cfg, args.out)
    return EXIT_OK


def _ablate_job(task):
    variant, config_path, overrides, trace_paths = task
    cfg = load_config(config_path, overrides)
    cfg.variant = variant
    return [dict(r) for r in _run_one(cfg, trace_paths)]


def cmd_ablate(args):
    overrides = _overrides(args)
    overrides.pop("variant", None)
    for p in args.trace:
        if not os.path.exists(p):
            raise OSError(f"missing trace {p}")
    tasks = [(v, args.config, overrides, args.trace) for v in VARIANTS]
    results = _fan_out(_ablate_job, tasks, args.jobs)
    rows = [r for batch in results for r in batch]
    cfg = load_config(args.config, overrides)
    _write_outputs(rows, cfg, args.out)
    return EXIT_OK


def _sweep_job(task):
    axis, value, config_path, overrides, trace_paths = task
    overrides = dict(overrides)
    if axis == "dram_bw":
        overrides["dram_gbps"] = value
    else:
        overrides[axis] = int(value)
    cfg = load_config(config_path, overrides)
    rows = _run_one(cfg, trace_paths)
    for r in rows:
        r["axis"] = axis
        r["axis_value"] = value
    return rows


def cmd_sweep(args):
    if args.axis not in SWEEP_AXES:
        raise UsageError(f"axis must be one of {SWEEP_AXES}")
    try:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    except ValueError as e:
        raise UsageError(f"bad sweep values: {e}")
    if not values:
        raise UsageError("no sweep values given")
    variants = (args.variants.split(",") if args.variants
                else [load_config(args.config, _overrides(args)).variant])
    overrides = _overrides(args)
    tasks = []
    for v in values:
        for var in variants:
            o = dict(overrides)
            o["variant"] = var
            tasks.append((args.axis, v, args.config, o, args.trace))
    results = _fan_out(_sweep_job, tasks, args.jobs)
    rows = [r for batch in results for r in batch]
    cfg = load_config(args.config, _overrides(args))
    _write_outputs(rows, cfg, args.out, extra_columns=("axis", "axis_value"))
    return EXIT_OK


def _fan_out(fn, tasks, jobs):
    """Run tasks serially or across processes; result order = manifest order."""
    if jobs and jobs > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, tasks))
    return [fn(t) for t in tasks]


def cmd_report(args):
    cmd = [sys.executable, "-m", "tlpplots", args.kind, "--out",
           _out_path(args.out)] + args.csv
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True)
    except FileNotFoundError as e:
        raise OSError(f"cannot launch plot tool: {e}")
    if proc.returncode != 0:
        sys.stderr.write(proc.stderr)
        raise OSError("plot tool failed; is the tlpplots package installed?")
    sys.stdout.write(proc.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------

def _overrides(args):
    return {
        "variant": getattr(args, "variant", None),
        "dram_gbps": getattr(args, "dram_gbps", None),
        "l1d_prefetcher": getattr(args, "l1d_prefetcher", None),
        "tau_high": getattr(args, "tau_high", None),
        "tau_low": getattr(args, "tau_low", None),
        "tau_pref": getattr(args, "tau_pref", None),
        "theta_train": getattr(args, "theta_train", None),
        "llc_latency": getattr(args, "llc_latency", None),
    }


def _add_run_flags(p):
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--dram-gbps", dest="dram_gbps", type=float)
    p.add_argument("--l1d-prefetcher", dest="l1d_prefetcher",
                   choices=["none", "next_line", "ip_stride"])
    p.add_argument("--tau-high", dest="tau_high", type=int)
    p.add_argument("--tau-low", dest="tau_low", type=int)
    p.add_argument("--tau-pref", dest="tau_pref", type=int)
    p.add_argument("--theta-train", dest="theta_train", type=int)
    p.add_argument("--llc-latency", dest="llc_latency", type=int)
    p.add_argument("--jobs", type=int, default=1)


def build_parser():
    ap = argparse.ArgumentParser(prog="tlpsim")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic trace")
    g.add_argument("--pattern", default="stream",
                   choices=["stream", "strided", "pointer_chase", "uniform",
                            "phased", "flip"])
    g.add_argument("--component", action="append",
                   help="mixed workload component, e.g. "
                        "'pointer_chase,weight=3,footprint=64M,exponent=0.8'")
    g.add_argument("--records", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--footprint", default=None)
    g.add_argument("--stride", default=None)
    g.add_argument("--exponent", type=float, default=None)
    g.add_argument("--pcs", type=int, default=None)
    g.add_argument("--mean-gap", dest="mean_gap", type=int, default=8)
    g.add_argument("--store-fraction", dest="store_fraction", type=float,
                   default=0.0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="run one simulation")
    r.add_argument("trace", nargs="+")
    r.add_argument("--out", required=True, help="output prefix (.csv/.json)")
    _add_run_flags(r)
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("ablate", help="run all predictor variants")
    a.add_argument("trace", nargs="+")
    a.add_argument("--out", required=True)
    _add_run_flags(a)
    a.set_defaults(func=cmd_ablate)

    s = sub.add_parser("sweep", help="sweep a threshold or bandwidth axis")
    s.add_argument("trace", nargs="+")
    s.add_argument("--axis", required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.add_argument("--variants", default=None,
                   help="comma-separated variant list (default: config's)")
    s.add_argument("--out", required=True)
    _add_run_flags(s)
    s.set_defaults(func=cmd_sweep)

    rep = sub.add_parser("report", help="render figures from stats CSVs")
    rep.add_argument("csv", nargs="+")
    rep.add_argument("--kind", required=True,
                     choices=["ablation", "delta", "breakdown", "bandwidth",
                              "accuracy"])
    rep.add_argument("--out", required=True)
    rep.set_defaults(func=cmd_report)
    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, TraceError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except AssertionError as e:
        print(f"internal invariant violation: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
