"""Data series and rendering for the standard result figures.

Input is the stats CSV schema exported by the simulator: one row per
(variant, trace, core, seed) with raw counters plus derived metrics, and,
for sweep outputs, trailing ``axis``/``axis_value`` columns. Each figure
kind has a pure series function so the numbers behind a plot can be tested
and reproduced without touching an image file.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

FIGURE_KINDS = ("ablation", "delta", "breakdown", "bandwidth", "accuracy")

BASELINE = "baseline"

SPEC_LOCATIONS = ("l1d", "l2", "llc", "dram")

_REQUIRED = {
    "ablation": ("variant", "trace", "cycles", "llc_mpki"),
    "delta": ("variant", "dram_transactions"),
    "breakdown": ("variant", "spec_issued", "spec_loc_l1d", "spec_loc_l2",
                  "spec_loc_llc", "spec_loc_dram"),
    "bandwidth": ("variant", "cycles", "axis", "axis_value"),
    "accuracy": ("variant", "l1d_pf_accuracy"),
}


class SchemaError(Exception):
    """Input CSV does not match the documented stats schema."""


@dataclass
class FigureSpec:
    kind: str
    csv_paths: list
    out: str
    group_by: str = "variant"
    title: str = ""

    def validate(self):
        if self.kind not in FIGURE_KINDS:
            raise SchemaError(f"unknown figure kind {self.kind!r}; "
                              f"expected one of {', '.join(FIGURE_KINDS)}")
        if not self.csv_paths:
            raise SchemaError("no input CSVs given")


def load_rows(paths):
    """Read and concatenate stats CSVs, preserving row order."""
    rows = []
    for path in paths:
        try:
            with open(path, newline="") as f:
                reader = csv.DictReader(f)
                if reader.fieldnames is None:
                    raise SchemaError(f"{path}: empty CSV")
                rows.extend(reader)
        except OSError as e:
            raise SchemaError(f"cannot read {path}: {e}") from e
    if not rows:
        raise SchemaError("input CSVs contain no data rows")
    return rows


def _require(rows, kind):
    missing = [c for c in _REQUIRED[kind] if c not in rows[0]]
    if missing:
        raise SchemaError(
            f"{kind} figure: missing columns {', '.join(missing)}")


def _ordered_values(rows, column):
    seen = []
    for r in rows:
        v = r[column]
        if v not in seen:
            seen.append(v)
    return seen


def _mean(values):
    return sum(values) / len(values)


def _mean_of(rows, column):
    return _mean([float(r[column]) for r in rows])


def _by(rows, column, value):
    return [r for r in rows if r[column] == value]


# ---------------------------------------------------------------------------
# Series builders (pure functions of CSV rows)
# ---------------------------------------------------------------------------

def ablation_series(rows):
    """Per-variant speedup over the baseline, per trace group.

    Returns (traces, variants, speedup) where ``speedup[variant]`` is a list
    aligned with ``traces``. Traces are ordered by increasing baseline LLC
    MPKI; variants keep their CSV appearance order.
    """
    _require(rows, "ablation")
    variants = _ordered_values(rows, "variant")
    if BASELINE not in variants:
        raise SchemaError("ablation figure needs baseline rows")
    traces = _ordered_values(rows, "trace")
    base = {t: _by(_by(rows, "variant", BASELINE), "trace", t)
            for t in traces}
    for t, group in base.items():
        if not group:
            raise SchemaError(f"trace {t!r} has no baseline rows")
    traces.sort(key=lambda t: _mean_of(base[t], "llc_mpki"))
    speedup = {}
    for v in variants:
        vals = []
        for t in traces:
            group = _by(_by(rows, "variant", v), "trace", t)
            if not group:
                raise SchemaError(f"trace {t!r} has no rows for {v!r}")
            vals.append(_mean_of(base[t], "cycles")
                        / _mean_of(group, "cycles"))
        speedup[v] = vals
    return traces, variants, speedup


def delta_series(rows):
    """Percent change in DRAM transactions vs the baseline, per variant.

    The baseline's own bar is exactly 0.
    """
    _require(rows, "delta")
    variants = _ordered_values(rows, "variant")
    if BASELINE not in variants:
        raise SchemaError("delta figure needs baseline rows")
    base = _mean_of(_by(rows, "variant", BASELINE), "dram_transactions")
    if base == 0:
        raise SchemaError("baseline has zero DRAM transactions")
    deltas = {}
    for v in variants:
        if v == BASELINE:
            deltas[v] = 0.0
            continue
        tx = _mean_of(_by(rows, "variant", v), "dram_transactions")
        deltas[v] = 100.0 * (tx - base) / base
    return variants, deltas


def breakdown_series(rows):
    """Where speculative requests found their data, as percentages.

    Returns (variants, shares) with ``shares[variant]`` a dict over
    l1d/l2/llc/dram summing to 100. Variants that issued no speculative
    requests are omitted.
    """
    _require(rows, "breakdown")
    shares = {}
    for v in _ordered_values(rows, "variant"):
        group = _by(rows, "variant", v)
        issued = sum(int(r["spec_issued"]) for r in group)
        if issued == 0:
            continue
        counts = {loc: sum(int(r[f"spec_loc_{loc}"]) for r in group)
                  for loc in SPEC_LOCATIONS}
        total = sum(counts.values())
        if total != issued:
            raise SchemaError(
                f"{v}: speculative locations sum to {total}, "
                f"but {issued} were issued")
        shares[v] = {loc: 100.0 * n / total for loc, n in counts.items()}
    if not shares:
        raise SchemaError("no variant issued speculative requests")
    return list(shares), shares


def bandwidth_series(rows):
    """Mean cycles per variant across a bandwidth sweep.

    Returns (values, cycles) where ``values`` is the ascending bandwidth
    axis and ``cycles[variant]`` aligns with it.
    """
    _require(rows, "bandwidth")
    rows = [r for r in rows if r["axis"] == "dram_bw"]
    if not rows:
        raise SchemaError("bandwidth figure needs axis=dram_bw sweep rows")
    values = sorted({float(r["axis_value"]) for r in rows})
    cycles = {}
    for v in _ordered_values(rows, "variant"):
        group = _by(rows, "variant", v)
        per_value = []
        for val in values:
            sub = [r for r in group if float(r["axis_value"]) == val]
            if not sub:
                raise SchemaError(f"{v}: no rows at bandwidth {val}")
            per_value.append(_mean_of(sub, "cycles"))
        cycles[v] = per_value
    return values, cycles


def accuracy_series(rows):
    """Mean L1D prefetch accuracy per variant; empty cells are skipped."""
    _require(rows, "accuracy")
    acc = {}
    for v in _ordered_values(rows, "variant"):
        vals = [float(r["l1d_pf_accuracy"])
                for r in _by(rows, "variant", v)
                if r["l1d_pf_accuracy"] != ""]
        if vals:
            acc[v] = _mean(vals)
    if not acc:
        raise SchemaError("no rows carry a prefetch accuracy")
    return list(acc), acc


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

_LOC_COLORS = {"l1d": "#4c72b0", "l2": "#55a868",
               "llc": "#c44e52", "dram": "#8172b2"}


def _finish(fig, spec):
    fig.tight_layout()
    fig.savefig(spec.out, dpi=120)
    plt.close(fig)
    return spec.out


def _render_ablation(rows, spec):
    traces, variants, speedup = ablation_series(rows)
    fig, ax = plt.subplots(figsize=(1.2 + 1.4 * len(traces), 3.6))
    width = 0.8 / len(variants)
    for i, v in enumerate(variants):
        xs = [t + i * width for t in range(len(traces))]
        ax.bar(xs, speedup[v], width=width, label=v)
    ax.set_xticks([t + 0.4 - width / 2 for t in range(len(traces))])
    ax.set_xticklabels(traces, rotation=20, ha="right", fontsize=8)
    ax.axhline(1.0, color="grey", lw=0.8)
    ax.set_ylabel("speedup over baseline")
    ax.legend(fontsize=7, ncol=2)
    return _finish(fig, spec)


def _render_delta(rows, spec):
    variants, deltas = delta_series(rows)
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * len(variants), 3.6))
    bars = [deltas[v] for v in variants]
    ax.bar(range(len(variants)), bars,
           color=["#999999" if v == BASELINE else "#4c72b0"
                  for v in variants])
    ax.axhline(0.0, color="black", lw=0.8)
    ax.set_xticks(range(len(variants)))
    ax.set_xticklabels(variants, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("DRAM transactions vs baseline (%)")
    return _finish(fig, spec)


def _render_breakdown(rows, spec):
    variants, shares = breakdown_series(rows)
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * len(variants), 3.6))
    bottom = [0.0] * len(variants)
    for loc in SPEC_LOCATIONS:
        vals = [shares[v][loc] for v in variants]
        ax.bar(range(len(variants)), vals, bottom=bottom,
               color=_LOC_COLORS[loc], label=loc)
        bottom = [b + x for b, x in zip(bottom, vals)]
    ax.set_xticks(range(len(variants)))
    ax.set_xticklabels(variants, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("speculative requests served at (%)")
    ax.set_ylim(0, 100)
    ax.legend(fontsize=7, ncol=4)
    return _finish(fig, spec)


def _render_bandwidth(rows, spec):
    values, cycles = bandwidth_series(rows)
    fig, ax = plt.subplots(figsize=(4.8, 3.6))
    for v, ys in cycles.items():
        ax.plot(values, ys, marker="o", label=v)
    ax.set_xscale("log", base=2)
    ax.set_xticks(values)
    ax.set_xticklabels([f"{v:g}" for v in values])
    ax.set_xlabel("DRAM bandwidth per core (GB/s)")
    ax.set_ylabel("cycles")
    ax.legend(fontsize=8)
    return _finish(fig, spec)


def _render_accuracy(rows, spec):
    variants, acc = accuracy_series(rows)
    fig, ax = plt.subplots(figsize=(1.0 + 0.8 * len(variants), 3.6))
    ax.bar(range(len(variants)), [100 * acc[v] for v in variants],
           color="#55a868")
    ax.set_xticks(range(len(variants)))
    ax.set_xticklabels(variants, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("L1D prefetch accuracy (%)")
    ax.set_ylim(0, 100)
    return _finish(fig, spec)


_RENDERERS = {
    "ablation": _render_ablation,
    "delta": _render_delta,
    "breakdown": _render_breakdown,
    "bandwidth": _render_bandwidth,
    "accuracy": _render_accuracy,
}


def render(spec: FigureSpec) -> str:
    """Render one figure; returns the output path."""
    spec.validate()
    rows = load_rows(spec.csv_paths)
    return _RENDERERS[spec.kind](rows, spec)
