"""Run counters, derived metrics, and CSV/JSON export.

One SimStats instance backs a single simulated core; multi-core runs keep a
per-core list plus shared-resource counters on the first core's owner. All
derived metrics live here so exports and figures share one definition.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

LEVELS = ("l1d", "l2", "llc")
SPEC_LOCATIONS = ("l1d", "l2", "llc", "dram")


class MetricError(Exception):
    """A metric was requested with an undefined denominator."""


@dataclass
class SimStats:
    instructions: int = 0
    cycles: int = 0
    demand_accesses: int = 0

    accesses: dict = field(default_factory=lambda: {l: 0 for l in LEVELS})
    hits: dict = field(default_factory=lambda: {l: 0 for l in LEVELS})
    misses: dict = field(default_factory=lambda: {l: 0 for l in LEVELS})
    demand_served: dict = field(
        default_factory=lambda: {l: 0 for l in ("l1d", "l2", "llc", "dram")})

    dram_demand_reads: int = 0
    dram_prefetch_reads: int = 0
    dram_speculative_reads: int = 0
    dram_merged: int = 0
    dram_writebacks: int = 0

    speculative_issued: int = 0
    speculative_location: dict = field(
        default_factory=lambda: {l: 0 for l in SPEC_LOCATIONS})

    prefetch_emitted: dict = field(default_factory=lambda: {"l1d": 0, "l2": 0})
    prefetch_dropped: dict = field(default_factory=lambda: {"l1d": 0, "l2": 0})
    prefetch_issued: dict = field(default_factory=lambda: {"l1d": 0, "l2": 0})
    prefetch_filled: dict = field(default_factory=lambda: {"l1d": 0, "l2": 0})
    prefetch_useful: dict = field(default_factory=lambda: {"l1d": 0, "l2": 0})
    prefetch_useless: dict = field(default_factory=lambda: {"l1d": 0, "l2": 0})

    def dram_reads_total(self):
        return (self.dram_demand_reads + self.dram_prefetch_reads
                + self.dram_speculative_reads)

    def dram_transactions(self):
        return self.dram_reads_total() + self.dram_writebacks

    def check_invariants(self):
        for l in LEVELS:
            assert self.hits[l] + self.misses[l] == self.accesses[l], l
        assert (sum(self.speculative_location.values())
                == self.speculative_issued)
        for l in ("l1d", "l2"):
            assert (self.prefetch_issued[l] + self.prefetch_dropped[l]
                    == self.prefetch_emitted[l]), l
            assert (self.prefetch_useful[l] + self.prefetch_useless[l]
                    == self.prefetch_filled[l]), l
        assert (sum(self.demand_served.values()) == self.demand_accesses)


def mpki(misses: int, instructions: int) -> float:
    if instructions <= 0:
        raise MetricError("MPKI undefined for zero instructions")
    return misses * 1000.0 / instructions


def ipc(stats: SimStats) -> float:
    if stats.cycles <= 0:
        raise MetricError("IPC undefined for zero cycles")
    return stats.instructions / stats.cycles


def prefetch_accuracy(stats: SimStats, level: str):
    """Useful fills over total fills; None when nothing was filled."""
    filled = stats.prefetch_filled[level]
    if filled == 0:
        return None
    return stats.prefetch_useful[level] / filled


def dram_delta(run: SimStats, baseline: SimStats) -> float:
    base = baseline.dram_transactions()
    if base == 0:
        raise MetricError("dram_delta undefined for a zero-transaction baseline")
    return (run.dram_transactions() - base) / base


def weighted_speedup(mix_ipcs, solo_ipcs, baseline_mix_ipcs,
                     baseline_solo_ipcs) -> float:
    """Sum of IPC_shared/IPC_single normalized by the baseline's sum."""
    if not (len(mix_ipcs) == len(solo_ipcs) == len(baseline_mix_ipcs)
            == len(baseline_solo_ipcs)):
        raise MetricError("workload sets must be consistent across runs")
    num = sum(m / s for m, s in zip(mix_ipcs, solo_ipcs))
    den = sum(m / s for m, s in zip(baseline_mix_ipcs, baseline_solo_ipcs))
    if den == 0:
        raise MetricError("baseline weighted IPC is zero")
    return num / den


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

CSV_COLUMNS = [
    "variant", "trace", "core", "seed",
    "instructions", "cycles", "ipc",
    "l1d_accesses", "l1d_hits", "l1d_misses", "l1d_mpki",
    "l2_accesses", "l2_hits", "l2_misses", "l2_mpki",
    "llc_accesses", "llc_hits", "llc_misses", "llc_mpki",
    "served_l1d", "served_l2", "served_llc", "served_dram",
    "dram_demand_reads", "dram_prefetch_reads", "dram_speculative_reads",
    "dram_merged", "dram_writebacks", "dram_reads_total", "dram_transactions",
    "spec_issued", "spec_loc_l1d", "spec_loc_l2", "spec_loc_llc",
    "spec_loc_dram",
    "l1d_pf_emitted", "l1d_pf_dropped", "l1d_pf_issued", "l1d_pf_filled",
    "l1d_pf_useful", "l1d_pf_useless", "l1d_pf_accuracy",
    "l2_pf_emitted", "l2_pf_dropped", "l2_pf_issued", "l2_pf_filled",
    "l2_pf_useful", "l2_pf_useless",
    "ppki_issued", "ppki_filled",
]


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def stats_row(stats: SimStats, variant="", trace="", core=0, seed=0) -> dict:
    s = stats
    row = {
        "variant": variant, "trace": trace, "core": core, "seed": seed,
        "instructions": s.instructions, "cycles": s.cycles,
        "ipc": s.instructions / s.cycles if s.cycles else None,
    }
    for l in LEVELS:
        row[f"{l}_accesses"] = s.accesses[l]
        row[f"{l}_hits"] = s.hits[l]
        row[f"{l}_misses"] = s.misses[l]
        row[f"{l}_mpki"] = (mpki(s.misses[l], s.instructions)
                            if s.instructions else None)
    for l in ("l1d", "l2", "llc", "dram"):
        row[f"served_{l}"] = s.demand_served[l]
    row.update({
        "dram_demand_reads": s.dram_demand_reads,
        "dram_prefetch_reads": s.dram_prefetch_reads,
        "dram_speculative_reads": s.dram_speculative_reads,
        "dram_merged": s.dram_merged,
        "dram_writebacks": s.dram_writebacks,
        "dram_reads_total": s.dram_reads_total(),
        "dram_transactions": s.dram_transactions(),
        "spec_issued": s.speculative_issued,
    })
    for l in SPEC_LOCATIONS:
        row[f"spec_loc_{l}"] = s.speculative_location[l]
    for l in ("l1d", "l2"):
        row[f"{l}_pf_emitted"] = s.prefetch_emitted[l]
        row[f"{l}_pf_dropped"] = s.prefetch_dropped[l]
        row[f"{l}_pf_issued"] = s.prefetch_issued[l]
        row[f"{l}_pf_filled"] = s.prefetch_filled[l]
        row[f"{l}_pf_useful"] = s.prefetch_useful[l]
        row[f"{l}_pf_useless"] = s.prefetch_useless[l]
    row["l1d_pf_accuracy"] = prefetch_accuracy(s, "l1d")
    kinstr = s.instructions / 1000.0 if s.instructions else None
    row["ppki_issued"] = (s.prefetch_issued["l1d"] / kinstr) if kinstr else None
    row["ppki_filled"] = (s.prefetch_filled["l1d"] / kinstr) if kinstr else None
    return row


def export_csv(rows, path, extra_columns=()):
    """Write rows (dicts keyed by CSV_COLUMNS) with a fixed column order.

    Identical rows always produce byte-identical files.
    """
    columns = CSV_COLUMNS + list(extra_columns)
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(c)) for c in columns))
    data = "\n".join(lines) + "\n"
    try:
        with open(path, "w", newline="") as f:
            f.write(data)
    except OSError as e:
        raise OSError(f"cannot write stats CSV {path}: {e}") from e
    return data


def export_json(rows, config_dict, path):
    """JSON export mirrors the CSV fields plus the full config for provenance."""
    doc = {"config": config_dict, "rows": rows}
    try:
        with open(path, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)
            f.write("\n")
    except OSError as e:
        raise OSError(f"cannot write stats JSON {path}: {e}") from e


def load_csv(path):
    """Parse an exported CSV back into a list of dicts (strings preserved)."""
    with open(path) as f:
        lines = [l.rstrip("\n") for l in f if l.strip()]
    header = lines[0].split(",")
    return [dict(zip(header, l.split(","))) for l in lines[1:]]
