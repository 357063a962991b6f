"""Walkthrough: generate a mixed workload and compare two predictor variants.

The workload mixes a large random-access region (mostly off-chip) with a
small resident stream (prefetch-friendly). The two-level predictor should
cut cycles relative to the baseline while issuing fewer wasted speculative
DRAM reads than an issue-everything predictor.

Run from the repository root:  python3 demos/01_single_run.py
"""

from tlpsim.engine import SimConfig, simulate
from tlpsim.stats import dram_delta, mpki, prefetch_accuracy
from tlpsim.trace import Pattern, SyntheticSpec, generate_list

MB = 1 << 20
KB = 1 << 10

spec = SyntheticSpec(
    patterns=(
        (3.0, Pattern("uniform", footprint=32 * MB, pc_count=4,
                      repeat=0.6, repeat_min=64, repeat_max=160)),
        (1.0, Pattern("stream", footprint=128 * KB, pc_count=2)),
    ),
    record_count=40_000, seed=1, mean_gap=48)
records = generate_list(spec)
print(f"generated {len(records)} memory records "
      f"({sum(r.gap for r in records) + len(records)} instructions)")

results = {}
for variant in ("baseline", "hermes", "tlp"):
    cfg = SimConfig(variant=variant, window=8, dram_gbps_per_core=25.6,
                    l1d_prefetcher="next_line")
    results[variant] = simulate(records, cfg)

base = results["baseline"]
print(f"\nbaseline: {base.cycles} cycles, "
      f"LLC MPKI {mpki(base.misses['llc'], base.instructions):.1f}")
for variant in ("hermes", "tlp"):
    st = results[variant]
    print(f"\n{variant}:")
    print(f"  cycles            {st.cycles} "
          f"({100 * (base.cycles - st.cycles) / base.cycles:+.1f}% vs baseline)")
    print(f"  speculative reads {st.dram_speculative_reads}")
    print(f"  dram transactions {st.dram_transactions()} "
          f"({100 * dram_delta(st, base):+.1f}%)")
    acc = prefetch_accuracy(st, "l1d")
    if acc is not None:
        print(f"  prefetch accuracy {acc:.3f}")
