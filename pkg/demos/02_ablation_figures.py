"""Walkthrough: run the full predictor ablation and render figures.

Each intermediate design point between the baseline and the full two-level
predictor is simulated on the same trace; the exported CSV then drives the
delta and breakdown figures through the tlpplots package (install it from
plots/ first).

Run from the repository root:  python3 demos/02_ablation_figures.py
It writes ablation.csv, ablation_delta.png, and ablation_breakdown.png to
the working directory.
"""

from tlpsim.engine import SimConfig, simulate
from tlpsim.offchip import VARIANTS
from tlpsim.stats import export_csv, stats_row
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

rows = []
for variant in VARIANTS:
    cfg = SimConfig(variant=variant, window=8, dram_gbps_per_core=25.6,
                    l1d_prefetcher="next_line")
    st = simulate(records, cfg)
    rows.append(stats_row(st, variant=variant, trace="mix", seed=1))
    print(f"{variant:14s} {st.cycles:8d} cycles, "
          f"{st.dram_speculative_reads:6d} speculative reads")

export_csv(rows, "ablation.csv")
print("wrote ablation.csv")

try:
    from tlpplots import FigureSpec, render
except ImportError:
    print("tlpplots not installed; skipping figures "
          "(pip install -e plots/ --no-build-isolation)")
else:
    for kind in ("delta", "breakdown"):
        out = f"ablation_{kind}.png"
        render(FigureSpec(kind=kind, csv_paths=["ablation.csv"], out=out))
        print(f"wrote {out}")
