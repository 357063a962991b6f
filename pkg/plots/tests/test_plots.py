"""Figure pipeline tests, including the CSV-only regeneration gate."""

import pytest

from tlpplots import (FigureSpec, SchemaError, ablation_series,
                      accuracy_series, bandwidth_series, breakdown_series,
                      delta_series, load_rows, render)
from tlpplots.cli import EXIT_OK, EXIT_SCHEMA, EXIT_USAGE, main

VARIANTS = ("baseline", "hermes", "flp", "slp", "tsp",
            "delayed_tsp", "selective_tsp", "tlp")

COLUMNS = ["variant", "trace", "core", "seed", "instructions", "cycles",
           "llc_mpki", "dram_transactions", "spec_issued", "spec_loc_l1d",
           "spec_loc_l2", "spec_loc_llc", "spec_loc_dram",
           "l1d_pf_accuracy", "axis", "axis_value"]


def write_csv(path, rows, columns=COLUMNS):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(str(row.get(c, "")) for c in columns))
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def ablation_rows():
    """Rows shaped like an 8-variant ablation run over three seeds."""
    cycles = {"baseline": 630000, "hermes": 614000, "flp": 600000,
              "slp": 620000, "tsp": 573000, "delayed_tsp": 572400,
              "selective_tsp": 572100, "tlp": 571000}
    spec = {"baseline": 0, "hermes": 9000, "flp": 8000, "slp": 0,
            "tsp": 8000, "delayed_tsp": 7000, "selective_tsp": 6800,
            "tlp": 6000}
    tx = {"baseline": 20000, "hermes": 24600, "flp": 23000, "slp": 19000,
          "tsp": 16000, "delayed_tsp": 14000, "selective_tsp": 13500,
          "tlp": 11600}
    acc = {"baseline": 0.55, "hermes": 0.55, "flp": 0.55, "slp": 0.93,
           "tsp": 0.93, "delayed_tsp": 0.94, "selective_tsp": 0.95,
           "tlp": 0.96}
    rows = []
    for seed in (1, 2, 3):
        for v in VARIANTS:
            n = spec[v]
            rows.append({
                "variant": v, "trace": "mix.trace", "core": 0, "seed": seed,
                "instructions": 2_000_000, "cycles": cycles[v] + seed * 37,
                "llc_mpki": 7.8, "dram_transactions": tx[v] + seed,
                "spec_issued": n, "spec_loc_l1d": n // 10,
                "spec_loc_l2": n // 20, "spec_loc_llc": n // 20,
                "spec_loc_dram": n - n // 10 - 2 * (n // 20),
                "l1d_pf_accuracy": acc[v],
            })
    return rows


def sweep_rows():
    """Rows shaped like a dram_bw sweep of hermes and tlp."""
    adv = {1.6: 3400000, 3.2: 1700000, 6.4: 840000, 12.8: 270000,
           25.6: 41000}
    rows = []
    for bw, gap in adv.items():
        for v, cyc in (("hermes", 5_000_000 + gap), ("tlp", 5_000_000)):
            rows.append({"variant": v, "trace": "mix.trace", "core": 0,
                         "seed": 1, "instructions": 2_000_000,
                         "cycles": int(cyc * 12.8 / bw),
                         "llc_mpki": 7.8, "dram_transactions": 20000,
                         "spec_issued": 0, "spec_loc_l1d": 0,
                         "spec_loc_l2": 0, "spec_loc_llc": 0,
                         "spec_loc_dram": 0, "l1d_pf_accuracy": "",
                         "axis": "dram_bw", "axis_value": bw})
    return rows


class TestSeries:
    def test_ablation_speedup_and_variant_order(self, tmp_path):
        rows = load_rows([write_csv(tmp_path / "a.csv", ablation_rows())])
        traces, variants, speedup = ablation_series(rows)
        assert variants == list(VARIANTS)
        assert traces == ["mix.trace"]
        assert speedup["baseline"] == [1.0]
        assert speedup["tlp"][0] > speedup["hermes"][0] > 1.0

    def test_ablation_sorts_traces_by_mpki(self, tmp_path):
        rows = []
        for trace, mpki_v in (("hot.trace", 12.0), ("cold.trace", 2.0)):
            for v in ("baseline", "tlp"):
                rows.append({"variant": v, "trace": trace, "seed": 1,
                             "cycles": 1000, "llc_mpki": mpki_v})
        path = write_csv(tmp_path / "m.csv", rows,
                         columns=["variant", "trace", "seed", "cycles",
                                  "llc_mpki"])
        traces, _, _ = ablation_series(load_rows([path]))
        assert traces == ["cold.trace", "hot.trace"]

    def test_delta_baseline_exactly_zero(self, tmp_path):
        rows = load_rows([write_csv(tmp_path / "a.csv", ablation_rows())])
        variants, deltas = delta_series(rows)
        assert deltas["baseline"] == 0.0
        assert deltas["hermes"] > 0
        assert deltas["tlp"] < 0

    def test_breakdown_sums_to_100(self, tmp_path):
        rows = load_rows([write_csv(tmp_path / "a.csv", ablation_rows())])
        variants, shares = breakdown_series(rows)
        assert "baseline" not in variants      # issued no speculation
        for v in variants:
            assert sum(shares[v].values()) == pytest.approx(100.0)

    def test_bandwidth_axis_sorted(self, tmp_path):
        rows = load_rows([write_csv(tmp_path / "s.csv", sweep_rows())])
        values, cycles = bandwidth_series(rows)
        assert values == [1.6, 3.2, 6.4, 12.8, 25.6]
        assert set(cycles) == {"hermes", "tlp"}
        assert all(h > t for h, t in zip(cycles["hermes"], cycles["tlp"]))

    def test_accuracy_skips_empty_cells(self, tmp_path):
        rows = load_rows([write_csv(tmp_path / "s.csv", sweep_rows())])
        with pytest.raises(SchemaError, match="accuracy"):
            accuracy_series(rows)
        rows = load_rows([write_csv(tmp_path / "a.csv", ablation_rows())])
        variants, acc = accuracy_series(rows)
        assert acc["tlp"] == pytest.approx(0.96)

    def test_series_deterministic(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ablation_rows())
        assert ablation_series(load_rows([path])) == \
            ablation_series(load_rows([path]))
        assert breakdown_series(load_rows([path])) == \
            breakdown_series(load_rows([path]))


class TestSchemaErrors:
    def test_missing_columns_named(self, tmp_path):
        path = write_csv(tmp_path / "bad.csv",
                         [{"variant": "tlp"}], columns=["variant"])
        with pytest.raises(SchemaError, match="cycles"):
            ablation_series(load_rows([path]))
        with pytest.raises(SchemaError, match="dram_transactions"):
            delta_series(load_rows([path]))

    def test_missing_baseline(self, tmp_path):
        rows = [r for r in ablation_rows() if r["variant"] != "baseline"]
        path = write_csv(tmp_path / "nb.csv", rows)
        with pytest.raises(SchemaError, match="baseline"):
            delta_series(load_rows([path]))

    def test_unreadable_file(self, tmp_path):
        with pytest.raises(SchemaError, match="cannot read"):
            load_rows([str(tmp_path / "nope.csv")])

    def test_empty_csv(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(SchemaError):
            load_rows([str(path)])

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(SchemaError, match="unknown figure kind"):
            render(FigureSpec(kind="pie", csv_paths=["x"], out="y"))

    def test_inconsistent_breakdown_counts(self, tmp_path):
        rows = ablation_rows()
        rows[1]["spec_loc_dram"] = int(rows[1]["spec_loc_dram"]) + 5
        path = write_csv(tmp_path / "bad.csv", rows)
        with pytest.raises(SchemaError, match="sum to"):
            breakdown_series(load_rows([path]))


class TestCli:
    def test_render_via_cli(self, tmp_path):
        path = write_csv(tmp_path / "a.csv", ablation_rows())
        out = tmp_path / "fig.png"
        assert main(["delta", path, "--out", str(out)]) == EXIT_OK
        assert out.stat().st_size > 0

    def test_schema_error_exit(self, tmp_path):
        path = write_csv(tmp_path / "bad.csv", [{"variant": "tlp"}],
                         columns=["variant"])
        assert main(["ablation", path, "--out",
                     str(tmp_path / "f.png")]) == EXIT_SCHEMA

    def test_usage_exit(self):
        assert main(["not-a-kind", "x.csv", "--out", "y.png"]) == EXIT_USAGE


def test_a10_regenerate_figures_from_csv(tmp_path, verdicts):
    """Acceptance: regenerate the standard figures from CSV content alone."""
    abl = write_csv(tmp_path / "ablation.csv", ablation_rows())
    swp = write_csv(tmp_path / "sweep.csv", sweep_rows())

    outputs = {}
    for kind, src in (("ablation", abl), ("delta", abl),
                      ("breakdown", abl), ("accuracy", abl),
                      ("bandwidth", swp)):
        out = tmp_path / f"{kind}.png"
        render(FigureSpec(kind=kind, csv_paths=[src], out=str(out)))
        outputs[kind] = out.exists() and out.stat().st_size > 0

    rows = load_rows([abl])
    _, shares = breakdown_series(rows)
    sums_ok = all(sum(s.values()) == pytest.approx(100.0)
                  for s in shares.values())
    _, deltas = delta_series(rows)
    baseline_zero = deltas["baseline"] == 0.0

    ok = all(outputs.values()) and sums_ok and baseline_zero
    line = (f"A10 {'PASS' if ok else 'FAIL'} figures rendered from CSV "
            f"alone: {outputs}, breakdown bars sum to 100%: {sums_ok}, "
            f"baseline delta bar at 0: {baseline_zero}")
    print("\n" + line)
    verdicts.append(line)
    assert ok
