"""Counter invariants, derived metrics, and export determinism."""

import json

import pytest

from tlpsim.stats import (CSV_COLUMNS, MetricError, SimStats, dram_delta,
                          export_csv, export_json, ipc, load_csv, mpki,
                          prefetch_accuracy, stats_row, weighted_speedup)


def filled_stats():
    s = SimStats(instructions=10_000, cycles=20_000, demand_accesses=100)
    s.accesses["l1d"] = 100
    s.hits["l1d"] = 70
    s.misses["l1d"] = 30
    s.accesses["l2"] = 30
    s.hits["l2"] = 10
    s.misses["l2"] = 20
    s.accesses["llc"] = 20
    s.hits["llc"] = 5
    s.misses["llc"] = 15
    s.demand_served.update({"l1d": 70, "l2": 10, "llc": 5, "dram": 15})
    s.dram_demand_reads = 10
    s.dram_speculative_reads = 8
    s.dram_prefetch_reads = 2
    s.dram_merged = 5
    s.dram_writebacks = 3
    s.speculative_issued = 9
    s.speculative_location.update({"l1d": 1, "l2": 0, "llc": 0, "dram": 8})
    s.prefetch_emitted["l1d"] = 40
    s.prefetch_dropped["l1d"] = 10
    s.prefetch_issued["l1d"] = 30
    s.prefetch_filled["l1d"] = 25
    s.prefetch_useful["l1d"] = 20
    s.prefetch_useless["l1d"] = 5
    return s


class TestInvariants:
    def test_consistent_stats_pass(self):
        filled_stats().check_invariants()

    def test_hit_miss_mismatch(self):
        s = filled_stats()
        s.hits["l2"] += 1
        with pytest.raises(AssertionError):
            s.check_invariants()

    def test_prefetch_conservation(self):
        s = filled_stats()
        s.prefetch_dropped["l1d"] += 1
        with pytest.raises(AssertionError):
            s.check_invariants()

    def test_served_conservation(self):
        s = filled_stats()
        s.demand_served["dram"] += 1
        with pytest.raises(AssertionError):
            s.check_invariants()


class TestMetrics:
    def test_mpki(self):
        assert mpki(30, 10_000) == 3.0
        with pytest.raises(MetricError):
            mpki(1, 0)

    def test_ipc(self):
        assert ipc(filled_stats()) == 0.5
        with pytest.raises(MetricError):
            ipc(SimStats())

    def test_prefetch_accuracy(self):
        assert prefetch_accuracy(filled_stats(), "l1d") == 0.8
        assert prefetch_accuracy(SimStats(), "l1d") is None

    def test_dram_totals(self):
        s = filled_stats()
        assert s.dram_reads_total() == 20
        assert s.dram_transactions() == 23

    def test_dram_delta(self):
        base = filled_stats()
        run = filled_stats()
        run.dram_speculative_reads += 23   # doubles transactions
        assert dram_delta(run, base) == 1.0
        assert dram_delta(base, base) == 0.0
        with pytest.raises(MetricError):
            dram_delta(base, SimStats())

    def test_weighted_speedup(self):
        solo = [2.0, 2.0]
        base_mix = [1.0, 1.0]
        # Run doubles both shared IPCs relative to the baseline mix.
        assert weighted_speedup([2.0, 2.0], solo, base_mix, solo) == 2.0
        assert weighted_speedup(base_mix, solo, base_mix, solo) == 1.0
        with pytest.raises(MetricError):
            weighted_speedup([1.0], solo, base_mix, solo)


class TestExport:
    def test_row_has_every_column(self):
        row = stats_row(filled_stats(), variant="tlp", trace="t", seed=7)
        assert set(CSV_COLUMNS) <= set(row)
        assert row["variant"] == "tlp"
        assert row["seed"] == 7
        assert row["ipc"] == 0.5
        assert row["l1d_mpki"] == 3.0
        assert row["dram_transactions"] == 23
        assert row["l1d_pf_accuracy"] == 0.8
        assert row["ppki_issued"] == 3.0

    def test_csv_roundtrip(self, tmp_path):
        rows = [stats_row(filled_stats(), variant="tlp", trace="t", seed=1),
                stats_row(SimStats(), variant="baseline", trace="t", seed=1)]
        path = tmp_path / "out.csv"
        export_csv(rows, path)
        back = load_csv(path)
        assert len(back) == 2
        assert back[0]["variant"] == "tlp"
        assert int(back[0]["cycles"]) == 20_000
        assert float(back[0]["ipc"]) == 0.5
        assert back[1]["ipc"] == ""          # None fields export empty

    def test_csv_byte_determinism(self, tmp_path):
        rows = [stats_row(filled_stats(), variant="tlp", seed=3)]
        a = export_csv(rows, tmp_path / "a.csv")
        b = export_csv(rows, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == \
            (tmp_path / "b.csv").read_bytes()
        assert a == b

    def test_float_full_precision(self, tmp_path):
        s = SimStats(instructions=1, cycles=3)
        export_csv([stats_row(s)], tmp_path / "f.csv")
        row = load_csv(tmp_path / "f.csv")[0]
        assert float(row["ipc"]) == 1 / 3

    def test_extra_columns(self, tmp_path):
        row = stats_row(SimStats())
        row["axis"] = "dram_bw"
        row["axis_value"] = 3.2
        data = export_csv([row], tmp_path / "x.csv",
                          extra_columns=("axis", "axis_value"))
        header = data.splitlines()[0].split(",")
        assert header[-2:] == ["axis", "axis_value"]
        assert load_csv(tmp_path / "x.csv")[0]["axis"] == "dram_bw"

    def test_csv_unwritable_path(self, tmp_path):
        with pytest.raises(OSError, match="cannot write"):
            export_csv([], tmp_path / "nodir" / "x.csv")

    def test_json_export(self, tmp_path):
        rows = [stats_row(filled_stats(), variant="tlp")]
        path = tmp_path / "out.json"
        export_json(rows, {"variant": "tlp", "window": 8}, path)
        doc = json.loads(path.read_text())
        assert doc["config"]["window"] == 8
        assert doc["rows"][0]["cycles"] == 20_000
