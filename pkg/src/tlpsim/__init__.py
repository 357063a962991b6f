"""tlpsim: trace-driven memory hierarchy simulator with two-level
perceptron off-chip prediction and L1D prefetch filtering."""

from .engine import SimConfig, simulate, simulate_multicore
from .memhier import CacheGeometry, DramModel, PageMap
from .offchip import PredictorVariant, storage_budget_bytes, VARIANTS
from .perceptron import PerceptronConfig
from .stats import SimStats, dram_delta, mpki, prefetch_accuracy, weighted_speedup
from .trace import (Kind, Pattern, SyntheticSpec, TraceRecord, generate,
                    pointer_chase_spec, read_trace, stream_spec, write_trace)

__all__ = [
    "SimConfig", "simulate", "simulate_multicore",
    "CacheGeometry", "DramModel", "PageMap",
    "PredictorVariant", "storage_budget_bytes", "VARIANTS",
    "PerceptronConfig",
    "SimStats", "dram_delta", "mpki", "prefetch_accuracy", "weighted_speedup",
    "Kind", "Pattern", "SyntheticSpec", "TraceRecord", "generate",
    "pointer_chase_spec", "read_trace", "stream_spec", "write_trace",
]
