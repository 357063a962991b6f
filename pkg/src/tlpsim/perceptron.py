"""Hashed-perceptron engine shared by the load predictor and the prefetch filter.

A predictor is a set of small weight tables, one per program feature. A
prediction XOR-folds the feature inputs into per-table indices, sums the
indexed 5-bit saturating weights into a confidence value, and compares the
sum against thresholds. Training replays the stored indices and nudges each
indexed weight toward the observed outcome, skipping updates when the
prediction was already confidently correct.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

MASK64 = (1 << 64) - 1

WEIGHT_MIN = -16
WEIGHT_MAX = 15
WEIGHT_BITS = 5

# Feature kinds
PC_XOR_CL_OFFSET = "pc_xor_cl_offset"
PC_XOR_BYTE_OFFSET = "pc_xor_byte_offset"
PC_PLUS_FIRST = "pc_plus_first"
CL_OFFSET_PLUS_FIRST = "cl_offset_plus_first"
LAST4_PCS = "last4_pcs"
FLP_PRED_PLUS_CL_OFFSET = "flp_pred_plus_cl_offset"

FLP_FEATURES = (
    PC_XOR_CL_OFFSET,
    PC_XOR_BYTE_OFFSET,
    PC_PLUS_FIRST,
    CL_OFFSET_PLUS_FIRST,
    LAST4_PCS,
)
SLP_FEATURES = FLP_FEATURES + (FLP_PRED_PLUS_CL_OFFSET,)

DEFAULT_TABLE_BITS = {
    PC_XOR_CL_OFFSET: 10,
    PC_XOR_BYTE_OFFSET: 10,
    PC_PLUS_FIRST: 10,
    CL_OFFSET_PLUS_FIRST: 7,
    LAST4_PCS: 10,
    FLP_PRED_PLUS_CL_OFFSET: 7,
}

HIGH_OFFCHIP = "high_offchip"
DELAYED_OFFCHIP = "delayed_offchip"
ONCHIP = "onchip"


def rotl64(v: int, r: int) -> int:
    r &= 63
    v &= MASK64
    return ((v << r) | (v >> (64 - r))) & MASK64


@lru_cache(maxsize=1 << 16)
def fold_hash(v: int, b: int) -> int:
    """XOR-fold ``v`` down to ``b`` bits."""
    assert 1 <= b <= 63
    v &= MASK64
    mask = (1 << b) - 1
    acc = 0
    while v:
        acc ^= v & mask
        v >>= b
    return acc


@dataclass
class FeatureContext:
    """Inputs a prediction is made from.

    ``addr`` is virtual for the load predictor and physical for the prefetch
    filter. ``last4_pcs`` is the most-recent-first ring of the last four load
    PCs; ``flp_pred`` is only consulted by the leveling feature.
    """
    pc: int
    addr: int
    first_access: int = 0
    last4_pcs: tuple = (0, 0, 0, 0)
    flp_pred: int = 0


def cl_offset(addr: int) -> int:
    """Cacheline offset within a 4 KB page: address bits 6..11."""
    return (addr >> 6) & 0x3F


def byte_offset(addr: int) -> int:
    return addr & 0x3F


def last4_mix(last4_pcs) -> int:
    p1, p2, p3, p4 = last4_pcs
    return p1 ^ rotl64(p2, 1) ^ rotl64(p3, 2) ^ rotl64(p4, 3)


def feature_index(kind: str, ctx: FeatureContext, table_bits: int) -> int:
    if kind == PC_XOR_CL_OFFSET:
        return fold_hash(ctx.pc, table_bits) ^ cl_offset(ctx.addr)
    if kind == PC_XOR_BYTE_OFFSET:
        return fold_hash(ctx.pc, table_bits) ^ byte_offset(ctx.addr)
    if kind == PC_PLUS_FIRST:
        return fold_hash((ctx.pc << 1) | ctx.first_access, table_bits)
    if kind == CL_OFFSET_PLUS_FIRST:
        return (cl_offset(ctx.addr) << 1) | ctx.first_access
    if kind == LAST4_PCS:
        return fold_hash(last4_mix(ctx.last4_pcs), table_bits)
    if kind == FLP_PRED_PLUS_CL_OFFSET:
        return (ctx.flp_pred << 6) | cl_offset(ctx.addr)
    raise ValueError(f"unknown feature kind {kind!r}")


@dataclass
class PerceptronConfig:
    """Thresholds and table sizing for both predictor levels.

    Defaults were chosen by sweeping each threshold on the bundled synthetic
    workloads. tau_high sits well above theta_train so contexts with mixed
    outcomes, whose confidence equilibrates near the training threshold,
    land in the delayed band instead of the high-confidence band.
    """
    tau_high: int = 40
    tau_low: int = -8
    tau_pref: int = 20
    theta_train: int = 14
    table_bits: dict = field(default_factory=lambda: dict(DEFAULT_TABLE_BITS))

    def validate(self):
        if self.tau_low > self.tau_high:
            raise ValueError("tau_low must not exceed tau_high")
        limit = WEIGHT_MAX * len(SLP_FEATURES)
        for name, v in (("tau_high", self.tau_high), ("tau_low", self.tau_low),
                        ("tau_pref", self.tau_pref)):
            if abs(v) > limit:
                raise ValueError(f"{name}={v} outside achievable sum range")


class HashedPerceptron:
    """Weight tables for a fixed feature list, with shared hashing and training."""

    def __init__(self, features, cfg: PerceptronConfig):
        self.features = tuple(features)
        self.cfg = cfg
        self.bits = tuple(cfg.table_bits[f] for f in self.features)
        self.tables = [[0] * (1 << b) for b in self.bits]

    def indices(self, ctx: FeatureContext):
        return tuple(feature_index(f, ctx, b)
                     for f, b in zip(self.features, self.bits))

    def sum_at(self, indices) -> int:
        return sum(t[i] for t, i in zip(self.tables, indices))

    def predict(self, ctx: FeatureContext):
        """Return (confidence, indices) for ``ctx``."""
        idx = self.indices(ctx)
        return self.sum_at(idx), idx

    def train(self, indices, went_offchip: bool, conf_at_predict: int):
        """Update indexed weights toward the outcome.

        Weights move only when the prediction-time confidence disagreed in
        sign with the outcome or was at most theta_train in magnitude;
        confidently correct predictions leave the tables untouched.
        """
        target = 1 if went_offchip else -1
        c = conf_at_predict
        mismatch = (c > 0 and target < 0) or (c < 0 and target > 0)
        if not (mismatch or abs(c) <= self.cfg.theta_train):
            return
        for t, i in zip(self.tables, indices):
            w = t[i] + target
            if w > WEIGHT_MAX:
                w = WEIGHT_MAX
            elif w < WEIGHT_MIN:
                w = WEIGHT_MIN
            t[i] = w

    def storage_bits(self) -> int:
        return sum(WEIGHT_BITS * (1 << b) for b in self.bits)


def classify_flp(conf: int, tau_high: int, tau_low: int) -> str:
    if conf > tau_high:
        return HIGH_OFFCHIP
    if conf >= tau_low:
        return DELAYED_OFFCHIP
    return ONCHIP


def clamp_confidence(conf: int) -> int:
    """Clamp a raw sum to the 5-bit signed range metadata can store."""
    return max(WEIGHT_MIN, min(WEIGHT_MAX, conf))
