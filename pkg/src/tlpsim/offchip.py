"""Off-chip prediction controllers and the variant matrix.

The first-level predictor (FLP) classifies every demand load three ways:
issue a speculative DRAM request immediately, flag the request so the
speculative issue happens only on an L1D miss, or do nothing. The
second-level predictor (SLP) sits behind the L1D and drops prefetch
requests predicted to be served from DRAM. Both share the hashed-perceptron
engine and train from completion outcomes replayed out of stored metadata.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .perceptron import (
    FLP_FEATURES, SLP_FEATURES, HIGH_OFFCHIP, DELAYED_OFFCHIP, ONCHIP,
    FeatureContext, HashedPerceptron, PerceptronConfig, classify_flp,
    clamp_confidence, fold_hash, last4_mix,
)

# Consumption points for FLP predictions
CONSUME_CORE = "core"          # high and delayed bands both issue at the core
CONSUME_L1D_MISS = "l1d_miss"  # every off-chip prediction waits for an L1D miss
CONSUME_SELECTIVE = "selective"  # high at core, delayed band at L1D miss
CONSUME_NEVER = "never"

SPECULATIVE_ISSUE_LATENCY = 6   # cycles from consult to speculative DRAM issue

PAGE_BUFFER_ENTRIES = 128
PAGE_TAG_BITS = 40

LQ_ENTRIES = 72                 # load-queue entries carrying training metadata

VARIANTS = ("baseline", "hermes", "flp", "slp", "tsp",
            "delayed_tsp", "selective_tsp", "tlp")


@dataclass(frozen=True)
class PredictorVariant:
    name: str
    consume_at: str
    slp_enabled: bool
    slp_leveling_feature: bool = False
    collapse_thresholds: bool = False   # single-threshold, issue-at-core mode

    @staticmethod
    def named(name: str) -> "PredictorVariant":
        try:
            return _VARIANTS[name]
        except KeyError:
            raise ValueError(f"unknown variant {name!r}; "
                             f"expected one of {', '.join(VARIANTS)}")


_VARIANTS = {
    "baseline": PredictorVariant("baseline", CONSUME_NEVER, False),
    "hermes": PredictorVariant("hermes", CONSUME_CORE, False,
                               collapse_thresholds=True),
    "flp": PredictorVariant("flp", CONSUME_CORE, False),
    "slp": PredictorVariant("slp", CONSUME_NEVER, True),
    "tsp": PredictorVariant("tsp", CONSUME_CORE, True),
    "delayed_tsp": PredictorVariant("delayed_tsp", CONSUME_L1D_MISS, True),
    "selective_tsp": PredictorVariant("selective_tsp", CONSUME_SELECTIVE, True),
    "tlp": PredictorVariant("tlp", CONSUME_SELECTIVE, True,
                            slp_leveling_feature=True),
}


class PageBuffer:
    """Fixed-capacity FIFO of page tags backing the first-access feature."""

    def __init__(self, capacity=PAGE_BUFFER_ENTRIES, tag_bits=PAGE_TAG_BITS):
        self.capacity = capacity
        self.tag_mask = (1 << tag_bits) - 1
        self.fifo = deque()
        self.members = set()

    def probe_insert(self, page: int) -> int:
        """Return 1 on a first access (tag absent) and record the tag."""
        tag = page & self.tag_mask
        if tag in self.members:
            return 0
        if len(self.fifo) >= self.capacity:
            old = self.fifo.popleft()
            self.members.discard(old)
        self.fifo.append(tag)
        self.members.add(tag)
        return 1


@dataclass
class RequestMetadata:
    """Training payload snapshotted at prediction time.

    The architectural fields are the hashed PC (32b), last-4-PC hash (10b),
    first-access bit, clamped 5-bit confidence, and, in the MSHR flavor, the
    prediction bit. ``indices`` caches the weight-table indices those fields
    select so training replays exactly the snapshot and never touches live
    core state.
    """
    hashed_pc: int
    last4_pc_hash: int
    first_access: int
    confidence: int
    prediction: int = 0
    indices: tuple = ()


class FlpController:
    """Core-side three-way off-chip predictor with selective delay."""

    def __init__(self, cfg: PerceptronConfig, variant: PredictorVariant,
                 page_size=4096):
        self.cfg = cfg
        self.variant = variant
        if variant.collapse_thresholds:
            # Single-threshold mode: no delayed band, every off-chip
            # prediction is consumed at the core.
            self.tau_high = cfg.tau_low
            self.tau_low = cfg.tau_low
        else:
            self.tau_high = cfg.tau_high
            self.tau_low = cfg.tau_low
        self.perceptron = HashedPerceptron(FLP_FEATURES, cfg)
        self.page_buffer = PageBuffer()
        self.last4 = deque([0, 0, 0, 0], maxlen=4)
        self.page_bits = page_size.bit_length() - 1

    def context(self, pc, vaddr):
        first = self.page_buffer.probe_insert(vaddr >> self.page_bits)
        return FeatureContext(pc=pc, addr=vaddr, first_access=first,
                              last4_pcs=tuple(self.last4))

    def on_load(self, pc, vaddr):
        """Classify one demand load; returns (decision, metadata).

        Also rotates the last-4-PC history, so call exactly once per load.
        """
        ctx = self.context(pc, vaddr)
        conf, indices = self.perceptron.predict(ctx)
        decision = classify_flp(conf, self.tau_high, self.tau_low)
        md = RequestMetadata(
            hashed_pc=fold_hash(pc, 32),
            last4_pc_hash=fold_hash(last4_mix(ctx.last4_pcs), 10),
            first_access=ctx.first_access,
            confidence=clamp_confidence(conf),
            prediction=1 if decision != ONCHIP else 0,
            indices=indices,
        )
        self.last4.appendleft(pc)
        return decision, md

    def issue_at_core(self, decision) -> bool:
        if self.variant.consume_at == CONSUME_CORE:
            return decision in (HIGH_OFFCHIP, DELAYED_OFFCHIP)
        if self.variant.consume_at == CONSUME_SELECTIVE:
            return decision == HIGH_OFFCHIP
        return False

    def issue_at_l1d_miss(self, decision) -> bool:
        if self.variant.consume_at == CONSUME_L1D_MISS:
            return decision in (HIGH_OFFCHIP, DELAYED_OFFCHIP)
        if self.variant.consume_at == CONSUME_SELECTIVE:
            return decision == DELAYED_OFFCHIP
        return False

    def on_complete(self, md: RequestMetadata, went_offchip: bool):
        self.perceptron.train(md.indices, went_offchip, md.confidence)


class SlpController:
    """L1D-side prefetch filter built on the same perceptron engine."""

    def __init__(self, cfg: PerceptronConfig, leveling: bool, page_size=4096):
        self.cfg = cfg
        self.leveling = leveling
        features = SLP_FEATURES if leveling else FLP_FEATURES
        self.perceptron = HashedPerceptron(features, cfg)
        self.page_buffer = PageBuffer()
        self.page_bits = page_size.bit_length() - 1

    def filter(self, trigger_md: RequestMetadata, target_paddr: int,
               flp_tag: int):
        """Decide Issue (False) or Drop (True) for one L1D prefetch request.

        Feature construction uses the physical target address and the
        trigger load's stored metadata; returns (drop, train_md).
        """
        first = self.page_buffer.probe_insert(target_paddr >> self.page_bits)
        ctx = FeatureContext(
            pc=trigger_md.hashed_pc,
            addr=target_paddr,
            first_access=first,
            last4_pcs=(trigger_md.last4_pc_hash, 0, 0, 0),
            flp_pred=flp_tag,
        )
        conf, indices = self.perceptron.predict(ctx)
        md = RequestMetadata(
            hashed_pc=trigger_md.hashed_pc,
            last4_pc_hash=trigger_md.last4_pc_hash,
            first_access=first,
            confidence=clamp_confidence(conf),
            prediction=1 if conf >= self.cfg.tau_pref else 0,
            indices=indices,
        )
        return conf >= self.cfg.tau_pref, md

    def on_prefetch_fill(self, md: RequestMetadata, went_offchip: bool):
        self.perceptron.train(md.indices, went_offchip, md.confidence)


def storage_budget_bytes(cfg: PerceptronConfig,
                         l1d_mshr_entries: int = 10) -> dict:
    """Per-core storage accounting for the full two-level configuration."""
    flp = HashedPerceptron(FLP_FEATURES, cfg)
    slp = HashedPerceptron(SLP_FEATURES, cfg)
    page_buffer = PAGE_BUFFER_ENTRIES * PAGE_TAG_BITS / 8
    lq_md = LQ_ENTRIES * (32 + 10 + 1 + 5) / 8
    mshr_md = l1d_mshr_entries * (32 + 10 + 1 + 5 + 1) / 8
    out = {
        "flp_tables": flp.storage_bits() / 8,
        "flp_page_buffer": page_buffer,
        "slp_tables": slp.storage_bits() / 8,
        "slp_page_buffer": page_buffer,
        "lq_metadata": lq_md,
        "mshr_metadata": mshr_md,
    }
    out["total"] = sum(out.values())
    return out
