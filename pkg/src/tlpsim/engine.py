"""Trace replay engine: a load-window timing model over the cache hierarchy.

The core model keeps up to W memory operations in flight and retires them
in program order; non-memory instructions (the trace gap fields) retire at
4 per cycle. This preserves the memory-level-parallelism effects that make
off-chip prediction matter without modeling a full out-of-order core.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, asdict

from . import trace as trace_mod
from .memhier import (Cache, CacheGeometry, DramModel, Mshr, PageMap,
                      l1d_geometry, l2_geometry, llc_geometry)
from .offchip import (CONSUME_NEVER, FlpController, PredictorVariant,
                      RequestMetadata, SlpController,
                      SPECULATIVE_ISSUE_LATENCY)
from .perceptron import PerceptronConfig, fold_hash, last4_mix
from .prefetch import make_l1d_prefetcher, make_l2_prefetcher
from .stats import SimStats
from .trace import Kind


class ConfigError(Exception):
    """Invalid simulation configuration."""


@dataclass
class SimConfig:
    l1d: CacheGeometry = field(default_factory=l1d_geometry)
    l2: CacheGeometry = field(default_factory=l2_geometry)
    llc_latency: int = 36            # Table value 36/56; smaller figure default
    llc_per_core_kb: int = 1408
    dram_gbps_per_core: float = 12.8
    freq_ghz: float = 3.8
    dram_service_latency: int = 72   # 3 x 24-cycle row timing components
    l1d_prefetcher: str = "ip_stride"
    l1d_prefetch_degree: int = 4
    l2_prefetcher: str = "stream"
    perceptron: PerceptronConfig = field(default_factory=PerceptronConfig)
    variant: str = "baseline"
    cores: int = 1
    window: int = 16
    page_size: int = 4096
    page_seed: int | None = None

    def validate(self):
        errors = []
        if self.cores < 1:
            errors.append("cores must be >= 1")
        if self.window < 1:
            errors.append("window must be >= 1")
        if self.llc_latency <= 0:
            errors.append("llc_latency must be positive")
        if self.dram_gbps_per_core <= 0:
            errors.append("dram_gbps_per_core must be positive")
        if self.page_size & (self.page_size - 1):
            errors.append("page_size must be a power of two")
        try:
            PredictorVariant.named(self.variant)
        except ValueError as e:
            errors.append(str(e))
        try:
            self.perceptron.validate()
        except ValueError as e:
            errors.append(str(e))
        if errors:
            raise ConfigError("; ".join(errors))

    def llc_geometry(self):
        return CacheGeometry(self.cores * self.llc_per_core_kb * 1024, 11,
                             self.llc_latency, 64 * self.cores)

    def total_dram_gbps(self):
        return self.dram_gbps_per_core * self.cores

    def to_dict(self):
        d = asdict(self)
        d["page_seed"] = self.page_seed
        return d


class Machine:
    """One simulated core plus its private caches, wired to shared LLC/DRAM."""

    def __init__(self, cfg: SimConfig, llc: Cache, dram: DramModel,
                 pagemap: PageMap, core_idx: int = 0):
        self.cfg = cfg
        self.core_idx = core_idx
        self.variant = PredictorVariant.named(cfg.variant)
        self.l1d = Cache(cfg.l1d)
        self.l2 = Cache(cfg.l2)
        self.llc = llc
        self.dram = dram
        self.pagemap = pagemap
        self.l1d_mshr = Mshr(cfg.l1d.mshr_entries)
        self.stats = SimStats()

        self.flp = None
        self.slp = None
        consults = self.variant.consume_at != CONSUME_NEVER
        if consults or self.variant.slp_enabled:
            self.flp = FlpController(cfg.perceptron, self.variant,
                                     cfg.page_size)
            self.flp_predicts = consults
        if self.variant.slp_enabled:
            self.slp = SlpController(cfg.perceptron,
                                     self.variant.slp_leveling_feature,
                                     cfg.page_size)
        self.l1d_pf = make_l1d_prefetcher(cfg.l1d_prefetcher,
                                          cfg.l1d_prefetch_degree)
        self.l2_pf = make_l2_prefetcher(cfg.l2_prefetcher)

        self._page_mask = ~(cfg.page_size - 1)
        # Per-core virtual namespace so shared physical frames never collide.
        self._va_offset = core_idx << 52

        # Load-window state
        self.retire_q = deque()
        self.last_retire = 0
        self.qcursor = 0          # quarter-cycles; 4 non-memory instrs/cycle
        self.record_count = 0
        self.gap_sum = 0

    # -- address helpers ----------------------------------------------------

    def translate(self, vaddr):
        return self.pagemap.translate(vaddr + self._va_offset)

    # -- hierarchy walk -----------------------------------------------------

    def _evict_cascade(self, level, victim, now):
        while victim is not None:
            addr, dirty, pf = victim
            if pf:
                if level in ("l1d", "l2"):
                    self.stats.prefetch_useless[level] += 1
            if not dirty:
                return
            if level == "l1d":
                victim = self.l2.fill(addr, dirty=True)
                level = "l2"
            elif level == "l2":
                victim = self.llc.fill(addr, dirty=True)
                level = "llc"
            else:
                self.dram.writeback(now)
                self.stats.dram_writebacks += 1
                return

    def _fill(self, cache, level, addr, dirty=False, prefetched=False, now=0):
        victim = cache.fill(addr, dirty=dirty, prefetched=prefetched)
        if victim is not None:
            self._evict_cascade(level, victim, now)

    def walk_below_l1d(self, paddr, t1, demand, read_kind):
        """Look up L2, then LLC, then DRAM, starting at cycle ``t1``.

        Returns (completion, served_level). Demand walks update the demand
        counters and trigger the L2 prefetcher; prefetch walks only probe.
        """
        st = self.stats
        line = paddr & ~63
        if demand:
            st.accesses["l2"] += 1
        l2_hit = self.l2.lookup(paddr)
        if demand:
            if l2_hit:
                st.hits["l2"] += 1
                if self.l2.hit_prefetched(paddr):
                    st.prefetch_useful["l2"] += 1
            else:
                st.misses["l2"] += 1
            if self.l2_pf is not None:
                for req in self.l2_pf.on_access(paddr, l2_hit):
                    self._run_l2_prefetch(req, t1)
        if l2_hit:
            return t1 + self.cfg.l2.hit_latency, "l2"

        t2 = t1 + self.cfg.l2.hit_latency
        if demand:
            st.accesses["llc"] += 1
        llc_hit = self.llc.lookup(paddr)
        if demand:
            st.hits["llc"] += llc_hit
            st.misses["llc"] += not llc_hit
        if llc_hit:
            return t2 + self.cfg.llc_latency, "llc"

        t3 = t2 + self.cfg.llc_latency
        comp, merged = self.dram.issue(line, t3)
        if merged:
            st.dram_merged += 1
        elif read_kind == "demand":
            st.dram_demand_reads += 1
        elif read_kind == "prefetch":
            st.dram_prefetch_reads += 1
        if comp < t3:
            comp = t3
        return comp, "dram"

    def _issue_speculative(self, line, when):
        st = self.stats
        comp, merged = self.dram.issue(line, when)
        if merged:
            st.dram_merged += 1
        else:
            st.dram_speculative_reads += 1
        return comp

    # -- prefetch handling --------------------------------------------------

    def _run_l1d_prefetch(self, req, t):
        st = self.stats
        st.prefetch_emitted["l1d"] += 1
        target = req.target_vaddr
        paddr = self.translate(target)
        if self.slp is not None:
            drop, md = self.slp.filter(req.metadata, paddr, req.flp_tag)
            if drop:
                st.prefetch_dropped["l1d"] += 1
                return
        else:
            md = None
        st.prefetch_issued["l1d"] += 1
        if self.l1d.lookup(paddr, update_lru=False):
            return
        line = paddr & ~63
        self.l1d_mshr.prune(t)
        if self.l1d_mshr.lookup(line) is not None or self.l1d_mshr.full():
            return
        comp, served = self.walk_below_l1d(paddr, t + self.cfg.l1d.hit_latency,
                                           demand=False, read_kind="prefetch")
        self._fill(self.l1d, "l1d", paddr, prefetched=True, now=comp)
        st.prefetch_filled["l1d"] += 1
        self.l1d_mshr.allocate(line, comp, metadata=served, is_prefetch=True)
        if self.slp is not None:
            self.slp.on_prefetch_fill(md, served == "dram")

    def _run_l2_prefetch(self, req, t):
        st = self.stats
        st.prefetch_emitted["l2"] += 1
        # The filter's stated scope is L1D prefetching; L2 prefetches always issue.
        st.prefetch_issued["l2"] += 1
        paddr = req.target_vaddr          # L2 stream prefetcher is physical
        if self.l2.lookup(paddr, update_lru=False):
            return
        line = paddr & ~63
        t2 = t + self.cfg.l2.hit_latency
        llc_hit = self.llc.lookup(paddr)
        if llc_hit:
            comp = t2 + self.cfg.llc_latency
        else:
            comp, merged = self.dram.issue(line, t2 + self.cfg.llc_latency)
            if merged:
                st.dram_merged += 1
            else:
                st.dram_prefetch_reads += 1
        self._fill(self.l2, "l2", paddr, prefetched=True, now=comp)
        st.prefetch_filled["l2"] += 1

    # -- demand path --------------------------------------------------------

    def access(self, rec, t):
        """Replay one demand access issued at cycle ``t``; returns completion."""
        st = self.stats
        cfg = self.cfg
        is_load = rec.kind == Kind.LOAD
        vaddr = rec.vaddr
        paddr = self.translate(vaddr)
        line = paddr & ~63
        st.demand_accesses += 1

        decision = None
        md = None
        spec_comp = None
        spec_issued = False
        if self.flp is not None and is_load:
            if self.flp_predicts:
                decision, md = self.flp.on_load(rec.pc, vaddr)
                if self.flp.issue_at_core(decision):
                    spec_comp = self._issue_speculative(
                        line, t + SPECULATIVE_ISSUE_LATENCY)
                    spec_issued = True
            else:
                # SLP-only mode: snapshot metadata without predicting.
                ctx = self.flp.context(rec.pc, vaddr)
                md = RequestMetadata(
                    hashed_pc=fold_hash(rec.pc, 32),
                    last4_pc_hash=fold_hash(last4_mix(ctx.last4_pcs), 10),
                    first_access=ctx.first_access,
                    confidence=0)
                self.flp.last4.appendleft(rec.pc)

        st.accesses["l1d"] += 1
        l1_hit = self.l1d.lookup(paddr)
        if l1_hit:
            st.hits["l1d"] += 1
            st.demand_served["l1d"] += 1
            if self.l1d.hit_prefetched(paddr):
                st.prefetch_useful["l1d"] += 1
            if not is_load:
                self.l1d.set_dirty(paddr)
            completion = t + cfg.l1d.hit_latency
            # A hit on a still-in-flight prefetched line waits for the fill.
            entry = self.l1d_mshr.lookup(line)
            if entry is not None and entry[0] > completion:
                completion = entry[0]
            served = "l1d"
        else:
            st.misses["l1d"] += 1
            t_miss = t + cfg.l1d.hit_latency
            if (decision is not None
                    and self.flp.issue_at_l1d_miss(decision)):
                spec_comp = self._issue_speculative(
                    line, t_miss + SPECULATIVE_ISSUE_LATENCY)
                spec_issued = True
            self.l1d_mshr.prune(t_miss)
            entry = self.l1d_mshr.lookup(line)
            if entry is not None:
                # Merge with the outstanding fill for this line.
                completion = max(entry[0], t_miss)
                served = entry[1] if isinstance(entry[1], str) else "dram"
                if entry[2]:
                    st.prefetch_useful["l1d"] += 1
                    entry[2] = False
                    # Fill already marked the line; avoid double counting.
                    s, tag = self.l1d._locate(paddr)
                    if tag in s:
                        s[tag][2] = False
            else:
                if self.l1d_mshr.full():
                    t_miss = max(t_miss, self.l1d_mshr.earliest_completion())
                    self.l1d_mshr.prune(t_miss)
                completion, served = self.walk_below_l1d(
                    paddr, t_miss, demand=True, read_kind="demand")
                self._fill(self.l1d, "l1d", paddr, dirty=not is_load,
                           now=completion)
                if served == "dram":
                    self._fill(self.llc, "llc", paddr, now=completion)
                    self._fill(self.l2, "l2", paddr, now=completion)
                elif served == "llc":
                    self._fill(self.l2, "l2", paddr, now=completion)
                self.l1d_mshr.allocate(line, completion, metadata=served)
            st.demand_served[served] += 1

        if spec_issued:
            st.speculative_issued += 1
            st.speculative_location[served] += 1
            if served == "dram" and spec_comp is not None:
                completion = min(completion, max(spec_comp, t))

        if self.flp is not None and self.flp_predicts and is_load:
            self.flp.on_complete(md, served == "dram")

        # L1D prefetcher triggers on demand accesses.
        if self.l1d_pf is not None and is_load:
            flp_tag = md.prediction if md is not None else 0
            trigger_md = md if md is not None else RequestMetadata(
                hashed_pc=fold_hash(rec.pc, 32), last4_pc_hash=0,
                first_access=0, confidence=0)
            for req in self.l1d_pf.on_access(rec.pc, vaddr, l1_hit):
                req.metadata = trigger_md
                req.flp_tag = flp_tag
                self._run_l1d_prefetch(req, t)

        return completion

    # -- core timing --------------------------------------------------------

    def next_issue_time(self):
        t = (self.qcursor + 3) // 4
        if len(self.retire_q) >= self.cfg.window:
            free = self.retire_q[0]
            if free > t:
                t = free
        return t

    def step(self, rec):
        """Advance past ``rec``'s gap, issue it, and record retirement."""
        self.qcursor += rec.gap
        t = (self.qcursor + 3) // 4
        if len(self.retire_q) >= self.cfg.window:
            free = self.retire_q.popleft()
            if free > t:
                t = free
        completion = self.access(rec, t)
        r = completion if completion > self.last_retire else self.last_retire
        self.retire_q.append(r)
        self.last_retire = r
        self.qcursor = max(self.qcursor, 4 * t) + 1
        self.gap_sum += rec.gap
        self.record_count += 1

    def finish(self):
        st = self.stats
        st.instructions = self.gap_sum + self.record_count
        st.cycles = self.last_retire
        # Never-demanded prefetched lines resolve as useless at end of run.
        st.prefetch_useless["l1d"] += self.l1d.drain_prefetched()
        st.prefetch_useless["l2"] += self.l2.drain_prefetched()
        st.check_invariants()
        return st


def simulate(records, cfg: SimConfig) -> SimStats:
    """Replay one trace through a single-core machine; returns its stats."""
    cfg.validate()
    if cfg.cores != 1:
        raise ConfigError("simulate() is single-core; use simulate_multicore")
    llc = Cache(cfg.llc_geometry())
    dram = DramModel(cfg.dram_service_latency, cfg.total_dram_gbps(),
                     cfg.freq_ghz)
    pagemap = PageMap(cfg.page_size, cfg.page_seed)
    m = Machine(cfg, llc, dram, pagemap)
    for rec in records:
        m.step(rec)
    return m.finish()


def simulate_multicore(traces, cfg: SimConfig):
    """Interleave N cores over shared LLC/DRAM; returns per-core stats.

    Cores progress in cycle order: at each step the core with the earliest
    next issue time replays its next record. Deterministic for fixed inputs.
    """
    cfg.validate()
    n = len(traces)
    if n < 2:
        raise ConfigError("simulate_multicore needs at least 2 traces")
    if cfg.cores != n:
        raise ConfigError(f"cfg.cores={cfg.cores} but {n} traces supplied")
    llc = Cache(cfg.llc_geometry())
    dram = DramModel(cfg.dram_service_latency, cfg.total_dram_gbps(),
                     cfg.freq_ghz)
    pagemap = PageMap(cfg.page_size, cfg.page_seed)
    machines = [Machine(cfg, llc, dram, pagemap, core_idx=i)
                for i in range(n)]
    iters = [iter(t) for t in traces]
    pending = []
    for i, it in enumerate(iters):
        rec = next(it, None)
        if rec is not None:
            pending.append((i, rec))
    while pending:
        best = min(range(len(pending)),
                   key=lambda k: (machines[pending[k][0]].next_issue_time()
                                  + pending[k][1].gap // 4,
                                  pending[k][0]))
        i, rec = pending.pop(best)
        machines[i].step(rec)
        nxt = next(iters[i], None)
        if nxt is not None:
            pending.append((i, nxt))
        pending.sort(key=lambda p: p[0])
    return [m.finish() for m in machines]
