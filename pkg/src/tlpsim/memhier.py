"""Cache hierarchy building blocks: LRU caches, MSHRs, address translation,
and a bandwidth-limited DRAM with same-line request merging.

Functional state (tags, LRU order) updates immediately at access time;
timing is carried separately as cycle values so a single-pass trace replay
stays cheap.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class CacheGeometry:
    capacity: int          # bytes
    associativity: int
    hit_latency: int       # cycles
    mshr_entries: int
    line_size: int = 64

    def __post_init__(self):
        if min(self.capacity, self.associativity, self.hit_latency,
               self.mshr_entries, self.line_size) <= 0:
            raise ValueError("all geometry fields must be positive")
        if self.capacity % (self.associativity * self.line_size) != 0:
            raise ValueError(
                f"capacity {self.capacity} not divisible by "
                f"associativity*line ({self.associativity}*{self.line_size})")

    @property
    def num_sets(self):
        return self.capacity // (self.associativity * self.line_size)


# Table defaults: L1D 32KB/8-way/4cc/10 MSHR, L2 1MB/16-way/10cc/16 MSHR,
# LLC 1.375MB per core/11-way/36cc/64 MSHR.
def l1d_geometry():
    return CacheGeometry(32 * 1024, 8, 4, 10)


def l2_geometry():
    return CacheGeometry(1024 * 1024, 16, 10, 16)


def llc_geometry(cores=1, latency=36):
    return CacheGeometry(cores * 1408 * 1024, 11, latency, 64 * cores)


class Cache:
    """Set-associative LRU cache. Lines carry dirty and prefetched bits."""

    def __init__(self, geom: CacheGeometry):
        self.geom = geom
        self.num_sets = geom.num_sets
        self.assoc = geom.associativity
        # per-set dict: tag -> [stamp, dirty, prefetched]
        self.sets = [dict() for _ in range(self.num_sets)]
        self.stamp = 0

    def _locate(self, paddr):
        line = paddr // 64
        return self.sets[line % self.num_sets], line // self.num_sets

    def lookup(self, paddr, update_lru=True):
        """True on hit; a hit refreshes the line's LRU stamp."""
        s, tag = self._locate(paddr)
        entry = s.get(tag)
        if entry is None:
            return False
        if update_lru:
            self.stamp += 1
            entry[0] = self.stamp
        return True

    def hit_prefetched(self, paddr):
        """Demand-hit bookkeeping: clears and returns the prefetched bit."""
        s, tag = self._locate(paddr)
        entry = s[tag]
        was = entry[2]
        entry[2] = False
        return was

    def set_dirty(self, paddr):
        s, tag = self._locate(paddr)
        s[tag][1] = True

    def fill(self, paddr, dirty=False, prefetched=False):
        """Insert a line as MRU. Returns the evicted (addr, dirty, prefetched)
        triple when the set was full, else None."""
        s, tag = self._locate(paddr)
        self.stamp += 1
        if tag in s:
            e = s[tag]
            e[0] = self.stamp
            e[1] = e[1] or dirty
            return None
        victim = None
        if len(s) >= self.assoc:
            vtag = min(s, key=lambda t: s[t][0])
            ve = s.pop(vtag)
            set_idx = (paddr // 64) % self.num_sets
            vaddr = (vtag * self.num_sets + set_idx) * 64
            victim = (vaddr, ve[1], ve[2])
        s[tag] = [self.stamp, dirty, prefetched]
        return victim

    def drain_prefetched(self):
        """Count and clear remaining never-demanded prefetched lines."""
        n = 0
        for s in self.sets:
            for e in s.values():
                if e[2]:
                    e[2] = False
                    n += 1
        return n


class Mshr:
    """Outstanding-miss table: one entry per line address, bounded capacity.

    Entries carry the fill completion cycle plus arbitrary metadata; a second
    request for an in-flight line merges instead of allocating.
    """

    def __init__(self, capacity):
        self.capacity = capacity
        self.entries = {}   # line addr -> [completion, metadata, is_prefetch]

    def prune(self, now):
        done = [a for a, e in self.entries.items() if e[0] <= now]
        for a in done:
            del self.entries[a]

    def lookup(self, line_addr):
        return self.entries.get(line_addr)

    def full(self):
        return len(self.entries) >= self.capacity

    def earliest_completion(self):
        return min(e[0] for e in self.entries.values())

    def allocate(self, line_addr, completion, metadata=None, is_prefetch=False):
        assert line_addr not in self.entries
        assert len(self.entries) < self.capacity
        self.entries[line_addr] = [completion, metadata, is_prefetch]


class PageMap:
    """First-touch virtual-to-physical translation, injective and stable.

    Sequential frame allocation by default; a seed shuffles frame numbers in
    fixed-size blocks so physical placement can be decorrelated from the
    allocation order without unbounded precomputation.
    """

    _BLOCK = 1 << 16

    def __init__(self, page_size=4096, seed=None):
        if page_size & (page_size - 1):
            raise ValueError("page size must be a power of two")
        self.page_size = page_size
        self.page_bits = page_size.bit_length() - 1
        self.frames = {}
        self.next_frame = 0
        self.seed = seed
        self._pool = []

    def _alloc(self):
        if self.seed is None:
            f = self.next_frame
            self.next_frame += 1
            return f
        if not self._pool:
            import numpy as np
            rng = np.random.default_rng((self.seed, self.next_frame))
            block = list(rng.permutation(self._BLOCK) + self.next_frame)
            self.next_frame += self._BLOCK
            self._pool = block[::-1]
        return int(self._pool.pop())

    def translate(self, vaddr):
        vpage = vaddr >> self.page_bits
        frame = self.frames.get(vpage)
        if frame is None:
            frame = self._alloc()
            self.frames[vpage] = frame
        return (frame << self.page_bits) | (vaddr & (self.page_size - 1))


class DramModel:
    """Fixed service latency plus token-bucket bandwidth plus same-line merging.

    No banks or rows: the behaviors this backs are transaction counts and
    bandwidth-pressure trends, not DRAM microarchitecture.
    """

    def __init__(self, service_latency=72, gbps=12.8, freq_ghz=3.8,
                 line_size=64):
        self.service_latency = service_latency
        self.line_size = line_size
        self.set_bandwidth(gbps, freq_ghz)
        self.in_flight = {}    # line addr -> completion cycle
        self.next_ready = 0
        self.reads = 0
        self.merged = 0
        self.writebacks = 0

    def set_bandwidth(self, gbps, freq_ghz=3.8):
        import math
        self.gbps = gbps
        bytes_per_cycle = gbps / freq_ghz   # GB/s over Gcycles/s
        self.cycles_per_line = max(1, math.ceil(
            self.line_size / bytes_per_cycle - 1e-9))

    def issue(self, line_addr, now):
        """Issue (or merge) a read for ``line_addr``; returns (completion, merged)."""
        comp = self.in_flight.get(line_addr)
        if comp is not None and comp > now:
            self.merged += 1
            return comp, True
        start = now if now > self.next_ready else self.next_ready
        comp = start + self.service_latency
        self.next_ready = start + self.cycles_per_line
        self.in_flight[line_addr] = comp
        self.reads += 1
        if len(self.in_flight) > 4096:
            self.in_flight = {a: c for a, c in self.in_flight.items()
                              if c > now}
        return comp, False

    def writeback(self, now):
        """Account one dirty-line writeback; consumes bandwidth tokens."""
        start = now if now > self.next_ready else self.next_ready
        self.next_ready = start + self.cycles_per_line
        self.writebacks += 1
