"""Representative L1D and L2 prefetchers.

These are deliberately simple, pluggable engines: an IP-stride and a
next-line prefetcher at L1D, and a stream detector at L2. Emitted requests
never cross a 4 KB page; the L1D requests carry a metadata snapshot of the
triggering load so the prefetch filter can judge them.
"""

from __future__ import annotations

from dataclasses import dataclass

PAGE_SIZE = 4096
LINE = 64


@dataclass
class PrefetchRequest:
    trigger_pc: int
    trigger_vaddr: int
    target_vaddr: int
    level: str                  # "l1d" or "l2"
    metadata: object = None     # RequestMetadata snapshot of the trigger
    flp_tag: int = 0            # trigger classified off-chip?


def _same_page_targets(vaddr, stride, count):
    page = vaddr & ~(PAGE_SIZE - 1)
    out = []
    t = vaddr
    for _ in range(count):
        t += stride
        if t & ~(PAGE_SIZE - 1) != page:
            break
        out.append(t)
    return out


class NextLinePrefetcher:
    """Emit the next cache line on every demand access."""

    def on_access(self, pc, vaddr, hit):
        line = vaddr & ~(LINE - 1)
        targets = _same_page_targets(line, LINE, 1)
        return [PrefetchRequest(pc, vaddr, t, "l1d") for t in targets]


class IpStridePrefetcher:
    """Per-PC stride detector, 256 entries, 2-bit confidence, degree-D."""

    TABLE_SIZE = 256

    def __init__(self, degree=4):
        self.degree = degree
        self.table = {}   # slot -> [last_vaddr, last_stride, confidence]

    def on_access(self, pc, vaddr, hit):
        slot = pc % self.TABLE_SIZE
        e = self.table.get(slot)
        if e is None:
            self.table[slot] = [vaddr, 0, 0]
            return []
        stride = vaddr - e[0]
        if stride != 0 and stride == e[1]:
            e[2] = min(3, e[2] + 1)
        else:
            e[2] = 0
        e[0] = vaddr
        e[1] = stride
        if e[2] < 1 or stride == 0:
            return []
        targets = _same_page_targets(vaddr, stride, self.degree)
        return [PrefetchRequest(pc, vaddr, t, "l1d") for t in targets]


class L2StreamPrefetcher:
    """Ascending/descending line-stream detector within a page window.

    Tracks a small set of recently touched pages; two consecutive accesses in
    the same direction emit up to two next lines into L2.
    """

    MAX_PAGES = 16

    def __init__(self, degree=2):
        self.degree = degree
        self.pages = {}    # page -> [last_line, direction, confirmations, stamp]
        self.stamp = 0

    def on_access(self, paddr, hit):
        page = paddr // PAGE_SIZE
        line = (paddr % PAGE_SIZE) // LINE
        self.stamp += 1
        e = self.pages.get(page)
        if e is None:
            if len(self.pages) >= self.MAX_PAGES:
                lru = min(self.pages, key=lambda p: self.pages[p][3])
                del self.pages[lru]
            self.pages[page] = [line, 0, 0, self.stamp]
            return []
        delta = line - e[0]
        if delta in (1, -1):
            if delta == e[1]:
                e[2] += 1
            else:
                e[1] = delta
                e[2] = 1
        elif delta != 0:
            e[1] = 0
            e[2] = 0
        e[0] = line
        e[3] = self.stamp
        if e[2] < 1 or e[1] == 0:
            return []
        base = page * PAGE_SIZE + line * LINE
        targets = _same_page_targets(base, e[1] * LINE, self.degree)
        return [PrefetchRequest(0, base, t, "l2") for t in targets]


def make_l1d_prefetcher(name, degree=4):
    if name == "none" or name is None:
        return None
    if name == "next_line":
        return NextLinePrefetcher()
    if name == "ip_stride":
        return IpStridePrefetcher(degree=degree)
    raise ValueError(f"unknown l1d prefetcher {name!r}")


def make_l2_prefetcher(name, degree=2):
    if name == "none" or name is None:
        return None
    if name == "stream":
        return L2StreamPrefetcher(degree=degree)
    raise ValueError(f"unknown l2 prefetcher {name!r}")
