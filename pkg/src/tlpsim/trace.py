"""Trace format, binary codec, and synthetic workload generators.

A trace file is an 8-byte header (magic ``TLPT``, u16 version, 2 reserved
bytes) followed by packed fixed-width records, little-endian throughout.
Each record describes one memory operation plus the number of non-memory
instructions executed since the previous record, so instruction totals are
exact without simulating non-memory ops.
"""

from __future__ import annotations

import struct
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

MAGIC = b"TLPT"
VERSION = 1
HEADER_SIZE = 8
RECORD_SIZE = 19
_HEADER = struct.Struct("<4sH2s")
_RECORD = struct.Struct("<HBQQ")

LINE_SIZE = 64


class TraceError(Exception):
    """Malformed trace bytes or an invalid generator spec."""


class Kind(IntEnum):
    LOAD = 0
    STORE = 1


@dataclass(frozen=True)
class TraceRecord:
    gap: int          # non-memory instructions since previous record, 0..65535
    kind: Kind
    pc: int           # 64-bit instruction address, nonzero
    vaddr: int        # 64-bit virtual byte address

    def __post_init__(self):
        if not (0 <= self.gap <= 0xFFFF):
            raise TraceError(f"gap out of range: {self.gap}")
        if self.pc == 0:
            raise TraceError("pc must be nonzero")


def encode_record(rec: TraceRecord) -> bytes:
    """Pack one record into its fixed 19-byte layout."""
    return _RECORD.pack(rec.gap, int(rec.kind), rec.pc, rec.vaddr)


def decode_record(data: bytes, offset: int = 0) -> TraceRecord:
    """Unpack one record starting at ``offset``; raises TraceError on truncation."""
    if len(data) - offset < RECORD_SIZE:
        raise TraceError(
            f"truncated record at byte offset {offset}: "
            f"need {RECORD_SIZE} bytes, have {len(data) - offset}"
        )
    gap, kind, pc, vaddr = _RECORD.unpack_from(data, offset)
    if kind not in (0, 1):
        raise TraceError(f"unknown kind byte {kind} at offset {offset}")
    return TraceRecord(gap=gap, kind=Kind(kind), pc=pc, vaddr=vaddr)


def write_trace(path, records) -> int:
    """Write header + records to ``path``; returns the record count."""
    n = 0
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, b"\x00\x00"))
        for rec in records:
            f.write(encode_record(rec))
            n += 1
    return n


def read_trace(path):
    """Yield TraceRecords from a trace file."""
    with open(path, "rb") as f:
        header = f.read(HEADER_SIZE)
        if len(header) < HEADER_SIZE:
            raise TraceError(f"{path}: truncated header")
        magic, version, _ = _HEADER.unpack(header)
        if magic != MAGIC:
            raise TraceError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise TraceError(f"{path}: unsupported version {version}")
        idx = 0
        while True:
            chunk = f.read(RECORD_SIZE)
            if not chunk:
                return
            try:
                yield decode_record(chunk)
            except TraceError as e:
                raise TraceError(f"{path}: record {idx}: {e}") from e
            idx += 1


def trace_instructions(records) -> int:
    """Total instruction count: sum of gaps plus the record count."""
    total = 0
    n = 0
    for rec in records:
        total += rec.gap
        n += 1
    return total + n


# ---------------------------------------------------------------------------
# Synthetic workload generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Pattern:
    """One access-pattern component.

    kind:
      stream       -- vaddr advances by 64 each access; wraps at ``footprint``
                      when footprint is set, otherwise monotonic forever.
      strided      -- like stream with an arbitrary byte stride.
      pointer_chase -- line-granular draws from a power-law-ranked footprint:
                      rank r is chosen with probability proportional to
                      r**(-exponent), so a small hot set is re-touched while a
                      long tail misses all caches.
      uniform      -- uniform random lines over the footprint.
      phased       -- alternates, under the same PCs, between streaming over a
                      small looping buffer and pointer-chasing the cold
                      footprint; phase lengths are geometric with mean
                      ``phase_len``. Models workloads whose prefetch
                      usefulness correlates with off-chip behavior rather
                      than with the PC.
      flip         -- uniform random over the cold footprint for the first
                      ``flip_at`` component accesses, then a tight stream
                      loop over ``stream_footprint`` under the same PCs.
                      Models a data structure whose access behavior changes
                      after a build phase.
    """
    kind: str
    stride: int = 64
    footprint: int = 0
    exponent: float = 0.8
    pc_count: int = 1
    stream_footprint: int = 256 * 1024
    phase_len: int = 64
    stream_fraction: float = 0.5
    flip_at: int = 4000
    # Probability of re-touching a recently fetched line instead of drawing a
    # fresh target. The revisit distance window defaults to beyond the
    # first-access page-buffer horizon but within typical L1D residency, so
    # revisits look like fresh cold accesses to page-local program features.
    repeat: float = 0.0
    repeat_min: int = 160
    repeat_max: int = 352


@dataclass(frozen=True)
class SyntheticSpec:
    patterns: tuple = ()              # tuple of (weight, Pattern)
    record_count: int = 0
    seed: int = 0
    page_size: int = 4096
    mean_gap: int = 8
    store_fraction: float = 0.0

    def validate(self):
        if self.record_count <= 0:
            raise TraceError("record_count must be positive")
        if not self.patterns:
            raise TraceError("at least one pattern component required")
        for w, p in self.patterns:
            if w <= 0:
                raise TraceError("pattern weights must be positive")
            if p.kind not in ("stream", "strided", "pointer_chase", "uniform",
                              "phased", "flip"):
                raise TraceError(f"unknown pattern kind {p.kind!r}")
            if (p.kind in ("pointer_chase", "uniform", "phased", "flip")
                    and p.footprint <= 0):
                raise TraceError(f"{p.kind} requires a positive footprint")
            if (p.kind in ("phased", "flip")
                    and (p.stream_footprint <= 0 or p.phase_len <= 0)):
                raise TraceError(f"{p.kind} requires positive stream_footprint "
                                 "and phase_len")
            if p.pc_count <= 0:
                raise TraceError("pc_count must be positive")


def stream_spec(record_count, seed=0, footprint=0, **kw):
    return SyntheticSpec(
        patterns=((1.0, Pattern("stream", footprint=footprint)),),
        record_count=record_count, seed=seed, **kw)


def pointer_chase_spec(record_count, footprint, exponent=0.8, seed=0, **kw):
    return SyntheticSpec(
        patterns=((1.0, Pattern("pointer_chase", footprint=footprint,
                                exponent=exponent)),),
        record_count=record_count, seed=seed, **kw)


class _ComponentState:
    """Mutable per-component generator state."""

    def __init__(self, idx, pattern, rng, page_size):
        self.pattern = pattern
        # Each component lives in its own virtual region and owns its PCs, so
        # predictors can correlate PC with component behavior.
        self.base = idx * 0x100_0000_0000
        self.pcs = [0x40_0000 + idx * 0x1000 + 8 * k
                    for k in range(pattern.pc_count)]
        self.pos = 0
        self.pc_rr = 0
        self.history = deque(maxlen=max(1, pattern.repeat_max))
        if pattern.kind in ("phased", "flip"):
            self.mode = "stream"
            self.remaining = 0
            self.count = 0
            self.n_lines = max(1, pattern.footprint // LINE_SIZE)
        if pattern.kind == "pointer_chase":
            n_lines = max(1, pattern.footprint // LINE_SIZE)
            ranks = np.arange(1, n_lines + 1, dtype=np.float64)
            w = ranks ** (-pattern.exponent)
            self.cdf = np.cumsum(w / w.sum())
            # Scatter ranks over the footprint so the hot set is not contiguous.
            self.rank_to_line = rng.permutation(n_lines)
        elif pattern.kind == "uniform":
            self.n_lines = max(1, pattern.footprint // LINE_SIZE)

    def next_vaddr(self, rng):
        p = self.pattern
        if (p.repeat > 0.0 and len(self.history) >= p.repeat_max
                and rng.random() < p.repeat):
            back = int(rng.integers(p.repeat_min, p.repeat_max))
            return self.history[-back]
        v = self._fresh_vaddr(rng)
        self.history.append(v)
        return v

    def _fresh_vaddr(self, rng):
        p = self.pattern
        if p.kind in ("stream", "strided"):
            stride = 64 if p.kind == "stream" else p.stride
            addr = self.base + self.pos
            self.pos += stride
            if p.footprint and self.pos >= p.footprint:
                self.pos = 0
            return addr
        if p.kind == "pointer_chase":
            u = rng.random()
            rank = int(np.searchsorted(self.cdf, u))
            line = int(self.rank_to_line[min(rank, len(self.rank_to_line) - 1)])
            return self.base + line * LINE_SIZE
        if p.kind == "phased":
            if self.remaining <= 0:
                stream = rng.random() < p.stream_fraction
                self.mode = "stream" if stream else "chase"
                self.remaining = 1 + int(rng.geometric(1.0 / p.phase_len))
            self.remaining -= 1
            if self.mode == "stream":
                addr = self.base + self.pos
                self.pos += LINE_SIZE
                if self.pos >= p.stream_footprint:
                    self.pos = 0
                return addr
            off = p.stream_footprint + LINE_SIZE  # keep regions disjoint
            return (self.base + off
                    + int(rng.integers(self.n_lines)) * LINE_SIZE)
        if p.kind == "flip":
            self.count += 1
            if self.count <= p.flip_at:
                off = p.stream_footprint + LINE_SIZE
                return (self.base + off
                        + int(rng.integers(self.n_lines)) * LINE_SIZE)
            addr = self.base + self.pos
            self.pos += LINE_SIZE
            if self.pos >= p.stream_footprint:
                self.pos = 0
            return addr
        # uniform
        return self.base + int(rng.integers(self.n_lines)) * LINE_SIZE

    def next_pc(self):
        pc = self.pcs[self.pc_rr]
        self.pc_rr = (self.pc_rr + 1) % len(self.pcs)
        return pc


def generate(spec: SyntheticSpec):
    """Yield deterministic TraceRecords for ``spec``.

    Identical (spec, seed) pairs produce byte-identical traces.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    comps = [_ComponentState(i, p, rng, spec.page_size)
             for i, (_, p) in enumerate(spec.patterns)]
    weights = np.array([w for w, _ in spec.patterns], dtype=np.float64)
    weights /= weights.sum()
    single = len(comps) == 1
    for _ in range(spec.record_count):
        comp = comps[0] if single else comps[int(rng.choice(len(comps), p=weights))]
        vaddr = comp.next_vaddr(rng)
        pc = comp.next_pc()
        if spec.mean_gap > 0:
            gap = int(rng.integers(0, 2 * spec.mean_gap + 1))
        else:
            gap = 0
        if spec.store_fraction > 0 and rng.random() < spec.store_fraction:
            kind = Kind.STORE
        else:
            kind = Kind.LOAD
        yield TraceRecord(gap=gap, kind=kind, pc=pc, vaddr=vaddr)


def generate_list(spec: SyntheticSpec):
    return list(generate(spec))
