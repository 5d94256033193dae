"""Labeled descriptor database with exhaustive top-k search and a binary file format.

File layout (little-endian)::

    b"FLIPDB01"                      magic, 8 bytes
    u32 version (=1), u32 n_p, u32 w, u32 stride, u32 L, u32 n_scales
    f64 x n_scales                   scale ratios, descending
    u64 record count
    per record:
        u64 id
        u16 len + UTF-8 label
        u16 len + UTF-8 name
        u8 has_coords [+ u64 row, u64 col]
        u8 degenerate bitfield (bit i = scale i, bit 0 = largest scale)
        (L-1) x u64 raw counts, for each scale
        u32 flat length, f64 x flat length
"""
from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .descriptor import DEFAULT_SCALES, FlipConfig, MflipDescriptor, check_scales
from .errors import (ConfigError, EmptyIndexError, IndexFormatError, InvalidInputError,
                     UnsupportedVersionError)
from .metrics import MetricKind, distances_to

MAGIC = b"FLIPDB01"
VERSION = 1
MAX_SCALES = 8  # one degenerate bit per scale in a u8


@dataclass(frozen=True)
class IndexConfig:
    """Descriptor fingerprint shared by every record of an index."""

    w: int = 3
    stride: int = 3
    L: int = 128
    n_p: int = 4
    scales: tuple = DEFAULT_SCALES

    def __post_init__(self):
        object.__setattr__(self, "scales", check_scales(self.scales))
        if len(self.scales) > MAX_SCALES:
            raise ConfigError(f"at most {MAX_SCALES} scales are supported, got {len(self.scales)}")
        self.flip  # validates w/stride/L/n_p

    @classmethod
    def from_flip(cls, cfg: FlipConfig, scales=DEFAULT_SCALES) -> "IndexConfig":
        return cls(cfg.w, cfg.stride, cfg.L, cfg.n_p, tuple(scales))

    @property
    def flip(self) -> FlipConfig:
        return FlipConfig(self.w, self.stride, self.L, self.n_p)

    @property
    def dim(self) -> int:
        return len(self.scales) * (self.L - 1)

    def to_dict(self) -> dict:
        return {"w": self.w, "stride": self.stride, "L": self.L, "n_p": self.n_p,
                "scales": list(self.scales)}

    def __str__(self):
        scales = ",".join(f"{s:g}" for s in self.scales)
        return f"w={self.w} stride={self.stride} L={self.L} n_p={self.n_p} scales={scales}"


class FingerprintMismatch(ConfigError):
    def __init__(self, expected: IndexConfig, got: IndexConfig):
        self.expected = expected
        self.got = got
        super().__init__(f"descriptor config mismatch: index has [{expected}], query has [{got}]")


@dataclass(eq=False)
class DescriptorRecord:
    label: str
    name: str
    raw_counts: tuple
    degenerate: tuple
    flat: np.ndarray = field(repr=False)
    coords: Optional[tuple] = None
    id: Optional[int] = None

    @classmethod
    def from_mflip(cls, desc: MflipDescriptor, label: str, name: str = "",
                   coords=None, id: Optional[int] = None) -> "DescriptorRecord":
        return cls(
            label=str(label),
            name=str(name),
            raw_counts=tuple(h.counts.copy() for h in desc.histograms),
            degenerate=desc.degenerate,
            flat=desc.flat.copy(),
            coords=None if coords is None else (int(coords[0]), int(coords[1])),
            id=id,
        )

    def __eq__(self, other):
        if not isinstance(other, DescriptorRecord):
            return NotImplemented
        return (self.id == other.id and self.label == other.label and self.name == other.name
                and self.coords == other.coords
                and tuple(self.degenerate) == tuple(other.degenerate)
                and len(self.raw_counts) == len(other.raw_counts)
                and all(np.array_equal(a, b) for a, b in zip(self.raw_counts, other.raw_counts))
                and np.array_equal(self.flat, other.flat))

    __hash__ = None


class Hit(NamedTuple):
    id: int
    label: str
    name: str
    distance: float


@dataclass
class SearchResult:
    k: int
    metric: MetricKind
    hits: list

    def __len__(self):
        return len(self.hits)

    def __iter__(self):
        return iter(self.hits)

    def __getitem__(self, i):
        return self.hits[i]

    @property
    def ids(self) -> list[int]:
        return [h.id for h in self.hits]

    def to_dict(self) -> dict:
        return {"k": self.k, "metric": str(self.metric),
                "results": [{"rank": r, "id": h.id, "label": h.label, "name": h.name,
                             "distance": h.distance} for r, h in enumerate(self.hits, 1)]}


def _validate_record(pos: int, rec: DescriptorRecord, config: IndexConfig) -> None:
    who = f"record {pos} ({rec.name or rec.label!r})"
    n_scales, n_bins = len(config.scales), config.L - 1
    flat = np.asarray(rec.flat)
    if flat.ndim != 1 or flat.shape[0] != config.dim:
        raise InvalidInputError(
            f"{who}: descriptor length {flat.size} does not match index length {config.dim}")
    if len(rec.raw_counts) != n_scales or len(rec.degenerate) != n_scales:
        raise InvalidInputError(f"{who}: expected {n_scales} scales")
    for counts in rec.raw_counts:
        if np.asarray(counts).shape != (n_bins,):
            raise InvalidInputError(
                f"{who}: raw histogram has {np.asarray(counts).size} bins, expected {n_bins}")
    if len(rec.label.encode("utf-8")) > 0xFFFF or len(rec.name.encode("utf-8")) > 0xFFFF:
        raise InvalidInputError(f"{who}: label or name longer than 65535 bytes")


class DescriptorIndex:
    """Immutable collection of descriptor records searchable by any :class:`MetricKind`."""

    def __init__(self, records=(), config: IndexConfig = IndexConfig()):
        self.config = config
        recs = []
        next_id = 0
        for pos, rec in enumerate(records):
            _validate_record(pos, rec, config)
            rid = next_id if rec.id is None else int(rec.id)
            if rid < next_id:
                raise InvalidInputError(
                    f"record {pos}: id {rid} is not strictly increasing (expected >= {next_id})")
            recs.append(DescriptorRecord(
                label=rec.label, name=rec.name,
                raw_counts=tuple(np.asarray(c, dtype=np.int64) for c in rec.raw_counts),
                degenerate=tuple(bool(d) for d in rec.degenerate),
                flat=np.asarray(rec.flat, dtype=np.float64),
                coords=rec.coords, id=rid))
            next_id = rid + 1
        self.records = tuple(recs)
        self.ids = np.array([r.id for r in recs], dtype=np.int64)
        if recs:
            self.matrix = np.stack([r.flat for r in recs])
        else:
            self.matrix = np.zeros((0, config.dim))
        self.matrix.setflags(write=False)

    def __len__(self):
        return len(self.records)

    def __eq__(self, other):
        if not isinstance(other, DescriptorIndex):
            return NotImplemented
        return self.config == other.config and self.records == other.records

    __hash__ = None

    @property
    def labels(self) -> list[str]:
        return [r.label for r in self.records]

    def _query_vector(self, query) -> np.ndarray:
        if isinstance(query, MflipDescriptor):
            got = IndexConfig.from_flip(query.config, query.scales)
            if got != self.config:
                raise FingerprintMismatch(self.config, got)
            query = query.flat
        q = np.asarray(query, dtype=np.float64)
        if q.ndim != 1 or q.shape[0] != self.config.dim:
            raise InvalidInputError(
                f"query length {q.size} does not match index length {self.config.dim}")
        return q

    def search(self, query, kind=MetricKind.CHI_SQUARE, k: int = 3,
               exclude=None) -> SearchResult:
        """Exact k nearest records to ``query``, ascending distance, ties by ascending id.

        ``exclude`` is an optional collection of record ids to leave out.
        """
        kind = MetricKind.parse(kind)
        if k < 1:
            raise InvalidInputError(f"k must be >= 1, got {k}")
        if not self.records:
            raise EmptyIndexError("cannot search an empty index")
        q = self._query_vector(query)
        d = distances_to(q, self.matrix, kind)
        order = np.lexsort((self.ids, d))
        if exclude:
            order = order[~np.isin(self.ids[order], np.fromiter(exclude, dtype=np.int64))]
            if order.size == 0:
                raise EmptyIndexError("every record was excluded from the search")
        hits = [Hit(int(self.ids[i]), self.records[i].label, self.records[i].name, float(d[i]))
                for i in order[:k]]
        return SearchResult(k=k, metric=kind, hits=hits)

    def classify_nn(self, query, kind=MetricKind.CHI_SQUARE, exclude=None) -> str:
        """Label of the single best match."""
        return self.search(query, kind, k=1, exclude=exclude).hits[0].label

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "DescriptorIndex":
        return cls.from_bytes(Path(path).read_bytes())

    def to_bytes(self) -> bytes:
        cfg = self.config
        out = [MAGIC, struct.pack("<6I", VERSION, cfg.n_p, cfg.w, cfg.stride, cfg.L,
                                  len(cfg.scales))]
        out.append(struct.pack(f"<{len(cfg.scales)}d", *cfg.scales))
        out.append(struct.pack("<Q", len(self.records)))
        for rec in self.records:
            label = rec.label.encode("utf-8")
            name = rec.name.encode("utf-8")
            out.append(struct.pack("<QH", rec.id, len(label)) + label)
            out.append(struct.pack("<H", len(name)) + name)
            if rec.coords is None:
                out.append(b"\x00")
            else:
                out.append(struct.pack("<BQQ", 1, *rec.coords))
            bits = sum(1 << i for i, d in enumerate(rec.degenerate) if d)
            out.append(struct.pack("<B", bits))
            for counts in rec.raw_counts:
                out.append(np.asarray(counts, dtype="<u8").tobytes())
            out.append(struct.pack("<I", rec.flat.size))
            out.append(np.asarray(rec.flat, dtype="<f8").tobytes())
        return b"".join(out)

    @classmethod
    def from_bytes(cls, buf: bytes) -> "DescriptorIndex":
        rd = _Reader(buf)
        if rd.take(len(MAGIC)) != MAGIC:
            raise IndexFormatError("bad magic, not a FLIP descriptor index", 0)
        (version,) = rd.unpack("<I")
        if version != VERSION:
            raise UnsupportedVersionError(
                f"unsupported index version {version} (this build reads {VERSION})", 8)
        n_p, w, stride, L, n_scales = rd.unpack("<5I")
        if n_scales > MAX_SCALES:
            raise IndexFormatError(f"{n_scales} scales exceeds the limit of {MAX_SCALES}",
                                   rd.pos - 4)
        scales = rd.unpack(f"<{n_scales}d")
        try:
            config = IndexConfig(w, stride, L, n_p, scales)
        except ConfigError as exc:
            raise IndexFormatError(f"invalid header: {exc}", 12) from exc
        if tuple(scales) != config.scales:
            raise IndexFormatError("scales are not stored in descending order", 32)

        (count,) = rd.unpack("<Q")
        records = []
        for _ in range(count):
            start = rd.pos
            (rid,) = rd.unpack("<Q")
            label = rd.text()
            name = rd.text()
            (has_coords,) = rd.unpack("<B")
            coords = None
            if has_coords == 1:
                coords = rd.unpack("<QQ")
            elif has_coords != 0:
                raise IndexFormatError(f"invalid has_coords byte {has_coords}", rd.pos - 1)
            (bits,) = rd.unpack("<B")
            degenerate = tuple(bool(bits >> i & 1) for i in range(n_scales))
            raw = tuple(rd.array("<u8", L - 1).astype(np.int64) for _ in range(n_scales))
            (flat_len,) = rd.unpack("<I")
            if flat_len != config.dim:
                raise IndexFormatError(
                    f"record flat length {flat_len} does not match {config.dim}", rd.pos - 4)
            flat = rd.array("<f8", flat_len).astype(np.float64)
            records.append((start, DescriptorRecord(label, name, raw, degenerate, flat,
                                                    coords, rid)))
        if rd.pos != len(buf):
            raise IndexFormatError(f"{len(buf) - rd.pos} trailing bytes after last record", rd.pos)
        prev = -1
        for start, rec in records:
            if rec.id <= prev:
                raise IndexFormatError(f"record id {rec.id} is not strictly increasing", start)
            prev = rec.id
        return cls([r for _, r in records], config)


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise IndexFormatError(
                f"truncated file: wanted {n} bytes, {len(self.buf) - self.pos} left", self.pos)
        chunk = self.buf[self.pos:self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def text(self) -> str:
        (n,) = self.unpack("<H")
        at = self.pos
        try:
            return self.take(n).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise IndexFormatError(f"invalid UTF-8 string: {exc.reason}", at) from exc

    def array(self, dtype: str, count: int) -> np.ndarray:
        size = np.dtype(dtype).itemsize * count
        return np.frombuffer(self.take(size), dtype=dtype)


def build_index(records, config: IndexConfig = IndexConfig()) -> DescriptorIndex:
    """Build an index; records without an id get consecutive ids in insertion order."""
    return DescriptorIndex(records, config)


def search(index: DescriptorIndex, query, kind=MetricKind.CHI_SQUARE, k: int = 3) -> SearchResult:
    return index.search(query, kind, k)


def classify_nn(index: DescriptorIndex, query, kind=MetricKind.CHI_SQUARE) -> str:
    return index.classify_nn(query, kind)


def save_index(index: DescriptorIndex, path) -> None:
    index.save(path)


def load_index(path: str | os.PathLike) -> DescriptorIndex:
    return DescriptorIndex.load(path)
