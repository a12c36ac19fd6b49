"""Synthetic trace generation and the text/binary trace formats.

Text format::

    #scmtrace v1
    seq,op,address[,arrival_offset_ns]

Binary format: the 8-byte magic ``SCMTRC01`` followed by packed 17-byte
records (u64 seq, u8 op, u64 address; little-endian). Arrival offsets are
not carried by the binary format.
"""
import io
import logging
import math
import os
from typing import BinaryIO, Iterable, List, Optional, Union

import numpy as np

from src.models.errors import TraceFormatError
from src.models.trace import (
    PAGE_BYTES, REQUEST_BYTES, SUBBLOCKS_PER_PAGE,
    SyntheticTraceSpec, Trace, TraceFormat, TraceRecord,
)

logger = logging.getLogger(__name__)

TEXT_HEADER = "#scmtrace v1"
BINARY_MAGIC = b"SCMTRC01"
BINARY_RECORD = np.dtype([("seq", "<u8"), ("op", "u1"), ("address", "<u8")])
CDF_TABLE_LIMIT = 1 << 24
BINARY_SUFFIXES = {".bin", ".scmb", ".trc"}


class ZipfPageSampler:
    """Draws 0-based page ranks with P(rank r) proportional to (r + 1)^-alpha.

    Small populations use an inverse-CDF table; above CDF_TABLE_LIMIT pages
    it switches to rejection-inversion so memory stays bounded.
    """

    def __init__(self, n_pages: int, alpha: float, rng: np.random.Generator):
        self.n_pages = n_pages
        self.alpha = alpha
        self.rng = rng
        self._cdf = None
        if n_pages <= CDF_TABLE_LIMIT:
            weights = np.arange(1, n_pages + 1, dtype=np.float64) ** -alpha
            cdf = np.cumsum(weights)
            self._cdf = cdf / cdf[-1]
        else:
            self._h_integral_x1 = self._h_integral(1.5) - 1.0
            self._h_integral_n = self._h_integral(n_pages + 0.5)
            self._s = 2.0 - self._h_integral_inverse(self._h_integral(2.5) - self._h(2.0))

    def sample(self, size: int) -> np.ndarray:
        if self._cdf is not None:
            u = self.rng.random(size)
            ranks = np.searchsorted(self._cdf, u, side="right")
            return np.minimum(ranks, self.n_pages - 1).astype(np.int64)
        return self._rejection_inversion(size)

    def _rejection_inversion(self, size: int) -> np.ndarray:
        accepted: List[np.ndarray] = []
        remaining = size
        while remaining > 0:
            batch = max(remaining + remaining // 4, 64)
            u = self._h_integral_n + self.rng.random(batch) * (self._h_integral_x1 - self._h_integral_n)
            x = self._h_integral_inverse(u)
            k = np.clip(np.floor(x + 0.5), 1, self.n_pages)
            keep = (k - x <= self._s) | (u >= self._h_integral(k + 0.5) - self._h(k))
            ranks = k[keep][:remaining].astype(np.int64) - 1
            accepted.append(ranks)
            remaining -= len(ranks)
        return np.concatenate(accepted)

    def _h(self, x):
        return np.exp(-self.alpha * np.log(x))

    def _h_integral(self, x):
        log_x = np.log(x)
        return _expm1_over_x((1.0 - self.alpha) * log_x) * log_x

    def _h_integral_inverse(self, x):
        t = np.maximum(x * (1.0 - self.alpha), -1.0)
        return np.exp(_log1p_over_x(t) * x)


def _log1p_over_x(x):
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) <= 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * (0.5 - x * (1.0 / 3.0 - 0.25 * x)), np.log1p(safe) / safe)


def _expm1_over_x(x):
    x = np.asarray(x, dtype=np.float64)
    small = np.abs(x) <= 1e-8
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * 0.5 * (1.0 + x / 3.0 * (1.0 + 0.25 * x)), np.expm1(safe) / safe)


def _visit_subblocks(rng: np.random.Generator, count: int, contiguity: float) -> List[int]:
    start = int(rng.integers(0, SUBBLOCKS_PER_PAGE - count + 1))
    touched = [start]
    untouched = [i for i in range(SUBBLOCKS_PER_PAGE) if i != start]
    current = start
    for _ in range(count - 1):
        following = current + 1
        if rng.random() < contiguity and following < SUBBLOCKS_PER_PAGE and following in untouched:
            current = following
        else:
            current = untouched[int(rng.integers(0, len(untouched)))]
        untouched.remove(current)
        touched.append(current)
    return touched


def generate_trace(spec: SyntheticTraceSpec) -> Trace:
    """Deterministic Zipf page-visit trace.

    Each visit picks a page by popularity rank, then touches a run of
    distinct 64B sub-blocks whose length averages footprint_mean; each next
    sub-block is the adjacent one with probability burst_contiguity.
    """
    rng = np.random.default_rng(spec.seed)
    n = spec.n_records
    if n == 0:
        return Trace.empty()

    sampler = ZipfPageSampler(spec.n_pages, spec.zipf_alpha, rng)
    extra_p = (spec.footprint_mean - 1.0) / (SUBBLOCKS_PER_PAGE - 1)
    addresses = np.empty(n, dtype=np.int64)
    filled = 0
    while filled < n:
        batch = max(int(math.ceil((n - filled) / spec.footprint_mean)) + 16, 16)
        pages = sampler.sample(batch)
        counts = 1 + rng.binomial(SUBBLOCKS_PER_PAGE - 1, extra_p, size=batch)
        for page, count in zip(pages.tolist(), counts.tolist()):
            base = page * PAGE_BYTES
            for sub in _visit_subblocks(rng, count, spec.burst_contiguity):
                addresses[filled] = base + sub * REQUEST_BYTES
                filled += 1
                if filled == n:
                    break
            if filled == n:
                break

    is_write = rng.random(n) >= spec.read_fraction
    arrival = None
    if spec.inter_arrival_ns is not None:
        gaps = rng.exponential(spec.inter_arrival_ns, size=n)
        gaps[0] = 0.0
        arrival = np.cumsum(gaps)

    trace = Trace(np.arange(n, dtype=np.int64), is_write, addresses, arrival, validate=False)
    logger.debug(f"Generated {n} records over {spec.n_pages} pages (alpha={spec.zipf_alpha}, seed={spec.seed})")
    return trace


def trace_footprint(trace: Trace) -> int:
    """Touched dataset size: distinct 4KB pages x 4096"""
    if len(trace) == 0:
        return 0
    return int(np.unique(trace.address // PAGE_BYTES).size) * PAGE_BYTES


def _as_trace(records: Union[Trace, Iterable[TraceRecord]]) -> Trace:
    if isinstance(records, Trace):
        return records
    return Trace.from_records(records)


def read_trace(source: Union[BinaryIO, bytes], format: TraceFormat = TraceFormat.TEXT) -> Trace:
    """Parse a trace stream, reporting the first malformed record"""
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    if isinstance(data, str):
        data = data.encode("utf-8")
    if TraceFormat(format) == TraceFormat.BINARY:
        return _read_binary(bytes(data))
    return _read_text(bytes(data))


def _read_text(data: bytes) -> Trace:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise TraceFormatError(f"trace is not UTF-8 text: {e}", offset=e.start) from e

    lines = text.split("\n")
    if not lines or lines[0].rstrip("\r") != TEXT_HEADER:
        raise TraceFormatError(f"missing '{TEXT_HEADER}' header", offset=0)
    if lines[-1] == "":
        lines.pop()

    offset = len(lines[0]) + 1
    seqs, writes, addresses, arrivals = [], [], [], []
    for record, line in enumerate(lines[1:]):
        fields = line.rstrip("\r").split(",")
        if len(fields) not in (3, 4):
            raise TraceFormatError(f"expected 3 or 4 fields, got {len(fields)}", record=record, offset=offset)
        if (arrivals and len(fields) == 3) or (seqs and not arrivals and len(fields) == 4):
            raise TraceFormatError("arrival column must be present on every record or on none",
                                   record=record, offset=offset)
        seq_text, op_text, address_text = (f.strip() for f in fields[:3])
        try:
            seq = int(seq_text)
        except ValueError:
            raise TraceFormatError(f"bad seq {seq_text!r}", record=record, offset=offset) from None
        if op_text not in ("R", "W"):
            raise TraceFormatError(f"bad op {op_text!r}", record=record, offset=offset)
        if not address_text.lower().startswith("0x"):
            raise TraceFormatError(f"address {address_text!r} lacks 0x prefix", record=record, offset=offset)
        try:
            address = int(address_text, 16)
        except ValueError:
            raise TraceFormatError(f"bad address {address_text!r}", record=record, offset=offset) from None
        if address % REQUEST_BYTES:
            raise TraceFormatError(f"address {address_text} is not {REQUEST_BYTES}B aligned",
                                   record=record, offset=offset)
        if len(fields) == 4:
            try:
                arrivals.append(float(fields[3]))
            except ValueError:
                raise TraceFormatError(f"bad arrival offset {fields[3]!r}", record=record, offset=offset) from None
        seqs.append(seq)
        writes.append(op_text == "W")
        addresses.append(address)
        offset += len(line.encode("utf-8")) + 1

    return Trace(seqs, writes, addresses, arrivals if arrivals else None)


def _read_binary(data: bytes) -> Trace:
    if data[:len(BINARY_MAGIC)] != BINARY_MAGIC:
        raise TraceFormatError("missing SCMTRC01 magic", offset=0)
    body = data[len(BINARY_MAGIC):]
    whole, leftover = divmod(len(body), BINARY_RECORD.itemsize)
    if leftover:
        raise TraceFormatError(f"truncated record ({leftover} trailing bytes)", record=whole,
                               offset=len(BINARY_MAGIC) + whole * BINARY_RECORD.itemsize)
    raw = np.frombuffer(body, dtype=BINARY_RECORD)

    def offset_of(i: int) -> int:
        return len(BINARY_MAGIC) + i * BINARY_RECORD.itemsize

    bad = np.flatnonzero(raw["op"] > 1)
    if bad.size:
        i = int(bad[0])
        raise TraceFormatError(f"bad op code {int(raw['op'][i])}", record=i, offset=offset_of(i))
    bad = np.flatnonzero(raw["address"] % REQUEST_BYTES)
    if bad.size:
        i = int(bad[0])
        raise TraceFormatError(f"address 0x{int(raw['address'][i]):x} is not {REQUEST_BYTES}B aligned",
                               record=i, offset=offset_of(i))
    too_big = np.iinfo(np.int64).max
    bad = np.flatnonzero((raw["seq"] > too_big) | (raw["address"] > too_big))
    if bad.size:
        i = int(bad[0])
        raise TraceFormatError("value out of range", record=i, offset=offset_of(i))

    return Trace(raw["seq"].astype(np.int64), raw["op"] == 1, raw["address"].astype(np.int64))


def write_trace(records: Union[Trace, Iterable[TraceRecord]], sink: BinaryIO,
                format: TraceFormat = TraceFormat.TEXT) -> int:
    """Serialize a trace; returns the number of bytes written"""
    trace = _as_trace(records)
    if TraceFormat(format) == TraceFormat.BINARY:
        payload = _encode_binary(trace)
    else:
        payload = _encode_text(trace)
    sink.write(payload)
    return len(payload)


def _encode_text(trace: Trace) -> bytes:
    out = io.StringIO()
    out.write(TEXT_HEADER + "\n")
    ops = np.where(trace.is_write, "W", "R")
    if trace.arrival is None:
        for seq, op, address in zip(trace.seq.tolist(), ops.tolist(), trace.address.tolist()):
            out.write(f"{seq},{op},0x{address:x}\n")
    else:
        for seq, op, address, arrival in zip(trace.seq.tolist(), ops.tolist(),
                                             trace.address.tolist(), trace.arrival.tolist()):
            out.write(f"{seq},{op},0x{address:x},{arrival!r}\n")
    return out.getvalue().encode("utf-8")


def _encode_binary(trace: Trace) -> bytes:
    if trace.arrival is not None:
        logger.warning("Binary traces do not carry arrival offsets; dropping them")
    raw = np.empty(len(trace), dtype=BINARY_RECORD)
    raw["seq"] = trace.seq
    raw["op"] = trace.is_write
    raw["address"] = trace.address
    return BINARY_MAGIC + raw.tobytes()


def format_for_path(path: Union[str, os.PathLike]) -> TraceFormat:
    suffix = os.path.splitext(str(path))[1].lower()
    return TraceFormat.BINARY if suffix in BINARY_SUFFIXES else TraceFormat.TEXT


def load_trace(path: Union[str, os.PathLike], format: Optional[TraceFormat] = None) -> Trace:
    format = format or format_for_path(path)
    logger.info(f"Loading {format.value} trace from {path}")
    with open(path, "rb") as f:
        return read_trace(f, format)


def save_trace(trace: Trace, path: Union[str, os.PathLike], format: Optional[TraceFormat] = None) -> int:
    format = format or format_for_path(path)
    with open(path, "wb") as f:
        written = write_trace(trace, f, format)
    logger.info(f"Wrote {len(trace)} records ({written} bytes) to {path}")
    return written
