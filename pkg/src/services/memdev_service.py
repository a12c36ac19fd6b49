"""Event-driven timing model of one memory channel.

Address mapping is page interleaved at row-buffer granularity: consecutive
row-sized chunks rotate across ranks, then banks, then rows::

    chunk = address // row_buffer_bytes
    rank  = chunk % ranks
    bank  = (chunk // ranks) % banks_per_rank
    row   = chunk // (ranks * banks_per_rank)

Reads are scheduled FR-FCFS with an open-row policy. Writes are posted to a
controller write buffer holding one row-sized entry per bank; writes to the
same row coalesce. When the buffer fills it is drained completely, row hits
first, and reads wait until the drain has been issued. Writes arriving during
a drain are held in arrival order and enter the buffer once it empties; they
never hold back the reads behind them.
"""
import logging
from collections import OrderedDict, deque
from typing import Iterable, List, NamedTuple, Optional, Sequence, Tuple

import pandas as pd

from src.models.device import (
    BankState, DeviceConfig, DeviceGeometry, DeviceStats, MemoryRequest,
    RequestCompletion, RowState, TimingParams,
)
from src.models.errors import ConfigurationError, SimulationError
from src.models.trace import REQUEST_BYTES, Op

logger = logging.getLogger(__name__)

OPEN_ROW_FRFCFS = "open_row_frfcfs"
STATS_COLUMNS = [
    "served_requests", "reads", "writes", "loaded_amat_ns", "write_amat_ns", "row_hit_ratio",
    "access_row_hit_ratio", "mean_bytes_per_activation", "read_queue_occupancy_mean",
    "write_queue_occupancy_mean", "busy_time_ns", "span_ns", "activations", "restorations", "drains",
]


def service_latency(kind: Op, bank_state: BankState, target_row: int, n_bursts: int,
                    t: TimingParams) -> float:
    """Uncontended latency of one request against a bank in the given state"""
    transfer = t.t_CAS + n_bursts * t.t_b
    if bank_state.state == RowState.CLOSED:
        return t.t_RCD + transfer
    if bank_state.row == target_row:
        return transfer
    if bank_state.state == RowState.OPEN_DIRTY:
        return t.t_WR + t.t_RP + t.t_RCD + transfer
    return t.t_RP + t.t_RCD + transfer


def next_bank_state(kind: Op, bank_state: BankState, target_row: int) -> BankState:
    stays_dirty = bank_state.state == RowState.OPEN_DIRTY and bank_state.row == target_row
    if kind == Op.WRITE or stays_dirty:
        return BankState.open_dirty(target_row)
    return BankState.open_clean(target_row)


def activation_time(earliest: float, scheduled: Sequence[float],
                    restores: Sequence[Tuple[float, float]], t: TimingParams) -> float:
    """First activation at or after `earliest` spaced from every activation already
    scheduled on the rank.

    The spacing is t_RRDact while some bank of the rank is inside a restoration
    window [start, end), t_RRDpre otherwise.
    """
    act = earliest
    while True:
        restoring = any(start <= act < end for start, end in restores)
        spacing = t.t_RRDact if restoring else t.t_RRDpre
        clashes = [a for a in scheduled if abs(act - a) < spacing]
        if not clashes:
            return act
        act = max(clashes) + spacing


class DeviceRun(NamedTuple):
    stats: DeviceStats
    completions: List[RequestCompletion]


class _Bank:
    __slots__ = ("open_row", "dirty", "busy_until", "next_cas", "last_act", "touched")

    def __init__(self):
        self.open_row: Optional[int] = None
        self.dirty = False
        self.busy_until = 0.0
        self.next_cas = 0.0
        self.last_act = float("-inf")
        self.touched = 0


class _Rank:
    __slots__ = ("acts", "restores")

    def __init__(self):
        self.acts: List[float] = []
        self.restores: List[Tuple[float, float]] = []

    def forget_before(self, now: float, horizon: float) -> None:
        self.acts = [a for a in self.acts if a > now - horizon]
        self.restores = [w for w in self.restores if w[1] > now]


class _Pending(NamedTuple):
    index: int
    request: MemoryRequest
    bank: int
    row: int
    mask: int


class _WriteEntry:
    __slots__ = ("bank", "row", "mask", "writes")

    def __init__(self, bank: int, row: int):
        self.bank = bank
        self.row = row
        self.mask = 0
        self.writes: List[Tuple[int, MemoryRequest]] = []


class MemoryDevice:
    """One channel: banks with row buffers, a shared data bus and a write buffer"""

    def __init__(self, geometry: DeviceGeometry, timing: TimingParams, mode: str = OPEN_ROW_FRFCFS):
        if mode != OPEN_ROW_FRFCFS:
            raise ConfigurationError(f"unsupported scheduling mode {mode!r}", key="mode")
        self.geometry = geometry
        self.timing = timing
        self.t_b = timing.t_b
        self.write_buffer_entries = geometry.banks

    def _decode(self, index: int, request: MemoryRequest) -> _Pending:
        g = self.geometry
        size = request.size_bytes
        if size <= 0 or size % REQUEST_BYTES:
            raise SimulationError(f"request {index}: size {size}B is not a positive multiple of {REQUEST_BYTES}B")
        if size > g.row_buffer_bytes:
            raise SimulationError(
                f"request {index}: {size}B is larger than the {g.row_buffer_bytes}B row buffer")
        offset = request.address % g.row_buffer_bytes
        if offset % REQUEST_BYTES:
            raise SimulationError(f"request {index}: address 0x{request.address:x} is not {REQUEST_BYTES}B aligned")
        if offset + size > g.row_buffer_bytes:
            raise SimulationError(f"request {index}: 0x{request.address:x}+{size} crosses a row boundary")
        if request.address < 0 or request.address + size > g.capacity_bytes:
            raise SimulationError(
                f"request {index}: address 0x{request.address:x} is outside the {g.capacity_bytes}B device")
        rank, bank, row = g.locate(request.address)
        first = offset // REQUEST_BYTES
        mask = ((1 << (size // REQUEST_BYTES)) - 1) << first
        return _Pending(index, request, rank * g.banks_per_rank + bank, row, mask)

    def run(self, requests: Sequence[MemoryRequest], record: bool = False) -> DeviceRun:
        return _Simulation(self, requests, record).run()


class _Simulation:
    def __init__(self, device: MemoryDevice, requests: Sequence[MemoryRequest], record: bool):
        self.device = device
        self.t = device.timing
        self.t_b = device.t_b
        self.g = device.geometry
        self.requests = list(requests)
        self.record = record

        self.banks = [_Bank() for _ in range(self.g.banks)]
        self.ranks = [_Rank() for _ in range(self.g.ranks)]
        self.bus_free = 0.0
        self.last_write_end = float("-inf")

        self.read_queue: List[_Pending] = []
        self.write_buffer: "OrderedDict[Tuple[int, int], _WriteEntry]" = OrderedDict()
        self.held_writes: "deque[_Pending]" = deque()
        self.draining = False

        self.completions: List[RequestCompletion] = []
        self.read_latency = 0.0
        self.read_latency_per_block = 0.0
        self.write_latency_per_block = 0.0
        self.reads = 0
        self.writes = 0
        self.row_hits = 0
        self.row_conflicts = 0
        self.activations = 0
        self.restorations = 0
        self.drains = 0
        self.activated_blocks = 0
        self.busy_time = 0.0
        self.busy_end = float("-inf")
        self.burst_time = 0.0
        self.read_area = 0.0
        self.write_area = 0.0
        self.last_finish = 0.0

    def run(self) -> DeviceRun:
        requests = self.requests
        for i in range(1, len(requests)):
            if requests[i].arrival_ns < requests[i - 1].arrival_ns:
                raise SimulationError(f"request {i} arrives before request {i - 1}")
        pending = [self.device._decode(i, r) for i, r in enumerate(requests)]

        n = len(pending)
        start = requests[0].arrival_ns if n else 0.0
        now = start
        nxt = 0
        while True:
            while nxt < n and pending[nxt].request.arrival_ns <= now:
                if not self._admit(pending[nxt], now):
                    break
                nxt += 1

            if self.draining:
                if not self.write_buffer:
                    self.draining = False
                    self._release_held(now)
                    continue
                if self._issue_write(now):
                    continue
            elif self.read_queue:
                if self._issue_read(now):
                    continue
            elif nxt >= n and self.write_buffer:
                # final flush
                self.draining = True
                continue

            wake = self._next_ready_time()
            if nxt < n and pending[nxt].request.arrival_ns > now:
                arrival = pending[nxt].request.arrival_ns
                wake = arrival if wake is None else min(wake, arrival)
            if wake is None:
                break
            self.read_area += len(self.read_queue) * (wake - now)
            self.write_area += (len(self.write_buffer) + len(self.held_writes)) * (wake - now)
            now = wake

        self._close_activations()
        return DeviceRun(self._stats(start), self.completions)

    def _admit(self, p: _Pending, now: float) -> bool:
        key = (p.bank, p.row)
        if p.request.kind == Op.READ:
            if self._buffered_mask(key) & p.mask == p.mask:
                # served from the write buffer
                n_blocks = p.request.size_bytes // REQUEST_BYTES
                self._complete_read(p, now, now + n_blocks * self.t_b, row_hit=False)
                return True
            if len(self.read_queue) >= self.g.queue_depth:
                return False
            self.read_queue.append(p)
            return True

        if self.draining:
            self.held_writes.append(p)
            return True
        self._buffer_write(p, now)
        return True

    def _buffered_mask(self, key: Tuple[int, int]) -> int:
        entry = self.write_buffer.get(key)
        mask = entry.mask if entry is not None else 0
        for held in self.held_writes:
            if (held.bank, held.row) == key:
                mask |= held.mask
        return mask

    def _release_held(self, now: float) -> None:
        while self.held_writes and not self.draining:
            self._buffer_write(self.held_writes.popleft(), now)

    def _buffer_write(self, p: _Pending, now: float) -> None:
        key = (p.bank, p.row)
        entry = self.write_buffer.get(key)
        if entry is None:
            entry = _WriteEntry(p.bank, p.row)
            self.write_buffer[key] = entry
        entry.mask |= p.mask
        entry.writes.append((p.index, p.request))
        if len(self.write_buffer) >= self.device.write_buffer_entries:
            self.draining = True
            self.drains += 1
            logger.debug(f"Write buffer full at {now:.1f}ns, draining {len(self.write_buffer)} entries")

    def _pick(self, candidates, now: float) -> Optional[int]:
        oldest_ready = None
        for pos, (bank, row) in enumerate(candidates):
            b = self.banks[bank]
            if b.open_row == row:
                if b.next_cas <= now:
                    return pos
            elif oldest_ready is None and b.busy_until <= now:
                oldest_ready = pos
        return oldest_ready

    def _issue_read(self, now: float) -> bool:
        pos = self._pick(((p.bank, p.row) for p in self.read_queue), now)
        if pos is None:
            return False
        p = self.read_queue.pop(pos)
        n_blocks = p.request.size_bytes // REQUEST_BYTES
        finish, hit = self._access(now, p.bank, p.row, False, n_blocks, p.mask)
        self._complete_read(p, now, finish, hit)
        return True

    def _issue_write(self, now: float) -> bool:
        entries = list(self.write_buffer.values())
        pos = self._pick(((e.bank, e.row) for e in entries), now)
        if pos is None:
            return False
        entry = entries[pos]
        del self.write_buffer[(entry.bank, entry.row)]
        n_blocks = entry.mask.bit_count()
        finish, hit = self._access(now, entry.bank, entry.row, True, n_blocks, entry.mask)
        for index, request in entry.writes:
            self.writes += 1
            self.write_latency_per_block += (finish - request.arrival_ns) / (request.size_bytes // REQUEST_BYTES)
            if self.record:
                self.completions.append(RequestCompletion(
                    index, Op.WRITE, request.address, request.size_bytes,
                    request.arrival_ns, now, finish, hit))
        return True

    def _complete_read(self, p: _Pending, issue: float, finish: float, row_hit: bool) -> None:
        latency = finish - p.request.arrival_ns
        self.reads += 1
        self.read_latency += latency
        self.read_latency_per_block += latency / (p.request.size_bytes // REQUEST_BYTES)
        self.last_finish = max(self.last_finish, finish)
        if self.record:
            self.completions.append(RequestCompletion(
                p.index, Op.READ, p.request.address, p.request.size_bytes,
                p.request.arrival_ns, issue, finish, row_hit))

    def _access(self, now: float, bank_index: int, row: int, is_write: bool,
                n_blocks: int, mask: int) -> Tuple[float, bool]:
        t = self.t
        bank = self.banks[bank_index]
        rank = self.ranks[bank_index // self.g.banks_per_rank]
        hit = bank.open_row == row

        if hit:
            self.row_hits += 1
            cas = max(now, bank.next_cas)
        else:
            if bank.open_row is not None:
                self.row_conflicts += 1
            begin = max(now, bank.busy_until)
            ready = begin
            rank.forget_before(now, max(t.t_RRDpre, t.t_RRDact))
            if bank.open_row is not None:
                if bank.dirty:
                    self.restorations += 1
                    ready += t.t_WR
                    rank.restores.append((begin, ready))
                ready += t.t_RP
            act = activation_time(max(ready, bank.last_act + t.t_RC), rank.acts, rank.restores, t)
            rank.acts.append(act)

            self._close_bank(bank)
            self.activations += 1
            bank.open_row = row
            bank.dirty = False
            bank.last_act = act
            cas = act + t.t_RCD

        if not is_write:
            cas = max(cas, self.last_write_end + t.t_WTR)
        data = max(cas + t.t_CAS, self.bus_free)
        transfer = n_blocks * self.t_b
        finish = data + transfer
        self.bus_free = finish
        self.burst_time += transfer
        if is_write:
            self.last_write_end = finish
            bank.dirty = True

        bank.touched |= mask
        bank.next_cas = data - t.t_CAS + transfer
        busy = finish if is_write else max(finish, cas + t.t_RTP)
        if not hit:
            busy = max(busy, bank.last_act + t.t_RAS)
        bank.busy_until = max(bank.busy_until, busy)

        if now >= self.busy_end:
            self.busy_time += finish - now
        elif finish > self.busy_end:
            self.busy_time += finish - self.busy_end
        self.busy_end = max(self.busy_end, finish)
        self.last_finish = max(self.last_finish, finish)
        return finish, hit

    def _close_bank(self, bank: _Bank) -> None:
        self.activated_blocks += bank.touched.bit_count()
        bank.touched = 0

    def _close_activations(self) -> None:
        for bank in self.banks:
            self._close_bank(bank)

    def _next_ready_time(self) -> Optional[float]:
        if self.draining:
            targets = [(e.bank, e.row) for e in self.write_buffer.values()]
        else:
            targets = [(p.bank, p.row) for p in self.read_queue]
        wake = None
        for bank_index, row in targets:
            bank = self.banks[bank_index]
            ready = bank.next_cas if bank.open_row == row else bank.busy_until
            wake = ready if wake is None else min(wake, ready)
        return wake

    def _stats(self, start: float) -> DeviceStats:
        served = self.reads + self.writes
        span = max(self.last_finish - start, 0.0)
        row_accesses = self.row_hits + self.row_conflicts
        all_accesses = self.row_hits + self.activations
        if self.reads:
            loaded = self.read_latency_per_block / self.reads
        elif self.writes:
            loaded = self.write_latency_per_block / self.writes
        else:
            loaded = 0.0
        return DeviceStats(
            served_requests=served,
            reads=self.reads,
            writes=self.writes,
            loaded_amat_ns=loaded,
            write_amat_ns=self.write_latency_per_block / self.writes if self.writes else 0.0,
            mean_read_latency_ns=self.read_latency / self.reads if self.reads else 0.0,
            row_hits=self.row_hits,
            row_conflicts=self.row_conflicts,
            activations=self.activations,
            restorations=self.restorations,
            drains=self.drains,
            row_hit_ratio=self.row_hits / row_accesses if row_accesses else 0.0,
            access_row_hit_ratio=self.row_hits / all_accesses if all_accesses else 0.0,
            mean_bytes_per_activation=(self.activated_blocks * REQUEST_BYTES / self.activations
                                       if self.activations else 0.0),
            read_queue_occupancy_mean=self.read_area / span if span else 0.0,
            write_queue_occupancy_mean=self.write_area / span if span else 0.0,
            busy_time_ns=self.busy_time,
            burst_time_ns=self.burst_time,
            span_ns=span,
        )


def simulate_device(events: Iterable[MemoryRequest], geometry: DeviceGeometry, timing: TimingParams,
                    mode: str = OPEN_ROW_FRFCFS) -> DeviceStats:
    """Run a time-ordered request stream through one channel"""
    return MemoryDevice(geometry, timing, mode).run(list(events)).stats


def run_device(events: Iterable[MemoryRequest], config: DeviceConfig, record: bool = False) -> DeviceRun:
    return MemoryDevice(config.geometry, config.timing).run(list(events), record=record)


def stats_frame(stats: Iterable[DeviceStats]) -> pd.DataFrame:
    return pd.DataFrame([s.model_dump(include=set(STATS_COLUMNS)) for s in stats], columns=STATS_COLUMNS)


# read ns, write ns, row buffer bytes
PCM_TIMINGS = {
    "slc": (60, 150, 1024),
    "mlc_lat": (120, 550, 512),
    "mlc_bw": (120, 1000, 1024),
    "tlc": (250, 2350, 512),
}


def planar_dram() -> DeviceConfig:
    return DeviceConfig.build(DeviceGeometry.planar_dram(), TimingParams.ddr4_dram())


def stacked_dram() -> DeviceConfig:
    return DeviceConfig.build(DeviceGeometry.stacked_dram(), TimingParams.ddr4_dram())


def scm_device(t_read: float, t_write: float, row_buffer_bytes: int) -> DeviceConfig:
    return DeviceConfig.build(DeviceGeometry.scm(row_buffer_bytes), TimingParams.scm(t_read, t_write))


def device_preset(name: str) -> DeviceConfig:
    key = name.strip().lower().replace("-", "_")
    if key == "planar_dram":
        return planar_dram()
    if key == "stacked_dram":
        return stacked_dram()
    if key in PCM_TIMINGS:
        return scm_device(*PCM_TIMINGS[key])
    raise ConfigurationError(
        f"unknown device preset {name!r}; expected planar_dram, stacked_dram or one of {sorted(PCM_TIMINGS)}",
        key="device")


def load_device_config(source: str) -> DeviceConfig:
    """Preset name or path to a JSON device description"""
    if source.lower().endswith(".json"):
        logger.info(f"Loading device description from {source}")
        try:
            with open(source, "r") as f:
                return DeviceConfig.from_json(f.read())
        except OSError as e:
            raise ConfigurationError(f"cannot read device description {source}: {e.strerror}",
                                     key="device") from None
        except ValueError as e:
            # pydantic's ValidationError and json's decode error are both ValueErrors
            raise ConfigurationError(f"{source}: {e}", key="device") from None
    return device_preset(source)
