"""Sub-arrays: grids of cells sharing one technology and one mode.

Mode is configured at sub-array granularity and mode changes are atomic
over the grid. Each augmented-capable cell gets its retention sampled at
construction from a counter-based generator keyed by
(seed, subarray, row, col), so the sample is independent of access order.
A sub-array is a unit of exclusive mutation; distinct sub-arrays may be
simulated in parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Union

from . import cell as cellops
from .cell import CellEvent, CellMode, CellState, EventKind, Tech, Trit
from .errors import (
    AddressOutOfRangeError,
    EmptyCellError,
    ExpiredReadError,
    IllegalModeError,
    ZeroDimensionError,
)
from .models import BiasConfig, ModelParams, OpKind


class Plane(Enum):
    STATIC = "static"
    DYNAMIC = "dynamic"


@dataclass(frozen=True, slots=True)
class Address:
    subarray: int
    row: int
    col: int
    plane: Plane = Plane.STATIC

    def __str__(self) -> str:
        return f"{self.subarray}:{self.row}:{self.col}"


@dataclass(frozen=True, slots=True)
class CapacityInfo:
    """Storage capacity of one sub-array in its current mode."""

    bits: int
    trits: int
    bit_equivalent: float
    conventional_6t_cells: int


@dataclass(slots=True)
class AccessResult:
    ok: bool
    value: Union[int, Trit, None]
    events: tuple[CellEvent, ...]
    energy_fj: float
    delay_ns: float
    error: Optional[str] = None


class SubArray:
    """rows x cols cells, one technology, one operating mode."""

    def __init__(
        self,
        subarray_id: int,
        tech: Tech,
        mode: CellMode,
        rows: int,
        cols: int,
        *,
        params: ModelParams,
        temperature_c: float,
        bias: BiasConfig,
        seed: int,
    ):
        if rows < 1 or cols < 1:
            raise ZeroDimensionError(f"rows/cols must be >= 1, got {rows}x{cols}")
        if not cellops.mode_is_legal(tech, mode):
            raise IllegalModeError(f"{tech.name} cannot operate in {mode.name}")
        self.subarray_id = subarray_id
        self.tech = tech
        self.mode = mode
        self.rows = rows
        self.cols = cols
        empty = cellops.new_cell(tech, mode)
        self.cells: list[CellState] = [empty] * (rows * cols)

        # dynamic storage needs a retention sample per cell; the nominal
        # value is resolved once from (tech, temperature, bias)
        if tech is Tech.STD6T:
            self.nominal_retention_ns: Optional[float] = None
            self.cell_retention_ns: Optional[list[float]] = None
        else:
            nominal = params.retention_time(tech, temperature_c, bias)
            self.nominal_retention_ns = nominal
            self.cell_retention_ns = [
                params.sample_cell_retention(nominal, seed, subarray_id, r, c)
                for r in range(rows)
                for c in range(cols)
            ]
        self._params = params
        self._seed = seed
        self._resample_seq = 0

    def index(self, row: int, col: int) -> int:
        if not (0 <= row < self.rows and 0 <= col < self.cols):
            raise AddressOutOfRangeError(
                f"({row},{col}) outside {self.rows}x{self.cols} sub-array "
                f"{self.subarray_id}"
            )
        return row * self.cols + col

    def cell_at(self, row: int, col: int) -> CellState:
        return self.cells[self.index(row, col)]


def new_subarray(
    subarray_id: int,
    tech: Tech,
    mode: CellMode,
    rows: int,
    cols: int,
    *,
    params: ModelParams,
    temperature_c: float,
    bias: BiasConfig,
    seed: int,
) -> SubArray:
    return SubArray(
        subarray_id,
        tech,
        mode,
        rows,
        cols,
        params=params,
        temperature_c=temperature_c,
        bias=bias,
        seed=seed,
    )


def set_mode(
    sub: SubArray, new_mode: CellMode, now: float
) -> list[tuple[Address, CellEvent]]:
    """Atomically reconfigure every cell; returns addressed flush events."""
    if not cellops.mode_is_legal(sub.tech, new_mode):
        raise IllegalModeError(f"{sub.tech.name} cannot enter {new_mode.name}")
    if new_mode is sub.mode:
        return []
    events: list[tuple[Address, CellEvent]] = []
    for row in range(sub.rows):
        for col in range(sub.cols):
            idx = row * sub.cols + col
            state, cell_events = cellops.set_cell_mode(
                sub.cells[idx], new_mode, now
            )
            sub.cells[idx] = state
            for ev in cell_events:
                events.append((Address(sub.subarray_id, row, col), ev))
    sub.mode = new_mode
    return events


def effective_capacity(sub: SubArray) -> CapacityInfo:
    n = sub.rows * sub.cols
    if sub.tech is Tech.AUG8T and sub.mode is CellMode.AUGMENTED:
        return CapacityInfo(2 * n, 0, float(2 * n), 2 * n)
    if sub.tech is Tech.AUG7T and sub.mode is CellMode.AUGMENTED:
        # one ternary digit per cell; a conventional static array needs
        # two binary cells per ternary digit
        return CapacityInfo(0, n, n * math.log2(3.0), 2 * n)
    if sub.mode is CellMode.POWER_GATED:
        return CapacityInfo(0, 0, 0.0, 0)
    return CapacityInfo(n, 0, float(n), n)


def _write_retention(sub: SubArray, idx: int, payload: Union[int, Trit]) -> float:
    retention = sub.cell_retention_ns[idx]
    if payload is Trit.ZERO:
        retention *= sub._params.zero_retention_factor
    return retention


def _refresh_retention(sub: SubArray, addr: Address) -> Optional[float]:
    """None keeps the stored per-datum retention (the default policy);
    a fresh sample models a population whose weak cells move around."""
    params = sub._params
    if not (params.resample_on_refresh and params.variation_sigma > 0.0):
        return None
    sub._resample_seq += 1
    sampled = params.sample_cell_retention(
        sub.nominal_retention_ns,
        sub._seed,
        sub.subarray_id,
        addr.row,
        addr.col,
        sub._resample_seq,
    )
    cur = sub.cells[sub.index(addr.row, addr.col)].dynamic
    if cur is not None and cur.payload is Trit.ZERO:
        sampled *= params.zero_retention_factor
    return sampled


def access(
    sub: SubArray,
    addr: Address,
    op: OpKind,
    now: float,
    params: ModelParams,
    *,
    payload: Union[int, Trit, None] = None,
    override: bool = False,
    silent_decay: bool = False,
) -> AccessResult:
    """Run one cell operation and charge its energy and delay.

    Static precondition failures (wrong mode, empty cell, bad address)
    raise and charge nothing; an access that ran but found decayed data
    returns ok=False with an EXPIRED_READ event, also uncharged. Only
    completed operations consume energy.
    """
    idx = sub.index(addr.row, addr.col)
    state = sub.cells[idx]
    tech, mode = sub.tech, sub.mode

    def charge(op_kind: OpKind, pattern=None) -> tuple[float, float]:
        return (
            params.op_energy(tech, mode, op_kind),
            params.op_delay(tech, mode, op_kind, pattern),
        )

    if op is OpKind.SRAM_WRITE:
        state, events = cellops.write_sram_bit(state, payload, now)
        sub.cells[idx] = state
        energy, delay = charge(op)
        return AccessResult(True, None, events, energy, delay)

    if op is OpKind.SRAM_READ:
        value, state, events = cellops.read_sram_bit(state, now)
        sub.cells[idx] = state
        energy, delay = charge(op)
        return AccessResult(True, value, events, energy, delay)

    if op is OpKind.SRAM_READ_PULSED:
        value, state, events = cellops.read_sram_pulsed(
            state, now, destroy_override=override
        )
        sub.cells[idx] = state
        energy, delay = charge(op)
        return AccessResult(True, value, events, energy, delay)

    if op is OpKind.DRAM_WRITE:
        retention = _write_retention(sub, idx, payload)
        state = cellops.write_dram_bit(state, payload, now, retention)
        sub.cells[idx] = state
        energy, delay = charge(op)
        return AccessResult(True, None, (), energy, delay)

    if op is OpKind.DRAM_READ:
        try:
            value, state, events = cellops.read_dram_bit(
                state, now, silent_decay=silent_decay
            )
        except ExpiredReadError:
            return AccessResult(
                False,
                None,
                (CellEvent(EventKind.EXPIRED_READ, now),),
                0.0,
                0.0,
                error="expired_read",
            )
        sub.cells[idx] = state
        energy, delay = charge(op)
        return AccessResult(True, value, events, energy, delay)

    if op is OpKind.TRIT_WRITE:
        retention = _write_retention(sub, idx, payload)
        state = cellops.write_trit(state, payload, now, retention)
        sub.cells[idx] = state
        energy, delay = charge(op, payload)
        return AccessResult(True, None, (), energy, delay)

    if op is OpKind.TRIT_READ:
        try:
            value, state, events = cellops.read_trit(
                state, now, silent_decay=silent_decay
            )
        except ExpiredReadError:
            return AccessResult(
                False,
                None,
                (CellEvent(EventKind.EXPIRED_READ, now),),
                0.0,
                0.0,
                error="expired_read",
            )
        sub.cells[idx] = state
        # delay follows what the sense amplifier saw, aliased zero included
        energy, delay = charge(op, value)
        return AccessResult(True, value, events, energy, delay)

    if op is OpKind.REFRESH:
        datum = state.dynamic
        if datum is None:
            raise EmptyCellError(f"nothing to refresh at {addr}")
        if not datum.is_valid(now):
            return AccessResult(
                False,
                None,
                (CellEvent(EventKind.EXPIRED_READ, now),),
                0.0,
                0.0,
                error="expired_read",
            )
        state = cellops.refresh_dynamic(state, now, _refresh_retention(sub, addr))
        sub.cells[idx] = state
        energy, delay = charge(op, datum.payload)
        return AccessResult(True, None, (), energy, delay)

    raise ValueError(f"unknown array op {op!r}")


_OCCUPANCY_CODES = "legend: . empty  S static  D dynamic  B both  x expired  X static+expired"


def snapshot(sub: SubArray, now: float) -> str:
    """Occupancy dump, one character per cell.

    Line 1: ``subarray <id> tech=<t> mode=<m> rows=<r> cols=<c> now=<ns>``;
    line 2: the legend; then one ``row <i>: <codes>`` line per row.
    """
    lines = [
        f"subarray {sub.subarray_id} tech={sub.tech.value} "
        f"mode={sub.mode.value} rows={sub.rows} cols={sub.cols} now={now:g}",
        _OCCUPANCY_CODES,
    ]
    for row in range(sub.rows):
        codes = []
        for col in range(sub.cols):
            state = sub.cells[row * sub.cols + col]
            has_static = state.static_bit is not None
            if state.dynamic is None:
                codes.append("S" if has_static else ".")
            elif state.dynamic.is_valid(now):
                codes.append("B" if has_static else "D")
            else:
                codes.append("X" if has_static else "x")
        lines.append(f"row {row}: {''.join(codes)}")
    return "\n".join(lines) + "\n"
