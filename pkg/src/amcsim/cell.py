"""Logical state machines for the three bit-cell flavors.

A cell is one of three technologies:

* ``STD6T``   -- plain static cell, one bit, Normal mode only.
* ``AUG8T``   -- static cell plus a 2-transistor embedded dynamic node.
                 In Augmented mode it holds a static bit and a dynamic bit
                 at the same time; any static-plane access runs through the
                 dynamic node and destroys whatever charge is there.
* ``AUG7T``   -- header-gated static cell. With the header on it is a
                 normal static cell (Normal mode) or fully power gated;
                 with the header off the weakened storage nodes hold one
                 ternary digit dynamically (Augmented mode).

All node voltages are abstracted to logical levels plus a write timestamp;
decay is a step function at the per-cell sampled retention time. Every
operation is a pure transition: state in, new state out, no mutation, so
distinct cells can be evaluated concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union

from .errors import (
    EmptyCellError,
    ExpiredReadError,
    IllegalModeError,
    WrongModeError,
)


class Tech(Enum):
    STD6T = "6t"
    AUG8T = "8t"
    AUG7T = "7t"


class CellMode(Enum):
    NORMAL = "normal"
    AUGMENTED = "augmented"
    POWER_GATED = "power_gated"


class Trit(Enum):
    """Ternary digit with its storage-node encoding.

    The node pair (Q, QB) maps MINUS_ONE to (1,0), PLUS_ONE to (0,1) and
    ZERO to (0,0); (1,1) is unrepresentable because both nodes can never
    be driven high with the supply header off.
    """

    MINUS_ONE = -1
    ZERO = 0
    PLUS_ONE = 1

    @property
    def nodes(self) -> tuple[int, int]:
        return _TRIT_NODES[self]

    @property
    def token(self) -> str:
        """Trace spelling: -1 | 0 | +1."""
        return {-1: "-1", 0: "0", 1: "+1"}[self.value]


_TRIT_NODES = {
    Trit.MINUS_ONE: (1, 0),
    Trit.ZERO: (0, 0),
    Trit.PLUS_ONE: (0, 1),
}


class EventKind(Enum):
    DRAM_DESTROYED_BY_SRAM_ACCESS = "destroy"
    SILENT_DECAY_ALIAS = "silent_decay"
    EXPIRED_READ = "expired"
    MODE_FLUSH = "mode_flush"
    PULSED_COPY_OVERWRITE = "pulsed_copy"


@dataclass(frozen=True, slots=True)
class CellEvent:
    """Side effect emitted by a cell transition; address context is added
    by the array layer."""

    kind: EventKind
    at: float


@dataclass(frozen=True, slots=True)
class DynamicDatum:
    """Charge-encoded payload with its decay deadline.

    Valid while ``now - written_at < cell_retention`` (strict), so a datum
    written at t=0 with 25000 ns retention is expired at exactly t=25000.
    """

    payload: Union[int, Trit]
    written_at: float
    cell_retention: float

    def __post_init__(self):
        if self.cell_retention <= 0:
            raise ValueError("cell_retention must be positive")

    def is_valid(self, now: float) -> bool:
        return now - self.written_at < self.cell_retention


@dataclass(frozen=True, slots=True)
class CellState:
    tech: Tech
    mode: CellMode
    static_bit: Optional[int] = None
    dynamic: Optional[DynamicDatum] = None


def mode_is_legal(tech: Tech, mode: CellMode) -> bool:
    if tech is Tech.STD6T:
        return mode is CellMode.NORMAL
    if mode is CellMode.POWER_GATED:
        return tech is Tech.AUG7T
    return True


def check_invariants(cell: CellState) -> None:
    """Raise AssertionError unless the state is reachable hardware state."""
    assert mode_is_legal(cell.tech, cell.mode), (cell.tech, cell.mode)
    if cell.static_bit is not None:
        assert cell.static_bit in (0, 1)
    if cell.tech is Tech.STD6T:
        assert cell.dynamic is None, "6T has no dynamic storage"
    elif cell.tech is Tech.AUG7T:
        if cell.mode is CellMode.NORMAL:
            assert cell.dynamic is None, "7T-Normal has no dynamic storage"
        elif cell.mode is CellMode.AUGMENTED:
            # supply header off: the cross-coupled pair cannot hold a
            # static level
            assert cell.static_bit is None
            if cell.dynamic is not None:
                assert isinstance(cell.dynamic.payload, Trit)
        else:  # POWER_GATED
            assert cell.static_bit is None and cell.dynamic is None
    else:  # AUG8T
        if cell.mode is CellMode.NORMAL:
            assert cell.dynamic is None, "8T-Normal grounds the dynamic node"
        elif cell.dynamic is not None:
            assert cell.dynamic.payload in (0, 1)


def new_cell(tech: Tech, mode: CellMode) -> CellState:
    """Power-up state: no data on either plane."""
    if not mode_is_legal(tech, mode):
        raise IllegalModeError(f"{tech.name} cannot operate in {mode.name}")
    return CellState(tech=tech, mode=mode)


def _require_sram_plane(cell: CellState) -> None:
    if cell.tech is Tech.AUG7T and cell.mode is not CellMode.NORMAL:
        raise WrongModeError(
            "7T static plane is unavailable with the supply header off"
        )
    if cell.mode is CellMode.POWER_GATED:
        raise WrongModeError("cell is power gated")


def _clobber_dynamic(
    cell: CellState, now: float
) -> tuple[Optional[DynamicDatum], tuple[CellEvent, ...]]:
    """Static-plane access drives the dynamic node: whatever charge is
    there is lost. Only a still-valid datum counts as a destruction."""
    if cell.dynamic is None:
        return None, ()
    if cell.dynamic.is_valid(now):
        return None, (CellEvent(EventKind.DRAM_DESTROYED_BY_SRAM_ACCESS, now),)
    return None, ()


def write_sram_bit(
    cell: CellState, bit: int, now: float
) -> tuple[CellState, tuple[CellEvent, ...]]:
    _require_sram_plane(cell)
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    dynamic, events = _clobber_dynamic(cell, now)
    return replace(cell, static_bit=bit, dynamic=dynamic), events


def read_sram_bit(
    cell: CellState, now: float
) -> tuple[int, CellState, tuple[CellEvent, ...]]:
    _require_sram_plane(cell)
    if cell.static_bit is None:
        raise EmptyCellError("no static bit stored")
    dynamic, events = _clobber_dynamic(cell, now)
    return cell.static_bit, replace(cell, dynamic=dynamic), events


def read_sram_pulsed(
    cell: CellState, now: float, destroy_override: bool = False
) -> tuple[int, CellState, tuple[CellEvent, ...]]:
    """Decoupled read: a short pulse copies the static bit onto the
    dynamic node, then the copy is sensed single-ended.

    Normal mode only by default; in Augmented mode the copy would clobber
    live dynamic data, so the call is refused unless ``destroy_override``
    is set. The copy itself is bookkeeping, not user data, and is dropped
    at operation end in both modes.
    """
    if cell.tech is not Tech.AUG8T:
        raise WrongModeError("pulsed read needs the decoupled read port")
    if cell.static_bit is None:
        raise EmptyCellError("no static bit stored")
    if cell.mode is CellMode.AUGMENTED and not destroy_override:
        raise WrongModeError(
            "pulsed read in Augmented mode clobbers the dynamic bit; "
            "pass destroy_override to allow it"
        )
    dynamic, events = _clobber_dynamic(cell, now)
    events = events + (CellEvent(EventKind.PULSED_COPY_OVERWRITE, now),)
    return cell.static_bit, replace(cell, dynamic=dynamic), events


def write_dram_bit(
    cell: CellState, bit: int, now: float, retention_ns: float
) -> CellState:
    """Write the dynamic plane; the static nodes stay isolated and keep
    their bit untouched."""
    if cell.tech is not Tech.AUG8T or cell.mode is not CellMode.AUGMENTED:
        raise WrongModeError("dynamic bit storage needs 8T Augmented mode")
    if bit not in (0, 1):
        raise ValueError(f"bit must be 0 or 1, got {bit!r}")
    datum = DynamicDatum(payload=bit, written_at=now, cell_retention=retention_ns)
    return replace(cell, dynamic=datum)


def read_dram_bit(
    cell: CellState, now: float, silent_decay: bool = False
) -> tuple[int, CellState, tuple[CellEvent, ...]]:
    """Sense the dynamic plane. Gate-input sensing does not disturb the
    node, so the read is non-destructive and the timestamp is kept.

    An expired datum raises by default; with ``silent_decay`` the leaked
    node senses as 0, flagged with a SILENT_DECAY_ALIAS event.
    """
    if cell.tech is not Tech.AUG8T or cell.mode is not CellMode.AUGMENTED:
        raise WrongModeError("dynamic bit storage needs 8T Augmented mode")
    if cell.dynamic is None:
        raise EmptyCellError("no dynamic bit stored")
    if cell.dynamic.is_valid(now):
        return cell.dynamic.payload, cell, ()
    if silent_decay:
        return 0, cell, (CellEvent(EventKind.SILENT_DECAY_ALIAS, now),)
    raise ExpiredReadError(
        f"dynamic bit written at {cell.dynamic.written_at} ns decayed "
        f"(retention {cell.dynamic.cell_retention} ns, now {now} ns)"
    )


def refresh_dynamic(
    cell: CellState, now: float, retention_ns: Optional[float] = None
) -> CellState:
    """Read + write back the dynamic datum, restarting its retention
    window. ``retention_ns`` replaces the sampled retention only when the
    resample-on-refresh policy is active; None keeps the existing value.
    Expired data cannot be refreshed back to life.
    """
    if cell.dynamic is None:
        raise EmptyCellError("nothing to refresh")
    if not cell.dynamic.is_valid(now):
        raise ExpiredReadError("datum decayed before the refresh arrived")
    datum = replace(
        cell.dynamic,
        written_at=now,
        cell_retention=(
            cell.dynamic.cell_retention if retention_ns is None else retention_ns
        ),
    )
    return replace(cell, dynamic=datum)


def write_trit(
    cell: CellState, trit: Trit, now: float, retention_ns: float
) -> CellState:
    if cell.tech is not Tech.AUG7T or cell.mode is not CellMode.AUGMENTED:
        raise WrongModeError("ternary storage needs 7T Augmented mode")
    datum = DynamicDatum(payload=trit, written_at=now, cell_retention=retention_ns)
    return replace(cell, dynamic=datum)


def read_trit(
    cell: CellState, now: float, silent_decay: bool = False
) -> tuple[Trit, CellState, tuple[CellEvent, ...]]:
    """Sense the ternary datum via bitline discharge.

    A successful read is followed by a write-back restore (timestamp
    reset): the precharged bitlines share charge with the floating nodes,
    so the conservative convention is to rewrite what was sensed.

    Once expired, a nonzero trit has leaked toward (0,0) and is
    indistinguishable from a stored ZERO: with ``silent_decay`` the read
    returns ZERO plus a SILENT_DECAY_ALIAS event, otherwise it raises.
    An expired ZERO senses correctly but is not restored, so expiry stays
    monotone for every datum.
    """
    if cell.tech is not Tech.AUG7T or cell.mode is not CellMode.AUGMENTED:
        raise WrongModeError("ternary storage needs 7T Augmented mode")
    if cell.dynamic is None:
        raise EmptyCellError("no trit stored")
    datum = cell.dynamic
    if datum.is_valid(now):
        restored = replace(datum, written_at=now)
        return datum.payload, replace(cell, dynamic=restored), ()
    if silent_decay:
        if datum.payload is Trit.ZERO:
            return Trit.ZERO, cell, ()
        return Trit.ZERO, cell, (CellEvent(EventKind.SILENT_DECAY_ALIAS, now),)
    raise ExpiredReadError(
        f"trit written at {datum.written_at} ns decayed "
        f"(retention {datum.cell_retention} ns, now {now} ns)"
    )


def set_cell_mode(
    cell: CellState, new_mode: CellMode, now: float
) -> tuple[CellState, tuple[CellEvent, ...]]:
    """Reconfigure the cell. Dynamic data never survives a mode change;
    the 7T static bit is lost whenever the supply header switches off.
    A flush event is emitted per datum that was still live."""
    if not mode_is_legal(cell.tech, new_mode):
        raise IllegalModeError(f"{cell.tech.name} cannot enter {new_mode.name}")
    if new_mode is cell.mode:
        return cell, ()

    events: list[CellEvent] = []
    dynamic = cell.dynamic
    if dynamic is not None:
        if dynamic.is_valid(now):
            events.append(CellEvent(EventKind.MODE_FLUSH, now))
        dynamic = None

    static = cell.static_bit
    if cell.tech is Tech.AUG7T and new_mode is not CellMode.NORMAL:
        if static is not None:
            events.append(CellEvent(EventKind.MODE_FLUSH, now))
        static = None

    return (
        replace(cell, mode=new_mode, static_bit=static, dynamic=dynamic),
        tuple(events),
    )
