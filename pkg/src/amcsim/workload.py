"""Trace files and synthetic trace generators.

Grammar (one command per line, integer times in ns, ``#`` comments):

    <time> WRITE_SRAM <sub>:<row>:<col> <0|1>
    <time> READ_SRAM <sub>:<row>:<col>
    <time> READ_SRAM_PULSED <sub>:<row>:<col> [force]
    <time> WRITE_DRAM <sub>:<row>:<col> <0|1>
    <time> READ_DRAM <sub>:<row>:<col>
    <time> WRITE_TRIT <sub>:<row>:<col> <-1|0|+1>
    <time> READ_TRIT <sub>:<row>:<col>
    <time> REFRESH <sub>:<row>:<col>
    <time> SET_MODE <sub> <normal|augmented|power_gated>
    <time> IDLE

Timestamps must be non-decreasing. The format is the stable contract
between generators, the controller, and external tools.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional

from .arrays import Address, Plane
from .cell import CellMode, Tech, Trit
from .controller import Command, CommandKind
from .errors import ConfigError, TraceError

HEADER = "# amcsim-trace v1"

_PAYLOAD_NONE = (
    CommandKind.READ_SRAM,
    CommandKind.READ_DRAM,
    CommandKind.READ_TRIT,
    CommandKind.REFRESH,
    CommandKind.READ_SRAM_PULSED,
)
_PAYLOAD_BIT = (CommandKind.WRITE_SRAM, CommandKind.WRITE_DRAM)

_DYNAMIC_PLANE = (
    CommandKind.WRITE_DRAM,
    CommandKind.READ_DRAM,
    CommandKind.REFRESH,
)

_TRIT_TOKENS = {"-1": Trit.MINUS_ONE, "0": Trit.ZERO, "+1": Trit.PLUS_ONE, "1": Trit.PLUS_ONE}
_MODE_TOKENS = {m.value: m for m in CellMode}


def _parse_addr(token: str, kind: CommandKind, lineno: int) -> Address:
    plane = Plane.DYNAMIC if kind in _DYNAMIC_PLANE else Plane.STATIC
    parts = token.split(":")
    if kind is CommandKind.SET_MODE:
        if len(parts) != 1:
            raise TraceError("SET_MODE takes a bare sub-array id", lineno)
    elif len(parts) != 3:
        raise TraceError(f"address must be sub:row:col, got {token!r}", lineno)
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise TraceError(f"non-integer address {token!r}", lineno) from None
    if any(n < 0 for n in nums):
        raise TraceError(f"negative address component in {token!r}", lineno)
    if len(nums) == 1:
        return Address(nums[0], 0, 0, plane)
    return Address(nums[0], nums[1], nums[2], plane)


def parse_trace(text: str) -> list[Command]:
    """Parse trace text into time-sorted commands or raise TraceError."""
    commands: list[Command] = []
    last_t = -1
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        try:
            t = int(tokens[0])
        except ValueError:
            raise TraceError(f"bad timestamp {tokens[0]!r}", lineno) from None
        if t < 0:
            raise TraceError("negative timestamp", lineno)
        if t < last_t:
            raise TraceError(
                f"timestamp {t} regresses below {last_t}", lineno
            )
        last_t = t
        if len(tokens) < 2:
            raise TraceError("missing command kind", lineno)
        try:
            kind = CommandKind(tokens[1])
        except ValueError:
            raise TraceError(f"unknown command {tokens[1]!r}", lineno) from None

        rest = tokens[2:]
        if kind is CommandKind.IDLE:
            if rest:
                raise TraceError("IDLE takes no arguments", lineno)
            commands.append(Command(t, kind))
            continue
        if not rest:
            raise TraceError(f"{kind.value} needs an address", lineno)
        addr = _parse_addr(rest[0], kind, lineno)
        rest = rest[1:]

        payload = None
        override = False
        if kind in _PAYLOAD_BIT:
            if len(rest) != 1 or rest[0] not in ("0", "1"):
                raise TraceError(f"{kind.value} needs a 0/1 payload", lineno)
            payload = int(rest[0])
        elif kind is CommandKind.WRITE_TRIT:
            if len(rest) != 1 or rest[0] not in _TRIT_TOKENS:
                raise TraceError(
                    f"{kind.value} needs a -1|0|+1 payload", lineno
                )
            payload = _TRIT_TOKENS[rest[0]]
        elif kind is CommandKind.SET_MODE:
            if len(rest) != 1 or rest[0] not in _MODE_TOKENS:
                raise TraceError(
                    f"SET_MODE needs one of {sorted(_MODE_TOKENS)}", lineno
                )
            payload = _MODE_TOKENS[rest[0]]
        elif kind is CommandKind.READ_SRAM_PULSED:
            if rest == ["force"]:
                override = True
            elif rest:
                raise TraceError("only 'force' may follow the address", lineno)
        elif rest:
            raise TraceError(f"unexpected arguments {rest!r}", lineno)

        commands.append(Command(t, kind, addr, payload, override))
    return commands


def serialize_trace(commands: list[Command]) -> str:
    """Canonical text form; parse . serialize is the identity on it."""
    lines = [HEADER]
    for cmd in commands:
        t = int(cmd.at)
        if cmd.kind is CommandKind.IDLE:
            lines.append(f"{t} {cmd.kind.value}")
            continue
        if cmd.kind is CommandKind.SET_MODE:
            lines.append(f"{t} {cmd.kind.value} {cmd.addr.subarray} {cmd.payload.value}")
            continue
        line = f"{t} {cmd.kind.value} {cmd.addr}"
        if isinstance(cmd.payload, Trit):
            line += f" {cmd.payload.token}"
        elif cmd.payload is not None:
            line += f" {cmd.payload}"
        if cmd.override:
            line += " force"
        lines.append(line)
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class GeneratedTrace:
    commands: list[Command]
    warnings: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class WeightStationaryParams:
    """Weight-stationary access pattern for a dual-bit sub-array.

    Static planes hold the weights for the whole run while activations
    stream through the same cells' dynamic planes, each consumed (read)
    half an inter-arrival after it lands. The dynamic plane is retired
    with a mode switch before the weights are read back, so the trace is
    clean under the strictest access-discipline policy by construction.
    """

    n_weights: int
    activation_stream_length: int
    inter_arrival_ns: int = 100
    subarray: int = 0
    rows: int = 64
    cols: int = 64
    retention_hint_ns: Optional[float] = 25000.0

    def __post_init__(self):
        if self.n_weights < 1:
            raise ConfigError("need at least one weight")
        if self.inter_arrival_ns < 2:
            raise ConfigError("inter-arrival must be >= 2 ns")
        if self.activation_stream_length < 0:
            raise ConfigError("activation count must be >= 0")


def gen_weight_stationary(params: WeightStationaryParams, seed: int) -> GeneratedTrace:
    if params.n_weights > params.rows * params.cols:
        raise ConfigError(
            f"{params.n_weights} weights do not fit a "
            f"{params.rows}x{params.cols} sub-array"
        )
    warnings = []
    if (
        params.retention_hint_ns is not None
        and 2 * params.inter_arrival_ns >= params.retention_hint_ns
    ):
        warnings.append(
            f"inter-arrival {params.inter_arrival_ns} ns x 2 ops reaches the "
            f"{params.retention_hint_ns} ns retention hint; activations may decay"
        )
    rng = random.Random(seed)
    sid = params.subarray

    def addr(i: int, plane: Plane) -> Address:
        return Address(sid, i // params.cols, i % params.cols, plane)

    cmds: list[Command] = []
    t = 0
    weights = [rng.getrandbits(1) for _ in range(params.n_weights)]
    for i, bit in enumerate(weights):
        cmds.append(Command(t, CommandKind.WRITE_SRAM, addr(i, Plane.STATIC), bit))
        t += 1

    read_gap = params.inter_arrival_ns // 2
    for k in range(params.activation_stream_length):
        cell = k % params.n_weights
        bit = rng.getrandbits(1)
        cmds.append(
            Command(t, CommandKind.WRITE_DRAM, addr(cell, Plane.DYNAMIC), bit)
        )
        cmds.append(
            Command(t + read_gap, CommandKind.READ_DRAM, addr(cell, Plane.DYNAMIC))
        )
        t += params.inter_arrival_ns

    # retire the dynamic plane wholesale before touching the static one
    t += 1
    cmds.append(
        Command(t, CommandKind.SET_MODE, Address(sid, 0, 0), CellMode.NORMAL)
    )
    t += 1
    for i in range(params.n_weights):
        cmds.append(Command(t, CommandKind.READ_SRAM, addr(i, Plane.STATIC)))
        t += 1

    return GeneratedTrace(
        cmds,
        warnings,
        meta={"weights": weights, "end_ns": t},
    )


@dataclass(frozen=True)
class RandomTraceParams:
    """Uniform random legal commands with optional fault injection.

    ``violation_rate`` injects static-plane accesses onto cells holding a
    live dynamic bit (a FILO violation); ``expired_read_rate`` injects
    dynamic reads of data the generator knows has decayed. The shadow
    bookkeeping assumes Enforce semantics, refresh disabled and no
    retention variation, with ``retention_hint_ns`` as every cell's
    retention.
    """

    tech: Tech
    mode: CellMode
    n_commands: int = 1000
    subarrays: int = 1
    rows: int = 8
    cols: int = 8
    violation_rate: float = 0.0
    expired_read_rate: float = 0.0
    max_gap_ns: int = 200
    retention_hint_ns: float = 25000.0
    mode_switch_rate: float = 0.0

    def __post_init__(self):
        for rate in (self.violation_rate, self.expired_read_rate, self.mode_switch_rate):
            if not 0.0 <= rate <= 1.0:
                raise ConfigError("rates must be in [0, 1]")
        if self.n_commands < 0 or self.subarrays < 1:
            raise ConfigError("bad trace size")


class _Shadow:
    """Generator-side mirror of one sub-array, Enforce semantics."""

    __slots__ = ("mode", "static", "dyn_at", "n")

    def __init__(self, mode: CellMode, n: int):
        self.mode = mode
        self.n = n
        self.static: list[Optional[int]] = [None] * n
        self.dyn_at: list[Optional[float]] = [None] * n

    def live(self, idx: int, t: float, retention: float) -> bool:
        at = self.dyn_at[idx]
        return at is not None and t - at < retention


def gen_random(params: RandomTraceParams, seed: int) -> GeneratedTrace:
    rng = random.Random(seed)
    tech, n = params.tech, params.rows * params.cols
    shadows = [_Shadow(params.mode, n) for _ in range(params.subarrays)]
    ret = params.retention_hint_ns
    cmds: list[Command] = []
    injected = eligible = 0
    t = 0

    def addr(sid: int, idx: int, plane: Plane = Plane.STATIC) -> Address:
        return Address(sid, idx // params.cols, idx % params.cols, plane)

    for _ in range(params.n_commands):
        t += rng.randint(1, params.max_gap_ns)
        sid = rng.randrange(params.subarrays)
        sh = shadows[sid]

        if params.mode_switch_rate and rng.random() < params.mode_switch_rate:
            choices = [m for m in CellMode if m is not sh.mode]
            if tech is Tech.STD6T:
                choices = []
            elif tech is Tech.AUG8T:
                choices = [m for m in choices if m is not CellMode.POWER_GATED]
            if choices:
                new_mode = rng.choice(choices)
                cmds.append(
                    Command(t, CommandKind.SET_MODE, Address(sid, 0, 0), new_mode)
                )
                sh.dyn_at = [None] * n
                if tech is Tech.AUG7T and new_mode is not CellMode.NORMAL:
                    sh.static = [None] * n
                sh.mode = new_mode
                continue

        dual = tech is Tech.AUG8T and sh.mode is CellMode.AUGMENTED
        live_cells = (
            [i for i in range(n) if sh.live(i, t, ret)]
            if sh.mode is CellMode.AUGMENTED
            else []
        )

        if dual and live_cells:
            eligible += 1
            if rng.random() < params.violation_rate:
                idx = rng.choice(live_cells)
                injected += 1
                if sh.static[idx] is not None and rng.random() < 0.5:
                    cmds.append(Command(t, CommandKind.READ_SRAM, addr(sid, idx)))
                else:
                    cmds.append(
                        Command(
                            t, CommandKind.WRITE_SRAM, addr(sid, idx), rng.getrandbits(1)
                        )
                    )
                # Enforce rejects the command, so the shadow state is kept
                continue

        expired_cells = (
            [
                i
                for i in range(n)
                if sh.dyn_at[i] is not None and not sh.live(i, t, ret)
            ]
            if sh.mode is CellMode.AUGMENTED
            else []
        )
        if (
            expired_cells
            and params.expired_read_rate
            and rng.random() < params.expired_read_rate
        ):
            idx = rng.choice(expired_cells)
            kind = (
                CommandKind.READ_DRAM if tech is Tech.AUG8T else CommandKind.READ_TRIT
            )
            cmds.append(Command(t, kind, addr(sid, idx, Plane.DYNAMIC)))
            continue

        choices: list[str] = []
        if sh.mode is CellMode.NORMAL or tech is Tech.STD6T:
            choices.append("ws")
            if any(b is not None for b in sh.static):
                choices.append("rs")
            if tech is Tech.AUG8T:
                choices.append("rp")
        elif tech is Tech.AUG8T:  # augmented dual storage
            choices.append("wd")
            safe_static = [i for i in range(n) if not sh.live(i, t, ret)]
            if safe_static:
                choices.append("ws")
            if any(
                sh.static[i] is not None and not sh.live(i, t, ret) for i in range(n)
            ):
                choices.append("rs")
            if live_cells:
                choices += ["rd", "rd", "rf"]
        elif tech is Tech.AUG7T and sh.mode is CellMode.AUGMENTED:
            choices.append("wt")
            if live_cells:
                choices += ["rt", "rt", "rf"]
        if not choices:  # power gated: nothing but time passes
            cmds.append(Command(t, CommandKind.IDLE))
            continue

        pick = rng.choice(choices)
        if pick == "ws":
            if sh.mode is CellMode.AUGMENTED:
                pool = [i for i in range(n) if not sh.live(i, t, ret)]
            else:
                pool = range(n)
            idx = rng.choice(list(pool))
            bit = rng.getrandbits(1)
            cmds.append(Command(t, CommandKind.WRITE_SRAM, addr(sid, idx), bit))
            sh.static[idx] = bit
            sh.dyn_at[idx] = None
        elif pick == "rs":
            pool = [
                i
                for i in range(n)
                if sh.static[i] is not None
                and (sh.mode is not CellMode.AUGMENTED or not sh.live(i, t, ret))
            ]
            idx = rng.choice(pool)
            cmds.append(Command(t, CommandKind.READ_SRAM, addr(sid, idx)))
            sh.dyn_at[idx] = None
        elif pick == "rp":
            pool = [i for i in range(n) if sh.static[i] is not None]
            if not pool:
                cmds.append(Command(t, CommandKind.IDLE))
                continue
            idx = rng.choice(pool)
            cmds.append(Command(t, CommandKind.READ_SRAM_PULSED, addr(sid, idx)))
        elif pick == "wd":
            idx = rng.randrange(n)
            bit = rng.getrandbits(1)
            cmds.append(
                Command(t, CommandKind.WRITE_DRAM, addr(sid, idx, Plane.DYNAMIC), bit)
            )
            sh.dyn_at[idx] = t
        elif pick == "rd":
            idx = rng.choice(live_cells)
            cmds.append(Command(t, CommandKind.READ_DRAM, addr(sid, idx, Plane.DYNAMIC)))
        elif pick == "wt":
            idx = rng.randrange(n)
            trit = rng.choice((Trit.MINUS_ONE, Trit.ZERO, Trit.PLUS_ONE))
            cmds.append(
                Command(t, CommandKind.WRITE_TRIT, addr(sid, idx, Plane.STATIC), trit)
            )
            sh.dyn_at[idx] = t
        elif pick == "rt":
            idx = rng.choice(live_cells)
            cmds.append(Command(t, CommandKind.READ_TRIT, addr(sid, idx, Plane.STATIC)))
            sh.dyn_at[idx] = t  # read-restore resets the window
        elif pick == "rf":
            idx = rng.choice(live_cells)
            cmds.append(Command(t, CommandKind.REFRESH, addr(sid, idx, Plane.DYNAMIC)))
            sh.dyn_at[idx] = t

    return GeneratedTrace(
        cmds,
        [],
        meta={
            "injected_violations": injected,
            "eligible_steps": eligible,
            "end_ns": t,
        },
    )
