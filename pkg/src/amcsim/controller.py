"""Command-stream execution against sub-arrays.

The controller consumes a time-sorted command stream, enforces the
first-in last-out discipline that protects the dual cell's dynamic bit,
injects scheduled refreshes ahead of user commands, and accumulates the
simulation report.

Accounting is exact by construction: per-operation energies and delays
are table constants, so the controller stores (value -> count) maps per
sub-array and multiplies out at report time. All aggregate numbers are
derived from the per-sub-array blocks in sorted id order, which makes a
merged multi-worker report byte-identical to a single-worker run.

Commands execute atomically at their timestamp; the recorded delay feeds
latency statistics but does not block later commands (functional timing,
not a pipeline model). Failed commands are logged and skipped unless
strict mode is on. Only completed operations consume energy.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

from . import arrays
from .arrays import Address, SubArray
from .cell import CellMode, EventKind, Tech, Trit
from .errors import AmcError, ConfigError, OutOfOrderError
from .models import BiasConfig, ModelParams, OpKind

REPORT_FORMAT = "amcsim-report-v1"


class CommandKind(Enum):
    WRITE_SRAM = "WRITE_SRAM"
    READ_SRAM = "READ_SRAM"
    READ_SRAM_PULSED = "READ_SRAM_PULSED"
    WRITE_DRAM = "WRITE_DRAM"
    READ_DRAM = "READ_DRAM"
    WRITE_TRIT = "WRITE_TRIT"
    READ_TRIT = "READ_TRIT"
    REFRESH = "REFRESH"
    SET_MODE = "SET_MODE"
    IDLE = "IDLE"


@dataclass(frozen=True, slots=True)
class Command:
    at: float
    kind: CommandKind
    addr: Optional[Address] = None
    payload: Union[int, Trit, CellMode, None] = None
    override: bool = False


class FiloPolicy(Enum):
    ENFORCE = "enforce"  # reject violating commands
    WARN = "warn"  # execute (hardware destroys the data), count, log
    OFF = "off"  # no checking at all


class Outcome(Enum):
    OK = "ok"
    REJECTED = "rejected"  # refused by the FILO check
    EXPIRED = "expired"  # ran, but the dynamic datum had decayed
    FAILED = "failed"  # precondition error; nothing happened


@dataclass(frozen=True, slots=True)
class Policies:
    filo: FiloPolicy = FiloPolicy.ENFORCE
    refresh_enabled: bool = False
    refresh_margin: float = 0.8
    # a real controller schedules off the nominal retention; per-cell
    # samples are visible to it only when this is set
    controller_knows_variation: bool = False
    silent_decay: bool = False
    strict: bool = False

    def __post_init__(self):
        if not 0.0 < self.refresh_margin < 1.0:
            raise ConfigError(
                f"refresh margin must be in (0,1), got {self.refresh_margin}"
            )


@dataclass(frozen=True, slots=True)
class ArraySpec:
    tech: Tech
    mode: CellMode
    rows: int = 64
    cols: int = 64
    count: int = 1

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.count < 1:
            raise ConfigError("array rows/cols/count must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    array: ArraySpec
    temperature_c: float = 85.0
    bias: BiasConfig = BiasConfig()
    policies: Policies = Policies()
    seed: int = 0
    horizon_ns: Optional[float] = None  # None: end of trace

    def to_dict(self) -> dict:
        return {
            "array": {
                "tech": self.array.tech.value,
                "mode": self.array.mode.value,
                "rows": self.array.rows,
                "cols": self.array.cols,
                "count": self.array.count,
            },
            "temperature_c": self.temperature_c,
            "bias": {
                "wl_underdrive_mv": self.bias.wl_underdrive_mv,
                "wl_boost_mv": self.bias.wl_boost_mv,
            },
            "policies": {
                "filo": self.policies.filo.value,
                "refresh_enabled": self.policies.refresh_enabled,
                "refresh_margin": self.policies.refresh_margin,
                "controller_knows_variation": self.policies.controller_knows_variation,
                "silent_decay": self.policies.silent_decay,
                "strict": self.policies.strict,
            },
            "seed": self.seed,
            "horizon_ns": self.horizon_ns,
        }


_KIND_TO_OP = {
    CommandKind.WRITE_SRAM: OpKind.SRAM_WRITE,
    CommandKind.READ_SRAM: OpKind.SRAM_READ,
    CommandKind.READ_SRAM_PULSED: OpKind.SRAM_READ_PULSED,
    CommandKind.WRITE_DRAM: OpKind.DRAM_WRITE,
    CommandKind.READ_DRAM: OpKind.DRAM_READ,
    CommandKind.WRITE_TRIT: OpKind.TRIT_WRITE,
    CommandKind.READ_TRIT: OpKind.TRIT_READ,
    CommandKind.REFRESH: OpKind.REFRESH,
}

_SRAM_PLANE_KINDS = (
    CommandKind.WRITE_SRAM,
    CommandKind.READ_SRAM,
    CommandKind.READ_SRAM_PULSED,
)

_EVENT_COUNTERS = {
    EventKind.DRAM_DESTROYED_BY_SRAM_ACCESS: "destructions",
    EventKind.SILENT_DECAY_ALIAS: "silent_decays",
    EventKind.MODE_FLUSH: "mode_flushes",
}

_COUNTER_KEYS = (
    "filo_violations",
    "retention_violations",
    "silent_decays",
    "refreshes",
    "mode_flushes",
    "destructions",
)
_COMMAND_KEYS = ("executed", "rejected", "failed", "expired")


def check_filo(sub: SubArray, cmd: Command) -> bool:
    """True when the command would destroy a live dynamic bit.

    Only static-plane accesses to a dual cell in Augmented mode can
    violate; a pulsed read with the explicit destroy override is the
    caller taking responsibility and does not count.
    """
    if sub.tech is not Tech.AUG8T or sub.mode is not CellMode.AUGMENTED:
        return False
    if cmd.kind not in _SRAM_PLANE_KINDS:
        return False
    if cmd.kind is CommandKind.READ_SRAM_PULSED and cmd.override:
        return False
    datum = sub.cell_at(cmd.addr.row, cmd.addr.col).dynamic
    return datum is not None and datum.is_valid(cmd.at)


def _fmt_ns(t: float) -> str:
    return str(int(t)) if t == int(t) else repr(t)


@dataclass(slots=True)
class LogRecord:
    sort_key: tuple
    line: str


class _SubStats:
    """Per-sub-array accumulators; everything the report needs."""

    __slots__ = (
        "energy_counts",
        "delay_counts",
        "counters",
        "commands",
        "hold_energy_fj",
        "hold_since_ns",
    )

    def __init__(self):
        self.energy_counts: dict[tuple[OpKind, float], int] = {}
        self.delay_counts: dict[float, int] = {}
        self.counters = dict.fromkeys(_COUNTER_KEYS, 0)
        self.commands = dict.fromkeys(_COMMAND_KEYS, 0)
        self.hold_energy_fj = 0.0
        self.hold_since_ns = 0.0


class Controller:
    """Executes one time-sorted command queue over a group of sub-arrays.

    ``subarray_ids`` restricts the controller to a subset of the config's
    arrays so independent groups can run in parallel and be merged.
    """

    def __init__(
        self,
        config: RunConfig,
        params: ModelParams,
        *,
        subarray_ids: Optional[Sequence[int]] = None,
        keep_event_log: bool = True,
    ):
        self.config = config
        self.params = params
        self.policies = config.policies
        spec = config.array
        ids = range(spec.count) if subarray_ids is None else subarray_ids
        self.subs: dict[int, SubArray] = {
            sid: arrays.new_subarray(
                sid,
                spec.tech,
                spec.mode,
                spec.rows,
                spec.cols,
                params=params,
                temperature_c=config.temperature_c,
                bias=config.bias,
                seed=config.seed,
            )
            for sid in ids
        }
        self.stats: dict[int, _SubStats] = {sid: _SubStats() for sid in self.subs}
        self.log: list[LogRecord] = []
        self.keep_event_log = keep_event_log
        self.clock = 0.0
        self.finalized_at: Optional[float] = None
        # (due, subarray, row, col, written_at) with lazy invalidation:
        # entries whose datum was overwritten or lost are skipped on pop
        self._refresh_heap: list[tuple] = []

    # ---------------------------------------------------------------- log

    def _log(self, at: float, phase: int, seq: tuple, kind: str, addr, detail: str):
        if not self.keep_event_log:
            return
        addr_txt = str(addr) if addr is not None else "-"
        line = f"{_fmt_ns(at)} {kind} {addr_txt}"
        if detail:
            line += f" {detail}"
        self.log.append(LogRecord((at, phase) + seq, line))

    # ------------------------------------------------------- refresh logic

    def _schedule_retention(self, sub: SubArray, datum) -> float:
        if self.policies.controller_knows_variation:
            return datum.cell_retention
        return sub.nominal_retention_ns

    def _maybe_schedule(self, sub: SubArray, addr: Address, now: float):
        """After an op that (re)stamped a dynamic datum, queue its refresh."""
        if not self.policies.refresh_enabled:
            return
        datum = sub.cells[sub.index(addr.row, addr.col)].dynamic
        if datum is None or datum.written_at != now:
            return
        due = now + self.policies.refresh_margin * self._schedule_retention(
            sub, datum
        )
        heapq.heappush(
            self._refresh_heap, (due, sub.subarray_id, addr.row, addr.col, now)
        )

    def _pump_refreshes(self, up_to: float):
        """Execute every queued refresh due at or before ``up_to``."""
        heap = self._refresh_heap
        while heap and heap[0][0] <= up_to:
            due, sid, row, col, stamped_at = heapq.heappop(heap)
            sub = self.subs[sid]
            datum = sub.cells[sub.index(row, col)].dynamic
            if datum is None or datum.written_at != stamped_at:
                continue  # overwritten, flushed, or destroyed meanwhile
            cmd = Command(due, CommandKind.REFRESH, Address(sid, row, col))
            self.clock = max(self.clock, due)
            self._execute(cmd, phase=0, seq=(sid, row, col))

    # ------------------------------------------------------------ execution

    def submit(self, cmd: Command, seq_no: int = 0) -> Outcome:
        if self.finalized_at is not None:
            raise ConfigError("controller already finalized")
        if cmd.at < self.clock:
            raise OutOfOrderError(
                f"command at {cmd.at} ns after clock reached {self.clock} ns"
            )
        self._pump_refreshes(cmd.at)
        self.clock = max(self.clock, cmd.at)
        return self._execute(cmd, phase=1, seq=(seq_no,))

    def _execute(self, cmd: Command, phase: int, seq: tuple) -> Outcome:
        if cmd.kind is CommandKind.IDLE:
            self._log(cmd.at, phase, seq + (0,), "idle", None, "")
            return Outcome.OK

        sid = cmd.addr.subarray
        sub = self.subs.get(sid)
        if sub is None:
            raise ConfigError(f"command targets unknown sub-array {sid}")
        stats = self.stats[sid]

        if cmd.kind is CommandKind.SET_MODE:
            return self._execute_set_mode(cmd, sub, stats, phase, seq)

        violation = False
        if self.policies.filo is not FiloPolicy.OFF:
            violation = check_filo(sub, cmd)
        if violation:
            stats.counters["filo_violations"] += 1
            if self.policies.filo is FiloPolicy.ENFORCE:
                stats.commands["rejected"] += 1
                self._log(
                    cmd.at,
                    phase,
                    seq + (0,),
                    "reject",
                    cmd.addr,
                    f"op={cmd.kind.value} reason=filo",
                )
                return Outcome.REJECTED

        op = _KIND_TO_OP[cmd.kind]
        # Warn means "let the hardware do what hardware does", which for a
        # pulsed read includes clobbering the dynamic node
        override = cmd.override or (
            violation and cmd.kind is CommandKind.READ_SRAM_PULSED
        )
        try:
            result = arrays.access(
                sub,
                cmd.addr,
                op,
                cmd.at,
                self.params,
                payload=cmd.payload,
                override=override,
                silent_decay=self.policies.silent_decay,
            )
        except AmcError as exc:
            if self.policies.strict:
                raise
            stats.commands["failed"] += 1
            self._log(
                cmd.at,
                phase,
                seq + (0,),
                "fail",
                cmd.addr,
                f"op={cmd.kind.value} error={type(exc).__name__}",
            )
            return Outcome.FAILED

        if not result.ok:
            stats.commands["expired"] += 1
            stats.counters["retention_violations"] += 1
            self._log(
                cmd.at, phase, seq + (0,), "expired", cmd.addr, f"op={cmd.kind.value}"
            )
            return Outcome.EXPIRED

        stats.commands["executed"] += 1
        key = (op, result.energy_fj)
        stats.energy_counts[key] = stats.energy_counts.get(key, 0) + 1
        stats.delay_counts[result.delay_ns] = (
            stats.delay_counts.get(result.delay_ns, 0) + 1
        )
        if cmd.kind is CommandKind.REFRESH:
            stats.counters["refreshes"] += 1

        detail = f"op={cmd.kind.value}"
        if result.value is not None:
            token = (
                result.value.token
                if isinstance(result.value, Trit)
                else str(result.value)
            )
            detail += f" value={token}"
        detail += f" energy_fj={result.energy_fj!r} delay_ns={result.delay_ns!r}"
        self._log(cmd.at, phase, seq + (0,), "exec", cmd.addr, detail)

        for k, ev in enumerate(result.events, start=1):
            counter = _EVENT_COUNTERS.get(ev.kind)
            if counter:
                stats.counters[counter] += 1
            self._log(ev.at, phase, seq + (k,), ev.kind.value, cmd.addr, "")

        self._maybe_schedule(sub, cmd.addr, cmd.at)
        return Outcome.OK

    def _execute_set_mode(self, cmd, sub, stats, phase, seq) -> Outcome:
        new_mode = cmd.payload
        if not isinstance(new_mode, CellMode):
            raise ConfigError(f"SET_MODE payload must be a mode, got {cmd.payload!r}")
        try:
            self._integrate_hold(sub, stats, cmd.at)
            events = arrays.set_mode(sub, new_mode, cmd.at)
        except AmcError as exc:
            if self.policies.strict:
                raise
            stats.commands["failed"] += 1
            self._log(
                cmd.at,
                phase,
                seq + (0,),
                "fail",
                cmd.addr,
                f"op=SET_MODE error={type(exc).__name__}",
            )
            return Outcome.FAILED
        stats.commands["executed"] += 1
        self._log(
            cmd.at,
            phase,
            seq + (0,),
            "exec",
            cmd.addr,
            f"op=SET_MODE mode={new_mode.value} energy_fj=0.0 delay_ns=0.0",
        )
        for k, (addr, ev) in enumerate(events, start=1):
            counter = _EVENT_COUNTERS.get(ev.kind)
            if counter:
                stats.counters[counter] += 1
            self._log(ev.at, phase, seq + (k,), ev.kind.value, addr, "")
        return Outcome.OK

    # ------------------------------------------------------- hold tracking

    def _integrate_hold(self, sub: SubArray, stats: _SubStats, now: float):
        span = now - stats.hold_since_ns
        if span > 0:
            power = self.params.hold_power(sub.tech, sub.mode)
            # uW * ns = fJ
            stats.hold_energy_fj += power * span * (sub.rows * sub.cols)
        stats.hold_since_ns = now

    # ------------------------------------------------------------- results

    def finalize(self, horizon_ns: Optional[float] = None) -> float:
        """Close the run: refresh chain and hold energy run to the horizon.

        The horizon defaults to the configured one, else the clock at the
        last command. Returns the horizon used.
        """
        if self.finalized_at is not None:
            return self.finalized_at
        horizon = horizon_ns if horizon_ns is not None else self.config.horizon_ns
        if horizon is None:
            horizon = self.clock
        if horizon < self.clock:
            raise ConfigError(
                f"horizon {horizon} ns precedes last command at {self.clock} ns"
            )
        self._pump_refreshes(horizon)
        for sid, sub in self.subs.items():
            self._integrate_hold(sub, self.stats[sid], horizon)
        self.finalized_at = horizon
        return horizon

    def report(self) -> dict:
        if self.finalized_at is None:
            raise ConfigError("finalize() the run before asking for the report")
        blocks = {}
        for sid in sorted(self.subs):
            sub, stats = self.subs[sid], self.stats[sid]
            cap = arrays.effective_capacity(sub)
            by_op: dict[str, float] = {}
            for op in OpKind:
                keys = sorted(
                    (e for (o, e) in stats.energy_counts if o is op),
                )
                if keys:
                    by_op[op.value] = sum(
                        e * stats.energy_counts[(op, e)] for e in keys
                    )
            delays = sorted(stats.delay_counts)
            blocks[str(sid)] = {
                "tech": sub.tech.value,
                "mode_final": sub.mode.value,
                "capacity": {
                    "bits": cap.bits,
                    "trits": cap.trits,
                    "bit_equivalent": cap.bit_equivalent,
                    "conventional_6t_cells": cap.conventional_6t_cells,
                },
                "counters": dict(stats.counters),
                "commands": dict(stats.commands),
                "dynamic_energy_fj": sum(by_op[k] for k in sorted(by_op)),
                "hold_energy_fj": stats.hold_energy_fj,
                "energy_by_op_fj": by_op,
                "delay_hist_ns": {
                    repr(d): stats.delay_counts[d] for d in delays
                },
                "total_delay_ns": sum(
                    d * stats.delay_counts[d] for d in delays
                ),
            }
        report = {
            "format": REPORT_FORMAT,
            "config": self.config.to_dict(),
            "model_file": self.params.source_path,
            "model_sha256": self.params.sha256,
            "horizon_ns": self.finalized_at,
            "subarrays": blocks,
        }
        report["totals"] = _totals_from_blocks(blocks)
        return report


def _totals_from_blocks(blocks: dict) -> dict:
    """Aggregate per-sub-array blocks; iteration in sorted id order makes
    the result independent of how sub-arrays were partitioned."""
    order = sorted(blocks, key=int)
    counters = dict.fromkeys(_COUNTER_KEYS, 0)
    commands = dict.fromkeys(_COMMAND_KEYS, 0)
    by_op: dict[str, float] = {}
    hist: dict[str, int] = {}
    capacity = {
        "bits": 0,
        "trits": 0,
        "bit_equivalent": 0.0,
        "conventional_6t_cells": 0,
    }
    hold = 0.0
    for sid in order:
        blk = blocks[sid]
        for k in _COUNTER_KEYS:
            counters[k] += blk["counters"][k]
        for k in _COMMAND_KEYS:
            commands[k] += blk["commands"][k]
        for cap_key in capacity:
            capacity[cap_key] += blk["capacity"][cap_key]
        hold += blk["hold_energy_fj"]
        for op, e in blk["energy_by_op_fj"].items():
            by_op[op] = by_op.get(op, 0.0) + e
        for d, n in blk["delay_hist_ns"].items():
            hist[d] = hist.get(d, 0) + n
    dynamic = sum(by_op[k] for k in sorted(by_op))
    total_delay = sum(float(d) * hist[d] for d in sorted(hist, key=float))
    return {
        "counters": counters,
        "commands": commands,
        "capacity": capacity,
        "dynamic_energy_fj": dynamic,
        "hold_energy_fj": hold,
        "refresh_energy_fj": by_op.get(OpKind.REFRESH.value, 0.0),
        "energy_by_op_fj": {k: by_op[k] for k in sorted(by_op)},
        "delay_hist_ns": {d: hist[d] for d in sorted(hist, key=float)},
        "total_delay_ns": total_delay,
    }


def schedule_refresh(
    ctrl: Controller, now: float
) -> list[Command]:
    """Poll every dynamic datum and emit one refresh per datum whose age
    reached margin x retention at ``now``, in (subarray, row, col) order.

    This is the reference form of the scheduler; the run loop reaches the
    same refresh times through a due-time queue instead of polling.
    """
    if not ctrl.policies.refresh_enabled:
        return []
    margin = ctrl.policies.refresh_margin
    due: list[Command] = []
    for sid in sorted(ctrl.subs):
        sub = ctrl.subs[sid]
        if sub.cell_retention_ns is None:
            continue
        for row in range(sub.rows):
            for col in range(sub.cols):
                datum = sub.cells[row * sub.cols + col].dynamic
                if datum is None or not datum.is_valid(now):
                    continue
                retention = ctrl._schedule_retention(sub, datum)
                if now - datum.written_at >= margin * retention:
                    due.append(
                        Command(now, CommandKind.REFRESH, Address(sid, row, col))
                    )
    return due


def run(
    trace: Iterable[Command],
    config: RunConfig,
    params: ModelParams,
    *,
    subarray_ids: Optional[Sequence[int]] = None,
    keep_event_log: bool = True,
    seq_base: Optional[Iterable[int]] = None,
    horizon_ns: Optional[float] = None,
) -> Controller:
    """Drive a full trace through a fresh controller and finalize it.

    ``seq_base`` supplies global sequence numbers when running over a
    filtered partition of a larger trace (keeps merged logs in order);
    ``horizon_ns`` overrides the configured horizon for the same reason.
    """
    ctrl = Controller(
        config, params, subarray_ids=subarray_ids, keep_event_log=keep_event_log
    )
    if seq_base is None:
        for seq, cmd in enumerate(trace):
            ctrl.submit(cmd, seq)
    else:
        for seq, cmd in zip(seq_base, trace):
            ctrl.submit(cmd, seq)
    ctrl.finalize(horizon_ns)
    return ctrl


def run_partitioned(
    trace: Sequence[Command],
    config: RunConfig,
    params: ModelParams,
    workers: int = 1,
    *,
    keep_event_log: bool = True,
) -> tuple[dict, list[LogRecord]]:
    """Fan sub-arrays across ``workers`` controllers and merge.

    Sub-array i goes to partition i % workers; commands with no address
    (idle) are broadcast since they only advance time. The merged report
    and log are independent of the worker count.
    """
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    count = config.array.count
    workers = min(workers, count)
    partitions = [
        [sid for sid in range(count) if sid % workers == w] for w in range(workers)
    ]
    indexed = list(enumerate(trace))
    # every partition must integrate hold energy and chain refreshes to the
    # same instant, whichever sub-array saw the last command
    horizon = config.horizon_ns
    if horizon is None:
        horizon = max((cmd.at for _, cmd in indexed), default=0.0)

    def job(ids: list[int]) -> Controller:
        wanted = set(ids)
        cmds = [
            (seq, cmd)
            for seq, cmd in indexed
            if cmd.addr is None or cmd.addr.subarray in wanted
        ]
        return run(
            [c for _, c in cmds],
            config,
            params,
            subarray_ids=ids,
            keep_event_log=keep_event_log,
            seq_base=[s for s, _ in cmds],
            horizon_ns=horizon,
        )

    if workers == 1:
        controllers = [job(partitions[0])]
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            controllers = list(pool.map(job, partitions))

    reports = [c.report() for c in controllers]
    merged = merge_reports(reports)
    log: list[LogRecord] = []
    for c in controllers:
        log.extend(c.log)
    log.sort(key=lambda rec: rec.sort_key)
    return merged, log


def merge_reports(reports: Sequence[dict]) -> dict:
    """Sum reports of disjoint sub-array groups (associative, commutative)."""
    if not reports:
        raise ConfigError("nothing to merge")
    blocks: dict = {}
    for rep in reports:
        for key in ("format", "config", "model_sha256"):
            if rep[key] != reports[0][key]:
                raise ConfigError(f"cannot merge reports with differing {key}")
        overlap = blocks.keys() & rep["subarrays"].keys()
        if overlap:
            raise ConfigError(f"sub-arrays {sorted(overlap)} appear twice")
        blocks.update(rep["subarrays"])
    merged = {
        "format": reports[0]["format"],
        "config": reports[0]["config"],
        "model_file": reports[0]["model_file"],
        "model_sha256": reports[0]["model_sha256"],
        "horizon_ns": max(r["horizon_ns"] for r in reports),
        "subarrays": {k: blocks[k] for k in sorted(blocks, key=int)},
    }
    merged["totals"] = _totals_from_blocks(blocks)
    return merged


def report_json(report: dict) -> str:
    """Canonical serialization; byte-identical for identical runs."""
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


def log_lines(log: Sequence[LogRecord]) -> str:
    ordered = sorted(log, key=lambda rec: rec.sort_key)
    return "".join(rec.line + "\n" for rec in ordered)
