"""Numeric parameter tables: retention, energy, hold power, delay.

Parameters load from a TOML file (one section per table); a default file
with the 22nm FD-SOI characterization numbers ships with the package.
Retention interpolates log-linearly in temperature between anchors,
because leakage-driven decay is close to exponential in temperature.
Energies are temperature-independent constants taken at 85C; temperature
affects retention only. Lookups that have no entry raise, never return
silent zeros.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from . import rng
from .cell import CellMode, Tech, Trit
from .errors import (
    ConfigError,
    MissingEntryError,
    NoAnchorError,
    OutOfRangeError,
)

FORMAT_TAG = "amcsim-models-v1"


class OpKind(Enum):
    SRAM_READ = "sram_read"
    SRAM_WRITE = "sram_write"
    SRAM_READ_PULSED = "sram_read_pulsed"
    DRAM_READ = "dram_read"
    DRAM_WRITE = "dram_write"
    TRIT_READ = "trit_read"
    TRIT_WRITE = "trit_write"
    REFRESH = "refresh"


# ops the controller can issue per (tech, mode); refresh is derived from
# the read+write pair and set-mode/idle are never table lookups
REACHABLE_OPS = {
    (Tech.STD6T, CellMode.NORMAL): (OpKind.SRAM_READ, OpKind.SRAM_WRITE),
    (Tech.AUG8T, CellMode.NORMAL): (
        OpKind.SRAM_READ,
        OpKind.SRAM_WRITE,
        OpKind.SRAM_READ_PULSED,
    ),
    (Tech.AUG8T, CellMode.AUGMENTED): (
        OpKind.SRAM_READ,
        OpKind.SRAM_WRITE,
        OpKind.SRAM_READ_PULSED,
        OpKind.DRAM_READ,
        OpKind.DRAM_WRITE,
    ),
    (Tech.AUG7T, CellMode.NORMAL): (OpKind.SRAM_READ, OpKind.SRAM_WRITE),
    (Tech.AUG7T, CellMode.AUGMENTED): (OpKind.TRIT_READ, OpKind.TRIT_WRITE),
    (Tech.AUG7T, CellMode.POWER_GATED): (),
}

# 7T augmented delays depend on the stored pattern: (0,0) reads fast, a
# discharging bitline takes longer
PATTERNED_OPS = {
    (Tech.AUG7T, CellMode.AUGMENTED, OpKind.TRIT_READ),
    (Tech.AUG7T, CellMode.AUGMENTED, OpKind.TRIT_WRITE),
}

_REFRESH_PARTS = {
    Tech.AUG8T: (OpKind.DRAM_READ, OpKind.DRAM_WRITE),
    Tech.AUG7T: (OpKind.TRIT_READ, OpKind.TRIT_WRITE),
}


@dataclass(frozen=True, slots=True)
class BiasConfig:
    """Wordline bias protocol metadata.

    ``wl_underdrive_mv`` is the hold-mode underdrive (<= 0) and selects
    the retention anchor set; ``wl_boost_mv`` is the boosted write level
    (>= 0), recorded in reports and optionally charged via
    ``boost_energy_fj``.
    """

    wl_underdrive_mv: int = 0
    wl_boost_mv: int = 1250

    def __post_init__(self):
        if self.wl_underdrive_mv > 0:
            raise ConfigError("wordline underdrive must be <= 0 mV")
        if self.wl_boost_mv < 0:
            raise ConfigError("wordline boost must be >= 0 mV")


def pattern_of(payload: Union[int, Trit, None]) -> Optional[str]:
    """Delay-table pattern key for a stored/sensed value."""
    if isinstance(payload, Trit):
        return "zero" if payload is Trit.ZERO else "nonzero"
    return None


@dataclass(frozen=True)
class ModelParams:
    """Immutable parameter bundle; shareable across simulation workers."""

    retention_anchors: dict  # (Tech, underdrive_mv) -> ((temp_c, ns), ...)
    hold_power_uw: dict  # (Tech, CellMode) -> uW per cell
    op_energy_fj: dict  # (Tech, CellMode, OpKind) -> fJ per access
    op_delay_ns: dict  # (Tech, CellMode, OpKind, pattern) -> ns
    temperature_range_c: tuple[float, float] = (-50.0, 125.0)
    variation_sigma: float = 0.0
    zero_retention_factor: float = 4.0
    boost_energy_fj: float = 0.0
    resample_on_refresh: bool = False
    source_path: str = "<builtin>"
    sha256: str = ""
    annotations: dict = field(default_factory=dict, compare=False)

    def retention_time(
        self, tech: Tech, temperature_c: float, bias: BiasConfig
    ) -> float:
        """Nominal retention in ns: exact at anchors, log-linear in
        temperature between them, end segments extended outward."""
        lo, hi = self.temperature_range_c
        if not lo <= temperature_c <= hi:
            raise OutOfRangeError(
                f"temperature {temperature_c} C outside [{lo}, {hi}] C"
            )
        anchors = self.retention_anchors.get((tech, bias.wl_underdrive_mv))
        if not anchors:
            raise NoAnchorError(
                f"no retention anchors for {tech.name} at "
                f"{bias.wl_underdrive_mv} mV underdrive"
            )
        for temp, ret in anchors:
            if temperature_c == temp:
                return ret
        if len(anchors) == 1:
            return anchors[0][1]
        idx = 0
        while idx < len(anchors) - 2 and anchors[idx + 1][0] < temperature_c:
            idx += 1
        (t0, r0), (t1, r1) = anchors[idx], anchors[idx + 1]
        frac = (temperature_c - t0) / (t1 - t0)
        return math.exp(math.log(r0) + frac * (math.log(r1) - math.log(r0)))

    def sample_cell_retention(self, nominal_ns: float, seed: int, *cell_key: int) -> float:
        """Deterministic per-cell lognormal variation around the nominal.

        Pure function of (seed, cell_key): independent of access order and
        of how many other cells were sampled.
        """
        if self.variation_sigma == 0.0:
            return nominal_ns
        z = rng.standard_normal(seed, *cell_key)
        return nominal_ns * math.exp(self.variation_sigma * z)

    def op_energy(self, tech: Tech, mode: CellMode, op: OpKind) -> float:
        if op is OpKind.REFRESH:
            parts = _REFRESH_PARTS.get(tech)
            if parts is None:
                raise MissingEntryError(f"{tech.name} has nothing to refresh")
            return self.op_energy(tech, mode, parts[0]) + self.op_energy(
                tech, mode, parts[1]
            )
        try:
            energy = self.op_energy_fj[(tech, mode, op)]
        except KeyError:
            raise MissingEntryError(
                f"no energy entry for ({tech.name}, {mode.name}, {op.name})"
            ) from None
        if self.boost_energy_fj and op in (OpKind.DRAM_WRITE, OpKind.TRIT_WRITE):
            energy += self.boost_energy_fj
        return energy

    def hold_power(self, tech: Tech, mode: CellMode) -> float:
        try:
            return self.hold_power_uw[(tech, mode)]
        except KeyError:
            raise MissingEntryError(
                f"no hold-power entry for ({tech.name}, {mode.name})"
            ) from None

    def op_delay(
        self,
        tech: Tech,
        mode: CellMode,
        op: OpKind,
        data_pattern: Union[int, Trit, None] = None,
    ) -> float:
        if op is OpKind.REFRESH:
            parts = _REFRESH_PARTS.get(tech)
            if parts is None:
                raise MissingEntryError(f"{tech.name} has nothing to refresh")
            return self.op_delay(tech, mode, parts[0], data_pattern) + self.op_delay(
                tech, mode, parts[1], data_pattern
            )
        pattern = (
            pattern_of(data_pattern)
            if (tech, mode, op) in PATTERNED_OPS
            else None
        )
        if (tech, mode, op) in PATTERNED_OPS and pattern is None:
            raise MissingEntryError(
                f"({tech.name}, {mode.name}, {op.name}) needs a data pattern"
            )
        try:
            return self.op_delay_ns[(tech, mode, op, pattern)]
        except KeyError:
            raise MissingEntryError(
                f"no delay entry for ({tech.name}, {mode.name}, {op.name}, "
                f"{pattern})"
            ) from None


def _parse_tech(raw: str) -> Tech:
    for tech in Tech:
        if tech.value == raw:
            return tech
    raise ConfigError(f"unknown tech {raw!r}")


def _parse_mode(raw: str) -> CellMode:
    for mode in CellMode:
        if mode.value == raw:
            return mode
    raise ConfigError(f"unknown mode {raw!r}")


def _parse_op(raw: str) -> OpKind:
    for op in OpKind:
        if op.value == raw:
            return op
    raise ConfigError(f"unknown op {raw!r}")


def _positive(value, what: str) -> float:
    value = float(value)
    if not value > 0:
        raise ConfigError(f"{what} must be > 0, got {value}")
    return value


def _check_complete(params: ModelParams) -> None:
    """Refuse to start with holes the controller could step into."""
    missing = []
    for (tech, mode), ops in REACHABLE_OPS.items():
        if (tech, mode) not in params.hold_power_uw:
            missing.append(f"hold ({tech.name}, {mode.name})")
        for op in ops:
            if (tech, mode, op) not in params.op_energy_fj:
                missing.append(f"energy ({tech.name}, {mode.name}, {op.name})")
            patterns = (
                ("zero", "nonzero")
                if (tech, mode, op) in PATTERNED_OPS
                else (None,)
            )
            for pat in patterns:
                if (tech, mode, op, pat) not in params.op_delay_ns:
                    missing.append(
                        f"delay ({tech.name}, {mode.name}, {op.name}, {pat})"
                    )
    if missing:
        raise ConfigError(
            "model file incomplete; missing entries:\n  " + "\n  ".join(missing)
        )


def load_model_params(path: Union[str, Path, None] = None) -> ModelParams:
    """Load and validate a parameter file; None loads the bundled default."""
    if path is None:
        blob = (
            resources.files("amcsim").joinpath("data/default_models.toml").read_bytes()
        )
        source = "<builtin default_models.toml>"
    else:
        blob = Path(path).read_bytes()
        source = str(path)
    try:
        doc = tomllib.loads(blob.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse model file {source}: {exc}") from None
    if doc.get("format") != FORMAT_TAG:
        raise ConfigError(
            f"model file {source} missing format = '{FORMAT_TAG}' marker"
        )

    ret_sec = doc.get("retention", {})
    anchors: dict = {}
    annotations: dict = {}
    for entry in ret_sec.get("anchors", []):
        tech = _parse_tech(entry["tech"])
        under = int(entry["wl_underdrive_mv"])
        temp = float(entry["temp_c"])
        ret = _positive(entry["retention_ns"], "retention_ns")
        anchors.setdefault((tech, under), []).append((temp, ret))
        if "source" in entry:
            annotations[(tech.value, under, temp)] = str(entry["source"])
    for key, rows in anchors.items():
        rows.sort(key=lambda tr: tr[0])
        temps = [t for t, _ in rows]
        if len(set(temps)) != len(temps):
            raise ConfigError(f"duplicate anchor temperature for {key}")
        rets = [r for _, r in rows]
        if any(a < b for a, b in zip(rets, rets[1:])):
            raise ConfigError(
                f"retention must be non-increasing in temperature for {key}"
            )
        anchors[key] = tuple(rows)

    hold: dict = {}
    for entry in doc.get("energy", {}).get("hold", []):
        key = (_parse_tech(entry["tech"]), _parse_mode(entry["mode"]))
        hold[key] = _positive(entry["power_uw"], "power_uw")

    op_energy: dict = {}
    for entry in doc.get("energy", {}).get("ops", []):
        key = (
            _parse_tech(entry["tech"]),
            _parse_mode(entry["mode"]),
            _parse_op(entry["op"]),
        )
        op_energy[key] = _positive(entry["energy_fj"], "energy_fj")

    # the dual-bit cell's static plane behaves like the plain 6T cell, so
    # fill 8T static-plane energies from the 6T column when a file does
    # not list them explicitly
    for mode in (CellMode.NORMAL, CellMode.AUGMENTED):
        for op, src in (
            (OpKind.SRAM_READ, OpKind.SRAM_READ),
            (OpKind.SRAM_WRITE, OpKind.SRAM_WRITE),
            (OpKind.SRAM_READ_PULSED, OpKind.SRAM_READ),
        ):
            key = (Tech.AUG8T, mode, op)
            fallback = (Tech.STD6T, CellMode.NORMAL, src)
            if key not in op_energy and fallback in op_energy:
                op_energy[key] = op_energy[fallback]

    op_delay: dict = {}
    for entry in doc.get("delay", {}).get("ops", []):
        tech = _parse_tech(entry["tech"])
        mode = _parse_mode(entry["mode"])
        op = _parse_op(entry["op"])
        pattern = entry.get("pattern")
        if pattern is not None and pattern not in ("zero", "nonzero"):
            raise ConfigError(f"unknown delay pattern {pattern!r}")
        op_delay[(tech, mode, op, pattern)] = _positive(
            entry["delay_ns"], "delay_ns"
        )

    rng_lo, rng_hi = ret_sec.get("temperature_range_c", (-50.0, 125.0))
    params = ModelParams(
        retention_anchors=anchors,
        hold_power_uw=hold,
        op_energy_fj=op_energy,
        op_delay_ns=op_delay,
        temperature_range_c=(float(rng_lo), float(rng_hi)),
        variation_sigma=float(ret_sec.get("variation_sigma", 0.0)),
        zero_retention_factor=float(ret_sec.get("zero_retention_factor", 4.0)),
        boost_energy_fj=float(doc.get("energy", {}).get("boost_energy_fj", 0.0)),
        resample_on_refresh=bool(ret_sec.get("resample_on_refresh", False)),
        source_path=source,
        sha256=hashlib.sha256(blob).hexdigest(),
        annotations=annotations,
    )
    if params.variation_sigma < 0:
        raise ConfigError("variation_sigma must be >= 0")
    if params.zero_retention_factor < 1.0:
        raise ConfigError("zero_retention_factor must be >= 1")
    _check_complete(params)
    return params
