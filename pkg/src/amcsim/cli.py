"""Command-line entry point.

Subcommands: simulate, capacity, compare, gen-trace, validate-trace.
Flags override config-file values which override defaults; all randomness
flows from --seed. The model file resolves from --model-file, then the
AMCSIM_MODEL_FILE environment variable, then the bundled default.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import arrays, controller, models, workload
from .arrays import Address, Plane
from .cell import CellMode, Tech, Trit
from .controller import (
    ArraySpec,
    Command,
    CommandKind,
    FiloPolicy,
    Policies,
    RunConfig,
)
from .errors import AmcError, ConfigError, TraceError
from .models import BiasConfig, OpKind

_TECHS = {t.value: t for t in Tech}
_MODES = {m.value: m for m in CellMode}


def _add_config_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with defaults for these flags")
    p.add_argument("--model-file", help="model parameter TOML file")
    p.add_argument("--tech", choices=sorted(_TECHS), default="8t")
    p.add_argument("--mode", choices=sorted(_MODES), default="augmented")
    p.add_argument("--rows", type=int, default=64)
    p.add_argument("--cols", type=int, default=64)
    p.add_argument("--count", type=int, default=1, help="number of sub-arrays")
    p.add_argument("--temperature-c", type=float, default=85.0)
    p.add_argument("--wl-underdrive-mv", type=int, default=0)
    p.add_argument("--wl-boost-mv", type=int, default=1250)
    p.add_argument(
        "--filo", choices=[f.value for f in FiloPolicy], default="enforce"
    )
    p.add_argument("--refresh", action="store_true", help="enable refresh scheduling")
    p.add_argument("--refresh-margin", type=float, default=0.8)
    p.add_argument("--silent-decay", action="store_true")
    p.add_argument("--strict", action="store_true", help="abort on command failure")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--horizon-ns", type=float, default=None)
    p.add_argument("--workers", type=int, default=1)


def _build_config(args) -> RunConfig:
    return RunConfig(
        array=ArraySpec(
            tech=_TECHS[args.tech],
            mode=_MODES[args.mode],
            rows=args.rows,
            cols=args.cols,
            count=args.count,
        ),
        temperature_c=args.temperature_c,
        bias=BiasConfig(args.wl_underdrive_mv, args.wl_boost_mv),
        policies=Policies(
            filo=FiloPolicy(args.filo),
            refresh_enabled=args.refresh,
            refresh_margin=args.refresh_margin,
            silent_decay=args.silent_decay,
            strict=args.strict,
        ),
        seed=args.seed,
        horizon_ns=args.horizon_ns,
    )


def _load_params(args) -> models.ModelParams:
    path = args.model_file or os.environ.get("AMCSIM_MODEL_FILE") or None
    return models.load_model_params(path)


def _print_totals(report: dict, out=sys.stdout):
    tot = report["totals"]
    cap = tot["capacity"]
    print("== simulation summary ==", file=out)
    print(f"horizon_ns            {report['horizon_ns']:g}", file=out)
    print(f"dynamic_energy_fj     {tot['dynamic_energy_fj']:.6g}", file=out)
    print(f"hold_energy_fj        {tot['hold_energy_fj']:.6g}", file=out)
    print(f"refresh_energy_fj     {tot['refresh_energy_fj']:.6g}", file=out)
    print(f"total_delay_ns        {tot['total_delay_ns']:.6g}", file=out)
    print(
        "capacity              "
        f"{cap['bits']} bits, {cap['trits']} trits "
        f"({cap['bit_equivalent']:.6g} bit-equivalent)",
        file=out,
    )
    for key, val in sorted(tot["counters"].items()):
        print(f"{key:<21} {val}", file=out)
    for key, val in sorted(tot["commands"].items()):
        print(f"commands.{key:<12} {val}", file=out)


def cmd_simulate(args) -> int:
    try:
        params = _load_params(args)
        config = _build_config(args)
        text = Path(args.trace).read_text()
        commands = workload.parse_trace(text)
        report, log = controller.run_partitioned(
            commands, config, params, workers=args.workers
        )
    except (AmcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    Path(args.report).write_text(controller.report_json(report))
    Path(args.events).write_text(controller.log_lines(log))
    _print_totals(report)
    counters = report["totals"]["counters"]
    trouble = (
        counters["filo_violations"]
        + counters["retention_violations"]
        + counters["silent_decays"]
        + report["totals"]["commands"]["failed"]
    )
    return 2 if trouble else 0


class _CapacityProbe:
    """effective_capacity only needs (tech, mode, rows, cols)."""

    def __init__(self, tech, mode, rows, cols):
        self.tech, self.mode, self.rows, self.cols = tech, mode, rows, cols


def _capacity_block(tech: Tech, mode: CellMode, rows: int, cols: int, count: int):
    cap = arrays.effective_capacity(_CapacityProbe(tech, mode, rows, cols))
    return {
        "mode": mode.value,
        "bits": cap.bits * count,
        "trits": cap.trits * count,
        "bit_equivalent": cap.bit_equivalent * count,
        "conventional_6t_cells": cap.conventional_6t_cells * count,
    }


def cmd_capacity(args) -> int:
    tech = _TECHS[args.tech]
    normal = _capacity_block(tech, CellMode.NORMAL, args.rows, args.cols, args.count)
    out = {
        "tech": tech.value,
        "rows": args.rows,
        "cols": args.cols,
        "count": args.count,
        "normal": normal,
    }
    print(f"tech {tech.value}: {args.count} x {args.rows}x{args.cols} cells")
    print(
        f"  normal     {normal['bits']} bits"
    )
    if tech is not Tech.STD6T:
        aug = _capacity_block(
            tech, CellMode.AUGMENTED, args.rows, args.cols, args.count
        )
        out["augmented"] = aug
        if tech is Tech.AUG8T:
            ratio = aug["bits"] / normal["bits"]
            out["augmented_vs_normal_ratio"] = ratio
            print(f"  augmented  {aug['bits']} bits")
            print(f"  ratio      {ratio}")
        else:
            ratio = aug["bit_equivalent"] / normal["bit_equivalent"]
            out["augmented_vs_normal_ratio"] = ratio
            print(
                f"  augmented  {aug['trits']} trits "
                f"= {aug['bit_equivalent']:.6g} bit-equivalent "
                f"(a static-pair design needs {aug['conventional_6t_cells']} cells)"
            )
            print(f"  ratio      {ratio:.6g}")
    if args.json:
        Path(args.json).write_text(json.dumps(out, sort_keys=True, indent=2) + "\n")
    return 0


def _ternary_traces(n: int, rounds: int, seed: int):
    """Identical logical workload for a ternary sub-array and a 6T pair
    layout: each trit maps to two static cells holding its node levels."""
    import random

    rng = random.Random(seed)
    amc: list[Command] = []
    base: list[Command] = []
    t = 0
    for _ in range(rounds):
        values = [
            rng.choice((Trit.MINUS_ONE, Trit.ZERO, Trit.PLUS_ONE)) for _ in range(n)
        ]
        for i, v in enumerate(values):
            amc.append(Command(t, CommandKind.WRITE_TRIT, Address(0, 0, i), v))
            q, qb = v.nodes
            base.append(Command(t, CommandKind.WRITE_SRAM, Address(0, 0, 2 * i), q))
            base.append(
                Command(t, CommandKind.WRITE_SRAM, Address(0, 0, 2 * i + 1), qb)
            )
            t += 1
        for i in range(n):
            amc.append(Command(t, CommandKind.READ_TRIT, Address(0, 0, i)))
            base.append(Command(t, CommandKind.READ_SRAM, Address(0, 0, 2 * i)))
            base.append(Command(t, CommandKind.READ_SRAM, Address(0, 0, 2 * i + 1)))
            t += 1
    return amc, base, t


def _dualbit_traces(n: int, rounds: int, seed: int):
    """2n bits per round: the dual cell holds both planes of pair i; the
    baseline spends two static cells. Dynamic data is consumed, then the
    dynamic plane is retired by a mode switch before static reads."""
    import random

    rng = random.Random(seed)
    amc: list[Command] = []
    base: list[Command] = []
    t = 0
    for _ in range(rounds):
        amc.append(
            Command(t, CommandKind.SET_MODE, Address(0, 0, 0), CellMode.AUGMENTED)
        )
        t += 1
        bits = [(rng.getrandbits(1), rng.getrandbits(1)) for _ in range(n)]
        for i, (b_static, b_dyn) in enumerate(bits):
            amc.append(Command(t, CommandKind.WRITE_SRAM, Address(0, 0, i), b_static))
            base.append(
                Command(t, CommandKind.WRITE_SRAM, Address(0, 0, 2 * i), b_static)
            )
            t += 1
            amc.append(
                Command(
                    t, CommandKind.WRITE_DRAM, Address(0, 0, i, Plane.DYNAMIC), b_dyn
                )
            )
            base.append(
                Command(t, CommandKind.WRITE_SRAM, Address(0, 0, 2 * i + 1), b_dyn)
            )
            t += 1
        for i in range(n):
            amc.append(
                Command(t, CommandKind.READ_DRAM, Address(0, 0, i, Plane.DYNAMIC))
            )
            base.append(Command(t, CommandKind.READ_SRAM, Address(0, 0, 2 * i + 1)))
            t += 1
        amc.append(
            Command(t, CommandKind.SET_MODE, Address(0, 0, 0), CellMode.NORMAL)
        )
        t += 1
        for i in range(n):
            amc.append(Command(t, CommandKind.READ_SRAM, Address(0, 0, i)))
            base.append(Command(t, CommandKind.READ_SRAM, Address(0, 0, 2 * i)))
            t += 1
    return amc, base, t


def cmd_compare(args) -> int:
    try:
        params = _load_params(args)
        n, rounds = args.data, args.rounds
        if args.workload == "ternary":
            amc_tech, amc_mode = Tech.AUG7T, CellMode.AUGMENTED
            amc_cmds, base_cmds, end = _ternary_traces(n, rounds, args.seed)
            amc_write, amc_read = OpKind.TRIT_WRITE, OpKind.TRIT_READ
            phys_per_logical = 2
        else:
            amc_tech, amc_mode = Tech.AUG8T, CellMode.AUGMENTED
            amc_cmds, base_cmds, end = _dualbit_traces(n, rounds, args.seed)
            amc_write, amc_read = OpKind.DRAM_WRITE, OpKind.DRAM_READ
            phys_per_logical = 1

        def run_one(tech, mode, cols, cmds):
            cfg = RunConfig(
                array=ArraySpec(tech=tech, mode=mode, rows=1, cols=cols, count=1),
                temperature_c=args.temperature_c,
                bias=BiasConfig(args.wl_underdrive_mv, args.wl_boost_mv),
                policies=Policies(filo=FiloPolicy.ENFORCE),
                seed=args.seed,
                horizon_ns=float(end),
            )
            ctrl = controller.run(cmds, cfg, params)
            return ctrl.report()

        amc_rep = run_one(amc_tech, amc_mode, n, amc_cmds)
        base_rep = run_one(Tech.STD6T, CellMode.NORMAL, 2 * n, base_cmds)
    except (AmcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for rep, side in ((amc_rep, "amc"), (base_rep, "baseline")):
        cmds = rep["totals"]["commands"]
        if cmds["failed"] or cmds["rejected"] or cmds["expired"]:
            print(
                f"error: {side} workload did not replay cleanly: {cmds}",
                file=sys.stderr,
            )
            return 1

    mode_for_energy = CellMode.AUGMENTED
    amc_write_fj = params.op_energy(amc_tech, mode_for_energy, amc_write)
    amc_read_fj = params.op_energy(amc_tech, mode_for_energy, amc_read)
    base_write_fj = phys_per_logical * params.op_energy(
        Tech.STD6T, CellMode.NORMAL, OpKind.SRAM_WRITE
    )
    base_read_fj = phys_per_logical * params.op_energy(
        Tech.STD6T, CellMode.NORMAL, OpKind.SRAM_READ
    )

    result = {
        "workload": {
            "kind": args.workload,
            "data": n,
            "rounds": rounds,
            "seed": args.seed,
        },
        "amc": {
            "tech": amc_tech.value,
            "cells": n,
            "dynamic_energy_fj": amc_rep["totals"]["dynamic_energy_fj"],
            "total_delay_ns": amc_rep["totals"]["total_delay_ns"],
            "per_datum_write_fj": amc_write_fj,
            "per_datum_read_fj": amc_read_fj,
            "executed": amc_rep["totals"]["commands"]["executed"],
        },
        "baseline": {
            "tech": Tech.STD6T.value,
            "cells": 2 * n,
            "dynamic_energy_fj": base_rep["totals"]["dynamic_energy_fj"],
            "total_delay_ns": base_rep["totals"]["total_delay_ns"],
            "per_datum_write_fj": base_write_fj,
            "per_datum_read_fj": base_read_fj,
            "executed": base_rep["totals"]["commands"]["executed"],
        },
        "ratios": {
            "cells": 2.0,
            "write_energy_per_datum": base_write_fj / amc_write_fj,
            "read_energy_per_datum": base_read_fj / amc_read_fj,
            "dynamic_energy": (
                base_rep["totals"]["dynamic_energy_fj"]
                / amc_rep["totals"]["dynamic_energy_fj"]
            ),
            "total_delay": (
                base_rep["totals"]["total_delay_ns"]
                / amc_rep["totals"]["total_delay_ns"]
            ),
        },
    }
    print(f"== {args.workload} comparison: {n} data x {rounds} round(s) ==")
    print(f"cells           AMC {n:>8}   baseline {2 * n:>8}   ratio 2.0")
    print(
        f"write fJ/datum  AMC {amc_write_fj:>8.4g}   baseline {base_write_fj:>8.4g}"
        f"   ratio {result['ratios']['write_energy_per_datum']:.6g}"
    )
    print(
        f"read fJ/datum   AMC {amc_read_fj:>8.4g}   baseline {base_read_fj:>8.4g}"
        f"   ratio {result['ratios']['read_energy_per_datum']:.6g}"
    )
    print(
        f"dynamic fJ      AMC {result['amc']['dynamic_energy_fj']:>8.6g}   "
        f"baseline {result['baseline']['dynamic_energy_fj']:>8.6g}   "
        f"ratio {result['ratios']['dynamic_energy']:.6g}"
    )
    print(
        f"delay ns        AMC {result['amc']['total_delay_ns']:>8.6g}   "
        f"baseline {result['baseline']['total_delay_ns']:>8.6g}   "
        f"ratio {result['ratios']['total_delay']:.6g}"
    )
    if args.json:
        Path(args.json).write_text(json.dumps(result, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_gen_trace(args) -> int:
    try:
        if args.generator == "weight-stationary":
            gen = workload.gen_weight_stationary(
                workload.WeightStationaryParams(
                    n_weights=args.weights,
                    activation_stream_length=args.activations,
                    inter_arrival_ns=args.inter_arrival_ns,
                    subarray=0,
                    rows=args.rows,
                    cols=args.cols,
                    retention_hint_ns=args.retention_hint_ns,
                ),
                args.seed,
            )
        else:
            gen = workload.gen_random(
                workload.RandomTraceParams(
                    tech=_TECHS[args.tech],
                    mode=_MODES[args.mode],
                    n_commands=args.commands,
                    subarrays=args.count,
                    rows=args.rows,
                    cols=args.cols,
                    violation_rate=args.violation_rate,
                    expired_read_rate=args.expired_read_rate,
                    retention_hint_ns=args.retention_hint_ns,
                ),
                args.seed,
            )
    except AmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for warning in gen.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    Path(args.out).write_text(workload.serialize_trace(gen.commands))
    print(f"wrote {len(gen.commands)} commands to {args.out}")
    return 0


def cmd_validate_trace(args) -> int:
    try:
        params = _load_params(args)
        config = _build_config(args)
        text = Path(args.trace).read_text()
    except (AmcError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        commands = workload.parse_trace(text)
    except TraceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    spec = config.array
    for i, cmd in enumerate(commands):
        if cmd.addr is None:
            continue
        a = cmd.addr
        if a.subarray >= spec.count or a.row >= spec.rows or a.col >= spec.cols:
            print(f"error: command {i}: address {a} outside the configured array")
            return 1

    # dry-run under Enforce: rejected commands are exactly the discipline
    # violations; failures surface impossible commands
    quiet = RunConfig(
        array=spec,
        temperature_c=config.temperature_c,
        bias=config.bias,
        policies=Policies(
            filo=FiloPolicy.ENFORCE, silent_decay=config.policies.silent_decay
        ),
        seed=config.seed,
        horizon_ns=config.horizon_ns,
    )
    try:
        ctrl = controller.run(commands, quiet, params)
    except AmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    findings = 0
    for rec in ctrl.log:
        token = rec.line.split(" ", 2)[1]
        if token in ("reject", "fail", "expired"):
            idx = rec.sort_key[2] if rec.sort_key[1] == 1 else "-"
            print(f"lint: command {idx}: {rec.line}")
            findings += 1
    if findings:
        print(f"{findings} finding(s)")
        return 2
    print(f"ok: {len(commands)} commands, no findings")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="amcsim",
        description="Behavioral simulator for mode-switchable augmented SRAM arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a trace and write report files")
    _add_config_flags(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--report", default="report.json")
    p.add_argument("--events", default="events.log")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("capacity", help="per-mode storage capacity table")
    _add_config_flags(p)
    p.add_argument("--json", help="also write the table as JSON")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("compare", help="augmented array vs 6T baseline")
    _add_config_flags(p)
    p.add_argument("--workload", choices=["ternary", "dualbit"], required=True)
    p.add_argument("--data", type=int, default=256, help="data items per round")
    p.add_argument("--rounds", type=int, default=1)
    p.add_argument("--json", help="also write the comparison as JSON")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen-trace", help="write a synthetic trace file")
    _add_config_flags(p)
    p.add_argument(
        "--generator", choices=["weight-stationary", "random"], required=True
    )
    p.add_argument("--out", required=True)
    p.add_argument("--weights", type=int, default=256)
    p.add_argument("--activations", type=int, default=1024)
    p.add_argument("--inter-arrival-ns", type=int, default=100)
    p.add_argument("--commands", type=int, default=1000)
    p.add_argument("--violation-rate", type=float, default=0.0)
    p.add_argument("--expired-read-rate", type=float, default=0.0)
    p.add_argument("--retention-hint-ns", type=float, default=25000.0)
    p.set_defaults(func=cmd_gen_trace)

    p = sub.add_parser("validate-trace", help="static trace lint, no side effects")
    _add_config_flags(p)
    p.add_argument("--trace", required=True)
    p.set_defaults(func=cmd_validate_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    # --config supplies defaults; explicit flags win
    probe, _ = parser.parse_known_args(argv)
    if getattr(probe, "config", None):
        try:
            overrides = json.loads(Path(probe.config).read_text())
        except (OSError, ValueError) as exc:
            print(f"error: bad config file: {exc}", file=sys.stderr)
            return 1
        parser.set_defaults(**{k.replace("-", "_"): v for k, v in overrides.items()})
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
