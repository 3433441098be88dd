"""amcsim: trace-driven behavioral simulator for augmented SRAM arrays."""

from .arrays import Address, Plane, SubArray, effective_capacity, new_subarray
from .cell import CellMode, CellState, EventKind, Tech, Trit
from .controller import (
    ArraySpec,
    Command,
    CommandKind,
    Controller,
    FiloPolicy,
    Outcome,
    Policies,
    RunConfig,
    merge_reports,
    run,
    run_partitioned,
)
from .models import BiasConfig, ModelParams, OpKind, load_model_params
from .workload import (
    GeneratedTrace,
    RandomTraceParams,
    WeightStationaryParams,
    gen_random,
    gen_weight_stationary,
    parse_trace,
    serialize_trace,
)

__version__ = "0.1.0"

__all__ = [
    "Address",
    "ArraySpec",
    "BiasConfig",
    "CellMode",
    "CellState",
    "Command",
    "CommandKind",
    "Controller",
    "EventKind",
    "FiloPolicy",
    "GeneratedTrace",
    "ModelParams",
    "OpKind",
    "Outcome",
    "Plane",
    "Policies",
    "RandomTraceParams",
    "RunConfig",
    "SubArray",
    "Tech",
    "Trit",
    "WeightStationaryParams",
    "effective_capacity",
    "gen_random",
    "gen_weight_stationary",
    "load_model_params",
    "merge_reports",
    "new_subarray",
    "parse_trace",
    "run",
    "run_partitioned",
    "serialize_trace",
]
