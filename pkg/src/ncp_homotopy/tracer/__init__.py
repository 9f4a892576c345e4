"""Path tracers for the vector-parameter homotopy."""

from .arclength import iter_trace_ode, tangent, trace_ode
from .predictor_corrector import iter_trace_pc, trace_pc
from .types import Event, SolveReport, Status, TraceRecord, TracerConfig

__all__ = [
    "Event",
    "SolveReport",
    "Status",
    "TraceRecord",
    "TracerConfig",
    "iter_trace_ode",
    "iter_trace_pc",
    "tangent",
    "trace_ode",
    "trace_pc",
]
