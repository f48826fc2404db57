"""Closed-loop planar mechanism synthesis.

Simulate planar linkages, score their end-effector traces against analytic
target curves (ICP-aligned Chamfer distance), and drive a designer/critic
agent loop toward matching mechanisms — plus the benchmark generator and
full-factorial ablation harness around it.
"""
from ._kernels import BACKEND as kernel_backend
from .geometry import (
    DegenerateGeometryError,
    IcpResult,
    RigidTransform2,
    Trajectory,
    apply_transform,
    chamfer_distance,
    icp_align,
)
from .curves import CurveSpec, TaskInstance, generate_dataset, sample_points
from .dsl import extract_block, format_canonical, parse
from .linkage import MechanismSpec, SimResult, complexity, simulate, validate
from .memory import MemoryEntry, MemoryRepo
from .orchestrator import LoopConfig, RunRecord, run_task
from .surrogate import SurrogateExpr, eval_surrogate, expr_to_text, fit_surrogate

__version__ = "0.1.0"

__all__ = [
    "CurveSpec",
    "DegenerateGeometryError",
    "IcpResult",
    "LoopConfig",
    "MechanismSpec",
    "MemoryEntry",
    "MemoryRepo",
    "RigidTransform2",
    "RunRecord",
    "SimResult",
    "SurrogateExpr",
    "TaskInstance",
    "Trajectory",
    "apply_transform",
    "chamfer_distance",
    "complexity",
    "eval_surrogate",
    "expr_to_text",
    "extract_block",
    "fit_surrogate",
    "format_canonical",
    "generate_dataset",
    "icp_align",
    "kernel_backend",
    "parse",
    "run_task",
    "sample_points",
    "simulate",
    "validate",
]
