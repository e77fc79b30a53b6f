"""Analytical LLM inference simulator (C++ core)."""

from ._core import *  # noqa: F401,F403
from ._core import (
    ConfigError,
    Error,
    InfeasibleError,
    Precision,
    estimate,
    run_sweep,
)


def quick_estimate(model, gpu, workload, plan, nano_batch, weight_precision="fp8",
                   kv_precision="fp8", node_size=8, calibration=None):
    """Estimate a scenario from preset names and a plan string."""
    from . import _core

    dep = _core.ModelDeployment(model, _core.parse_precision(weight_precision),
                                _core.parse_precision(kv_precision))
    node = _core.NodeSpec(_core.make_gpu_preset(gpu), node_size)
    return estimate(_core.ParallelPlan.parse(plan), dep, _core.make_workload_preset(workload),
                    nano_batch, node, calibration)
