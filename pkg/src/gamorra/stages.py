"""Canonical pipeline stage identifiers and orderings.

The regressor order fixes the meaning of every weight and explanatory
vector: slot 0 is the intercept, slots 1..9 follow REGRESSOR_STAGES, and
an optional final slot carries compute dispatch work when enabled.  The
hull-shader slot absorbs both the hull program and the patch-constant
function, which have separate performance functions but share one
regressor and one opcode cost table.
"""

from __future__ import annotations

# Regressor slots 1..9, in pipeline order.  "hs" covers hull + patch-constant.
REGRESSOR_STAGES = ("ia", "vs", "hs", "tess", "ds", "gs", "ras", "ps", "om")

CS_STAGE = "cs"

# Stages that carry their own performance function.
PERF_STAGES = ("ia", "vs", "hs", "pcf", "tess", "ds", "gs", "ras", "ps", "om")

# Stages running user shaders, hence carrying opcode cost tables.
# The patch-constant function is costed with the hull-shader table.
COST_TABLE_STAGES = ("vs", "hs", "ds", "gs", "ps")

FIXED_FUNCTION_STAGES = ("ia", "tess", "ras", "om")


def regressor_stages(include_cs: bool) -> tuple[str, ...]:
    return REGRESSOR_STAGES + (CS_STAGE,) if include_cs else REGRESSOR_STAGES


def model_dim(include_cs: bool) -> int:
    """Length of weight/explanatory vectors: intercept plus stage slots."""
    return 1 + len(REGRESSOR_STAGES) + (1 if include_cs else 0)
