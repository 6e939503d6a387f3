"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set JCPULSE_PURE_PY=1 to force the fallback (used by the agreement tests and
the benchmark).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("JCPULSE_PURE_PY"):
    _impl = _kernels_py
else:
    try:
        from . import _core as _impl
    except ImportError:
        _impl = _kernels_py

IS_COMPILED = _impl.IS_COMPILED
sideband_block_pulses = _impl.sideband_block_pulses
block_chain = _impl.block_chain
vsa_objective_grad = _impl.vsa_objective_grad
bus_objective_grad = _impl.bus_objective_grad

__all__ = [
    "IS_COMPILED",
    "sideband_block_pulses",
    "block_chain",
    "vsa_objective_grad",
    "bus_objective_grad",
]
