"""Kernel backend selection.

The compiled extension is used when it imports; ``QEXTRAP_PURE_PYTHON=1``
forces the numpy fallback. Dimensions above ``COMPILED_MAX_DIM`` always
use the numpy kernels.
"""

import os

from . import _pykernels as python_kernels

compiled_kernels = None
if not os.environ.get("QEXTRAP_PURE_PYTHON"):
    try:
        from . import _ckernels as compiled_kernels
    except ImportError:
        compiled_kernels = None

_impl = compiled_kernels if compiled_kernels is not None else python_kernels
BACKEND = "cython" if compiled_kernels is not None else "python"

# above this dimension the batched BLAS path in numpy beats the compiled loops
COMPILED_MAX_DIM = 8


def _pick(dim: int):
    return _impl if dim <= COMPILED_MAX_DIM else python_kernels


def pinch_distribution_batch(unitaries, rho):
    return _pick(unitaries.shape[-1]).pinch_distribution_batch(unitaries, rho)


def pinch_td_batch(unitaries, delta):
    return _pick(unitaries.shape[-1]).pinch_td_batch(unitaries, delta)


half_l1_rows = _impl.half_l1_rows
