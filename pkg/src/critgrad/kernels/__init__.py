"""Hot stencil kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly, unless the environment
variable ``CRITGRAD_DISABLE_NUMBA`` is set to a truthy value (``1``,
``true``, ``yes``).  Both paths are numerically interchangeable; the test
suite compares them directly.
"""
import os

from . import numpy_impl


def _numba_disabled() -> bool:
    return os.environ.get("CRITGRAD_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")


def get_backend(name: str):
    """Return the kernel module called ``name`` (``"numpy"`` or ``"numba"``)."""
    if name == "numpy":
        return numpy_impl
    if name == "numba":
        from . import numba_impl
        return numba_impl
    raise ValueError(f"unknown kernel backend {name!r}")


if _numba_disabled():
    _active = numpy_impl
else:
    try:
        _active = get_backend("numba")
    except ImportError:  # pragma: no cover - numba missing
        _active = numpy_impl

BACKEND = _active.name
neg_laplacian = _active.neg_laplacian
centered_gradient = _active.centered_gradient
grad_sq = _active.grad_sq
residual_direct = _active.residual_direct
residual_colehopf = _active.residual_colehopf
p_laplacian_residual = _active.p_laplacian_residual
dyadic_block_sums = _active.dyadic_block_sums

__all__ = [
    "BACKEND", "get_backend", "neg_laplacian", "centered_gradient", "grad_sq",
    "residual_direct", "residual_colehopf", "p_laplacian_residual", "dyadic_block_sums",
]
