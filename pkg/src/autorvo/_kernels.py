"""Kernel backend selection.

The collision kernels exist twice: a numba-JIT scalar-loop version (fast
path) and a vectorized pure-numpy version (fallback, and the baseline arm
of `autorvo bench --compare-backends`). The active backend is chosen by the
AUTORVO_BACKEND environment variable ("numba" or "numpy", default numba
when importable) and can be switched at runtime with `select_backend`.
"""

import os
import warnings

_BACKENDS = ("numba", "numpy")
_active = None

hull_signed_dist = None
pair_signed_dist = None
point_shape_dist = None
batch_plan_eval = None


def select_backend(name):
    """Bind the kernel functions to the named backend. Returns the name."""
    global _active, hull_signed_dist, pair_signed_dist, point_shape_dist, batch_plan_eval
    if name not in _BACKENDS:
        raise ValueError(f"unknown kernel backend {name!r}, expected one of {_BACKENDS}")
    if name == "numba":
        from . import _kernels_jit as impl
    else:
        from . import _kernels_np as impl
    hull_signed_dist = impl.hull_signed_dist
    pair_signed_dist = impl.pair_signed_dist
    point_shape_dist = impl.point_shape_dist
    batch_plan_eval = impl.batch_plan_eval
    _active = name
    return name


def active_backend():
    return _active


def _default_backend():
    env = os.environ.get("AUTORVO_BACKEND", "").strip().lower()
    if env in _BACKENDS:
        return env
    if env:
        warnings.warn(f"AUTORVO_BACKEND={env!r} not recognized, using default")
    try:
        import numba  # noqa: F401
        return "numba"
    except ImportError:
        warnings.warn("numba unavailable, falling back to numpy kernels")
        return "numpy"


select_backend(_default_backend())
