"""Backend selection for the hot sampling kernels.

The compiled extension is preferred; the numpy fallback is used when it is
missing or when the environment variable ``SERVICEBOND_PURE`` is set to a
non-empty value other than ``0``.
"""
import os

import numpy as np

from . import _pykernels

_force_pure = os.environ.get("SERVICEBOND_PURE", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def segment_index(starts, ts, impl=None):
    impl = impl or _impl
    return impl.segment_index(_f64(starts), _f64(ts))


def under_counts(starts, values, ts, ref, sign, impl=None):
    """Count one-sided shortfalls of a piecewise-constant signal at ``ts``.

    ``starts`` are the sorted segment starts, ``values`` the (n, k) segment
    values, ``ts`` sorted in-horizon timestamps. A sample counts for metric c
    when ``sign[c] * (ref[c] - value) > 0``.
    """
    impl = impl or _impl
    return impl.under_counts(_f64(starts), _f64(values), _f64(ts), _f64(ref), _f64(sign))


def step_counts(delivered, ref, sign, impl=None):
    impl = impl or _impl
    return impl.step_counts(_f64(delivered), _f64(ref), _f64(sign))


def backends():
    """Map of available backend name -> implementation module."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
