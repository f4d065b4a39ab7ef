"""Per-element hot kernels with two interchangeable lanes.

``_ckernels`` is a compiled (Cython) extension; ``_pykernels`` is the
pure-NumPy twin.  The compiled lane is used when it imported cleanly,
unless overridden:

    WGSTOKES_KERNELS=numpy   force the NumPy lane
    WGSTOKES_KERNELS=cython  require the compiled lane (error if absent)
    WGSTOKES_KERNELS=auto    default: compiled if available

Both lanes implement `weak_maps`, `local_forms`, `condense` with
identical signatures and agree to machine precision (tested);
``benchmarks/bench_kernels.py`` compares their speed.
"""

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_requested = os.environ.get("WGSTOKES_KERNELS", "auto").lower()
if _requested not in {"auto", "cython", "numpy"}:
    raise ValueError(
        f"WGSTOKES_KERNELS={_requested!r}: expected auto, cython or numpy"
    )
if _requested == "cython" and _ckernels is None:
    raise ImportError(
        "WGSTOKES_KERNELS=cython but the compiled extension is not built"
    )

_active = _pykernels if (_requested == "numpy" or _ckernels is None) else _ckernels


def lane():
    """Name of the active implementation: "cython" or "numpy"."""
    return "numpy" if _active is _pykernels else "cython"


def get_lane(name):
    """Fetch a specific lane module by name (for twin tests/benchmarks)."""
    if name == "numpy":
        return _pykernels
    if name == "cython":
        if _ckernels is None:
            raise ImportError("compiled kernel lane is not built")
        return _ckernels
    raise ValueError(f"unknown lane {name!r}")


weak_maps = _active.weak_maps
local_forms = _active.local_forms
condense = _active.condense
