"""Backend dispatch for the hot iterative kernels.

MULTITIK_NO_NUMBA=1 forces the pure-numpy implementations; otherwise the
numba build is used when importable, numpy as fallback. The choice is made
once at import. Both backends satisfy the same contracts (see
numpy_impl's module docstring); compiled functions are cached on disk so
the JIT cost is paid once per machine.
"""

import os

if os.environ.get("MULTITIK_NO_NUMBA", "") == "1":
    from . import numpy_impl as _impl

    _backend = "numpy"
else:
    try:
        from . import numba_impl as _impl

        _backend = "numba"
    except ImportError:
        from . import numpy_impl as _impl

        _backend = "numpy"

fista_enet = _impl.fista_enet
admm_h1tv = _impl.admm_h1tv


def backend_name():
    """Which implementation is live: 'numba' or 'numpy'."""
    return _backend
