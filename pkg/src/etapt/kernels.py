"""Backend selection for the propagation kernels.

The compiled extension is used when it imports cleanly. Setting the
environment variable ``ETAPT_BACKEND=python`` forces the numpy fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("ETAPT_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "compiled"


def get_backend(name=None):
    """Return the kernel module for ``name`` ("compiled", "python" or None)."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "compiled":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def rk4_dense(coeffs, mats, psi0, dt):
    return _impl.rk4_dense(coeffs, mats, psi0, dt)


def wei_norman_rk4(h0, hp, hm, dt):
    return _impl.wei_norman_rk4(h0, hp, hm, dt)


def su11_lift(coords, psi0, n_out=None):
    return _impl.su11_lift(coords, psi0, n_out)
