"""Backend selection for the guidance kernel.

The compiled extension is used when it imports; set
``PILOTWAVE_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _guidance_py

BACKEND = "python"
_impl = _guidance_py

if os.environ.get("PILOTWAVE_PURE_PYTHON") != "1":
    try:
        from . import _guidance as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass

BACKENDS = {"python": _guidance_py}
if BACKEND == "cython":
    BACKENDS["cython"] = _impl


def get(name=None):
    """Kernel module by name; ``None`` selects the active backend."""
    if name is None:
        return _impl
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def velocity(field, X, t, backend=None):
    return get(backend).velocity(field, X, t)


def transport(field, x0, t_start, dt, n_steps, record_every, max_halvings=20, backend=None):
    return get(backend).transport(field, x0, t_start, dt, n_steps, record_every, max_halvings)
