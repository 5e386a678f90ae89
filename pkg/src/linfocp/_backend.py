"""Kernel backend selection.

The compiled extension is used when importable; set ``LINFOCP_PURE_PYTHON=1``
to force the pure-Python fallback.
"""
import importlib
import os

from .errors import InputError

_MODULES = {"compiled": "._kernels", "python": "._pykernels"}


def load_backend(name):
    """Import one backend by name (``"compiled"`` or ``"python"``)."""
    if name not in _MODULES:
        raise InputError(f"unknown kernel backend {name!r}", module="backend")
    return importlib.import_module(_MODULES[name], __package__)


def available_backends():
    names = []
    for name in _MODULES:
        try:
            load_backend(name)
        except ImportError:
            continue
        names.append(name)
    return names


def _select():
    if os.environ.get("LINFOCP_PURE_PYTHON", "") not in ("", "0"):
        return load_backend("python")
    try:
        return load_backend("compiled")
    except ImportError:
        return load_backend("python")


kernels = _select()
BACKEND = kernels.NAME
