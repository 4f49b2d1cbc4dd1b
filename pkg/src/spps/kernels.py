"""Backend selection for the hot fitting kernels.

Two interchangeable implementations exist: a JIT-compiled one
(:mod:`spps._kernels_numba`) and a vectorised pure-numpy fallback
(:mod:`spps._kernels_numpy`). The active backend is chosen once at import via
the ``SPPS_BACKEND`` environment variable:

    SPPS_BACKEND=auto    use numba when importable, else numpy (default)
    SPPS_BACKEND=numba   require the JIT backend
    SPPS_BACKEND=numpy   force the pure-numpy fallback

Tests may switch at runtime with :func:`set_backend`.
"""

from __future__ import annotations

import importlib
import os

from .errors import InputError

BACKEND_ENV = "SPPS_BACKEND"

_BACKENDS = {}
_active_name = None


def get_backend(name: str):
    """Import (once) and return the kernel module for ``name``."""
    if name not in ("numba", "numpy"):
        raise InputError(f"unknown kernel backend {name!r}; expected 'numba' or 'numpy'")
    if name not in _BACKENDS:
        _BACKENDS[name] = importlib.import_module(f"spps._kernels_{name}")
    return _BACKENDS[name]


def set_backend(name: str) -> None:
    """Switch the backend used by the fitting code from here on."""
    global _active_name
    get_backend(name)
    _active_name = name


def backend_name() -> str:
    return _active_name


def active():
    """The kernel module currently in use."""
    return _BACKENDS[_active_name]


def _initial_choice() -> str:
    choice = os.environ.get(BACKEND_ENV, "auto").strip().lower()
    if choice in ("numba", "numpy"):
        return choice
    if choice not in ("", "auto"):
        raise InputError(
            f"invalid {BACKEND_ENV}={choice!r}; expected 'auto', 'numba' or 'numpy'"
        )
    try:
        import numba  # noqa: F401
    except ImportError:
        return "numpy"
    return "numba"


set_backend(_initial_choice())
