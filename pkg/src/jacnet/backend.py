"""Kernel backend selection.

The hot loops (learning steps, forward passes) have two interchangeable
implementations: a Cython extension (jacnet._speedups) and a pure-NumPy
fallback (jacnet._kernels_py).  The compiled one is used when importable;
set JACNET_BACKEND=python or =compiled to force a choice.
"""

import os

from . import _kernels_py

try:
    from . import _speedups
except ImportError:
    _speedups = None


def get_backend(name=None):
    """Return the kernel module for `name` (or the environment's choice)."""
    if name is None:
        name = os.environ.get("JACNET_BACKEND", "auto")
    if name in ("auto", ""):
        return _speedups if _speedups is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _speedups is None:
            raise RuntimeError(
                "compiled backend requested but jacnet._speedups is not built; "
                "reinstall with the C extension or unset JACNET_BACKEND")
        return _speedups
    raise ValueError(f"unknown backend {name!r} (expected auto, python or compiled)")


def backend_name():
    return get_backend().BACKEND_NAME


def available_backends():
    names = ["python"]
    if _speedups is not None:
        names.append("compiled")
    return names
