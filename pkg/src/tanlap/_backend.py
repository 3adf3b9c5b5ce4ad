"""Kernel backend selection.

The compiled Cython kernels are used when importable; otherwise the
pure-Python twins in ``_pykernels`` take over. Both expose ``svd`` and
``batch_projections`` with identical semantics.
"""

import importlib

from . import _pykernels

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_active = _compiled if _compiled is not None else _pykernels


def available():
    """Names of the backends that can be selected in this interpreter."""
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "cython")
    return names


def current():
    return _active.NAME


def use(name):
    """Switch the process-wide kernel backend (``"cython"`` or ``"python"``)."""
    global _active
    if name == "python":
        _active = _pykernels
    elif name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        _active = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _active.NAME


def get():
    return _active


def module(name):
    """Return a backend module by name without switching."""
    if name == "python":
        return _pykernels
    if _compiled is None:
        raise ImportError("compiled kernels are not built")
    return importlib.import_module("tanlap._kernels")
