"""Backend selection for the hot loops.

The Cython extension ``feddc._kernels`` is used when it was built;
otherwise, or when ``FEDDC_PURE_PYTHON`` is set to a non-empty value other
than ``0``, the numpy implementations in ``feddc._kernels_py`` are used.
Both expose ``radon_nullspace(points, rel_tol)`` and ``coverage_hits(perms, k)``.
"""

import importlib
import os

from . import _kernels_py


def _compiled():
    try:
        return importlib.import_module("feddc._kernels")
    except ImportError:
        return None


def available_backends():
    return ["python"] + (["cython"] if _compiled() is not None else [])


def load_backend(name):
    if name == "python":
        return _kernels_py
    if name == "cython":
        mod = _compiled()
        if mod is None:
            raise ImportError("compiled kernels are not built; run `pip install -e .`")
        return mod
    raise ValueError(f"unknown backend {name!r}")


_force_py = os.environ.get("FEDDC_PURE_PYTHON", "") not in ("", "0")
_impl = _kernels_py if _force_py or _compiled() is None else _compiled()
BACKEND = "python" if _impl is _kernels_py else "cython"

radon_nullspace = _impl.radon_nullspace
coverage_hits = _impl.coverage_hits
