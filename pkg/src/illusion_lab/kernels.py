"""Assembly-kernel backend selection.

The compiled Cython extension is preferred when importable; the numpy
fallback is used otherwise. ``ILLUSION_LAB_BACKEND=python|compiled``
forces a choice (benchmarks and tests use this).
"""

import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None


def _select():
    requested = os.environ.get("ILLUSION_LAB_BACKEND", "").strip().lower()
    if requested == "python":
        return _kernels_py
    if requested == "compiled":
        if _compiled is None:
            raise ImportError(
                "ILLUSION_LAB_BACKEND=compiled but the illusion_lab._kernels "
                "extension is not built (pip install -e . --no-build-isolation)"
            )
        return _compiled
    if requested:
        raise ValueError(f"unknown ILLUSION_LAB_BACKEND {requested!r}")
    return _compiled if _compiled is not None else _kernels_py


_active = _select()


def backend_name():
    return "compiled" if _active is _compiled else "python"


def available_backends():
    names = ["python"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return names


def get_backend(name):
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled kernel backend is not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def stiffness_triplets(nodes, triangles, sigma, *, backend=None):
    """Dispatch to the active (or named) backend, normalizing dtypes."""
    mod = _active if backend is None else get_backend(backend)
    nodes = np.ascontiguousarray(nodes, dtype=np.float64)
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    sigma = np.ascontiguousarray(sigma, dtype=np.float64)
    return mod.stiffness_triplets(nodes, triangles, sigma)
