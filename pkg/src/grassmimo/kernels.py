"""Backend selection for the batched Monte Carlo kernels.

The compiled ``_kernels`` extension is used when it imports; otherwise the
numpy fallback in ``_kernels_py`` takes over.  Setting the environment
variable ``GRASSMIMO_PURE_PYTHON=1`` forces the fallback.
"""
import os

from . import _kernels_py

__all__ = ["BACKEND", "gram_schmidt", "pair_distances_sq", "get_backend"]

_compiled = None
if os.environ.get("GRASSMIMO_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

if _compiled is not None:
    BACKEND = "cython"
    gram_schmidt = _compiled.gram_schmidt
    pair_distances_sq = _compiled.pair_distances_sq
else:
    BACKEND = "python"
    gram_schmidt = _kernels_py.gram_schmidt
    pair_distances_sq = _kernels_py.pair_distances_sq


def get_backend(name=None):
    """Return the module implementing ``name`` ('cython' or 'python').

    ``None`` gives whichever backend is active.
    """
    if name is None:
        name = BACKEND
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
