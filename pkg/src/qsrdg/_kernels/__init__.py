"""Kernel backend selection.

Prefers the compiled Cython kernels when they are importable; otherwise
falls back to the pure-Python twin.  Setting the environment variable
``QSRDG_PURE_PYTHON`` to a non-empty value forces the fallback, which is
how the backend benchmark gets a like-for-like comparison.
"""

import os

if os.environ.get("QSRDG_PURE_PYTHON"):
    from qsrdg._kernels import _pure as _impl

    BACKEND = "pure"
else:
    try:
        from qsrdg._kernels import _core as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        from qsrdg._kernels import _pure as _impl  # type: ignore[no-redef]

        BACKEND = "pure"

Dual = _impl.Dual
value = _impl.value
seed_duals = _impl.seed_duals
isfinite_scalar = _impl.isfinite_scalar
dot = _impl.dot
norm_sq = _impl.norm_sq
matvec = _impl.matvec
tmatvec = _impl.tmatvec
lu_solve = _impl.lu_solve
solve_generic = _impl.solve_generic

__all__ = [
    "BACKEND",
    "Dual",
    "value",
    "seed_duals",
    "isfinite_scalar",
    "dot",
    "norm_sq",
    "matvec",
    "tmatvec",
    "lu_solve",
    "solve_generic",
]
