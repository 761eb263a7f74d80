"""Kernel selection: compiled extension if importable, NumPy fallback otherwise.

Set ``HAMHOPF_PURE=1`` to force the fallback.
"""

from __future__ import annotations

import os

BACKEND = "python"
if os.environ.get("HAMHOPF_PURE", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import midpoint_run, midpoint_run_jac, poly_grad, poly_hess  # noqa: F401

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on build
        pass

if BACKEND == "python":
    from ._kernels_py import midpoint_run, midpoint_run_jac, poly_grad, poly_hess  # noqa: F401

__all__ = ["BACKEND", "midpoint_run", "midpoint_run_jac", "poly_grad", "poly_hess"]
