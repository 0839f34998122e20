"""Backend selection for the per-pixel kernels.

The compiled extension is used when it was built; otherwise (or when
``CONICPOSE_PURE_PYTHON`` is set to a non-empty value other than ``0``)
the numpy implementation is used.  ``BACKEND`` names the active one.
"""

import os

_force_python = os.environ.get("CONICPOSE_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_python:
        raise ImportError("pure-python backend requested")
    from ._kernels import ellipse_mismatch, label8, star_fill_pass

    BACKEND = "cython"
except ImportError:
    from ._pykernels import ellipse_mismatch, label8, star_fill_pass

    BACKEND = "python"

__all__ = ["BACKEND", "ellipse_mismatch", "label8", "star_fill_pass"]
