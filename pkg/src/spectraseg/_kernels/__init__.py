"""Hot-kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
pure-NumPy fallback is used. Override with SPECTRASEG_KERNELS=native|python
(``native`` raises if the extension is missing rather than falling back).
"""

from __future__ import annotations

import logging
import os

logger = logging.getLogger(__name__)

_requested = os.environ.get("SPECTRASEG_KERNELS", "auto").lower()

if _requested not in ("auto", "native", "python"):
    raise ValueError(
        f"SPECTRASEG_KERNELS must be auto, native or python, got {_requested!r}"
    )

if _requested == "python":
    from . import _python as _impl
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        if _requested == "native":
            raise
        from . import _python as _impl  # type: ignore[no-redef]
        logger.info("compiled kernels unavailable, using pure-NumPy fallback")

BACKEND = _impl.BACKEND_NAME

sobel_magnitude = _impl.sobel_magnitude
knn_edges = _impl.knn_edges
bilinear_sample = _impl.bilinear_sample
crack_perimeter = _impl.crack_perimeter

__all__ = [
    "BACKEND",
    "sobel_magnitude",
    "knn_edges",
    "bilinear_sample",
    "crack_perimeter",
]
