"""Build script for the compiled kernel extension.

The package works without the extension (a pure-NumPy fallback is selected
at import time); set SPECTRASEG_PURE_PYTHON=1 to skip compilation entirely.
"""

import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("SPECTRASEG_PURE_PYTHON"):
        return []
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "spectraseg._kernels._native",
        ["src/spectraseg/_kernels/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        # No fused multiply-add: float bits must match the NumPy fallback.
        extra_compile_args=["-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
