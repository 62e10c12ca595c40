"""Build script: compiles the optional Cython kernels.

The package is fully functional without the extension (a pure-Python/numpy
fallback is selected at import time), so a failed compile only costs speed.
Set SISCERT_REQUIRE_EXT=1 to turn a compile failure into a hard error, or
SISCERT_SKIP_EXT=1 to skip the extension build entirely.
"""

import os
import sys

from setuptools import setup


def extensions():
    if os.environ.get("SISCERT_SKIP_EXT"):
        return []
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError as exc:
        if os.environ.get("SISCERT_REQUIRE_EXT"):
            raise
        print(f"siscert: skipping compiled kernels ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "siscert._kernels._core",
        sources=["src/siscert/_kernels/_core.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions())
