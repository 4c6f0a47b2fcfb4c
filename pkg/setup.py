"""Build script: compiles the hot-loop kernels as a C extension when possible.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed extension build degrades to a slower install
instead of breaking it.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "textmcl._kernels._core",
                ["src/textmcl/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    sys.stderr.write(f"textmcl: skipping compiled kernels ({exc}); "
                     "falling back to pure NumPy backend\n")

setup(ext_modules=ext_modules)
