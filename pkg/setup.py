"""Build script: compiles the optional fast kernels.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so a failing compiler is downgraded to a warning
rather than aborting the install.
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
                "rankdp._kernels._fast",
                sources=["src/rankdp/_kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    sys.stderr.write(f"warning: skipping compiled kernels ({exc})\n")

setup(ext_modules=ext_modules)
