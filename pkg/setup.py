"""Build script: compiles the optional speedup extension when Cython is available.

The package is fully functional without the extension; revsel._engine falls
back to the pure-Python implementation at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "revsel._engine._speedups",
                ["src/revsel/_engine/_speedups.pyx"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
