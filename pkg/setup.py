"""Build script: compiles the optional fast kernel when Cython is available.

The package works without the extension (a numpy fallback is selected at
import time), so a failed or skipped build is not an error.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    # -ffp-contract=off keeps the compiled kernel bit-identical to the
    # numpy fallback (no FMA contraction of dx*dx + dy*dy).
    ext_modules = cythonize(
        [
            Extension(
                "mechsynth._kernels._nnsq",
                ["src/mechsynth/_kernels/_nnsq.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
