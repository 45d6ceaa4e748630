"""Build script for the compiled stepping kernel.

The package works without the extension (a pure-numpy fallback is selected
at import time), but the compiled kernel is what makes full-length noisy
trajectories affordable.
"""

from setuptools import Extension, setup
from Cython.Build import cythonize

extensions = [
    Extension(
        "ionqrm._kernel",
        ["src/ionqrm/_kernel.pyx"],
        # -fcx-limited-range: skip inf/NaN-safe complex multiply (data is
        # well scaled); -ffp-contract=off: no FMA contraction, keeps results
        # stable across rebuilds with the same toolchain.
        extra_compile_args=["-O3", "-march=native", "-funroll-loops",
                            "-ffp-contract=off", "-fcx-limited-range"],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
