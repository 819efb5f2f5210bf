"""Build script for the optional compiled Monte Carlo kernel.

The package is fully functional without the extension: ``starnoma.mc``
falls back to a numpy implementation of the same kernel at import time.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "starnoma.mc._kernels",
                ["src/starnoma/mc/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: no FMA contraction, so the compiled
                # kernel rounds exactly like the numpy fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
