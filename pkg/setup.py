"""Build script: compiles the optional Chebyshev kernel if a toolchain exists.

The package is fully functional without the extension (a NumPy fallback is
selected at import time), so any build failure here is non-fatal.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "riskcap.numerics._chebkernel",
                ["src/riskcap/numerics/_chebkernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover
    print(f"chebkernel extension skipped ({exc}); using NumPy fallback")

setup(ext_modules=ext_modules)
