"""Build script for the optional Cython kernels.

The extension is optional: when Cython or a C compiler is unavailable the
package installs without it and ``mtuplift._kernels`` falls back to the
pure-Python implementations.
"""
from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]
    ext_modules = cythonize(
        [
            # strict IEEE arithmetic: must match the pure-Python kernels bit for bit
            Extension(
                "mtuplift._ckernels",
                ["src/mtuplift/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=macros,
                extra_compile_args=["-O3", "-fno-fast-math", "-ffp-contract=off"],
                optional=True,
            ),
            # vectorized exp/log1p via glibc libmvec; -ffast-math at compile time only
            Extension(
                "mtuplift._clogistic",
                ["src/mtuplift/_clogistic.pyx"],
                include_dirs=[np.get_include()],
                define_macros=macros,
                extra_compile_args=["-O3", "-ffast-math", "-fopenmp-simd"],
                extra_link_args=["-lmvec", "-lm"],
                optional=True,
            ),
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
