"""Build the optional Cython kernels.

The package works without them; ``magloop.kernels`` falls back to numpy when
the extension is missing. Set MAGLOOP_NO_EXT=1 to skip compilation.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("MAGLOOP_NO_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "magloop._ckernels",
                    ["src/magloop/_ckernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
