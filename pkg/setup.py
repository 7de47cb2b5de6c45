"""Build script: compiles the optional Cython step kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile only costs speed, not functionality.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/herdsim/_kernels.pyx",
        language_level=3,
        compiler_directives={"boundscheck": False, "wraparound": False},
    )
    include_dirs = [numpy.get_include()]
    for ext in ext_modules:
        ext.include_dirs = include_dirs
        ext.define_macros = [("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")]
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
