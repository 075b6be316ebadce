"""Build script.

The compiled kernel extension is optional: when Cython or a C compiler is
unavailable the package installs anyway and falls back to the numpy/pure
Python implementations in ``kgfuse._kernels_py``.
"""

from setuptools import setup

try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        "src/kgfuse/_kernels.pyx",
        compiler_directives={"language_level": "3"},
    )
    include_dirs = [np.get_include()]
except ImportError:
    ext_modules = []
    include_dirs = []

setup(ext_modules=ext_modules, include_dirs=include_dirs)
