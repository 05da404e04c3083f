"""Build the optional Cython kernel extension.

The package works without it (a numpy fallback is selected at import time);
building in place: python setup.py build_ext --inplace
"""

import os

import numpy as np
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None and os.path.exists("src/occlab/_kernels/_corekern.pyx"):
    extensions = cythonize(
        [
            Extension(
                "occlab._kernels._corekern",
                ["src/occlab/_kernels/_corekern.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "language_level": "3",
        },
    )

setup(ext_modules=extensions)
