from setuptools import setup, Extension

import numpy as np
from Cython.Build import cythonize

ext = Extension(
    "stageopt._core._speedups",
    ["src/stageopt/_core/_speedups.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
