"""Build script for the optional compiled kernel extension.

The package works without the extension: adsgnn.nn.kernels falls back to
the pure-numpy implementations when the compiled module is missing.
"""

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "adsgnn.nn.kernels._ckernels",
                ["src/adsgnn/nn/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    extensions = []

setup(ext_modules=extensions)
