import os

import numpy as np
from setuptools import Extension, setup

# The pure-Python kernels are always importable; skip the extension if
# Cython is missing or MESHSERIAL_NO_EXT is set.
ext_modules = []
if not os.environ.get("MESHSERIAL_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext = Extension(
            "meshserial._kernels",
            ["src/meshserial/_kernels.pyx"],
            include_dirs=[np.get_include()],
            # fused multiply-add would change rounding between platforms
            extra_compile_args=["-O2", "-ffp-contract=off"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "embedsignature": True,
            },
        )

setup(ext_modules=ext_modules)
