import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "mtss.simulate._kernels",
                ["src/mtss/simulate/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-python install still works; the simulate package falls back to
    # its numpy implementation when the extension is absent.
    ext_modules = []

setup(ext_modules=ext_modules)
