import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "hho2d.kernels._ccore",
                ["src/hho2d/kernels/_ccore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # Pure-Python install still works; the numpy kernel is selected at import.
    extensions = []

setup(ext_modules=extensions)
