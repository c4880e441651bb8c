import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "toa_sim.kernels._core",
                ["src/toa_sim/kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython at build time: install pure-Python only, the kernels
    # package falls back to the numpy implementation at import.
    ext_modules = []

setup(ext_modules=ext_modules)
