import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "jcpulse._core",
                ["src/jcpulse/_core.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # pure-python fallback in jcpulse.kernels takes over at import time
    ext_modules = []

setup(ext_modules=ext_modules)
