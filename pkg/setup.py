import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; fklab falls back to the numpy kernel
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fklab._smckernel",
                ["src/fklab/_smckernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
