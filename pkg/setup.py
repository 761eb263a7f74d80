import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

setup(
    ext_modules=cythonize(
        [Extension("hamhopf._kernels", ["src/hamhopf/_kernels.pyx"], include_dirs=[np.get_include()])],
        language_level=3,
    )
)
