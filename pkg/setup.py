import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "mmisq._kernels",
        ["src/mmisq/_kernels.pyx"],
        include_dirs=[np.get_include()],
        # no FMA contraction: the Python fallback must match bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
