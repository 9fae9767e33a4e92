from setuptools import Extension, setup
from Cython.Build import cythonize
import numpy as np

# -ffp-contract=off keeps the compiled kernels bit-identical to the pure-Python
# fallback (no FMA contraction of a*b+c).
ext = Extension(
    "pursuitsim._kernels",
    ["src/pursuitsim/_kernels.pyx"],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], language_level=3))
