import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "jacnet._speedups",
                ["src/jacnet/_speedups.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O2"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

# The extension is optional: without it the package falls back to the
# pure-NumPy kernels in jacnet._kernels_py.
setup(ext_modules=ext_modules)
