import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    # The package still works without the extension: fsmn.kernels falls
    # back to the numpy implementation at import time.
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fsmn._speedups",
                ["src/fsmn/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
