import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

extensions = []
if cythonize is not None:
    ext = Extension(
        "copsym._kernels",
        ["src/copsym/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    # the package falls back to the numpy kernels when the build is unavailable
    ext.optional = True
    extensions = cythonize([ext], compiler_directives={"language_level": 3})

setup(ext_modules=extensions)
