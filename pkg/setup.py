# Builds the optional compiled kernel core. The package is fully functional
# without it (a numpy fallback is selected at import); build in place with
#   python setup.py build_ext --inplace
from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "parallax_dxt._kernels",
                ["src/parallax_dxt/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
