"""Build script for the optional compiled kernel.

The package works without the extension: obfeval.kernels falls back to the
numpy implementation when obfeval._kernels is not importable.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "obfeval._kernels",
                ["src/obfeval/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
