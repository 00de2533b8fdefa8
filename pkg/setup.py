"""Build script for the optional compiled state-evolution kernel.

The package installs and works without the extension (a NumPy fallback is
selected at import time); building it just makes objective evaluations a few
times faster.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "modqaoa._kernels",
                ["src/modqaoa/_kernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
