import os

from setuptools import Extension, setup

# The compiled scanner is an optional fast path: narrowcast.kernels falls back
# to the pure-Python implementation when the extension is missing, so a failed
# build must not fail the install.
ext_modules = []
if os.environ.get("NARROWCAST_NO_EXTENSION") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "narrowcast._native",
                    ["src/narrowcast/_native.pyx"],
                    optional=True,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
