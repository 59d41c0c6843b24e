import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SPARSEDA_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "sparseda._cdcore",
                    ["src/sparseda/_cdcore.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # No Cython: install pure-Python only; the backend falls back at import.
        ext_modules = []

setup(ext_modules=ext_modules)
