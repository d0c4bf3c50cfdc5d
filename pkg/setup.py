"""Build hook for the optional compiled kernels.

The package works without the extension (a pure-Python fallback is selected
at import time), so a missing compiler or Cython only costs speed.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("NEWSEVENTS_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "newsevents._kernels._speedups",
                    ["src/newsevents/_kernels/_speedups.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
