"""Build script: compiles the native kernel extension on platforms that support it.

The package works without the extension (pure-Python fallback, emulated
backend only); the extension is required for the real rewiring backend and
for the timed benchmark kernels.
"""

import sys

from setuptools import Extension, setup

ext_modules = []
if sys.platform.startswith("linux"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "vmshortcut._native",
                sources=["src/vmshortcut/_native.pyx"],
                define_macros=[("_GNU_SOURCE", "1")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
