"""Build script: compiles the optional fast kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a missing compiler or Cython must not break installation.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "morphauth._kernels._fastcore",
                ["src/morphauth/_kernels/_fastcore.pyx"],
                # -ffp-contract=off: the numpy fallback must stay bit-identical,
                # so FMA contraction of a*b+c is disallowed.
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
