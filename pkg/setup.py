"""Build script: compiles the simplex pivot kernel when Cython is available.

The package works without the extension (a pure-Python kernel is selected
at import time), so a failed or skipped extension build is not fatal.
"""
from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        "src/flexmarket/_simplex.pyx",
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
    for ext in ext_modules:
        # keep float semantics identical to the pure kernel: no FMA contraction
        ext.extra_compile_args = ["-O2", "-ffp-contract=off"]
except ImportError:
    pass

setup(ext_modules=ext_modules)
