import sys

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    import numpy as np

    ext_modules = cythonize(
        ["src/strandrec/_ssa_core.pyx"],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
    include_dirs = [np.get_include()]
except Exception as exc:  # no compiler / no Cython: pure-python kernel only
    print(f"strandrec: building without the compiled kernel ({exc})", file=sys.stderr)
    include_dirs = []

setup(
    ext_modules=ext_modules,
    include_dirs=include_dirs,
)
