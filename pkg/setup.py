"""Build the optional compiled basin kernel.

The package works without it: ``octoroot.basin`` falls back to numpy when
the extension cannot be imported.
"""

import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("OCTOROOT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython or numpy missing; building without the compiled kernel", file=sys.stderr)
    else:
        openmp = [] if sys.platform == "darwin" else ["-fopenmp"]
        ext_modules = cythonize(
            [
                Extension(
                    "octoroot.basin._kernel",
                    ["src/octoroot/basin/_kernel.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # no fast-math and no contraction: results must match the scalar path
                    extra_compile_args=["-O3", "-ffp-contract=off"] + openmp,
                    extra_link_args=openmp,
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
