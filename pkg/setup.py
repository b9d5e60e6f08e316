import os
import sys

from setuptools import setup

ext_modules = []
if os.environ.get("OTOCLAB_NO_EXT", "") in ("", "0"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        omp = [] if sys.platform == "darwin" else ["-fopenmp"]
        ext_modules = cythonize(
            [
                Extension(
                    "otoclab._kernels",
                    ["src/otoclab/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3", "-ffp-contract=off"] + omp,
                    extra_link_args=omp,
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        print("Cython or numpy missing: building without compiled kernels")

setup(ext_modules=ext_modules)
