"""Build script: compiles the Cython training kernel when a toolchain is
available, otherwise installs the pure-Python package (the mlp subpackage
falls back to its numpy backend at import time)."""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "beamalign.mlp._kernel",
                ["src/beamalign/mlp/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError as exc:  # pragma: no cover - build-environment dependent
    print(f"beamalign: Cython/numpy unavailable ({exc}); "
          "building without the compiled kernel", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
