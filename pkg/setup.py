"""Build script: compiles the optional sum-tree extension.

The compiled extension is a performance kernel only.  If Cython or a C
compiler is unavailable the build falls through and the package installs
with the pure-python fallback (intentctl._kernels.sumtree_py), which has
the identical interface.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that downgrades compilation failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # pragma: no cover - depends on toolchain
            warnings.warn(f"compiled kernels skipped ({exc}); using pure-python fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # pragma: no cover - depends on toolchain
            warnings.warn(f"building {ext.name} failed ({exc}); using pure-python fallback")


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:  # pragma: no cover - build environment without cython
        return []
    ext = Extension(
        "intentctl._kernels._sumtree",
        sources=["src/intentctl/_kernels/_sumtree.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
