"""Build script for the optional compiled LSTM kernels.

The package is fully functional without the extension: slukit.kernels falls
back to the numpy implementation when the compiled module is missing. Set
SLUKIT_NO_EXT=1 to skip the extension build entirely.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; never fail the install over it."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"slukit: skipping compiled kernels ({exc})")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"slukit: skipping {ext.name} ({exc})")


def extensions():
    if os.environ.get("SLUKIT_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "slukit.kernels._lstm_c",
        ["src/slukit/kernels/_lstm_c.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], compiler_directives={"language_level": "3"})


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
