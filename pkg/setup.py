"""Build script for the optional compiled kernels.

The package is pure Python; ``qsrdg._kernels._core`` is a Cython twin of
``qsrdg._kernels._pure`` that speeds up the dual-number arithmetic inside
the implicit solvers.  If Cython or a C compiler is unavailable the build
silently skips the extension and the import-time fallback takes over.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build extensions, downgrading any failure to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        import warnings

        warnings.warn(
            f"compiled kernels skipped ({exc}); falling back to pure Python"
        )


def extensions():
    import os

    pyx = "src/qsrdg/_kernels/_core.pyx"
    if not os.path.exists(pyx):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize([pyx], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
