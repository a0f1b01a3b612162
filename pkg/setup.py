"""Build script for the optional compiled block-matching core.

The package is fully functional without the extension: push_sentinel.flow
falls back to a pure-numpy kernel when the compiled module is absent. Any
compiler or Cython failure therefore downgrades the build instead of
aborting it.
"""

import sys

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Swallow extension build failures; the pure kernel remains usable."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure downgrades
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"WARNING: building the native kernel failed ({exc}); "
            "falling back to the pure-numpy implementation.",
            file=sys.stderr,
        )


def extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"WARNING: {exc}; skipping native kernel build.", file=sys.stderr)
        return []
    ext = Extension(
        "push_sentinel.flow._native",
        ["src/push_sentinel/flow/_native.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
