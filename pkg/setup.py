"""Build script for the optional compiled evaluator core.

The package works without the extension: spraylab.evaluate falls back to
the NumPy tape interpreter when spraylab._evalcore is missing.  Set
SPRAYLAB_SKIP_EXT=1 to force a pure-Python install.
"""

import os

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Never fail the install because the extension would not compile."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # noqa: BLE001 - any build failure is non-fatal
            print(f"spraylab: skipping compiled core ({exc}); "
                  "falling back to the pure-Python evaluator")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:  # noqa: BLE001
            print(f"spraylab: could not build {ext.name} ({exc}); "
                  "falling back to the pure-Python evaluator")


ext_modules = []
cmdclass = {}
if os.environ.get("SPRAYLAB_SKIP_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("spraylab._evalcore", ["src/spraylab/_evalcore.pyx"])],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
        cmdclass["build_ext"] = optional_build_ext
    except ImportError:
        print("spraylab: Cython not available; installing without the compiled core")

setup(ext_modules=ext_modules, cmdclass=cmdclass)
