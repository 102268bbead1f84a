import os
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the compiled solver core if possible, fall back to pure Python."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"compiled solver kernels unavailable, using pure-Python fallback: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"could not compile {ext.name}, using pure-Python fallback: {exc}")


def solver_extensions():
    pyx = "src/rqumf/solvers/_kernels.pyx"
    c = "src/rqumf/solvers/_kernels.c"
    try:
        from Cython.Build import cythonize

        ext = Extension("rqumf.solvers._kernels", [pyx], extra_compile_args=["-O3"])
        return cythonize([ext], compiler_directives={"language_level": "3"})
    except ImportError:
        if os.path.exists(c):  # pre-generated translation shipped with the sdist
            return [Extension("rqumf.solvers._kernels", [c], extra_compile_args=["-O3"])]
        return []


setup(ext_modules=solver_extensions(), cmdclass={"build_ext": optional_build_ext})
