"""Build hook for the optional compiled kernel module.

Package metadata lives in pyproject.toml. When Cython is unavailable the
package installs without the extension and falls back to the numpy kernels.
"""
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "selfsim._ckernels",
                ["src/selfsim/_ckernels.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
