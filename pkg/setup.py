import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HYBRIDNET_PURE") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "hybridnet._kernels._speedups",
                    ["src/hybridnet/_kernels/_speedups.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        # no Cython toolchain, the package still works on the pure backend
        ext_modules = []

setup(ext_modules=ext_modules)
