import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MMDER_NO_EXTENSION") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
    except ImportError:
        # pure-Python fallback is selected at import time
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "mmder._kernels._fast",
                    ["src/mmder/_kernels/_fast.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    libraries=["m"],
                )
            ],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )

setup(ext_modules=ext_modules)
