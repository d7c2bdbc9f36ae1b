"""Build script for the optional compiled retrieval kernels.

The extension is doubly optional: without Cython no extension is declared at
all, and with Cython but no working toolchain the build failure is swallowed
(optional=True). Either way the install succeeds and scene_recall falls back
to the pure-numpy kernels at import time.
"""

from setuptools import setup

try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "scene_recall._kernels",
                ["src/scene_recall/_kernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
