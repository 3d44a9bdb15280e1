"""Build the optional compiled kernels; the package works without them."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("GAUGEP_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools import Extension
        import numpy as np

        ext_modules = cythonize(
            [Extension("gaugep._ckernels", ["src/gaugep/_ckernels.pyx"],
                       include_dirs=[np.get_include()],
                       extra_compile_args=["-O3", "-fcx-limited-range"])],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
