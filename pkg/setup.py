"""Build the optional compiled kernels.

The package works without them: ``platoon_game._backend`` falls back to the
pure-Python implementation when the extension is missing. Set
``PLATOON_GAME_NO_EXT=1`` to skip the compile step entirely.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("PLATOON_GAME_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "platoon_game._kernels",
                    ["src/platoon_game/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
