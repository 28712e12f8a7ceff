"""Builds the compiled Gibbs-sampling kernel.

The extension is optional: if Cython (or a C compiler) is unavailable the
package installs anyway and geotopics.kernels falls back to the pure-Python
implementation at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("geotopics._gibbs", ["src/geotopics/_gibbs.pyx"])],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
