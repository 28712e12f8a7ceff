"""Backend selection for the Gibbs sampling kernels.

Prefers the compiled extension; falls back to the pure-Python implementation
when the extension is missing or when GEOTOPICS_PURE_PYTHON is set. Both
backends are seed-for-seed identical (see tests/test_kernels.py), so the
choice only affects speed.
"""

from __future__ import annotations

import os

if os.environ.get("GEOTOPICS_PURE_PYTHON"):
    from . import _gibbs_py as _impl

    BACKEND = "python"
else:
    try:
        from . import _gibbs as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _gibbs_py as _impl

        BACKEND = "python"

train_gibbs = _impl.train_gibbs
infer_gibbs = _impl.infer_gibbs
