"""Backend selection for the stack-evaluation kernel.

The compiled extension is used when it was built; otherwise the pure-Python
kernel is used.  Setting ``HOOKCOST_PURE_PYTHON=1`` forces the fallback.
"""

import os

from hookcost import _stackcore_py

BACKENDS = {"python": _stackcore_py.evaluate_encoded}

try:
    from hookcost import _stackcore
except ImportError:  # extension not built
    _stackcore = None
else:
    BACKENDS["cython"] = _stackcore.evaluate_encoded

if _stackcore is not None and not os.environ.get("HOOKCOST_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"

evaluate_encoded = BACKENDS[BACKEND]
