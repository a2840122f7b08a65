"""Kernel backend selection.

The compiled extension is used when it imports; otherwise, or when
``PROGDERIV_PURE_PYTHON=1`` is set, the pure-Python module is used. Both
produce bit-identical results.
"""

import os

from . import _kernels_py as python_backend

compiled_backend = None
if os.environ.get("PROGDERIV_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = active.BACKEND

compressed_size = active.compressed_size
ncd_pair = active.ncd_pair
ncd_one_to_many = active.ncd_one_to_many
