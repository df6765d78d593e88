"""Kernel backend selected at import time.

Compiled kernels (``_ckernels``, ``_clogistic``) are used when importable;
each falls back to ``_pykernels`` independently.  Setting the environment
variable ``MTUPLIFT_PURE_PYTHON=1`` before import forces the fallback.
"""

import os

from . import _pykernels

_FORCE_PYTHON = os.environ.get("MTUPLIFT_PURE_PYTHON", "") not in ("", "0")

pava = _pykernels.pava
isotonic_interp = _pykernels.isotonic_interp
prefix_arm_stats = _pykernels.prefix_arm_stats
logistic_loss_grad = _pykernels.logistic_loss_grad
BACKENDS = {"sequential": "python", "logistic": "python"}

if not _FORCE_PYTHON:
    try:
        from ._ckernels import isotonic_interp, pava, prefix_arm_stats
    except ImportError:
        pass
    else:
        BACKENDS["sequential"] = "cython"
    try:
        from ._clogistic import logistic_loss_grad
    except ImportError:
        pass
    else:
        BACKENDS["logistic"] = "cython"

BACKEND = "cython" if "cython" in BACKENDS.values() else "python"
