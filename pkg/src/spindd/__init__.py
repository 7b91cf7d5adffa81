"""Finite-difference simulator for coupled spin drift-diffusion, Maxwell and LLG dynamics.

Set ``SPINDD_NUM_THREADS`` before the first import to cap the BLAS/OpenMP
thread pools used by numpy and scipy.
"""

import os as _os

_threads = _os.environ.get("SPINDD_NUM_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"
