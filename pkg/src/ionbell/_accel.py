"""Backend selection for the jitted numeric kernels.

By default the hot kernels are compiled with numba. Setting the environment
variable ``IONBELL_DISABLE_NUMBA`` to 1/true/yes/on (checked once, at import
time) forces the pure-numpy fallback path; the same happens automatically if
numba is not importable.
"""

import os


def _disabled_by_env() -> bool:
    return os.environ.get("IONBELL_DISABLE_NUMBA", "").strip().lower() in {
        "1",
        "true",
        "yes",
        "on",
    }


HAVE_NUMBA = False
njit = None

if not _disabled_by_env():
    try:
        from numba import njit as _numba_njit
    except ImportError:
        pass
    else:
        njit = _numba_njit
        HAVE_NUMBA = True

BACKEND = "numba" if HAVE_NUMBA else "numpy"
