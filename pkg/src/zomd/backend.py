"""Backend selection for the hot kernels.

Two implementations of every kernel exist: a numba-jitted scalar loop and a
vectorized pure-numpy fallback. The environment variable ZOMD_BACKEND picks
one: "numba", "numpy", or "auto" (default; numba when importable).
"""

import os

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


def active_backend() -> str:
    """Resolve the backend name at call time so tests can flip the env var."""
    choice = os.environ.get("ZOMD_BACKEND", "auto").strip().lower()
    if choice == "numpy":
        return "numpy"
    if choice == "numba":
        if not HAS_NUMBA:
            raise RuntimeError("ZOMD_BACKEND=numba but numba is not importable")
        return "numba"
    if choice in ("auto", ""):
        return "numba" if HAS_NUMBA else "numpy"
    raise ValueError(f"unknown ZOMD_BACKEND value: {choice!r}")
