"""Jit shim: use numba when available, plain Python otherwise.

The numerical kernels are written as straight loops over float64 arrays, so
they run unchanged (just slower) if numba is missing or disabled via
NUMBA_DISABLE_JIT.
"""

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(fn):
            return fn

        return wrap
