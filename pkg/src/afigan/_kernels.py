"""Backend selection for the numerical kernels.

The compiled ``_core`` extension is used when it imports; otherwise the
pure-Python ``_pycore`` twin. Set ``AFIGAN_PURE_PYTHON=1`` to force the
fallback. ``use_backend`` swaps the process-wide backend (benchmarks and
cross-backend tests only; not thread-safe).
"""
import contextlib
import os

from . import _pycore

try:
    from . import _core
except ImportError:
    _core = None

_BACKENDS = {"python": _pycore}
if _core is not None:
    _BACKENDS["compiled"] = _core

if _core is not None and os.environ.get("AFIGAN_PURE_PYTHON", "") in ("", "0"):
    impl = _core
else:
    impl = _pycore


def available_backends():
    return sorted(_BACKENDS)


def backend_name():
    return impl.BACKEND


def get_backend(name):
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(
            f"backend {name!r} unavailable; have {available_backends()}"
        ) from None


@contextlib.contextmanager
def use_backend(name):
    global impl
    previous = impl
    impl = get_backend(name)
    try:
        yield impl
    finally:
        impl = previous
