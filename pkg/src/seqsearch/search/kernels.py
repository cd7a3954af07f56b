"""Kernel backend selection.

The compiled extension is used when it imports; setting
``SEQSEARCH_PURE_PYTHON=1`` forces the pure-Python twin.
"""

import contextlib
import os

from . import _kernels_py

if os.environ.get("SEQSEARCH_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
select_token = _impl.select_token
descend = _impl.descend
backup = _impl.backup

INSERT, REVISIT, NO_CHILD = _kernels_py.INSERT, _kernels_py.REVISIT, _kernels_py.NO_CHILD
VALUE_MODES = {"ratio": _kernels_py.VALUE_RATIO, "log_offset": _kernels_py.VALUE_LOG_OFFSET}


def backends():
    """All importable backends, keyed by name (used by parity tests and benchmarks)."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
    except ImportError:
        pass
    else:
        out["cython"] = _kernels
    return out


@contextlib.contextmanager
def use_backend(name: str):
    """Temporarily route the search drivers through another backend."""
    global BACKEND, select_token, descend, backup
    impl = backends()[name]
    saved = BACKEND, select_token, descend, backup
    BACKEND, select_token, descend, backup = impl.BACKEND, impl.select_token, impl.descend, impl.backup
    try:
        yield impl
    finally:
        BACKEND, select_token, descend, backup = saved
