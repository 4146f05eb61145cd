"""Select the kernel implementation at import time.

The compiled ``_kernels`` extension is preferred. Setting the environment
variable ``PLATOON_GAME_PURE_PYTHON=1`` forces the NumPy fallback, and
:func:`use` switches at runtime (the benchmark and the tests rely on it).
"""

import os

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_IMPLS = {"python": _kernels_py}
if _compiled is not None:
    _IMPLS["compiled"] = _compiled


def available():
    return sorted(_IMPLS)


def _default():
    if os.environ.get("PLATOON_GAME_PURE_PYTHON", "") not in ("", "0"):
        return "python"
    return "compiled" if _compiled is not None else "python"


_active = _default()


def name():
    return _active


def use(which):
    """Activate backend ``which`` ('compiled' or 'python'); return the previous one."""
    global _active
    if which not in _IMPLS:
        raise ValueError(f"backend {which!r} not available (have {available()})")
    prev, _active = _active, which
    return prev


def kernels():
    return _IMPLS[_active]
