"""Kernel backend selection.

The compiled Cython extension (``pursuitsim._kernels``) is preferred; the
pure-Python fallback (``pursuitsim._kernels_py``) is bit-identical and used
when the extension is unavailable or when ``PURSUITSIM_BACKEND=python`` is
set. ``bench`` compares the two.
"""

import os

from . import _kernels_py

_FORCED = os.environ.get("PURSUITSIM_BACKEND", "").strip().lower()

if _FORCED == "python":
    _impl = _kernels_py
elif _FORCED in ("compiled", "c", "cython"):
    from . import _kernels as _impl  # noqa: F401  (raises if not built)
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND


def get_backend(name=None):
    """Return a kernel module by name ('compiled' or 'python'), default active."""
    if name is None:
        return _impl
    name = name.strip().lower()
    if name == "python":
        return _kernels_py
    if name in ("compiled", "c", "cython"):
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _kernels  # noqa: F401
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


_NAMES = ("integrate_quad", "pid_mixer", "velocity_lag", "evader_force",
          "evader_step", "evader_tick", "segment_blocked", "line_of_sight",
          "world_geometry", "fill_observations", "pursuer_tick")


def use_backend(name):
    """Rebind the module-level kernel functions to the named backend."""
    global _impl, BACKEND
    _impl = get_backend(name)
    BACKEND = _impl.BACKEND
    for fname in _NAMES:
        globals()[fname] = getattr(_impl, fname)
    return BACKEND


for _fname in _NAMES:
    globals()[_fname] = getattr(_impl, _fname)
