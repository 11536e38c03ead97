"""Selects the SMC step kernel at import time.

The compiled extension is used when importable; set ``FKLAB_BACKEND=python``
to force the numpy implementation.
"""
import os

from . import _smcpy

BACKENDS = {"python": _smcpy}

try:
    from . import _smckernel
except ImportError:  # extension not built
    _smckernel = None
else:
    BACKENDS["compiled"] = _smckernel

_requested = os.environ.get("FKLAB_BACKEND", "").strip().lower()
if _requested == "python" or _smckernel is None:
    DEFAULT = "python"
else:
    DEFAULT = "compiled"


def get(name=None):
    """Kernel module for ``name`` (``"compiled"``, ``"python"`` or default)."""
    name = DEFAULT if name is None else name
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(BACKENDS)}") from None
