"""Backend selection for the novelty kernel.

The compiled extension is used when it imports; otherwise the pure-Python
implementation. ``use_backend`` switches explicitly (tests and the
benchmark run both).
"""

from . import _pycore

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

BACKENDS = {"python": _pycore}
if _core is not None:
    BACKENDS["compiled"] = _core

_active = "compiled" if _core is not None else "python"


def available() -> list[str]:
    return sorted(BACKENDS)


def active() -> str:
    return _active


def use_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"backend {name!r} not available; have {available()}")
    _active = name


def detect_first_occurrences(offsets, libs, eligible, want_pairs=True):
    return BACKENDS[_active].detect_first_occurrences(offsets, libs, eligible, want_pairs)
