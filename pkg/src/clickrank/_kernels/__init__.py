"""Scoring kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
used otherwise.  ``CLICKRANK_KERNELS=python`` forces the fallback and
``CLICKRANK_KERNELS=native`` makes a missing extension a hard error
(useful in benchmarks and CI).
"""

import os

from . import _numpy

try:
    from . import _native
except ImportError:
    _native = None  # type: ignore[assignment]


def _select():
    choice = os.environ.get("CLICKRANK_KERNELS", "auto").lower()
    if choice == "python":
        return _numpy, "python"
    if choice == "native":
        if _native is None:
            raise ImportError(
                "CLICKRANK_KERNELS=native but the compiled extension is not built"
            )
        return _native, "native"
    if _native is not None:
        return _native, "native"
    return _numpy, "python"


_impl, _backend = _select()

dot_scores = _impl.dot_scores
group_mean_scores = _impl.group_mean_scores
feedback_scores = _impl.feedback_scores


def backend_name() -> str:
    """Name of the backend selected at import time."""
    return _backend


def available_backends() -> list[str]:
    out = ["python"]
    if _native is not None:
        out.append("native")
    return out


def get_backend(name: str):
    """Return a specific backend module by name (for benchmarks/tests)."""
    if name == "python":
        return _numpy
    if name == "native":
        if _native is None:
            raise ValueError("native backend not built")
        return _native
    raise ValueError(f"unknown backend {name!r}")
