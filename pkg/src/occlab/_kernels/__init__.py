"""Hot-kernel backend selection: compiled extension with numpy fallback.

The Cython extension ``_corekern`` implements the per-path simulation loops
and the Sinkhorn stage update; ``_pure`` is a vectorized numpy fallback with
identical signatures and statistics.  The compiled backend is preferred when
importable; override with OCCLAB_BACKEND=pure|compiled or ``set_backend``.

Draw order differs between backends (per-path sequential vs. batched), so
runs are bit-reproducible within a backend but not across backends.
"""

from __future__ import annotations

import os

from occlab._kernels import _pure

try:
    from occlab._kernels import _corekern
except ImportError:
    _corekern = None

_FORCED = None


def available_backends():
    names = ["pure"]
    if _corekern is not None:
        names.append("compiled")
    return names


def set_backend(name: str | None):
    """Force a backend by name ('pure' / 'compiled'); None restores default."""
    global _FORCED
    if name is not None and name not in available_backends():
        raise ValueError(f"backend {name!r} not available (have {available_backends()})")
    _FORCED = name


def backend_name() -> str:
    if _FORCED is not None:
        return _FORCED
    env = os.environ.get("OCCLAB_BACKEND")
    if env in ("pure", "compiled"):
        if env == "compiled" and _corekern is None:
            raise RuntimeError("OCCLAB_BACKEND=compiled but extension not built")
        return env
    return "compiled" if _corekern is not None else "pure"


def backend():
    return _corekern if backend_name() == "compiled" else _pure
