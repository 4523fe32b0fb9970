"""Propagation-kernel backend selection.

The compiled Cython kernel is used when its extension module imported
cleanly; otherwise (or when LATTICEJUMP_PURE=1) the numpy implementation
takes over. Both expose the same ``propagate`` contract, documented in
pure.py.
"""

from __future__ import annotations

import os

from . import pure

_impl = pure
if os.environ.get("LATTICEJUMP_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = pure


def backend_name() -> str:
    return _impl.BACKEND


def propagate(g_mat, psi, t0, t_target, threshold, dt, dt_max, rtol, atol, jump_tol, max_bisect):
    """Dispatch to the active backend. psi is modified in place."""
    return _impl.propagate(
        g_mat, psi, t0, t_target, threshold, dt, dt_max, rtol, atol, jump_tol, max_bisect
    )


def available_backends() -> tuple[str, ...]:
    names = ["pure"]
    try:
        from . import _core  # noqa: F401

        names.append("compiled")
    except ImportError:
        pass
    return tuple(names)


def get_backend(name: str):
    """Fetch a specific backend module ('pure' | 'compiled'), for benchmarks."""
    if name == "pure":
        return pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")
