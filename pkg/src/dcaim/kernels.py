"""Numeric kernel dispatch: compiled extension when built, numpy otherwise.

Set ``DCAIM_KERNELS=numpy`` or ``DCAIM_KERNELS=compiled`` to force a backend
(the latter fails loudly if the extension is missing). The active choice is
exposed as :data:`BACKEND`.
"""
from __future__ import annotations

import os

from dcaim import _accel_py

_forced = os.environ.get("DCAIM_KERNELS", "").strip().lower()

if _forced == "numpy":
    _impl = _accel_py
    BACKEND = "numpy"
elif _forced == "compiled":
    from dcaim import _accel as _impl  # type: ignore[no-redef]

    BACKEND = "compiled"
else:
    try:
        from dcaim import _accel as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        _impl = _accel_py
        BACKEND = "numpy"

dbm_to_mw = _impl.dbm_to_mw
mw_to_dbm = _impl.mw_to_dbm
path_loss_db = _impl.path_loss_db
outage_sums = _impl.outage_sums
reuse_counts = _impl.reuse_counts


def available_backends() -> dict[str, object]:
    """All importable kernel modules, keyed by backend name."""
    backends: dict[str, object] = {"numpy": _accel_py}
    try:
        from dcaim import _accel

        backends["compiled"] = _accel
    except ImportError:
        pass
    return backends
