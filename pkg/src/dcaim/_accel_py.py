"""Pure-numpy implementations of the hot numeric kernels.

Mirrors the compiled ``dcaim._accel`` extension; ``dcaim.kernels`` picks
whichever is available at import time. All functions accept float64 arrays
and are vectorized.
"""
from __future__ import annotations

import numpy as np


def dbm_to_mw(dbm):
    """Decibel-milliwatts to linear milliwatts."""
    return np.power(10.0, np.asarray(dbm, dtype=np.float64) / 10.0)


def mw_to_dbm(mw):
    """Linear milliwatts to decibel-milliwatts."""
    return 10.0 * np.log10(np.asarray(mw, dtype=np.float64))


def path_loss_db(distance_m, pl_ref_db, path_loss_exponent, ref_distance_m, shadow_db):
    """Log-distance path loss with an additive shadowing term, in dB."""
    d = np.asarray(distance_m, dtype=np.float64)
    x = np.asarray(shadow_db, dtype=np.float64)
    return pl_ref_db + 10.0 * path_loss_exponent * np.log10(d / ref_distance_m) + x


def outage_sums(powers_mw, thr_mw):
    """Per-trial interference sums for the outage estimators.

    ``powers_mw`` is a (trials, sensors) matrix of received powers. Returns
    ``(raw, residual)`` where ``raw[t]`` is the plain sum of row ``t`` and
    ``residual[t]`` is the sum after each term is scaled by one minus its
    clamped ratio to ``thr_mw`` (the expected leftover interference when a
    sensor is pinned to an orthogonal channel with probability equal to
    that ratio).
    """
    p = np.ascontiguousarray(powers_mw, dtype=np.float64)
    raw = np.sum(p, axis=1)
    ratio = np.minimum(p / thr_mw, 1.0)
    residual = np.sum(p * (1.0 - ratio), axis=1)
    return raw, residual


def reuse_counts(powers_mw, thr_mw, u):
    """Per-trial counts of sensors left free to reuse shared slots.

    Original scheme: a sensor reuses iff its power is at or below ``thr_mw``.
    Probabilistic scheme: a sensor is pinned with probability
    ``min(1, power/thr)`` using the uniform draws ``u``; the rest reuse.
    Returns ``(original_counts, probabilistic_counts)`` as int64 arrays.
    """
    p = np.ascontiguousarray(powers_mw, dtype=np.float64)
    uu = np.ascontiguousarray(u, dtype=np.float64)
    below = p <= thr_mw
    orig = np.sum(below, axis=1).astype(np.int64)
    survive = below & (uu >= p / thr_mw)
    prob = np.sum(survive, axis=1).astype(np.int64)
    return orig, prob
