# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled numeric kernels: dB conversions, path loss, Monte Carlo sums.

Same contract as ``dcaim._accel_py``; selected by ``dcaim.kernels`` when the
extension was built.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport log10, pow

cnp.import_array()


def dbm_to_mw(dbm):
    """Decibel-milliwatts to linear milliwatts."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(
        np.asarray(dbm, dtype=np.float64).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(x)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = pow(10.0, x[i] / 10.0)
    return out.reshape(np.asarray(dbm, dtype=np.float64).shape)


def mw_to_dbm(mw):
    """Linear milliwatts to decibel-milliwatts."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(
        np.asarray(mw, dtype=np.float64).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(x)
    cdef Py_ssize_t i, n = x.shape[0]
    for i in range(n):
        out[i] = 10.0 * log10(x[i])
    return out.reshape(np.asarray(mw, dtype=np.float64).shape)


def path_loss_db(distance_m, double pl_ref_db, double path_loss_exponent,
                 double ref_distance_m, shadow_db):
    """Log-distance path loss with an additive shadowing term, in dB."""
    arr = np.asarray(distance_m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] d = np.ascontiguousarray(arr.ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] x = np.ascontiguousarray(
        np.broadcast_to(np.asarray(shadow_db, dtype=np.float64), arr.shape).ravel())
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty_like(d)
    cdef double k = 10.0 * path_loss_exponent
    cdef Py_ssize_t i, n = d.shape[0]
    for i in range(n):
        out[i] = pl_ref_db + k * log10(d[i] / ref_distance_m) + x[i]
    return out.reshape(arr.shape)


def outage_sums(powers_mw, double thr_mw):
    """Per-trial raw and residual interference sums; see the numpy twin."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(
        powers_mw, dtype=np.float64)
    cdef Py_ssize_t t, j, trials = p.shape[0], width = p.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] raw = np.empty(trials)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] residual = np.empty(trials)
    cdef double s, r, v, ratio
    for t in range(trials):
        s = 0.0
        r = 0.0
        for j in range(width):
            v = p[t, j]
            s += v
            ratio = v / thr_mw
            if ratio < 1.0:
                r += v * (1.0 - ratio)
        raw[t] = s
        residual[t] = r
    return raw, residual


def reuse_counts(powers_mw, double thr_mw, u):
    """Per-trial reuse counts for both pinning schemes; see the numpy twin."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] p = np.ascontiguousarray(
        powers_mw, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] uu = np.ascontiguousarray(
        u, dtype=np.float64)
    cdef Py_ssize_t t, j, trials = p.shape[0], width = p.shape[1]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] orig = np.zeros(trials, dtype=np.int64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] prob = np.zeros(trials, dtype=np.int64)
    cdef long co, cp
    cdef double v
    for t in range(trials):
        co = 0
        cp = 0
        for j in range(width):
            v = p[t, j]
            if v <= thr_mw:
                co += 1
                if uu[t, j] >= v / thr_mw:
                    cp += 1
        orig[t] = co
        prob[t] = cp
    return orig, prob
