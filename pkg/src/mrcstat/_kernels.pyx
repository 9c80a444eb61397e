# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: the scaled auxiliary recursion and the plane-wave sum.

Each routine mirrors a function in ``_fallback.py`` and must return the same
values up to floating-point rounding.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport pow, isfinite
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef extern from "math.h" nogil:
    void sincos(double x, double *s, double *c)

# rescaling step 2**600, exact in binary
cdef double BIG = 4.149515568880993e180
cdef double INV_BIG = 2.409919865102884e-181
cdef double LOG_BIG = 415.88830833596717


cdef int _vtilde(const double[::1] lam, const double[::1] nc, double s, int m,
                 double *vt) noexcept nogil:
    """Fill vt[0..m] (vt[0] = 0); returns the first non-finite order or 0."""
    cdef Py_ssize_t i, t
    cdef Py_ssize_t n = lam.shape[0]
    cdef double denom, r, a, power
    for t in range(m + 1):
        vt[t] = 0.0
    for i in range(n):
        denom = 1.0 - lam[i] * s
        r = -s * lam[i] / denom
        a = nc[i] / denom
        power = 1.0
        for t in range(1, m + 1):
            power = power * r
            if power == 0.0:
                break
            vt[t] += power * (1.0 + t * a)
    for t in range(1, m + 1):
        if not isfinite(vt[t]):
            return <int> t
    return 0


cdef int _useries(const double *vt, int m, double *u, double *log_scale) noexcept nogil:
    """u[k] = (1/k) sum_j vt[k-j] u[j] with power-of-two rescaling."""
    cdef Py_ssize_t k, j
    cdef double acc
    u[0] = 1.0
    log_scale[0] = 0.0
    for k in range(1, m + 1):
        acc = 0.0
        for j in range(k):
            acc += vt[k - j] * u[j]
        acc = acc / k
        if not isfinite(acc):
            return <int> k
        u[k] = acc
        if acc > BIG:
            for j in range(k + 1):
                u[j] = u[j] * INV_BIG
            log_scale[0] += LOG_BIG
    return 0


def aux_series(const double[::1] lam, const double[::1] nc, double s, int m):
    """Full scaled series at one point.

    Returns ``(u, vt, log_scale, bad)`` where ``Utilde_k = u[k] * exp(log_scale)``
    and ``bad`` is the first non-finite order (0 if none).
    """
    u = np.zeros(m + 1)
    vt = np.zeros(m + 1)
    cdef double[::1] uv = u
    cdef double[::1] vv = vt
    cdef double ls = 0.0
    cdef int bad
    with nogil:
        bad = _vtilde(lam, nc, s, m, &vv[0])
        if bad == 0:
            bad = _useries(&vv[0], m, &uv[0], &ls)
    return u, vt, ls, bad


cdef void _tail_point(const double[::1] lam, const double[::1] nc, double s, int m,
                      double *log_scale, double *head, double *last, int *bad) noexcept nogil:
    cdef double *vt = <double *> malloc((m + 1) * sizeof(double))
    cdef double *u = <double *> malloc((m + 1) * sizeof(double))
    cdef Py_ssize_t k
    cdef double acc = 0.0
    bad[0] = _vtilde(lam, nc, s, m, vt)
    if bad[0] == 0:
        bad[0] = _useries(vt, m, u, log_scale)
    if bad[0] == 0:
        for k in range(m):
            acc += u[k]
        head[0] = acc
        last[0] = u[m]
    free(vt)
    free(u)


def aux_tail_batch(const double[::1] lam, const double[::1] nc, const double[::1] s,
                   int m, int threads=1):
    """For each ``s[p]``: ``log_scale``, ``sum_{k<m} u_k``, ``u_m`` and the bad-order flag."""
    cdef Py_ssize_t P = s.shape[0]
    log_scale = np.zeros(P)
    head = np.zeros(P)
    last = np.zeros(P)
    bad = np.zeros(P, dtype=np.int32)
    cdef double[::1] lsv = log_scale
    cdef double[::1] hv = head
    cdef double[::1] lv = last
    cdef int[::1] bv = bad
    cdef Py_ssize_t p
    for p in prange(P, nogil=True, num_threads=threads, schedule="dynamic"):
        _tail_point(lam, nc, s[p], m, &lsv[p], &hv[p], &lv[p], &bv[p])
    return log_scale, head, last, bad


cdef void _trial(
    Py_ssize_t b,
    const double[:, :, ::1] cs, const double[:, :, ::1] sn,
    const double[:, :, ::1] anc_re, const double[:, :, ::1] anc_im,
    const double[:, :, ::1] st_re, const double[:, :, ::1] st_im,
    const double complex[:, :, ::1] amp,
    const long[::1] g_start, const long[::1] g_count, const long[::1] g_entries,
    const int[::1] g_prog, const int[::1] g_uniform,
    const double[::1] e_px, const double[::1] e_py, const double[::1] e_scale,
    const int[::1] e_kind, const double[::1] e_amp, const double[::1] e_half_zeta,
    const double[::1] e_cos_bore, const double[::1] e_sin_bore,
    const double complex[::1] e_mean,
    double complex[:, ::1] h, double[::1] gains,
) noexcept nogil:
    cdef Py_ssize_t G = cs.shape[1]
    cdef Py_ssize_t Z = cs.shape[2]
    cdef Py_ssize_t D = e_px.shape[0]
    cdef double *acc_re = <double *> malloc(D * sizeof(double))
    cdef double *acc_im = <double *> malloc(D * sizeof(double))
    cdef Py_ssize_t g, z, q, i, first
    cdef double c_t, s_t, ph_re, ph_im, sr, si, tmp, ar, ai, w, total = 0.0
    for i in range(D):
        acc_re[i] = 0.0
        acc_im[i] = 0.0
    for g in range(G):
        first = g_start[g]
        for z in range(Z):
            c_t = cs[b, g, z]
            s_t = sn[b, g, z]
            ar = amp[b, g, z].real
            ai = amp[b, g, z].imag
            ph_re = anc_re[b, g, z]
            ph_im = anc_im[b, g, z]
            sr = st_re[b, g, z]
            si = st_im[b, g, z]
            if g_uniform[g]:
                w = _weight(g_entries[first], c_t, s_t, e_kind, e_amp, e_half_zeta, e_cos_bore, e_sin_bore)
            for q in range(g_count[g]):
                i = g_entries[first + q]
                if g_prog[g]:
                    if q > 0:
                        tmp = ph_re * sr - ph_im * si
                        ph_im = ph_re * si + ph_im * sr
                        ph_re = tmp
                else:
                    sincos(e_px[i] * c_t + e_py[i] * s_t, &ph_im, &ph_re)
                if not g_uniform[g]:
                    w = _weight(i, c_t, s_t, e_kind, e_amp, e_half_zeta, e_cos_bore, e_sin_bore)
                acc_re[i] += w * (ar * ph_re - ai * ph_im)
                acc_im[i] += w * (ar * ph_im + ai * ph_re)
    for i in range(D):
        ar = e_mean[i].real + e_scale[i] * acc_re[i]
        ai = e_mean[i].imag + e_scale[i] * acc_im[i]
        h[b, i].real = ar
        h[b, i].imag = ai
        total += ar * ar + ai * ai
    gains[b] = total
    free(acc_re)
    free(acc_im)


cdef inline double _weight(Py_ssize_t i, double c_t, double s_t, const int[::1] e_kind,
                           const double[::1] e_amp, const double[::1] e_half_zeta,
                           const double[::1] e_cos_bore, const double[::1] e_sin_bore) noexcept nogil:
    """Amplitude pattern sqrt(G) of entry i toward azimuth (cos, sin) = (c_t, s_t)."""
    cdef double c
    if e_kind[i] == 0:
        return e_amp[i]
    c = c_t * e_cos_bore[i] + s_t * e_sin_bore[i]
    if c > 0:
        return e_amp[i] * pow(c, e_half_zeta[i])
    return 0.0


def plane_wave_block(
    const double[:, :, ::1] cs,
    const double[:, :, ::1] sn,
    const double[:, :, ::1] anc_re,
    const double[:, :, ::1] anc_im,
    const double[:, :, ::1] st_re,
    const double[:, :, ::1] st_im,
    const double complex[:, :, ::1] amp,
    const long[::1] g_start,
    const long[::1] g_count,
    const long[::1] g_entries,
    const int[::1] g_prog,
    const int[::1] g_uniform,
    const double[::1] e_px,
    const double[::1] e_py,
    const double[::1] e_scale,
    const int[::1] e_kind,
    const double[::1] e_amp,
    const double[::1] e_half_zeta,
    const double[::1] e_cos_bore,
    const double[::1] e_sin_bore,
    const double complex[::1] e_mean,
    int threads=1,
):
    """Channel vectors (B, D) and gains ``h^H h`` (B,) for a block of trials.

    ``cs``/``sn`` hold cos/sin of the wave azimuths per (trial, group, wave);
    ``anc_*`` the phasor at the first entry of each group and ``st_*`` the
    phasor step between entries of arithmetic-progression groups.  See
    ``montecarlo._WavePlan`` for the entry tables.
    """
    cdef Py_ssize_t B = cs.shape[0]
    cdef Py_ssize_t D = e_px.shape[0]
    cdef Py_ssize_t G = cs.shape[1]
    if g_start.shape[0] != G or g_count.shape[0] != G or g_prog.shape[0] != G or g_uniform.shape[0] != G:
        raise ValueError("group tables do not match the wave arrays")
    if amp.shape[1] != G or amp.shape[2] != cs.shape[2]:
        raise ValueError("amplitude array does not match the wave arrays")
    cdef Py_ssize_t q
    for q in range(G):
        if g_start[q] < 0 or g_count[q] < 0 or g_start[q] + g_count[q] > g_entries.shape[0]:
            raise ValueError("group entry range out of bounds")
    for q in range(g_entries.shape[0]):
        if g_entries[q] < 0 or g_entries[q] >= D:
            raise ValueError("entry index out of bounds")
    h = np.zeros((B, D), dtype=np.complex128)
    gains = np.zeros(B)
    cdef double complex[:, ::1] hv = h
    cdef double[::1] gv = gains
    cdef Py_ssize_t b
    for b in prange(B, nogil=True, num_threads=threads, schedule="static"):
        _trial(b, cs, sn, anc_re, anc_im, st_re, st_im, amp, g_start, g_count, g_entries,
               g_prog, g_uniform, e_px, e_py, e_scale, e_kind, e_amp, e_half_zeta,
               e_cos_bore, e_sin_bore, e_mean, hv, gv)
    return h, gains
