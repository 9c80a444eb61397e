"""Pure numpy versions of the routines in ``_kernels.pyx`` (same signatures)."""

from __future__ import annotations

import numpy as np

BIG = 2.0**600
INV_BIG = 2.0**-600
LOG_BIG = 600 * np.log(2.0)


def _vtilde(lam, nc, s, m):
    """vt[p, t] for t = 0..m (column 0 is zero)."""
    s = np.atleast_1d(np.asarray(s, dtype=float))[:, None]
    denom = 1.0 - lam[None, :] * s
    r = -s * lam[None, :] / denom
    a = nc[None, :] / denom
    vt = np.zeros((s.shape[0], m + 1))
    power = np.ones_like(r)
    for t in range(1, m + 1):
        power = power * r
        vt[:, t] = (power * (1.0 + t * a)).sum(axis=1)
    return vt


def _useries(vt, m):
    P = vt.shape[0]
    u = np.zeros((P, m + 1))
    u[:, 0] = 1.0
    log_scale = np.zeros(P)
    bad = np.zeros(P, dtype=np.int32)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, m + 1):
            acc = np.einsum("pj,pj->p", vt[:, k:0:-1], u[:, :k]) / k
            finite = np.isfinite(acc)
            newly = (~finite) & (bad == 0)
            bad[newly] = k
            u[:, k] = np.where(finite, acc, 0.0)
            big = acc > BIG
            if big.any():
                u[big, : k + 1] *= INV_BIG
                log_scale[big] += LOG_BIG
    return u, log_scale, bad


def aux_series(lam, nc, s, m):
    lam = np.asarray(lam, dtype=float)
    nc = np.asarray(nc, dtype=float)
    vt = _vtilde(lam, nc, s, m)
    bad_v = [t for t in range(1, m + 1) if not np.isfinite(vt[0, t])]
    if bad_v:
        return np.zeros(m + 1), vt[0], 0.0, bad_v[0]
    u, log_scale, bad = _useries(vt, m)
    return u[0], vt[0], float(log_scale[0]), int(bad[0])


def aux_tail_batch(lam, nc, s, m, threads=1):
    lam = np.asarray(lam, dtype=float)
    nc = np.asarray(nc, dtype=float)
    s = np.asarray(s, dtype=float)
    vt = _vtilde(lam, nc, s, m)
    bad_v = np.where(np.isfinite(vt).all(axis=1), 0, 1).astype(np.int32)
    u, log_scale, bad = _useries(np.where(np.isfinite(vt), vt, 0.0), m)
    bad = np.where(bad_v > 0, 1, bad).astype(np.int32)
    head = u[:, :m].sum(axis=1)
    last = u[:, m].copy()
    return log_scale, head, last, bad


def plane_wave_block(
    cs, sn, anc_re, anc_im, st_re, st_im, amp, g_start, g_count, g_entries, g_prog, g_uniform,
    e_px, e_py, e_scale, e_kind, e_amp, e_half_zeta, e_cos_bore, e_sin_bore, e_mean,
    threads=1,
):
    B, G, Z = cs.shape
    D = e_px.shape[0]
    acc = np.zeros((B, D), dtype=complex)
    for g in range(G):
        idx = g_entries[g_start[g]: g_start[g] + g_count[g]]
        c_t = cs[:, g, :, None]
        s_t = sn[:, g, :, None]
        if g_prog[g]:
            anchor = (anc_re[:, g, :] + 1j * anc_im[:, g, :])[..., None]
            step = (st_re[:, g, :] + 1j * st_im[:, g, :])[..., None]
            phasor = anchor * step ** np.arange(idx.size)
        else:
            phasor = np.exp(1j * (e_px[idx] * c_t + e_py[idx] * s_t))
        c = c_t * e_cos_bore[idx] + s_t * e_sin_bore[idx]
        shaped = np.where(c > 0, np.abs(c) ** e_half_zeta[idx], 0.0)
        w = np.where(e_kind[idx] == 0, e_amp[idx], e_amp[idx] * shaped)
        acc[:, idx] += np.einsum("bz,bze->be", amp[:, g, :], w * phasor)
    h = e_mean[None, :] + e_scale[None, :] * acc
    gains = (h.real**2 + h.imag**2).sum(axis=1)
    return h, gains
