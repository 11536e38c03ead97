"""Pure numpy implementation of the SMC step (fallback for the compiled kernel)."""
import math

import numpy as np

from . import rng


def _trig_eval(c, q):
    K = (c.size - 1) // 2
    acc = np.full_like(q, c[0])
    for k in range(1, K + 1):
        a, b = c[k], c[K + k]
        if a != 0.0:
            acc = acc + a * np.cos(2.0 * np.pi * k * q)
        if b != 0.0:
            acc = acc + b * np.sin(2.0 * np.pi * k * q)
    return acc


def _wrap(x):
    y = x - np.floor(x)
    return np.where(y >= 1.0, 0.0, y)


def normals(key, n, step):
    return rng.normals(key, np.arange(1, n + 1), step)


def smc_step(pos, wpos, prop, wprop, wbuf, cumw, key, step, kind, dt, sigma, gamma, delta,
             vp, v3, wc, has_potential):
    M = pos.shape[0]
    g = rng.normals(key, np.arange(1, M + 1, dtype=np.uint64), step)
    noise = sigma * np.sqrt(dt) * g
    q = pos
    if not has_potential:
        x = q + gamma * dt + noise
    elif kind == 0:
        x = q + (gamma - _trig_eval(vp, q)) * dt + noise
    else:
        pred = q + (gamma - _trig_eval(vp, q)) * (dt / 2) + 0.5 * noise
        x = (q - _trig_eval(vp, pred) * dt + gamma * dt
             - _trig_eval(v3, q) * (sigma * sigma / 8.0 * dt * dt) + noise)
    prop[:] = _wrap(x)
    wprop[:] = _trig_eval(wc, prop)
    w = np.exp(dt * ((1.0 - delta) * wpos + delta * wprop))
    wbuf[:] = w
    ok = (w > 0.0) & np.isfinite(w)
    if not ok.all():
        return -(float(np.argmin(ok)) + 1.0)
    # sequential running sum, identical to the compiled loop
    np.cumsum(w, out=cumw)
    total = cumw[-1]
    if not np.isfinite(total):
        return -(M + 1.0)
    u = rng.to_unit(rng.bits(key ^ rng.RESAMPLE_TAG, step + 1, np.arange(M, dtype=np.uint64))) * total
    idx = np.minimum(np.searchsorted(cumw, u, side="right"), M - 1)
    pos[:] = prop[idx]
    wpos[:] = wprop[idx]
    # correctly rounded total for the mass record
    return math.fsum(w)
