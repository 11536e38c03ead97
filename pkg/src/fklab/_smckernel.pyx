# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled SMC step: propagate, weigh and multinomially resample M replicas.

Mirrors ``fklab._smcpy.smc_step`` operation for operation.
"""
from libc.math cimport sqrt, log, exp, floor, cos, sin, isfinite, M_PI
from libc.stdint cimport uint64_t, int64_t

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t GOLDEN2 = 0xD1B54A32D192ED03ULL
cdef uint64_t RESAMPLE_TAG = 0x2545F4914F6CDD1DULL
cdef double U53 = 1.0 / 9007199254740992.0
cdef double U52 = 1.0 / 4503599627370496.0
cdef double TWO_PI = 2.0 * M_PI

cdef double[8] A_ = [2.5090809287301226727e3, 3.3430575583588128105e4, 6.7265770927008700853e4,
      4.5921953931549871457e4, 1.3731693765509461125e4, 1.9715909503065514427e3,
      1.3314166789178437745e2, 3.3871328727963666080e0]
cdef double[8] B_ = [5.2264952788528545610e3, 2.8729085735721942674e4, 3.9307895800092710610e4,
      2.1213794301586595867e4, 5.3941960214247511077e3, 6.8718700749205790830e2,
      4.2313330701600911252e1, 1.0]
cdef double[8] C_ = [7.74545014278341407640e-4, 2.27238449892691845833e-2, 2.41780725177450611770e-1,
      1.27045825245236838258e0, 3.64784832476320460504e0, 5.76949722146069140550e0,
      4.63033784615654529590e0, 1.42343711074968357734e0]
cdef double[8] D_ = [1.05075007164441684324e-9, 5.47593808499534494600e-4, 1.51986665636164571966e-2,
      1.48103976427480074590e-1, 6.89767334985100004550e-1, 1.67638483018380384940e0,
      2.05319162663775882187e0, 1.0]
cdef double[8] E_ = [2.01033439929228813265e-7, 2.71155556874348757815e-5, 1.24266094738807843860e-3,
      2.65321895265761230930e-2, 2.96560571828504891230e-1, 1.78482653991729133580e0,
      5.46378491116411436990e0, 6.65790464350110377720e0]
cdef double[8] F_ = [2.04426310338993978564e-15, 1.42151175831644588870e-7, 1.84631831751005468180e-5,
      7.86869131145613259100e-4, 1.48753612908506148525e-2, 1.36929880922735805310e-1,
      5.99832206555887937690e-1, 1.0]


cdef inline uint64_t mix64(uint64_t z) noexcept nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t bits(uint64_t key, uint64_t stream, uint64_t counter) noexcept nogil:
    return mix64(mix64(key + stream * GOLDEN) + counter * GOLDEN2)


cdef inline double horner(const double* c, double x) noexcept nogil:
    cdef double acc = c[0]
    cdef int i
    for i in range(1, 8):
        acc = acc * x + c[i]
    return acc


cdef inline double inv_normal(double p) noexcept nogil:
    cdef double q = p - 0.5
    cdef double r, val
    if (q if q >= 0 else -q) <= 0.425:
        r = 0.180625 - q * q
        return q * horner(A_, r) / horner(B_, r)
    r = p if p < 1.0 - p else 1.0 - p
    r = sqrt(-log(r))
    if r <= 5.0:
        r = r - 1.6
        val = horner(C_, r) / horner(D_, r)
    else:
        r = r - 5.0
        val = horner(E_, r) / horner(F_, r)
    return -val if q < 0 else val


cdef inline double trig_eval(const double* c, int K, double q) noexcept nogil:
    # c = [a0, a1..aK, b1..bK]
    cdef double acc = c[0]
    cdef int k
    cdef double a, b
    for k in range(1, K + 1):
        a = c[k]
        b = c[K + k]
        if a != 0.0:
            acc = acc + a * cos(TWO_PI * k * q)
        if b != 0.0:
            acc = acc + b * sin(TWO_PI * k * q)
    return acc


cdef inline double wrap1(double x) noexcept nogil:
    cdef double y = x - floor(x)
    if y >= 1.0:
        return 0.0
    return y


def normals(uint64_t key, int64_t n, int64_t step):
    """Standard normals used for replicas ``0..n-1`` at ``step`` (testing hook)."""
    import numpy as np
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    cdef int64_t m
    for m in range(n):
        o[m] = inv_normal(((bits(key, <uint64_t>(m + 1), <uint64_t>step) >> 12) + 0.5) * U52)
    return out


def smc_step(double[::1] pos, double[::1] wpos,
             double[::1] prop, double[::1] wprop, double[::1] wbuf, double[::1] cumw,
             uint64_t key, int64_t step, int kind,
             double dt, double sigma, double gamma, double delta,
             const double[::1] vp, const double[::1] v3, const double[::1] wc,
             bint has_potential):
    """Advance the population one step in place.

    The weights are left in ``wbuf``; the return value is their sum with
    Neumaier compensation (within an ulp of the correctly rounded sum, so
    equal weights give their exact total).  Returns
    ``-(index+1)`` as a negative float when a weight is not positive and
    finite, so the caller can raise with the offending step.
    """
    cdef Py_ssize_t M = pos.shape[0]
    cdef int Kv = (vp.shape[0] - 1) // 2
    cdef int K3 = (v3.shape[0] - 1) // 2
    cdef int Kw = (wc.shape[0] - 1) // 2
    cdef double sdt = sigma * sqrt(dt)
    cdef double c3 = sigma * sigma / 8.0 * dt * dt
    cdef Py_ssize_t m, j, lo, span, half
    cdef double q, g, noise, x, pred, w, total, u, comp, t
    cdef uint64_t rkey = key ^ RESAMPLE_TAG
    cdef Py_ssize_t bad = -1

    with nogil:
        total = 0.0
        comp = 0.0
        for m in range(M):
            g = inv_normal(((bits(key, <uint64_t>(m + 1), <uint64_t>step) >> 12) + 0.5) * U52)
            q = pos[m]
            noise = sdt * g
            if not has_potential:
                x = q + gamma * dt + noise
            elif kind == 0:
                x = q + (gamma - trig_eval(&vp[0], Kv, q)) * dt + noise
            else:
                pred = q + (gamma - trig_eval(&vp[0], Kv, q)) * (dt / 2) + 0.5 * noise
                x = (q - trig_eval(&vp[0], Kv, pred) * dt + gamma * dt
                     - trig_eval(&v3[0], K3, q) * c3 + noise)
            x = wrap1(x)
            prop[m] = x
            wprop[m] = trig_eval(&wc[0], Kw, x)
            w = exp(dt * ((1.0 - delta) * wpos[m] + delta * wprop[m]))
            wbuf[m] = w
            if not (w > 0.0 and isfinite(w)):
                if bad < 0:
                    bad = m
            t = total + w
            if (total if total >= 0 else -total) >= w:
                comp = comp + ((total - t) + w)
            else:
                comp = comp + ((w - t) + total)
            total = t
            cumw[m] = total

        if bad < 0 and isfinite(total):
            for j in range(M):
                u = ((bits(rkey, <uint64_t>(step + 1), <uint64_t>j) >> 11) * U53) * total
                # branchless search for the first index with cumw > u
                # (clamped to M - 1, like searchsorted + minimum)
                lo = 0
                span = M
                while span > 1:
                    half = span >> 1
                    lo += half * (cumw[lo + half - 1] <= u)
                    span -= half
                pos[j] = prop[lo]
                wpos[j] = wprop[lo]

    if bad >= 0:
        return -(bad + 1.0)
    if not isfinite(total):
        return -(M + 1.0)
    return total + comp
