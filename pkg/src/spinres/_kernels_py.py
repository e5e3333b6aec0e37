"""Pure-Python/NumPy kernels, used when the compiled ``_kernels`` module is
unavailable.  Same algorithms and operation order as ``_kernels.pyx``."""

import math

import numpy as np

BACKEND = "python"


def jacobi_eigh(h, tol=1e-14, max_sweeps=60):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Each rotation first removes the phase of the pivot a[p, q] with a
    diagonal unitary and then applies a real Givens rotation, i.e. the
    accumulated 2x2 block is ``[[c, s], [-s e^{-i phi}, c e^{-i phi}]]``.

    Returns ``(w, v, sweeps)`` with eigenvalues in diagonal order (unsorted)
    and eigenvectors as the columns of ``v``.
    """
    a = np.array(h, dtype=np.complex128, copy=True)
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = float(np.linalg.norm(a))
    if scale == 0.0 or n == 1:
        return a.diagonal().real.copy(), v, 0
    skip = 1e-17 * scale
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off += abs(a[p, q]) ** 2
        if math.sqrt(2.0 * off) <= tol * scale:
            return a.diagonal().real.copy(), v, sweeps - 1
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= skip:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                ph = apq / mag
                tau = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                phc = ph.conjugate()
                # columns: A <- A V
                cp = a[:, p].copy()
                cq = a[:, q]
                a[:, p] = c * cp - (s * phc) * cq
                a[:, q] = s * cp + (c * phc) * cq
                # rows: A <- V^H A
                rp = a[p, :].copy()
                rq = a[q, :]
                a[p, :] = c * rp - (s * ph) * rq
                a[q, :] = s * rp + (c * ph) * rq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - (s * phc) * vq
                v[:, q] = s * vp + (c * phc) * vq
    return a.diagonal().real.copy(), v, sweeps


def linewidth_model(field, kappa, f_r_mhz, g, gamma, g_coll, mu):
    """kappa + sum_k 2 G_k^2 gamma_k / (Delta_k^2 + gamma_k^2) on a field grid."""
    field = np.asarray(field, dtype=np.float64)
    out = np.full(field.shape, float(kappa))
    for gk, wk, ck in zip(g, gamma, g_coll):
        d = f_r_mhz - gk * mu * field
        out += 2.0 * ck * ck * wk / (d * d + wk * wk)
    return out


def linewidth_jacobian(field, f_r_mhz, g, gamma, g_coll, mu):
    """Columns: d/dkappa, then (d/dg, d/dgamma, d/dg_coll) per transition."""
    field = np.asarray(field, dtype=np.float64)
    n = len(g)
    jac = np.empty((field.shape[0], 1 + 3 * n))
    jac[:, 0] = 1.0
    for k in range(n):
        gk, wk, ck = g[k], gamma[k], g_coll[k]
        d = f_r_mhz - gk * mu * field
        den = d * d + wk * wk
        den2 = den * den
        jac[:, 1 + 3 * k] = 4.0 * ck * ck * wk * d * mu * field / den2
        jac[:, 2 + 3 * k] = 2.0 * ck * ck * (d * d - wk * wk) / den2
        jac[:, 3 + 3 * k] = 4.0 * ck * wk / den
    return jac
