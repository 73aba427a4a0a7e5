"""Pure-numpy implementations of the hot modal kernels.

These are the reference versions; ``_ckernels.pyx`` mirrors them loop by loop.
"""

import numpy as np

# |z t| below this uses the Taylor series of (e^{zt} - 1) / z
_SERIES_CUTOFF = 1e-3
# keeps the (T, N, K, K) work arrays of expsum_quad under ~64 MB
_BLOCK_ELEMS = 1 << 22


def _phi(z, t):
    """Integral of ``exp(z s)`` over ``[0, t]`` for complex ``z`` and scalar ``t``."""
    w = z * t
    a = w.real
    b = w.imag
    sb2 = np.sin(0.5 * b)
    em1 = (np.expm1(a) * np.cos(b) - 2.0 * sb2 * sb2) + 1j * (np.exp(a) * np.sin(b))
    small = np.abs(w) < _SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(small, 0.0, em1 / np.where(small, 1.0, z))
    if np.any(small):
        ws = np.where(small, w, 0.0)
        series = t * (1.0 + ws * (0.5 + ws * (1.0 / 6.0 + ws * (1.0 / 24.0 + ws / 120.0))))
        out = np.where(small, series, out)
    return out


def expsum_eval(lam, B, t):
    """``out[i, n, j] = Re sum_k B[n, j, k] exp(lam[n, k] t[i])``."""
    lam = np.asarray(lam, dtype=complex)
    B = np.asarray(B, dtype=complex)
    t = np.asarray(t, dtype=float)
    n, j, k = B.shape
    out = np.empty((t.size, n, j))
    block = max(1, _BLOCK_ELEMS // max(1, n * k))
    for start in range(0, t.size, block):
        tb = t[start:start + block]
        e = np.exp(lam[None, :, :] * tb[:, None, None])
        out[start:start + block] = np.einsum("njk,tnk->tnj", B, e).real
    return out


def expsum_quad(lam, G, t):
    """``out[i] = sum_n Re sum_{k,l} G[n,k,l] * int_0^t[i] exp((lam_k + conj lam_l) s) ds``."""
    lam = np.asarray(lam, dtype=complex)
    G = np.asarray(G, dtype=complex)
    t = np.asarray(t, dtype=float)
    n, k, _ = G.shape
    z = lam[:, :, None] + np.conj(lam[:, None, :])
    out = np.empty(t.size)
    block = max(1, _BLOCK_ELEMS // max(1, n * k * k))
    for start in range(0, t.size, block):
        tb = t[start:start + block]
        ph = _phi(z[None], tb[:, None, None, None])
        per_mode = np.sum((G[None] * ph).real, axis=(2, 3))
        out[start:start + block] = np.sum(per_mode, axis=1)
    return out


def polish_roots(coeffs, roots, maxit=8):
    """Newton-polish polynomial roots in place of the original polynomial.

    ``coeffs`` has shape ``(N, D + 1)``, highest degree first.  Returns the
    polished roots and the absolute residuals ``|p(root)|``; every iteration
    is kept only if it lowers the residual.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    x = np.array(roots, dtype=complex)
    eps = np.finfo(float).eps

    def horner(z):
        p = np.zeros_like(z)
        dp = np.zeros_like(z)
        for i in range(coeffs.shape[1]):
            dp = dp * z + p
            p = p * z + coeffs[:, i, None]
        return p, dp

    p, dp = horner(x)
    best = np.abs(p)
    active = np.ones(x.shape, dtype=bool)
    for _ in range(maxit):
        if not active.any():
            break
        with np.errstate(divide="ignore", invalid="ignore"):
            step = np.where(dp != 0, p / dp, 0.0)
        cand = x - step
        pc, dpc = horner(cand)
        better = active & (np.abs(pc) < best)
        x = np.where(better, cand, x)
        p = np.where(better, pc, p)
        dp = np.where(better, dpc, dp)
        best = np.where(better, np.abs(pc), best)
        tiny = np.abs(step) <= 4.0 * eps * np.abs(x)
        active = better & ~tiny & (best > 0)
    return x, best
