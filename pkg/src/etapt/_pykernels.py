"""Pure numpy implementations of the propagation kernels.

Signatures and results match the compiled ``_kernels`` module exactly; this
module is selected when the extension is unavailable or when
``ETAPT_BACKEND=python`` is set.
"""

import cmath

import numpy as np
from scipy.special import gammaln


def rk4_dense(coeffs, mats, psi0, dt):
    """Classical RK4 for ``i dpsi/dt = sum_j c_j(t) M_j psi``.

    Parameters
    ----------
    coeffs : (2 * n_steps + 1, n_terms) complex array
        Term coefficients sampled on the half-step grid ``t0 + k * dt / 2``.
    mats : (n_terms, dim, dim) complex array
    psi0 : (dim,) complex array
    dt : float

    Returns
    -------
    states : (n_steps + 1, dim) complex array
    n_done : int
        Number of completed steps; smaller than ``n_steps`` when the state
        became non-finite. Rows past ``n_done`` are left as NaN.
    """
    coeffs = np.ascontiguousarray(coeffs, dtype=complex)
    mats = np.ascontiguousarray(mats, dtype=complex)
    n_steps = (coeffs.shape[0] - 1) // 2
    dim = psi0.shape[0]
    states = np.full((n_steps + 1, dim), np.nan, dtype=complex)
    psi = np.array(psi0, dtype=complex)
    states[0] = psi

    def rhs(k, v):
        h = np.tensordot(coeffs[k], mats, axes=1)
        return -1j * (h @ v)

    # overflow is detected below and reported through n_done, not as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(n_steps):
            k0 = 2 * step
            k1 = rhs(k0, psi)
            k2 = rhs(k0 + 1, psi + 0.5 * dt * k1)
            k3 = rhs(k0 + 1, psi + 0.5 * dt * k2)
            k4 = rhs(k0 + 2, psi + dt * k3)
            psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(psi)):
                return states, step
            states[step + 1] = psi
    return states, n_steps


def _wn_rhs(y, h0, hp, hm):
    a, b, _ = y
    return (
        -1j * (hp + h0 * a + hm * a * a),
        -1j * (h0 + 2.0 * hm * a),
        -1j * hm * cmath.exp(b),
    )


def wei_norman_rk4(h0, hp, hm, dt):
    """RK4 for the disentangling coordinates of an su(1,1) propagator.

    The propagator of ``H = h0 K0 + hp K+ + hm K-`` is written as
    ``exp(a K+) exp(b K0) exp(c K-)`` with ``a = b = c = 0`` at the start.
    Coefficient arrays are sampled on the half-step grid (length
    ``2 * n_steps + 1``).

    Returns
    -------
    coords : (n_steps + 1, 3) complex array of ``(a, b, c)``
    n_done : int
    """
    h0 = [complex(x) for x in h0]
    hp = [complex(x) for x in hp]
    hm = [complex(x) for x in hm]
    n_steps = (len(h0) - 1) // 2
    out = np.full((n_steps + 1, 3), np.nan, dtype=complex)
    y = (0j, 0j, 0j)
    out[0] = y
    half = 0.5 * dt
    for step in range(n_steps):
        k = 2 * step
        c1 = _wn_rhs(y, h0[k], hp[k], hm[k])
        c2 = _wn_rhs([y[i] + half * c1[i] for i in range(3)], h0[k + 1], hp[k + 1], hm[k + 1])
        c3 = _wn_rhs([y[i] + half * c2[i] for i in range(3)], h0[k + 1], hp[k + 1], hm[k + 1])
        c4 = _wn_rhs([y[i] + dt * c3[i] for i in range(3)], h0[k + 2], hp[k + 2], hm[k + 2])
        y = tuple(
            y[i] + dt / 6.0 * (c1[i] + 2.0 * c2[i] + 2.0 * c3[i] + c4[i])
            for i in range(3)
        )
        if not all(cmath.isfinite(v) for v in y):
            return out, step
        out[step + 1] = y
    return out, n_steps


def _log_weights(dim):
    # log of sqrt(n! / (n - 2m)!) / m! for the raising series, indexed [n, m]
    n = np.arange(dim)[:, None]
    m = np.arange(dim // 2 + 1)[None, :]
    valid = n - 2 * m >= 0
    lw = np.where(
        valid,
        0.5 * (gammaln(n + 1) - gammaln(np.where(valid, n - 2 * m, 0) + 1)) - gammaln(m + 1),
        -np.inf,
    )
    return lw


def _scaled_powers(x, m, lw):
    # (x / 2)**m * exp(lw) evaluated in log space; x has shape (T,), lw shape (dim,)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.log(np.asarray(x, dtype=complex) / 2.0)
        out = np.exp(m * logx[:, None] + lw[None, :])
    out[:, ~np.isfinite(lw)] = 0.0
    out[np.asarray(x) == 0, :] = 0.0
    return out


def su11_lift(coords, psi0, n_out=None):
    """Apply ``exp(a K+) exp(b K0) exp(c K-)`` to ``psi0`` for every row of coords.

    Each factor acts exactly on the truncated vector: ``exp(c K-)`` only moves
    amplitude downward and ``exp(a K+)`` only upward, so no boundary rows are
    involved. Only the first ``n_out`` rows (default: all) are returned; they
    depend on the whole of ``psi0`` but on no other output row.
    """
    coords = np.asarray(coords, dtype=complex)
    psi0 = np.asarray(psi0, dtype=complex)
    dim = psi0.shape[0]
    rows = dim if n_out is None else int(n_out)
    if not 0 < rows <= dim:
        raise ValueError("n_out must lie in 1..len(psi0)")
    a, b, c = coords[:, 0], coords[:, 1], coords[:, 2]
    lw = _log_weights(dim)
    k0 = 0.5 * np.arange(rows) + 0.25

    # exp(c K-): out[n] += (c/2)^m w(n + 2m, m) psi0[n + 2m], for n < rows
    v = np.repeat(psi0[None, :rows], coords.shape[0], axis=0)
    for m in range(1, dim // 2 + 1):
        top = min(rows, dim - 2 * m)
        if top <= 0:
            break
        coef = _scaled_powers(c, m, lw[2 * m: 2 * m + top, m])
        v[:, :top] += coef * psi0[None, 2 * m: 2 * m + top]
    v *= np.exp(b[:, None] * k0[None, :])

    # exp(a K+): out[n] += (a/2)^m w(n, m) v[n - 2m]
    out = v.copy()
    for m in range(1, rows // 2 + 1):
        if rows - 2 * m <= 0:
            break
        coef = _scaled_powers(a, m, lw[2 * m: rows, m])
        out[:, 2 * m:] += coef * v[:, : rows - 2 * m]
    return out
