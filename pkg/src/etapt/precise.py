"""Extended-precision conjugation of su(1,1) elements.

``exp(theta X) A exp(-theta X)`` for a non-compact generator ``X`` has modest
entries, but every route through the matrices ``exp(+-theta X)`` cancels
numbers of size ``exp(2 |theta| n)`` at number index ``n``. In double
precision this swamps the result for ``|theta| >~ 0.2`` at ``dim = 64``. The
nested-commutator series

    sum_k theta^k / k!  ad_X^k (A)

evaluated with enough binary digits to absorb that growth does not suffer
from it. Matrices are stored by diagonals, so the cost is linear in the
dimension; each commutator is exact on a window two states smaller than its
input, and the window is cropped accordingly so no truncation edge ever
reaches the returned block.
"""

from __future__ import annotations

import math
from typing import Dict, Tuple

import gmpy2
import numpy as np

from .fock import FockSpace, LinearOperator

# a banded matrix: offset p -> (real part, imaginary part), entry [r, r + p] at index r
Banded = Dict[int, Tuple[np.ndarray, np.ndarray]]

TARGET_DIGITS = 30


def _zeros(size: int) -> np.ndarray:
    return np.array([gmpy2.mpfr(0)] * size, dtype=object)


def _su11_banded(size: int, c0: complex, cp: complex, cm: complex) -> Banded:
    """``c0 K0 + cp K+ + cm K-`` on a window of ``size`` states, entries in working precision."""
    out: Banded = {}
    rows = range(size)
    if c0 != 0:
        k = [gmpy2.mpfr(2 * r + 1) / 4 for r in rows]
        out[0] = (
            np.array([gmpy2.mpfr(c0.real) * x for x in k], dtype=object),
            np.array([gmpy2.mpfr(c0.imag) * x for x in k], dtype=object),
        )
    if cp != 0:
        # K+[r, r-2] = sqrt((r-1) r) / 2
        w = [gmpy2.sqrt(gmpy2.mpfr((r - 1) * r)) / 2 if r >= 2 else gmpy2.mpfr(0) for r in rows]
        out[-2] = (
            np.array([gmpy2.mpfr(cp.real) * x for x in w], dtype=object),
            np.array([gmpy2.mpfr(cp.imag) * x for x in w], dtype=object),
        )
    if cm != 0:
        # K-[r, r+2] = sqrt((r+1)(r+2)) / 2
        w = [gmpy2.sqrt(gmpy2.mpfr((r + 1) * (r + 2))) / 2 if r + 2 < size else gmpy2.mpfr(0) for r in rows]
        out[2] = (
            np.array([gmpy2.mpfr(cm.real) * x for x in w], dtype=object),
            np.array([gmpy2.mpfr(cm.imag) * x for x in w], dtype=object),
        )
    return out


def _shifted(arr: np.ndarray, p: int) -> np.ndarray:
    # out[r] = arr[r + p], zero where r + p falls outside the window
    size = arr.shape[0]
    out = _zeros(size)
    if p >= 0:
        out[: size - p] = arr[p:]
    else:
        out[-p:] = arr[: size + p]
    return out


def _valid_mask(size: int, p: int) -> np.ndarray:
    r = np.arange(size)
    return (r + p >= 0) & (r + p < size)


def _product(a: Banded, b: Banded, size: int) -> Banded:
    out: Banded = {}
    for p, (ar, ai) in a.items():
        for q, (br, bi) in b.items():
            sr, si = _shifted(br, p), _shifted(bi, p)
            cr = ar * sr - ai * si
            ci = ar * si + ai * sr
            mask = ~_valid_mask(size, p + q)
            cr[mask] = gmpy2.mpfr(0)
            ci[mask] = gmpy2.mpfr(0)
            if p + q in out:
                out[p + q] = (out[p + q][0] + cr, out[p + q][1] + ci)
            else:
                out[p + q] = (cr, ci)
    return out


def _axpy(scale: complex, x: Banded, y: Banded) -> Banded:
    """``y + scale * x`` with ``scale`` an mpc-like (real, imag) pair."""
    sr, si = scale
    out = dict(y)
    for p, (xr, xi) in x.items():
        tr = xr * sr - xi * si
        ti = xr * si + xi * sr
        if p in out:
            out[p] = (out[p][0] + tr, out[p][1] + ti)
        else:
            out[p] = (tr, ti)
    return out


def _crop(a: Banded, size: int) -> Banded:
    out: Banded = {}
    for p, (ar, ai) in a.items():
        if abs(p) >= size:
            continue
        r, i = ar[:size].copy(), ai[:size].copy()
        mask = ~_valid_mask(size, p)
        r[mask] = gmpy2.mpfr(0)
        i[mask] = gmpy2.mpfr(0)
        out[p] = (r, i)
    return out


def _max_abs(a: Banded, rows: int) -> gmpy2.mpfr:
    best = gmpy2.mpfr(0)
    for ar, ai in a.values():
        for x in ar[:rows]:
            best = max(best, abs(x))
        for x in ai[:rows]:
            best = max(best, abs(x))
    return best


def _prune(a: Banded, threshold) -> Banded:
    out: Banded = {}
    for p, (ar, ai) in a.items():
        if any(abs(x) > threshold for x in ar) or any(abs(x) > threshold for x in ai):
            out[p] = (ar, ai)
    return out


def _term_count(rate: float, target: float) -> int:
    k, term = 0, 1.0
    while term > target or k < 4:
        k += 1
        term *= rate / k
    return k


def su11_conjugation(
    space: FockSpace,
    theta: float,
    operand: Tuple[complex, complex, complex],
    generator: Tuple[complex, complex, complex] = (0.0, 1j, -1j),
    digits: int = TARGET_DIGITS,
) -> LinearOperator:
    """Compression of ``exp(theta X) A exp(-theta X)`` for su(1,1) elements.

    Parameters
    ----------
    space : FockSpace
        The returned block is ``space.dim`` square.
    theta : float
        Conjugation parameter.
    operand, generator : tuple of complex
        Coefficients ``(c0, c+, c-)`` of ``A`` and ``X`` on ``(K0, K+, K-)``.
        The default generator is ``i (K+ - K-)``, whose exponential is the
        metric.
    digits : int
        Target relative accuracy in decimal digits; the working precision
        adds the digits lost to growth of the conjugating exponentials.
    """
    dim = space.dim
    gsize = sum(abs(complex(c)) for c in generator)
    rate = 2.0 * gsize * abs(theta)
    n_terms = _term_count(rate, 10.0 ** (-digits))
    size = dim + 2 * n_terms + 2
    growth = 2.0 * abs(theta) * gsize * size / math.log(10.0)
    bits = int(math.ceil((digits + growth + 20) * math.log2(10.0)))

    ctx = gmpy2.get_context().copy()
    ctx.precision = bits
    with gmpy2.context(ctx):
        X = _su11_banded(size, *(complex(c) for c in generator))
        term = _su11_banded(size, *(complex(c) for c in operand))
        total = _crop(term, dim)
        scale = max(_max_abs(term, dim), gmpy2.mpfr(1))
        tiny = scale * gmpy2.mpfr(10) ** (-(digits + growth + 10))
        stop = scale * gmpy2.mpfr(10) ** (-digits)
        th = gmpy2.mpfr(theta)
        coef = gmpy2.mpfr(1)
        quiet = 0
        for k in range(1, n_terms + 1):
            Xw = _crop(X, size)
            comm = _axpy((gmpy2.mpfr(-1), gmpy2.mpfr(0)), _product(term, Xw, size), _product(Xw, term, size))
            size -= 2
            term = _prune(_crop(comm, size), tiny)
            coef = coef * th / k
            total = _axpy((coef, gmpy2.mpfr(0)), _crop(term, dim), total)
            if _max_abs(term, dim) * abs(coef) <= stop:
                quiet += 1
                if quiet >= 2:
                    break
            else:
                quiet = 0
        out = np.zeros((dim, dim), dtype=complex)
        rows = np.arange(dim)
        for p, (ar, ai) in total.items():
            mask = _valid_mask(dim, p)
            r = rows[mask]
            out[r, r + p] = [complex(float(x), float(y)) for x, y in zip(ar[mask], ai[mask])]
    return LinearOperator(space, out)


def _metric_real_part(rows: int, cols: int, theta, cos_theta) -> np.ndarray:
    """``R`` with ``metric(theta)[n, m] = i^((n - m)/2) R[n, m]``, for ``n < rows``, ``m < cols``.

    From the normal-ordered form ``R = l D l^T`` with
    ``l[n, k] = (tan(theta)/2)^j sqrt(n!/k!) / j!`` (``n = k + 2j``) and
    ``D = diag(sec(theta)^(2 k_k))``; only ``k < min(rows, cols)`` contribute.
    """
    size = max(rows, cols)
    inner = min(rows, cols)
    half_tan = gmpy2.tan(theta) / 2
    sec2 = 1 / (cos_theta * cos_theta)
    ell = np.empty((size, inner), dtype=object)
    ell[:] = gmpy2.mpfr(0)
    for k in range(inner):
        ell[k, k] = gmpy2.mpfr(1)
        for n in range(k + 2, size, 2):
            j = (n - k) // 2
            ell[n, k] = ell[n - 2, k] * half_tan * gmpy2.sqrt(gmpy2.mpfr(n * (n - 1))) / j
    d = np.array([sec2 ** (gmpy2.mpfr(2 * k + 1) / 4) for k in range(inner)], dtype=object)
    return (ell[:rows] * d[None, :]) @ ell[:cols].T


def _growth_bits(dim: int, width: int, thetas) -> float:
    # log2 of the largest term in the sum over intermediate states, from the
    # magnitudes of the normal-ordered factors evaluated in log space
    from scipy.special import gammaln

    n = np.arange(width)
    best = 0.0
    for theta in thetas:
        t = abs(math.tan(theta)) / 2
        if t == 0:
            continue
        logsec = -math.log(abs(math.cos(theta)))
        k = np.arange(dim)
        j = (n[:, None] - k[None, :]) / 2.0
        ok = j >= 0
        jj = np.where(ok, j, 0)
        with np.errstate(divide="ignore"):
            logl = np.where(
                ok,
                jj * math.log(t) + 0.5 * (gammaln(n[:, None] + 1) - gammaln(k[None, :] + 1))
                - gammaln(jj + 1),
                -np.inf,
            )
        logl[np.arange(dim), np.arange(dim)] = 0.0
        term = logl + (2 * (0.5 * k + 0.25) * logsec)[None, :]
        best += max(0.0, float(np.max(term[np.isfinite(term)])) + float(np.max(logl[:dim][np.isfinite(logl[:dim])])))
    return best / math.log(2.0) + math.log2(width)


def metric_product(
    space: FockSpace,
    theta1: float,
    theta2: float,
    width: int,
    digits: int = TARGET_DIGITS,
) -> LinearOperator:
    """Compression of ``exp(theta1 X) exp(theta2 X)`` with ``X = i (K+ - K-)``.

    The sum over intermediate states runs over the first ``width`` number
    states. Both factors are exact compressions, so the result converges to
    the compression of the untruncated product as ``width`` grows; the sum
    cancels terms far larger than its value, hence the working precision
    adds the bits of the largest term.
    """
    dim = space.dim
    if width < dim:
        raise ValueError("width must be at least the space dimension")
    for theta in (theta1, theta2):
        if not abs(theta) < math.pi / 2:
            raise ValueError("metric angles must lie in (-pi/2, pi/2)")
    bits = int(math.ceil(digits * math.log2(10.0) + _growth_bits(dim, width, (theta1, theta2)) + 64))
    ctx = gmpy2.get_context().copy()
    ctx.precision = bits
    out = np.zeros((dim, dim), dtype=complex)
    with gmpy2.context(ctx):
        t1, t2 = gmpy2.mpfr(theta1), gmpy2.mpfr(theta2)
        r1 = _metric_real_part(dim, width, t1, gmpy2.cos(t1))
        r2 = _metric_real_part(width, dim, t2, gmpy2.cos(t2))
        # the phases i^((n-j)/2) i^((j-m)/2) multiply to i^((n-m)/2), independent of j;
        # entries of opposite parity vanish, so each parity block is a separate product
        for parity in (0, 1):
            rows = np.arange(parity, dim, 2)
            mids = np.arange(parity, width, 2)
            block = r1[np.ix_(rows, mids)] @ r2[np.ix_(mids, rows)]
            for a, n in enumerate(rows):
                for b, m in enumerate(rows):
                    out[n, m] = float(block[a, b]) * 1j ** (((n - m) // 2) % 4)
    return LinearOperator(space, out)


def converged_metric_product(
    space: FockSpace,
    theta1: float,
    theta2: float,
    rtol: float = 1e-14,
    max_width: int = 4096,
) -> LinearOperator:
    """:func:`metric_product` with the intermediate-state width doubled until it converges.

    The width grows by half each round. Converged means the interior block
    changed by at most ``rtol`` times its norm (with a floor of one) between
    two successive widths.

    Raises
    ------
    RuntimeError
        When ``max_width`` is reached first; the sum over intermediate
        states only converges while ``|tan(theta1) tan(theta2)| < 1``.
    """
    m = space.interior
    width = 2 * space.dim
    prev = metric_product(space, theta1, theta2, width).entries
    while width < max_width:
        width = min(max_width, 2 * ((3 * width) // 4))
        cur = metric_product(space, theta1, theta2, width).entries
        change = np.linalg.norm(cur[:m, :m] - prev[:m, :m])
        if change <= rtol * max(1.0, np.linalg.norm(cur[:m, :m])):
            return LinearOperator(space, cur)
        prev = cur
    raise RuntimeError(f"metric product did not converge within {max_width} intermediate states")
