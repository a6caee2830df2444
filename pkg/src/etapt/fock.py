"""Truncated Fock-space operator algebra.

The space keeps the number states ``|0>, ..., |dim-1>``. Linear operators are
dense complex matrices; antilinear operators are a matrix part composed with
complex conjugation in the Fock basis, which is taken to be the real basis of
time reversal.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg
import scipy.sparse

from ._pykernels import _log_weights

HERMITIAN_TOL = 1e-13
DEFAULT_NORM_CAP = 50.0


class ShapeError(ValueError):
    """Raised when operands live on different spaces or have wrong shapes."""


@dataclass(frozen=True)
class FockSpace:
    """Number states ``|0>`` to ``|dim-1>``.

    Parameters
    ----------
    dim : int
        Number of retained number states.
    buffer : int
        Number of top states excluded from exact-identity comparisons.
    """

    dim: int = 64
    buffer: int = 8

    def __post_init__(self):
        if int(self.dim) != self.dim or int(self.buffer) != self.buffer:
            raise ValueError("dim and buffer must be integers")
        if self.dim < 8:
            raise ValueError(f"dim must be at least 8, got {self.dim}")
        if self.buffer < 0 or 2 * self.buffer >= self.dim:
            raise ValueError(f"buffer must satisfy 0 <= buffer < dim/2, got {self.buffer}")

    @property
    def interior(self) -> int:
        """Size of the trusted top-left block."""
        return self.dim - self.buffer

    def basis(self, n: int) -> np.ndarray:
        if not 0 <= n < self.dim:
            raise IndexError(f"number state {n} outside 0..{self.dim - 1}")
        v = np.zeros(self.dim, dtype=complex)
        v[n] = 1.0
        return v

    def k_values(self) -> np.ndarray:
        """Eigenvalues ``k_n = n/2 + 1/4`` of K0."""
        return 0.5 * np.arange(self.dim) + 0.25

    def with_dim(self, dim: int) -> "FockSpace":
        return FockSpace(dim=dim, buffer=self.buffer)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=complex)
    arr.setflags(write=False)
    return arr


def _check_square(space: FockSpace, m: np.ndarray):
    if m.shape != (space.dim, space.dim):
        raise ShapeError(f"matrix shape {m.shape} does not match dim {space.dim}")


@dataclass(frozen=True, eq=False)
class LinearOperator:
    """Dense complex matrix acting on a truncated Fock space."""

    space: FockSpace
    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen(self.entries)
        _check_square(self.space, arr)
        object.__setattr__(self, "entries", arr)

    @property
    def matrix(self) -> np.ndarray:
        return self.entries

    @property
    def dag(self) -> "LinearOperator":
        return LinearOperator(self.space, self.entries.conj().T)

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.space.dim,):
            raise ShapeError(f"vector shape {v.shape} does not match dim {self.space.dim}")
        return self.entries @ v

    def _same_space(self, other):
        if other.space.dim != self.space.dim:
            raise ShapeError(f"dims differ: {self.space.dim} vs {other.space.dim}")

    def __matmul__(self, other):
        if isinstance(other, LinearOperator):
            self._same_space(other)
            return LinearOperator(self.space, self.entries @ other.entries)
        if isinstance(other, AntilinearOperator):
            self._same_space(other)
            return AntilinearOperator(self.space, self.entries @ other.matrix_part)
        return self.apply(other)

    def __add__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        self._same_space(other)
        return LinearOperator(self.space, self.entries + other.entries)

    def __sub__(self, other):
        if not isinstance(other, LinearOperator):
            return NotImplemented
        self._same_space(other)
        return LinearOperator(self.space, self.entries - other.entries)

    def __neg__(self):
        return LinearOperator(self.space, -self.entries)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            return NotImplemented
        return LinearOperator(self.space, scalar * self.entries)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return LinearOperator(self.space, self.entries / scalar)

    def is_hermitian(self, tol: float = HERMITIAN_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T), initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class AntilinearOperator:
    """Antilinear map ``v -> M conj(v)`` with matrix part ``M``.

    Composition rules follow from ``conj(L v) = conj(L) conj(v)``:

    * antilinear after antilinear is linear with matrix ``M1 conj(M2)``;
    * antilinear after linear is antilinear with matrix ``M conj(L)``;
    * linear after antilinear is antilinear with matrix ``L M``.

    The adjoint is defined through ``<phi, A psi> = conj(<A^dag phi, psi>)``,
    which gives ``A^dag`` the matrix part ``M^T``.
    """

    space: FockSpace
    matrix_part: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = _frozen(self.matrix_part)
        _check_square(self.space, arr)
        object.__setattr__(self, "matrix_part", arr)

    @property
    def matrix(self) -> np.ndarray:
        return self.matrix_part

    @property
    def dag(self) -> "AntilinearOperator":
        return AntilinearOperator(self.space, self.matrix_part.T)

    def apply(self, v) -> np.ndarray:
        v = np.asarray(v, dtype=complex)
        if v.shape != (self.space.dim,):
            raise ShapeError(f"vector shape {v.shape} does not match dim {self.space.dim}")
        return self.matrix_part @ v.conj()

    def __matmul__(self, other):
        if isinstance(other, (LinearOperator, AntilinearOperator)) and other.space.dim != self.space.dim:
            raise ShapeError(f"dims differ: {self.space.dim} vs {other.space.dim}")
        if isinstance(other, AntilinearOperator):
            return LinearOperator(self.space, self.matrix_part @ other.matrix_part.conj())
        if isinstance(other, LinearOperator):
            return AntilinearOperator(self.space, self.matrix_part @ other.entries.conj())
        return self.apply(other)

    def __sub__(self, other):
        if not isinstance(other, AntilinearOperator):
            return NotImplemented
        return AntilinearOperator(self.space, self.matrix_part - other.matrix_part)

    def __add__(self, other):
        if not isinstance(other, AntilinearOperator):
            return NotImplemented
        return AntilinearOperator(self.space, self.matrix_part + other.matrix_part)

    def __mul__(self, scalar):
        # (c A)(v) = c M conj(v)
        if not np.isscalar(scalar):
            return NotImplemented
        return AntilinearOperator(self.space, scalar * self.matrix_part)

    __rmul__ = __mul__


# ---------------------------------------------------------------------------
# generators and symmetries


def _raising_diagonal(dim: int) -> np.ndarray:
    n = np.arange(dim - 2, dtype=float)
    return 0.5 * np.sqrt((n + 1.0) * (n + 2.0))


def su11_generators(space: FockSpace):
    """Return ``(K0, K+, K-)`` in the single-mode bosonic realization.

    ``K0 = (a^dag a + 1/2)/2``, ``K+ = (a^dag)^2 / 2`` and ``K- = a^2 / 2``
    truncated to the space. The matrices are filled from their known
    diagonals so no truncated ladder products are involved.
    """
    dim = space.dim
    if dim < 4:
        raise ValueError("su(1,1) generators need dim >= 4")
    k0 = np.diag(space.k_values()).astype(complex)
    kp = np.zeros((dim, dim), dtype=complex)
    kp[np.arange(2, dim), np.arange(dim - 2)] = _raising_diagonal(dim)
    return (
        LinearOperator(space, k0),
        LinearOperator(space, kp),
        LinearOperator(space, kp.T),
    )


def ladder_operators(space: FockSpace):
    """Return ``(a, a^dag)`` truncated to the space."""
    dim = space.dim
    a = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1).astype(complex)
    return LinearOperator(space, a), LinearOperator(space, a.T)


def parity(space: FockSpace) -> LinearOperator:
    return LinearOperator(space, np.diag((-1.0) ** np.arange(space.dim)))


def discrete_symmetries(space: FockSpace):
    """Return parity ``P`` (linear) and time reversal ``T`` (antilinear).

    ``T`` is pure complex conjugation in the Fock basis; ``P @ T`` is the
    antilinear operator with matrix part ``P``.
    """
    P = parity(space)
    T = AntilinearOperator(space, np.eye(space.dim, dtype=complex))
    return P, T


def identity(space: FockSpace) -> LinearOperator:
    return LinearOperator(space, np.eye(space.dim, dtype=complex))


def commutator(A: LinearOperator, B: LinearOperator) -> LinearOperator:
    """Return ``AB - BA``."""
    if A.entries.shape != B.entries.shape:
        raise ShapeError(f"shape mismatch {A.entries.shape} vs {B.entries.shape}")
    return LinearOperator(A.space, A.entries @ B.entries - B.entries @ A.entries)


# ---------------------------------------------------------------------------
# matrix exponential


def matrix_exponential(A: LinearOperator, norm_cap: float = DEFAULT_NORM_CAP) -> LinearOperator:
    """Exponential of a dense operator.

    Hermitian input (entrywise within ``1e-13``) goes through ``eigh``;
    everything else through scaling-and-squaring Pade (``scipy.linalg.expm``).

    Raises
    ------
    ValueError
        Non-finite entries, or a 1-norm above ``norm_cap``.
    """
    m = np.asarray(A.entries)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix exponential of non-finite entries")
    norm = np.linalg.norm(m, 1)
    if norm > norm_cap:
        raise ValueError(f"operator 1-norm {norm:.3g} exceeds cap {norm_cap}")
    if A.is_hermitian():
        h = 0.5 * (m + m.conj().T)
        w, v = np.linalg.eigh(h)
        return LinearOperator(A.space, (v * np.exp(w)) @ v.conj().T)
    return LinearOperator(A.space, scipy.linalg.expm(m))


def raising_exponential(space: FockSpace, a: complex) -> LinearOperator:
    """Exact ``exp(a K+)`` on the truncated space.

    ``K+`` only moves amplitude upward, so its truncated exponential agrees
    with the compression of the untruncated one. Entries are
    ``(a/2)^m sqrt(n! / (n-2m)!) / m!`` at position ``(n, n-2m)``, evaluated
    in log space to avoid overflow of the factorial ratios.
    """
    dim = space.dim
    out = np.eye(dim, dtype=complex)
    if a == 0:
        return LinearOperator(space, out)
    lw = _log_weights(dim)
    log_half_a = np.log(complex(a) / 2.0)
    for m in range(1, (dim - 1) // 2 + 1):
        rows = np.arange(2 * m, dim)
        out[rows, rows - 2 * m] = np.exp(m * log_half_a + lw[rows, m])
    return LinearOperator(space, out)


def lowering_exponential(space: FockSpace, c: complex) -> LinearOperator:
    """Exact ``exp(c K-)``, the transpose of ``exp(c K+)``."""
    return LinearOperator(space, raising_exponential(space, c).entries.T)


# ---------------------------------------------------------------------------
# truncation-aware comparison


def _matrix_of(x) -> np.ndarray:
    if isinstance(x, (LinearOperator, AntilinearOperator)):
        return x.matrix
    return np.asarray(x)


def _block(A, B, buffer: int):
    a, b = _matrix_of(A), _matrix_of(B)
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch {a.shape} vs {b.shape}")
    dim = a.shape[0]
    if buffer < 0 or 2 * buffer >= dim:
        raise ValueError(f"buffer {buffer} too large for dim {dim}")
    m = dim - buffer
    return a[:m, :m], b[:m, :m], m


def interior_distance(A, B, buffer: int) -> float:
    """Frobenius norm of ``A - B`` on the top-left ``dim - buffer`` block, divided by its size."""
    a, b, m = _block(A, B, buffer)
    return float(np.linalg.norm(a - b) / m)


def relative_interior_distance(A, B, buffer: int) -> float:
    """Frobenius norm of ``A - B`` on the interior block relative to the larger operand.

    Metric-weighted identities involve entries that grow exponentially with
    the number index, so their residuals are only meaningful in relative form.
    """
    a, b, _ = _block(A, B, buffer)
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    if scale == 0.0:
        return 0.0
    return float(np.linalg.norm(a - b) / scale)


def componentwise_distance(A, B, scale, buffer: int) -> float:
    """Largest interior entry of ``|A - B| / scale``.

    ``scale`` holds entrywise magnitudes of the terms that produced ``A`` and
    ``B`` (for a product ``XY`` that is ``|X| |Y|``), so the result is a
    componentwise relative backward error. Entries with zero scale are
    structural zeros and are skipped. The scale is floored at
    ``tiny / eps`` so that entries in the subnormal range, where rounding is
    absolute rather than relative, do not dominate the result.
    """
    a, b, m = _block(A, B, buffer)
    s = np.asarray(scale)[:m, :m]
    mask = s > 0
    if not np.any(mask):
        return 0.0
    info = np.finfo(float)
    floor = info.tiny / info.eps
    return float(np.max(np.abs(a - b)[mask] / np.maximum(s[mask], floor)))


# ---------------------------------------------------------------------------
# padded-space evaluation of exact compressions


def _pad_space(dim: int) -> FockSpace:
    return FockSpace(dim=max(dim, 8), buffer=0)


def compressed_exponential(
    generator: Callable[[FockSpace], LinearOperator],
    space: FockSpace,
    theta: complex,
    max_terms: int = 400,
    rtol: float = 1e-18,
) -> LinearOperator:
    """Top-left block of ``exp(theta X)`` for the untruncated generator ``X``.

    The Taylor series is applied to the basis columns inside a padded space
    large enough that no power of ``X`` reaches the padding edge, so the
    result is the exact compression of the infinite-dimensional exponential
    up to series truncation and rounding. ``generator`` must return an
    operator whose bandwidth is at most 2 (true for all su(1,1) generators).
    """
    dim = space.dim
    width = dim + 2 * max_terms + 2
    big = _pad_space(width)
    X = scipy.sparse.csr_matrix(generator(big).entries)
    cols = np.zeros((width, dim), dtype=complex)
    cols[np.arange(dim), np.arange(dim)] = 1.0
    total = cols.copy()
    term = cols
    small = 0
    for k in range(1, max_terms + 1):
        term = (theta / k) * (X @ term)
        total += term
        size = np.linalg.norm(term[:dim])
        if size <= rtol * np.linalg.norm(total[:dim]):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    else:
        raise RuntimeError("Taylor series for the compressed exponential did not converge")
    return LinearOperator(space, total[:dim, :dim])
