"""Time evolution, closed-form solutions, inner products and spectra.

Two propagation schemes are available, both classical fixed-step RK4 with
the Hamiltonian evaluated at the exact stage times:

``group``
    RK4 on the coordinates ``(a, b, c)`` of the propagator
    ``U(t) = exp(a K+) exp(b K0) exp(c K-)``. The coordinates obey a closed
    three-dimensional system, and the lift to the state uses exact
    triangular recurrences. This is the default for the model Hamiltonian.
``fock``
    RK4 directly on the truncated state vector. The truncated non-Hermitian
    matrix has spurious eigenvalues with large positive imaginary part near
    the boundary, so this scheme is only trustworthy over short horizons or
    for Hermitian generators; it is used for the transformed frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .fock import FockSpace, LinearOperator, su11_generators
from .model import ModelParams, dyson_map, metric
from .precise import su11_conjugation


class DivergenceError(RuntimeError):
    """Raised when an integration produces non-finite amplitudes.

    The partial trajectory up to the last finite step is attached.
    """

    def __init__(self, message: str, trajectory: "Trajectory"):
        super().__init__(message)
        self.trajectory = trajectory


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes on the number states of a Fock space."""

    space: FockSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.dim,):
            raise ValueError(f"state has shape {amps.shape}, expected ({self.space.dim},)")
        if not np.all(np.isfinite(amps)):
            raise ValueError("state amplitudes must be finite")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def number_state(cls, space: FockSpace, n: int) -> "StateVector":
        return cls(space, space.basis(n))

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step settings; ``t_end - t_start`` must be a whole number of steps."""

    dt: float
    t_end: float
    t_start: float = 0.0
    method: str = "rk4"
    representation: str = "group"

    def __post_init__(self):
        if self.method != "rk4":
            raise ValueError("only the classical 4th-order Runge-Kutta method is available")
        if self.representation not in ("group", "fock"):
            raise ValueError(f"unknown representation {self.representation!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        span = self.t_end - self.t_start
        if span < 0:
            raise ValueError("t_end must not precede t_start")
        if span > 0 and self.dt > span / 10 * (1 + 1e-12):
            raise ValueError("dt must not exceed a tenth of the integration window")
        if self.dt < 1e-12 * max(1.0, abs(self.t_start), abs(self.t_end)):
            raise ValueError("step underflow: dt is below the resolution of the time grid")

    @property
    def n_steps(self) -> int:
        span = self.t_end - self.t_start
        n = int(round(span / self.dt))
        if abs(n * self.dt - span) > 1e-9 * max(1.0, span):
            raise ValueError("t_end - t_start must be an integer multiple of dt")
        return n

    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time grid with the state, its metric norm and the accumulated phase at each point."""

    times: np.ndarray
    states: np.ndarray
    eta_norms: np.ndarray
    theta: np.ndarray

    def __post_init__(self):
        n = len(self.times)
        if not (self.states.shape[0] == len(self.eta_norms) == len(self.theta) == n):
            raise ValueError("trajectory fields must have equal lengths")
        if n > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def euclid_norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)

    def state(self, i: int, space: FockSpace) -> StateVector:
        return StateVector(space, self.states[i])


# ---------------------------------------------------------------------------
# phases and closed-form states


def phase_integral(params: ModelParams, t: float, t0: float = 0.0) -> float:
    """``Theta(t) = int_t0^t [Omega cos(gamma) + 2 G sin(gamma)] dt'``."""
    c, s = math.cos(params.gamma), math.sin(params.gamma)
    return c * params.omega.integral(t0, t) + 2.0 * s * params.coupling.integral(t0, t)


def _phase_grid(params: ModelParams, times: np.ndarray) -> np.ndarray:
    if params.omega.kind != "sampled" and params.coupling.kind != "sampled":
        return np.array([phase_integral(params, t) for t in times])
    # accumulate interval by interval so each adaptive quadrature is short
    out = np.empty(len(times))
    out[0] = phase_integral(params, times[0]) if times[0] != 0 else 0.0
    for i in range(1, len(times)):
        out[i] = out[i - 1] + phase_integral(params, times[i], times[i - 1])
    return out


def analytic_state(params: ModelParams, n: int, t: float) -> StateVector:
    """``rho^-1 exp(-i k_n Theta(t)) |n>``, the closed-form solution for mode ``n``."""
    if params.coupling_mode != "derived":
        raise ValueError("the closed-form solution requires derived coupling mode")
    space = params.space
    if not 0 <= n < space.interior:
        raise ValueError(f"mode {n} outside the safe range 0..{space.interior - 1}")
    k_n = 0.5 * n + 0.25
    column = metric(space, params.gamma, -0.5).entries[:, n]
    return StateVector(space, np.exp(-1j * k_n * phase_integral(params, t)) * column)


def initial_mode(params: ModelParams, n: int, padding: int = 0) -> StateVector:
    """``rho^-1 |n>``, the default initial state.

    With ``padding > 0`` the mode is returned on a working space that many
    states larger than ``params.space``, so that its tail beyond the nominal
    truncation is kept. :func:`integrate` accepts such a state and reports
    the trajectory on the nominal space.
    """
    if padding < 0:
        raise ValueError("padding must be non-negative")
    work = params.space.with_dim(params.space.dim + padding)
    return StateVector(work, metric(work, params.gamma, -0.5).entries[:, n])


# ---------------------------------------------------------------------------
# inner products


def _vectors(psi, phi):
    u = psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)
    v = phi.amplitudes if isinstance(phi, StateVector) else np.asarray(phi, dtype=complex)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    return u, v


def eta_inner(psi, phi, eta: LinearOperator) -> complex:
    """``conj(psi)^T eta phi``."""
    u, v = _vectors(psi, phi)
    if eta.entries.shape != (u.shape[0], u.shape[0]):
        raise ValueError("metric and states live on different spaces")
    return complex(u.conj() @ (eta.entries @ v))


def pt_inner(psi, phi) -> complex:
    """Indefinite PT product ``(PT psi)^T phi = sum_n (-1)^n conj(psi_n) phi_n``.

    Being sesquilinear, it is insensitive to a common phase of ``psi`` and
    ``phi``; the sign structure comes from parity alone.
    """
    u, v = _vectors(psi, phi)
    signs = (-1.0) ** np.arange(u.shape[0])
    pt_psi = signs * u.conj()
    return complex(pt_psi @ v)


def eta_norms(states: np.ndarray, space: FockSpace, gamma: float) -> np.ndarray:
    """``<psi|eta|psi>`` for each row of ``states``.

    For ``|gamma| >= pi/4`` the columns of the metric are not normalizable
    and the truncated quadratic form has no limit; NaN is returned there.
    """
    if abs(gamma) >= math.pi / 4:
        return np.full(states.shape[0], np.nan)
    eta = metric(space, gamma).entries
    return np.real(np.einsum("ti,ij,tj->t", states.conj(), eta, states))


def eta_orthonormality_residual(space: FockSpace, gamma: float, count: int = 10,
                                padding: Optional[int] = None) -> float:
    """``max |<rho^-1 n | eta | rho^-1 m> - delta_nm|`` over ``n, m < count``.

    The modes ``rho^-1 |n>`` are infinite vectors; they are represented on a
    space padded by ``padding`` states (default ``dim``) so that their tails
    are resolved. Requires ``|gamma| < pi/4``.
    """
    if abs(gamma) >= math.pi / 4:
        raise ValueError("metric quadratic forms diverge for |gamma| >= pi/4")
    width = space.dim + (space.dim if padding is None else padding)
    big = FockSpace(width, 0)
    modes = metric(big, gamma, -0.5).entries[:, :count]
    gram = modes.conj().T @ metric(big, gamma).entries @ modes
    return float(np.max(np.abs(gram - np.eye(count))))


def fidelity(u, v, buffer: int = 0) -> float:
    """``|<u, v>| / (|u| |v|)`` after dropping the top ``buffer`` states.

    Clipped to 1 so that rounding cannot report a fidelity above one.
    """
    a, b = _vectors(u, v)
    m = a.shape[0] - buffer
    a, b = a[:m], b[:m]
    den = np.linalg.norm(a) * np.linalg.norm(b)
    if den == 0:
        raise ValueError("fidelity of a zero vector")
    return float(min(1.0, abs(np.vdot(a, b)) / den))


# ---------------------------------------------------------------------------
# integration


def _half_grid(config: IntegratorConfig) -> np.ndarray:
    n = config.n_steps
    return config.t_start + 0.5 * config.dt * np.arange(2 * n + 1)


def _check_finite(values: np.ndarray, name: str):
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{name} profile is not finite on the integration grid")


def integrate(params: ModelParams, psi0: StateVector, config: IntegratorConfig) -> Trajectory:
    """Solve ``i d psi/dt = H(t) psi`` from ``config.t_start`` to ``config.t_end``.

    ``psi0`` may live on ``params.space`` or on a larger working space (see
    :func:`initial_mode`). The propagator does not conserve the Euclidean
    norm, and when the accumulated phase passes odd multiples of ``pi`` it
    acts like ``eta^-1`` and lifts the part of the initial state cut off by
    the truncation into the top rows, where the metric weights it by up to
    ``exp(2 |gamma| dim)``. Propagating on a padded working space keeps the
    nominal block exact; the recorded states are always cropped to
    ``params.space``.

    Raises
    ------
    DivergenceError
        When the state becomes non-finite; the partial trajectory is attached.
    """
    space = params.space
    if psi0.space.dim < space.dim:
        raise ValueError("initial state lives on a smaller space than the model")
    work = psi0.space
    n = config.n_steps
    times = config.times()
    half = _half_grid(config)
    omega = np.atleast_1d(np.asarray(params.omega(half), dtype=float))
    g = np.atleast_1d(np.asarray(params.coupling(half), dtype=float))
    _check_finite(omega, "Omega")
    _check_finite(g, "G")

    psi = psi0.amplitudes
    if n == 0:
        states, done = psi[None, :].copy(), 0
    elif config.representation == "group":
        coords, done = kernels.wei_norman_rk4(omega.astype(complex), 1j * g, 1j * g, config.dt)
        states = kernels.su11_lift(coords[: done + 1], psi, space.dim)
        if not np.all(np.isfinite(states)):
            bad = int(np.argmax(~np.all(np.isfinite(states), axis=1)))
            states, done = states[:bad], bad - 1
    else:
        K0, Kp, Km = su11_generators(work)
        coeffs = np.stack([omega, 1j * g, 1j * g], axis=1).astype(complex)
        mats = np.stack([K0.entries, Kp.entries, Km.entries])
        states, done = kernels.rk4_dense(coeffs, mats, psi, config.dt)
        states = states[: done + 1]

    states = states[:, : space.dim]
    kept = times[: done + 1]
    traj = Trajectory(
        times=kept,
        states=np.ascontiguousarray(states),
        eta_norms=eta_norms(states, space, params.gamma),
        theta=_phase_grid(params, kept),
    )
    if done < n:
        raise DivergenceError(
            f"state became non-finite after step {done} (t = {kept[-1]:.6g})", traj
        )
    return traj


def propagate(
    space: FockSpace,
    coefficients: Sequence[Callable[[np.ndarray], np.ndarray]],
    operators: Sequence[LinearOperator],
    psi0: StateVector,
    config: IntegratorConfig,
) -> np.ndarray:
    """Direct RK4 for ``i d psi/dt = sum_j f_j(t) A_j psi``; returns the state at every step."""
    if len(coefficients) != len(operators):
        raise ValueError("one coefficient function per operator")
    half = _half_grid(config)
    coeffs = np.stack([np.asarray(f(half), dtype=complex) * np.ones_like(half) for f in coefficients], axis=1)
    mats = np.stack([A.entries for A in operators])
    states, done = kernels.rk4_dense(coeffs, mats, psi0.amplitudes, config.dt)
    if done < config.n_steps:
        raise DivergenceError(f"state became non-finite after step {done}", Trajectory(
            config.times()[: done + 1], states[: done + 1], np.full(done + 1, np.nan), np.zeros(done + 1)))
    return states


def transformed_frame_states(params: ModelParams, psi0: StateVector, config: IntegratorConfig) -> np.ndarray:
    """Evolve in the frame ``psi' = rho psi`` and map back with ``rho^-1``.

    The transformed Hamiltonian ``rho H rho^-1 = Omega(t) rho K0 rho^-1 +
    i G(t) rho (K+ + K-) rho^-1`` is assembled from numerically conjugated
    generators, so nothing about its diagonal form is assumed. ``psi0`` may
    live on a padded working space as in :func:`integrate`.
    """
    space = params.space
    theta = 0.5 * params.gamma
    A0 = su11_conjugation(space, theta, (1.0, 0.0, 0.0))
    AS = su11_conjugation(space, theta, (0.0, 1.0, 1.0))
    if psi0.space.dim < space.dim:
        raise ValueError("initial state lives on a smaller space than the model")
    # the frame change is applied on the working space of psi0, whose tail
    # beyond the nominal truncation is needed for rho psi0 to converge
    rho = dyson_map(psi0.space, params.gamma)
    rho_inv = metric(space, params.gamma, -0.5)
    start = StateVector(space, (rho.entries @ psi0.amplitudes)[: space.dim])
    primed = propagate(
        space,
        [params.omega, lambda t: 1j * params.coupling(t)],
        [A0, AS],
        start,
        config,
    )
    return primed @ rho_inv.entries.T


def terminal_error(traj: Trajectory, params: ModelParams, n: int) -> float:
    """Euclidean distance on the interior between the last state and the closed form."""
    m = params.space.interior
    exact = analytic_state(params, n, float(traj.times[-1])).amplitudes
    return float(np.linalg.norm(traj.states[-1][:m] - exact[:m]))


# ---------------------------------------------------------------------------
# spectra


def spectrum(H: LinearOperator, count: int) -> np.ndarray:
    """The ``count`` eigenvalues of lowest real part, sorted by real then imaginary part."""
    dim = H.space.dim
    if count < 1 or count > dim // 4:
        raise ValueError(f"count must lie in 1..{dim // 4} (a quarter of the space)")
    values = np.linalg.eigvals(H.entries)
    order = np.lexsort((values.imag, values.real))
    return values[order][:count]
