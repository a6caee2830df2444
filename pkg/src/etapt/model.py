"""The driven non-Hermitian su(1,1) model, its metric and its symmetry residuals.

The Hamiltonian is ``H(t) = Omega(t) K0 + i G(t) (K+ + K-)``. The metric
``eta = exp(i gamma (K+ - K-))`` renders it pseudo-Hermitian when
``G = Omega tan(gamma) / 2``, and ``rho = eta^(1/2)`` maps it onto the
diagonal operator ``(Omega cos gamma + 2 G sin gamma) K0``.

Metric matrices are the exact compressions of the untruncated operators,
built from the normal-ordered product ``exp(v K+) exp(ln(sec^2 gamma) K0)
exp(v* K-)`` with ``v = i tan gamma``. Every factor there is triangular, so
truncating each factor commutes with truncating the product.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .fock import (
    AntilinearOperator,
    FockSpace,
    LinearOperator,
    commutator,
    componentwise_distance,
    discrete_symmetries,
    interior_distance,
    lowering_exponential,
    raising_exponential,
    relative_interior_distance,
    su11_generators,
)
from .precise import converged_metric_product, su11_conjugation

GAMMA_MARGIN = 1e-6
CONSTRAINT_TOL = 1e-10


# ---------------------------------------------------------------------------
# time profiles


def _adaptive_simpson(f, a: float, b: float, tol: float, max_depth: int = 50) -> float:
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return recurse(lo, mid, fa, flm, fm, left, eps / 2, depth - 1) + recurse(
            mid, hi, fm, frm, fb, right, eps / 2, depth - 1
        )

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


@dataclass(frozen=True)
class TimeProfile:
    """Real scalar function of time.

    Kinds and their ``params``:

    ``constant``    ``(c,)``
    ``sinusoidal``  ``(c0, c1, omega, phase)`` for ``c0 + c1 sin(omega t + phase)``
    ``polynomial``  coefficients in ascending powers of ``t``
    ``sampled``     ``(times, values)`` with linear interpolation
    """

    kind: str
    params: tuple

    KINDS = ("constant", "sinusoidal", "polynomial", "sampled")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "sampled":
            times, values = self.params
            times = tuple(float(x) for x in times)
            values = tuple(float(x) for x in values)
            if len(times) != len(values) or len(times) < 2:
                raise ValueError("sampled profile needs at least two (t, value) pairs")
            if np.any(np.diff(times) <= 0):
                raise ValueError("sampled profile times must be strictly increasing")
            params = (times, values)
        else:
            params = tuple(float(x) for x in self.params)
            expected = {"constant": 1, "sinusoidal": 4}.get(self.kind)
            if expected is not None and len(params) != expected:
                raise ValueError(f"{self.kind} profile takes {expected} parameters")
            if self.kind == "polynomial" and not params:
                raise ValueError("polynomial profile needs at least one coefficient")
            values = params
        if not np.all(np.isfinite(values)):
            raise ValueError("profile parameters must be finite")
        object.__setattr__(self, "params", params)

    @classmethod
    def constant(cls, c: float) -> "TimeProfile":
        return cls("constant", (c,))

    @classmethod
    def sinusoidal(cls, c0: float, c1: float, omega: float, phase: float = 0.0) -> "TimeProfile":
        return cls("sinusoidal", (c0, c1, omega, phase))

    @classmethod
    def polynomial(cls, coefficients: Sequence[float]) -> "TimeProfile":
        return cls("polynomial", tuple(coefficients))

    @classmethod
    def sampled(cls, times: Sequence[float], values: Sequence[float]) -> "TimeProfile":
        return cls("sampled", (tuple(times), tuple(values)))

    def _check_window(self, t):
        if self.kind == "sampled":
            times = self.params[0]
            lo, hi = times[0], times[-1]
            tt = np.asarray(t)
            if np.any(tt < lo - 1e-12) or np.any(tt > hi + 1e-12):
                raise ValueError(f"t outside sampled window [{lo}, {hi}]")

    def __call__(self, t):
        self._check_window(t)
        p = self.params
        if self.kind == "constant":
            out = p[0] + 0.0 * np.asarray(t, dtype=float)
        elif self.kind == "sinusoidal":
            out = p[0] + p[1] * np.sin(p[2] * np.asarray(t, dtype=float) + p[3])
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(np.asarray(t, dtype=float), p)
        else:
            out = np.interp(t, p[0], p[1])
        return float(out) if np.ndim(out) == 0 else out

    def derivative(self, t):
        self._check_window(t)
        p = self.params
        tt = np.asarray(t, dtype=float)
        if self.kind == "constant":
            out = 0.0 * tt
        elif self.kind == "sinusoidal":
            out = p[1] * p[2] * np.cos(p[2] * tt + p[3])
        elif self.kind == "polynomial":
            out = np.polynomial.polynomial.polyval(tt, np.polynomial.polynomial.polyder(p))
        else:
            times, values = np.asarray(p[0]), np.asarray(p[1])
            slopes = np.diff(values) / np.diff(times)
            idx = np.clip(np.searchsorted(times, tt, side="right") - 1, 0, len(slopes) - 1)
            out = slopes[idx]
        return float(out) if np.ndim(out) == 0 else out

    def integral(self, t0: float, t1: float, tol: float = 1e-10) -> float:
        """Definite integral from ``t0`` to ``t1``.

        Closed form for all analytic kinds; adaptive Simpson for sampled
        profiles.
        """
        p = self.params
        if self.kind == "constant":
            return p[0] * (t1 - t0)
        if self.kind == "sinusoidal":
            c0, c1, w, phi = p
            if w == 0.0:
                return (c0 + c1 * math.sin(phi)) * (t1 - t0)
            return c0 * (t1 - t0) - c1 / w * (math.cos(w * t1 + phi) - math.cos(w * t0 + phi))
        if self.kind == "polynomial":
            anti = np.polynomial.polynomial.polyint(p)
            return float(
                np.polynomial.polynomial.polyval(t1, anti) - np.polynomial.polynomial.polyval(t0, anti)
            )
        self._check_window(np.array([t0, t1]))
        return _adaptive_simpson(lambda s: float(np.interp(s, p[0], p[1])), t0, t1, tol)

    def scaled(self, factor: float) -> "TimeProfile":
        """Return ``factor * self`` as a profile of the same kind."""
        p = self.params
        if self.kind == "sinusoidal":
            return TimeProfile.sinusoidal(factor * p[0], factor * p[1], p[2], p[3])
        if self.kind == "sampled":
            return TimeProfile.sampled(p[0], [factor * v for v in p[1]])
        return TimeProfile(self.kind, tuple(factor * c for c in p))

    def to_dict(self) -> dict:
        if self.kind == "sampled":
            return {"kind": "sampled", "times": list(self.params[0]), "values": list(self.params[1])}
        if self.kind == "sinusoidal":
            c0, c1, w, phi = self.params
            return {"kind": "sinusoidal", "c0": c0, "c1": c1, "omega": w, "phase": phi}
        if self.kind == "constant":
            return {"kind": "constant", "value": self.params[0]}
        return {"kind": "polynomial", "coefficients": list(self.params)}

    @classmethod
    def from_dict(cls, d) -> "TimeProfile":
        """Build a profile from a descriptor dict or a bare number (constant)."""
        if isinstance(d, (int, float)) and not isinstance(d, bool):
            return cls.constant(d)
        if not isinstance(d, dict) or "kind" not in d:
            raise ValueError(f"invalid profile descriptor {d!r}")
        kind = d["kind"]
        allowed = {
            "constant": {"value"},
            "sinusoidal": {"c0", "c1", "omega", "phase"},
            "polynomial": {"coefficients"},
            "sampled": {"times", "values"},
        }
        if kind not in allowed:
            raise ValueError(f"unknown profile kind {kind!r}")
        extra = set(d) - allowed[kind] - {"kind"}
        if extra:
            raise ValueError(f"unknown keys for {kind} profile: {sorted(extra)}")
        try:
            if kind == "constant":
                return cls.constant(d["value"])
            if kind == "sinusoidal":
                return cls.sinusoidal(d["c0"], d["c1"], d["omega"], d.get("phase", 0.0))
            if kind == "polynomial":
                return cls.polynomial(d["coefficients"])
            return cls.sampled(d["times"], d["values"])
        except KeyError as exc:
            raise ValueError(f"{kind} profile missing key {exc}") from None


# ---------------------------------------------------------------------------
# parameters


def _check_gamma(gamma: float):
    if not math.isfinite(gamma) or abs(gamma) >= math.pi / 2 - GAMMA_MARGIN:
        raise ValueError(f"metric angle {gamma} outside (-pi/2, pi/2) minus the conditioning margin")


@dataclass(frozen=True)
class ModelParams:
    """Driving profiles, metric angle and truncation of one model instance.

    In ``derived`` mode the coupling is ``G(t) = Omega(t) tan(gamma) / 2``,
    which satisfies the pseudo-Hermiticity constraint at every time. In
    ``explicit`` mode ``g`` is supplied independently.
    """

    omega: TimeProfile
    gamma: float
    space: FockSpace = field(default_factory=FockSpace)
    coupling_mode: str = "derived"
    g: Optional[TimeProfile] = None

    def __post_init__(self):
        _check_gamma(self.gamma)
        if self.coupling_mode not in ("derived", "explicit"):
            raise ValueError(f"coupling_mode must be 'derived' or 'explicit', got {self.coupling_mode!r}")
        if self.coupling_mode == "explicit" and self.g is None:
            raise ValueError("explicit coupling mode requires a g profile")
        if self.coupling_mode == "derived" and self.g is not None:
            raise ValueError("g is derived from omega and gamma in derived mode; do not pass it")

    @property
    def coupling(self) -> TimeProfile:
        if self.coupling_mode == "derived":
            return self.omega.scaled(math.tan(self.gamma) / 2.0)
        return self.g

    def constraint_violation(self, t: float) -> float:
        """``|G(t) - Omega(t) tan(gamma) / 2|``."""
        return abs(self.coupling(t) - self.omega(t) * math.tan(self.gamma) / 2.0)


@dataclass(frozen=True)
class ResidualReport:
    """One named residual with its tolerance and verdict."""

    name: str
    value: float
    tolerance: float
    kind: str = "upper"
    note: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        value = float(self.value)
        object.__setattr__(self, "value", value)
        if self.kind == "upper":
            ok = value <= self.tolerance
        elif self.kind == "lower":
            ok = value > self.tolerance
        else:
            raise ValueError(f"unknown residual kind {self.kind!r}")
        object.__setattr__(self, "passed", bool(ok and math.isfinite(value)))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "value": self.value,
            "tolerance": self.tolerance,
            "kind": self.kind,
            "passed": self.passed,
            "note": self.note,
        }


# ---------------------------------------------------------------------------
# operators


def _profile_value(profile: TimeProfile, t: float, name: str) -> float:
    v = profile(t)
    if not math.isfinite(v):
        raise ValueError(f"{name}({t}) is not finite")
    return v


def hamiltonian_from_coefficients(space: FockSpace, omega: float, g: float) -> LinearOperator:
    K0, Kp, Km = su11_generators(space)
    return LinearOperator(space, omega * K0.entries + 1j * g * (Kp.entries + Km.entries))


def hamiltonian_at(params: ModelParams, t: float) -> LinearOperator:
    """``Omega(t) K0 + i G(t) (K+ + K-)``."""
    omega = _profile_value(params.omega, t, "Omega")
    g = _profile_value(params.coupling, t, "G")
    return hamiltonian_from_coefficients(params.space, omega, g)


class CouplingAngle(float):
    """Metric angle with a flag marking the ``Omega = 0`` boundary value."""

    boundary: bool

    def __new__(cls, value: float, boundary: bool = False):
        obj = super().__new__(cls, value)
        obj.boundary = boundary
        return obj


def gamma_from_coupling(omega0: float, g0: float) -> CouplingAngle:
    """Metric angle solving ``Omega = 2 G cot(gamma)``, i.e. ``arctan(2 G / Omega)``.

    ``omega0 = 0`` returns ``sign(g0) pi/2`` with ``boundary=True``.
    """
    if omega0 == 0 and g0 == 0:
        raise ValueError("gamma is undefined for omega0 = g0 = 0")
    if omega0 == 0:
        return CouplingAngle(math.copysign(math.pi / 2, g0), boundary=True)
    return CouplingAngle(math.atan(2.0 * g0 / omega0))


def metric_factors(space: FockSpace, gamma: float, scale: float = 1.0):
    """Triangular factor ``L`` and diagonal ``d`` with ``metric = L diag(d) L^dag``.

    ``L = exp(i tan(theta) K+)`` is unit lower triangular and
    ``d_n = sec(theta)^(2 k_n)`` with ``theta = scale * gamma``; positivity of
    ``d`` certifies positive definiteness without an eigensolver.
    """
    theta = scale * gamma
    _check_gamma(theta)
    L = raising_exponential(space, 1j * math.tan(theta))
    d = np.exp(-2.0 * space.k_values() * math.log(math.cos(theta)))
    return L, d


def metric(space: FockSpace, gamma: float, scale: float = 1.0) -> LinearOperator:
    """``exp(i scale gamma (K+ - K-))`` compressed to the space.

    ``scale=1`` is the metric, ``scale=-1`` its inverse and ``scale=1/2`` the
    Dyson map. The result is the top-left block of the untruncated operator,
    not the exponential of the truncated generator.
    """
    L, d = metric_factors(space, gamma, scale)
    m = (L.entries * d) @ L.entries.conj().T
    return LinearOperator(space, 0.5 * (m + m.conj().T))


def dyson_map(space: FockSpace, gamma: float) -> LinearOperator:
    return metric(space, gamma, 0.5)


def eta_tilde(space: FockSpace, gamma: float) -> AntilinearOperator:
    """The antilinear symmetry ``PT eta`` with matrix part ``P conj(eta) = P eta^-1``."""
    P, T = discrete_symmetries(space)
    return (P @ T) @ metric(space, gamma, 1.0)


def metric_generator(space: FockSpace) -> LinearOperator:
    """``X = i (K+ - K-)``, so that the metric is ``exp(gamma X)``."""
    _, Kp, Km = su11_generators(space)
    return LinearOperator(space, 1j * (Kp.entries - Km.entries))


def adjoint_action_rhs(space: FockSpace, gamma: float, which: str) -> LinearOperator:
    """Closed form of ``eta K eta^-1`` for ``K`` in ``{K0, Kplus, Kminus}``."""
    K0, Kp, Km = su11_generators(space)
    c, s = math.cos(gamma), math.sin(gamma)
    c2, s2 = math.cos(2 * gamma), math.sin(2 * gamma)
    if which == "K0":
        return c2 * K0 - (0.5j * s2) * (Kp + Km)
    if which == "Kplus":
        return (c * c) * Kp - (s * s) * Km - (1j * s2) * K0
    if which == "Kminus":
        return (c * c) * Km - (s * s) * Kp - (1j * s2) * K0
    raise ValueError(f"unknown generator {which!r}")


_GENERATOR_COEFFS = {"K0": (1.0, 0.0, 0.0), "Kplus": (0.0, 1.0, 0.0), "Kminus": (0.0, 0.0, 1.0)}


def _generator(space: FockSpace, which: str) -> LinearOperator:
    K0, Kp, Km = su11_generators(space)
    return {"K0": K0, "Kplus": Kp, "Kminus": Km}[which]


def adjoint_action(space: FockSpace, gamma: float, which: str) -> LinearOperator:
    """``eta K eta^-1`` evaluated numerically (extended-precision commutator series)."""
    if which not in _GENERATOR_COEFFS:
        raise ValueError(f"unknown generator {which!r}")
    return su11_conjugation(space, gamma, _GENERATOR_COEFFS[which])


def disentangled_metric(space: FockSpace, gamma: float, coefficients: str = "corrected") -> LinearOperator:
    """Metric as a normal-ordered product ``exp(v K+) exp(ln(v0) K0) exp(w K-)``.

    ``coefficients="corrected"`` uses ``v = i tan(gamma)``, ``v0 = sec^2(gamma)``
    and ``w = conj(v)``, which reproduces :func:`metric`. ``"alternative"`` uses the
    alternative ``v = i tanh(gamma)``, ``v0 = 1 + ln|v|^2`` and ``w = -conj(v)``,
    kept for comparison only; it does not reproduce the metric.
    """
    _check_gamma(gamma)
    if coefficients == "corrected":
        v = 1j * math.tan(gamma)
        log_v0 = complex(-2.0 * math.log(math.cos(gamma)))
        w = v.conjugate()
    elif coefficients == "alternative":
        if gamma == 0:
            raise ValueError("the alternative coefficients are singular at gamma = 0")
        v = 1j * math.tanh(gamma)
        v0 = 1.0 + math.log(abs(v) ** 2)
        log_v0 = np.log(complex(v0))
        w = -v.conjugate()
    else:
        raise ValueError(f"unknown coefficient set {coefficients!r}")
    diag = np.exp(log_v0 * space.k_values())
    m = (raising_exponential(space, v).entries * diag) @ lowering_exponential(space, w).entries
    return LinearOperator(space, m)


# ---------------------------------------------------------------------------
# residuals


def pseudo_pt_residual(H: LinearOperator, buffer: Optional[int] = None, tolerance: float = 1e-13) -> ResidualReport:
    """Distance between ``PT H PT`` and ``H^dag`` on the interior."""
    space = H.space
    buffer = space.buffer if buffer is None else buffer
    P, T = discrete_symmetries(space)
    PT = P @ T
    lhs = PT @ H @ PT
    value = interior_distance(lhs, H.dag, buffer)
    return ResidualReport("pseudo_pt", value, tolerance)


def _abs_product(A, B) -> np.ndarray:
    return np.abs(A) @ np.abs(B)


def pseudo_hermiticity_residual(
    H: LinearOperator, eta: LinearOperator, buffer: Optional[int] = None, tolerance: float = 1e-9
) -> ResidualReport:
    """Componentwise relative interior residual of ``H^dag eta = eta H``.

    Each entry of ``H^dag eta - eta H`` is divided by the same entry of
    ``|H^dag| |eta| + |eta| |H|``. The metric's entries grow exponentially
    with the number index, so an absolute norm would measure rounding of the
    largest entries rather than the identity itself.
    """
    buffer = H.space.buffer if buffer is None else buffer
    Hd, E, Hm = H.dag.entries, eta.entries, H.entries
    scale = _abs_product(Hd, E) + _abs_product(E, Hm)
    value = componentwise_distance(Hd @ E, E @ Hm, scale, buffer)
    return ResidualReport("pseudo_hermiticity", value, tolerance, note="componentwise relative")


def antilinear_commutator(H: LinearOperator, A: AntilinearOperator) -> AntilinearOperator:
    """``[H, A]`` for linear ``H`` and antilinear ``A``: matrix part ``H M - M conj(H)``."""
    M = A.matrix_part
    return AntilinearOperator(H.space, H.entries @ M - M @ H.entries.conj())


def _eta_tilde_matrix(params: ModelParams, t: float) -> np.ndarray:
    # the angle is a constant of the model instance, so t does not enter
    return eta_tilde(params.space, params.gamma).matrix_part


def heisenberg_residual(params: ModelParams, t: float, dt: float, tolerance: float = 1e-9) -> ResidualReport:
    """Componentwise relative interior residual of ``d/dt eta~ = i [H, eta~]``.

    The time derivative is a central difference of width ``dt``. The metric
    angle is constant for a model instance, so the derivative vanishes and
    the residual measures the commutator against the size of its two terms.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    H = hamiltonian_at(params, t)
    deriv = (_eta_tilde_matrix(params, t + dt) - _eta_tilde_matrix(params, t - dt)) / (2 * dt)
    M = _eta_tilde_matrix(params, t)
    Hm = H.entries
    rhs = 1j * (Hm @ M - M @ Hm.conj())
    scale = _abs_product(Hm, M) + _abs_product(M, Hm.conj()) + np.abs(deriv)
    value = componentwise_distance(deriv, rhs, scale, params.space.buffer)
    return ResidualReport("heisenberg", value, tolerance, note="componentwise relative")


def metric_similarity_residual(space: FockSpace, gamma: float, which: str, tolerance: float = 1e-9) -> ResidualReport:
    """Componentwise relative residual of ``eta K = RHS(K) eta``.

    This multiplied-out form of the adjoint-action identity involves only
    the exact metric compression and banded generators.
    """
    eta = metric(space, gamma).entries
    K = _generator(space, which).entries
    R = adjoint_action_rhs(space, gamma, which).entries
    scale = _abs_product(eta, K) + _abs_product(R, eta)
    value = componentwise_distance(eta @ K, R @ eta, scale, space.buffer)
    return ResidualReport(f"metric_similarity_{which}", value, tolerance, note="componentwise relative")


def transformed_hamiltonian(params: ModelParams, t: float) -> LinearOperator:
    """``rho H(t) rho^-1``, evaluated by the extended-precision commutator series.

    Raises
    ------
    ValueError
        When ``G(t)`` misses ``Omega(t) tan(gamma) / 2`` by more than ``1e-10``.
    """
    violation = params.constraint_violation(t)
    if violation > CONSTRAINT_TOL * max(1.0, abs(params.omega(t))):
        raise ValueError(f"constraint violated by {violation:.3g}; refusing to diagonalize")
    omega = _profile_value(params.omega, t, "Omega")
    g = _profile_value(params.coupling, t, "G")
    return su11_conjugation(params.space, 0.5 * params.gamma, (omega, 1j * g, 1j * g))


def transformed_coefficient(params: ModelParams, t: float) -> float:
    """``Omega cos(gamma) + 2 G sin(gamma)``, the K0 coefficient of the diagonal Hamiltonian."""
    return params.omega(t) * math.cos(params.gamma) + 2.0 * params.coupling(t) * math.sin(params.gamma)


def gauge_term_residual(space: FockSpace, gamma_profile: TimeProfile, t: float, dt: float,
                        tolerance: float = 1e-6) -> ResidualReport:
    """Check ``i (d eta/dt) eta^-1 = -gamma' (K+ - K-)`` for a time-dependent angle.

    Evaluated in the multiplied-out form ``i d eta/dt = -gamma' (K+ - K-) eta``
    so that only the exact metric compression enters; reported relative to
    the size of the right-hand side.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    _, Kp, Km = su11_generators(space)
    deta = (metric(space, gamma_profile(t + dt)).entries - metric(space, gamma_profile(t - dt)).entries) / (2 * dt)
    lhs = 1j * deta
    rhs = -gamma_profile.derivative(t) * ((Kp - Km).entries @ metric(space, gamma_profile(t)).entries)
    value = relative_interior_distance(lhs, rhs, space.buffer)
    return ResidualReport("gauge_term", value, tolerance, note="relative")


def transformed_algebra_residuals(space: FockSpace, gamma: float):
    """Interior residuals of the commutation relations among ``eta K eta^-1``.

    The transformed generators are exact compressions from the
    nested-commutator series. They are banded, so their products are exact
    except on the top two states, which the buffer excludes.
    """
    C0 = adjoint_action(space, gamma, "K0")
    Cp = adjoint_action(space, gamma, "Kplus")
    Cm = adjoint_action(space, gamma, "Kminus")
    buffer = max(space.buffer, 2)
    return {
        "K0_Kplus": interior_distance(commutator(C0, Cp), Cp, buffer),
        "K0_Kminus": interior_distance(commutator(C0, Cm), -Cm, buffer),
        "Kplus_Kminus": interior_distance(commutator(Cp, Cm), -2.0 * C0, buffer),
    }


def eta_tilde_square_residual(space: FockSpace, gamma: float, max_width: int = 4096) -> float:
    """Interior distance of ``eta~ eta~`` from the identity.

    The composition has matrix part ``P conj(eta) P eta``. Parity commutes
    with the metric and ``conj(metric(gamma)) = metric(-gamma)`` entrywise, so
    this is the product ``metric(-gamma) metric(gamma)`` of two exact
    compressions. Its sum over intermediate states converges only for
    ``|gamma| < pi/4`` and cancels terms that grow like ``exp(2 |gamma| n)``;
    it is evaluated in extended precision with the number of intermediate
    states increased until the interior block has converged.

    Raises
    ------
    ValueError
        For ``|gamma| >= pi/4``.
    RuntimeError
        When ``max_width`` intermediate states do not suffice, which happens
        as ``|gamma|`` approaches ``pi/4``.
    """
    if abs(gamma) >= math.pi / 4:
        raise ValueError("eta~ eta~ does not converge for |gamma| >= pi/4")
    square = converged_metric_product(space, -gamma, gamma, max_width=max_width)
    return interior_distance(square, np.eye(space.dim), space.buffer)


def eta_tilde_asymmetry(space: FockSpace, gamma: float) -> float:
    """Interior distance between ``eta~`` and its adjoint (matrix part ``M^T``)."""
    et = eta_tilde(space, gamma)
    return interior_distance(et.matrix_part, et.dag.matrix_part, space.buffer)


def metric_pt_residual(space: FockSpace, gamma: float) -> float:
    """Interior distance between ``eta`` and ``PT eta^-1 TP``."""
    P, T = discrete_symmetries(space)
    eta = metric(space, gamma)
    inv = metric(space, gamma, -1.0)
    other = (P @ T) @ inv @ (T @ P)
    return interior_distance(eta, other, space.buffer)


def dyson_conjugate_residual(space: FockSpace, gamma: float) -> float:
    """Interior distance between ``rho^dag`` and ``PT rho^-1 PT``."""
    P, T = discrete_symmetries(space)
    rho = metric(space, gamma, 0.5)
    rho_inv = metric(space, gamma, -0.5)
    other = (P @ T) @ rho_inv @ (P @ T)
    return interior_distance(rho.dag, other, space.buffer)
