"""Verification suite, evolution runs, parameter scans and spectra.

Every function here takes a validated :class:`~etapt.config.RunConfig` and
returns plain data; writing files and choosing exit statuses is left to
:mod:`etapt.cli`. Independent checks and scan points may be evaluated on a
thread pool; results are always assembled in a fixed order, so the output
does not depend on the number of threads.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import kernels
from .config import RunConfig
from .dynamics import (
    DivergenceError,
    IntegratorConfig,
    StateVector,
    Trajectory,
    analytic_state,
    eta_orthonormality_residual,
    fidelity,
    initial_mode,
    integrate,
    spectrum,
    terminal_error,
    transformed_frame_states,
)
from .fock import (
    commutator,
    discrete_symmetries,
    interior_distance,
    matrix_exponential,
    relative_interior_distance,
    su11_generators,
)
from .model import (
    ModelParams,
    ResidualReport,
    TimeProfile,
    adjoint_action,
    adjoint_action_rhs,
    disentangled_metric,
    dyson_conjugate_residual,
    eta_tilde,
    eta_tilde_asymmetry,
    eta_tilde_square_residual,
    gamma_from_coupling,
    gauge_term_residual,
    hamiltonian_at,
    heisenberg_residual,
    metric,
    metric_generator,
    metric_pt_residual,
    metric_similarity_residual,
    pseudo_hermiticity_residual,
    pseudo_pt_residual,
    transformed_algebra_residuals,
    transformed_coefficient,
    transformed_hamiltonian,
)

CSV_FORMAT = ".17g"
FIDELITY_TOL = 1e-6
ETA_DRIFT_TOL = 1e-8
EUCLID_WITNESS = 1e-6
FRAME_TOL = 1e-7
ORDER_WINDOW = (12.0, 20.0)
RICHARDSON_DT = 0.02
METRIC_DOMAIN = math.pi / 4
PRODUCT_MAX_WIDTH = 1024
GENERATORS = ("K0", "Kplus", "Kminus")


class Skip(Exception):
    """Raised by a check that does not apply to the configuration."""


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of :func:`run_verify`; passes iff every executed check passes."""

    checks: Tuple[ResidualReport, ...]
    skipped: Tuple[Tuple[str, str], ...]
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> List[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [_finite_safe(c.to_dict()) for c in self.checks],
            "skipped": [{"name": n, "reason": r} for n, r in self.skipped],
            "metadata": _finite_safe(dict(self.metadata)),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"


def _finite_safe(obj):
    # JSON has no NaN or infinity; encode them as strings
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: _finite_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_safe(v) for v in obj]
    return obj


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    return format(float(x), CSV_FORMAT)


# ---------------------------------------------------------------------------
# individual checks; each returns a list of reports or raises Skip


def _algebra(cfg: RunConfig):
    K0, Kp, Km = su11_generators(cfg.space)
    return [
        ResidualReport("algebra_K0_Kplus", interior_distance(commutator(K0, Kp), Kp, 2), 1e-12),
        ResidualReport("algebra_K0_Kminus", interior_distance(commutator(K0, Km), -Km, 2), 1e-12),
        ResidualReport("algebra_Kplus_Kminus", interior_distance(commutator(Kp, Km), -2.0 * K0, 2), 1e-12),
    ]


def _antilinear(cfg: RunConfig):
    space = cfg.space
    rng = np.random.default_rng(20240501)
    P, T = discrete_symmetries(space)
    A = eta_tilde(space, cfg.gamma)
    worst = 0.0
    for _ in range(100):
        v = rng.normal(size=space.dim) + 1j * rng.normal(size=space.dim)
        alpha = complex(rng.normal(), rng.normal())
        lhs = A.apply(alpha * v)
        rhs = np.conj(alpha) * A.apply(v)
        worst = max(worst, np.linalg.norm(lhs - rhs) / max(np.linalg.norm(rhs), 1e-300))
    square = (P @ T) @ (P @ T)
    return [
        ResidualReport("antilinearity", worst, 1e-12, note="relative, 100 random vectors"),
        ResidualReport("pt_involution", float(np.max(np.abs(square.entries - np.eye(space.dim)))), 1e-15),
    ]


def _expm(cfg: RunConfig):
    # a Hermitian exponent of spectral norm about 5 at dim = 64
    space = cfg.space
    scale = 0.1 * 64.0 / space.dim
    X = metric_generator(space)
    E, F = matrix_exponential(scale * X), matrix_exponential(-scale * X)
    value = float(np.linalg.norm(E.entries @ F.entries - np.eye(space.dim)))
    return [ResidualReport("expm_inverse", value, 1e-10, note=f"exp(sX) exp(-sX), s = {scale:.6g}")]


def _pseudo(cfg: RunConfig):
    params = cfg.model()
    t = cfg.eval_time
    H = hamiltonian_at(params, t)
    return [
        pseudo_pt_residual(H),
        pseudo_hermiticity_residual(H, metric(cfg.space, cfg.gamma)),
        heisenberg_residual(params, t, cfg.heisenberg_dt),
    ]


def _similarity(cfg: RunConfig):
    return [metric_similarity_residual(cfg.space, cfg.gamma, w) for w in GENERATORS]


def _adjoint(cfg: RunConfig):
    space = cfg.space
    out = []
    for w in GENERATORS:
        value = interior_distance(adjoint_action(space, cfg.gamma, w), adjoint_action_rhs(space, cfg.gamma, w),
                                  space.buffer)
        out.append(ResidualReport(f"adjoint_action_{w}", value, 1e-8))
    return out


def _transformed_algebra(cfg: RunConfig):
    res = transformed_algebra_residuals(cfg.space, cfg.gamma)
    return [ResidualReport(f"transformed_algebra_{k}", v, 1e-8) for k, v in res.items()]


def _constraint_holds(cfg: RunConfig) -> bool:
    params = cfg.model()
    t = cfg.eval_time
    return params.constraint_violation(t) <= 1e-10 * max(1.0, abs(params.omega(t)))


def _transformed(cfg: RunConfig):
    if not _constraint_holds(cfg):
        raise Skip("constraint G = Omega tan(gamma)/2 violated; rho H rho^-1 is not diagonal")
    params = cfg.model()
    t = cfg.eval_time
    Hp = transformed_hamiltonian(params, t).entries
    m = cfg.space.interior
    block = Hp[:m, :m]
    off = float(np.linalg.norm(block - np.diag(np.diag(block))) / m)
    count = min(16, m)
    k = 0.5 * np.arange(count) + 0.25
    diag = float(np.max(np.abs(np.diag(block)[:count] - transformed_coefficient(params, t) * k)))
    return [
        ResidualReport("transformed_offdiagonal", off, 1e-9),
        ResidualReport("transformed_diagonal", diag, 1e-9, note=f"n < {count}"),
    ]


def _gauge(cfg: RunConfig):
    # a sampled time-dependent angle around the configured one
    times = np.linspace(0.0, 2.0, 41)
    amp = 0.05 * math.copysign(1.0, cfg.gamma) if cfg.gamma else 0.05
    profile = TimeProfile.sampled(times, cfg.gamma + amp * np.sin(times))
    limit = math.pi / 2 - 1e-3
    if np.max(np.abs(profile.params[1])) >= limit:
        raise Skip("sampled angle profile would leave the metric domain")
    return [gauge_term_residual(cfg.space, profile, 0.73, 1e-4)]


def _metric_properties(cfg: RunConfig):
    space, g = cfg.space, cfg.gamma
    eta = metric(space, g).entries
    return [
        ResidualReport("metric_hermitian", float(np.max(np.abs(eta - eta.conj().T))), 1e-12),
        ResidualReport("metric_pt", metric_pt_residual(space, g), 1e-10),
        ResidualReport("dyson_conjugate", dyson_conjugate_residual(space, g), 1e-10),
        ResidualReport(
            "disentangled_metric",
            relative_interior_distance(disentangled_metric(space, g), metric(space, g), space.buffer),
            1e-8,
            note="relative",
        ),
    ]


def _eta_tilde_square(cfg: RunConfig):
    if abs(cfg.gamma) >= METRIC_DOMAIN:
        raise Skip("metric quadratic forms diverge for |gamma| >= pi/4")
    try:
        value = eta_tilde_square_residual(cfg.space, cfg.gamma, max_width=PRODUCT_MAX_WIDTH)
    except RuntimeError:
        raise Skip(f"sum over intermediate states not converged within {PRODUCT_MAX_WIDTH} states "
                   "(|gamma| too close to pi/4)") from None
    return [ResidualReport("eta_tilde_square", value, 1e-10)]


def _eta_tilde_asymmetry(cfg: RunConfig):
    if cfg.gamma == 0:
        raise Skip("eta~ reduces to PT, which is its own adjoint, at gamma = 0")
    return [ResidualReport("eta_tilde_asymmetry", eta_tilde_asymmetry(cfg.space, cfg.gamma), 0.01, kind="lower")]


def _spectral_reality(cfg: RunConfig):
    if not _constraint_holds(cfg):
        raise Skip("constraint violated; reality of the spectrum is not expected")
    H = hamiltonian_at(cfg.model(), cfg.eval_time)
    values = spectrum(H, cfg.space.dim // 4)
    return [ResidualReport("spectral_reality", float(np.max(np.abs(values.imag))), 1e-8)]


def _require_derived(cfg: RunConfig):
    if cfg.coupling_mode != "derived":
        raise Skip("closed-form solution requires derived coupling mode")


def _evolution(cfg: RunConfig):
    _require_derived(cfg)
    params = cfg.model()
    n = cfg.initial_n
    traj = integrate(params, initial_mode(params, n, cfg.padding), cfg.integrator())
    fid = evolution_fidelities(traj, params, n)
    out = [ResidualReport("evolution_fidelity", float(1.0 - np.min(fid)), FIDELITY_TOL, note="1 - min fidelity")]
    if abs(cfg.gamma) < METRIC_DOMAIN:
        drift = float(np.max(np.abs(traj.eta_norms - traj.eta_norms[0])))
        out.append(ResidualReport("eta_norm_drift", drift, ETA_DRIFT_TOL, note=_tail_note(cfg.gamma, cfg.dim)))
    return out


def _tail_note(gamma: float, width: int) -> str:
    # truncated metric quadratic forms converge like tan|gamma|^width, and the
    # metric diagonal reaches sec|gamma|^width, which bounds the attainable accuracy
    t = abs(math.tan(gamma))
    sec = 1.0 / abs(math.cos(gamma))
    return f"tail factor tan|gamma|^{width} = {t ** width:.1e}, metric scale sec|gamma|^{width} = {sec ** width:.1e}"


def _euclid_witness(cfg: RunConfig):
    _require_derived(cfg)
    params = cfg.model()
    if np.all(np.asarray(params.coupling(cfg.integrator().times())) == 0):
        raise Skip("G vanishes on the whole window; the evolution is unitary")
    # rho^-1 |n> only acquires a phase, so the witness uses the number state |n>
    psi0 = StateVector.number_state(cfg.space, cfg.initial_n)
    traj = integrate(params, psi0, cfg.integrator())
    drift = float(np.max(np.abs(traj.euclid_norms - traj.euclid_norms[0])))
    return [ResidualReport("euclid_norm_witness", drift, EUCLID_WITNESS, kind="lower",
                           note=f"number state |{cfg.initial_n}>")]


def richardson_steps(span: float) -> Tuple[float, float]:
    """Coarse and fine steps for the order check: at most ``RICHARDSON_DT``, at least 10 steps."""
    n = max(10, int(math.ceil(span / RICHARDSON_DT - 1e-9)))
    return span / n, span / (2 * n)


def _order(cfg: RunConfig):
    _require_derived(cfg)
    span = cfg.t_end - cfg.t_start
    if span <= 0:
        raise Skip("empty integration window")
    params = cfg.model()
    n = cfg.initial_n
    psi0 = initial_mode(params, n, cfg.padding)
    errors = []
    for dt in richardson_steps(span):
        traj = integrate(params, psi0, IntegratorConfig(dt, cfg.t_end, cfg.t_start))
        errors.append(terminal_error(traj, params, n))
    ratio = errors[0] / errors[1] if errors[1] > 0 else math.inf
    lo, hi = ORDER_WINDOW
    note = f"terminal errors {errors[0]:.3e} / {errors[1]:.3e}"
    return [
        ResidualReport("rk4_order_ratio_min", ratio, lo, kind="lower", note=note),
        ResidualReport("rk4_order_ratio_max", ratio, hi, note=note),
    ]


def _orthonormality(cfg: RunConfig):
    if abs(cfg.gamma) >= METRIC_DOMAIN:
        raise Skip("metric quadratic forms diverge for |gamma| >= pi/4")
    count = min(10, cfg.space.interior)
    value = eta_orthonormality_residual(cfg.space, cfg.gamma, count)
    return [ResidualReport("eta_orthonormality", value, 1e-9, note=_tail_note(cfg.gamma, 2 * cfg.dim))]


def _frame(cfg: RunConfig):
    _require_derived(cfg)
    params = cfg.model()
    span = min(cfg.t_end - cfg.t_start, 1.0)
    if span <= 0:
        raise Skip("empty integration window")
    steps = max(10, int(round(span / cfg.dt)))
    config = IntegratorConfig(span / steps, cfg.t_start + span, cfg.t_start)
    psi0 = initial_mode(params, cfg.initial_n, cfg.padding)
    primed = transformed_frame_states(params, psi0, config)
    direct = integrate(params, psi0, config).states
    buffer = cfg.space.buffer
    worst = min(fidelity(a, b, buffer) for a, b in zip(primed, direct))
    return [ResidualReport("frame_equivalence", 1.0 - worst, FRAME_TOL, note="1 - min fidelity, first time unit")]


CHECKS: Sequence[Tuple[str, Callable[[RunConfig], List[ResidualReport]]]] = (
    ("algebra", _algebra),
    ("antilinear", _antilinear),
    ("matrix_exponential", _expm),
    ("pseudo_symmetry", _pseudo),
    ("metric_similarity", _similarity),
    ("adjoint_action", _adjoint),
    ("transformed_algebra", _transformed_algebra),
    ("transformed_hamiltonian", _transformed),
    ("gauge_term", _gauge),
    ("metric_properties", _metric_properties),
    ("eta_tilde_square", _eta_tilde_square),
    ("eta_tilde_asymmetry", _eta_tilde_asymmetry),
    ("spectral_reality", _spectral_reality),
    ("evolution", _evolution),
    ("euclid_witness", _euclid_witness),
    ("rk4_order", _order),
    ("eta_orthonormality", _orthonormality),
    ("frame_equivalence", _frame),
)


def _run_check(item, cfg):
    name, fn = item
    try:
        return fn(cfg), None
    except Skip as exc:
        return [], (name, str(exc))
    except DivergenceError as exc:
        return [ResidualReport(name, math.inf, 0.0, note=f"diverged: {exc}")], None


def run_verify(cfg: RunConfig) -> VerificationReport:
    """Run every check at the configured model; skipped checks are listed with a reason."""
    start = time.perf_counter()
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        results = list(pool.map(lambda item: _run_check(item, cfg), CHECKS))
    checks, skipped = [], []
    for reports, skip in results:
        checks.extend(reports)
        if skip is not None:
            skipped.append(skip)
    metadata = {
        "dim": cfg.dim,
        "buffer": cfg.buffer,
        "gamma": cfg.gamma,
        "coupling_mode": cfg.coupling_mode,
        "omega": cfg.omega.to_dict(),
        "g": None if cfg.g is None else cfg.g.to_dict(),
        "eval_time": cfg.eval_time,
        "t_start": cfg.t_start,
        "t_end": cfg.t_end,
        "dt": cfg.dt,
        "initial_n": cfg.initial_n,
        "padding": cfg.padding,
        "tolerances": {c.name: c.tolerance for c in checks},
        "backend": kernels.BACKEND,
        "wall_time": time.perf_counter() - start,
    }
    return VerificationReport(tuple(checks), tuple(skipped), metadata)


# ---------------------------------------------------------------------------
# evolution


EVOLVE_COLUMNS = ("t", "fidelity_vs_analytic", "eta_norm", "euclid_norm", "theta")


def evolution_fidelities(traj: Trajectory, params: ModelParams, n: int) -> np.ndarray:
    """Fidelity with the closed-form state at every recorded time (top buffer rows dropped)."""
    buffer = params.space.buffer
    return np.array([
        fidelity(state, analytic_state(params, n, float(t)).amplitudes, buffer)
        for t, state in zip(traj.times, traj.states)
    ])


@dataclass(frozen=True)
class EvolveResult:
    trajectory: Trajectory
    fidelities: np.ndarray
    diverged: Optional[str] = None

    def summary(self) -> str:
        tr = self.trajectory
        drift = float(np.max(np.abs(tr.eta_norms - tr.eta_norms[0])))
        text = (
            f"steps={len(tr) - 1} t_final={tr.times[-1]:.6g} "
            f"min_fidelity={np.min(self.fidelities):.17g} eta_norm_drift={drift:.3e}"
        )
        if self.diverged:
            text += f" DIVERGED: {self.diverged}"
        return text

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(EVOLVE_COLUMNS)
        tr = self.trajectory
        for row in zip(tr.times, self.fidelities, tr.eta_norms, tr.euclid_norms, tr.theta):
            writer.writerow([_fmt(x) for x in row])
        if self.diverged:
            buf.write(f"# diverged: {self.diverged}\n")
        return buf.getvalue()


def run_evolve(cfg: RunConfig) -> EvolveResult:
    """Integrate from ``rho^-1 |initial_n>`` and compare with the closed form at every step."""
    if cfg.coupling_mode != "derived":
        raise ValueError("evolve requires derived coupling mode")
    params = cfg.model()
    n = cfg.initial_n
    psi0 = initial_mode(params, n, cfg.padding)
    try:
        traj = integrate(params, psi0, cfg.integrator())
        diverged = None
    except DivergenceError as exc:
        traj, diverged = exc.trajectory, str(exc)
    return EvolveResult(traj, evolution_fidelities(traj, params, n), diverged)


# ---------------------------------------------------------------------------
# scans and spectra


SCAN_COLUMNS = ("omega0", "g0", "gamma", "ph_residual", "heis_residual", "max_im_eig", "error")


def _scan_point(cfg: RunConfig, omega0: float, g0: float) -> list:
    nan = math.nan
    try:
        gamma = gamma_from_coupling(omega0, g0)
    except ValueError as exc:
        return [omega0, g0, nan, nan, nan, nan, str(exc)]
    if gamma.boundary:
        return [omega0, g0, float(gamma), nan, nan, nan, "gamma on the boundary +-pi/2"]
    try:
        params = ModelParams(TimeProfile.constant(omega0), float(gamma), cfg.space)
        H = hamiltonian_at(params, 0.0)
        ph = pseudo_hermiticity_residual(H, metric(cfg.space, float(gamma))).value
        heis = heisenberg_residual(params, 0.0, cfg.heisenberg_dt).value
        max_im = float(np.max(np.abs(spectrum(H, cfg.space.dim // 4).imag)))
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        return [omega0, g0, float(gamma), nan, nan, nan, str(exc)]
    return [omega0, g0, float(gamma), ph, heis, max_im, ""]


def run_scan(cfg: RunConfig) -> List[list]:
    """One row per grid point, row-major over ``(omega0, g0)``."""
    points = cfg.scan.points()
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return list(pool.map(lambda p: _scan_point(cfg, *p), points))


def scan_csv(rows: List[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


SPECTRUM_COLUMNS = ("n", "re", "im")


def run_spectrum(cfg: RunConfig) -> np.ndarray:
    """Lowest ``spectrum_size`` eigenvalues of ``H(eval_time)``."""
    return spectrum(hamiltonian_at(cfg.model(), cfg.eval_time), cfg.spectrum_size)


def spectrum_csv(values: np.ndarray) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SPECTRUM_COLUMNS)
    for i, v in enumerate(values):
        writer.writerow([str(i), _fmt(v.real), _fmt(v.imag)])
    return buf.getvalue()
