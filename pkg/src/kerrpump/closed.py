"""Numerical integration of the closed (lossless) amplitude equations."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .fock import SystemParams, TwoModeAmplitudes

#: per-step norm change above which the fixed step is rejected
NORM_DRIFT_STEP_TOL = 1e-6
#: boundary-row population that triggers a truncation warning
BOUNDARY_WARN = 1e-6


class StepSizeError(RuntimeError):
    """Norm drift in a single step exceeded tolerance; reduce dt."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 configuration in scaled time units.

    ``sample_every`` decimates the output: one sample is stored every that
    many steps (plus the initial state).
    """

    dt: float = 1e-3
    t_end: float = 50.0
    sample_every: int = 50
    method: str = "rk4"

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.method != "rk4":
            raise ValueError("only fixed-step rk4 is supported")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class ClosedTrajectory:
    """Sampled closed evolution with drift diagnostics (never silently fixed)."""

    times: np.ndarray
    states: list
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self) -> TwoModeAmplitudes:
        return self.states[-1]


def amplitude_rhs(psi: TwoModeAmplitudes, params: SystemParams) -> np.ndarray:
    """Time derivative of the amplitude lattice.

    dc[n,m]/dt = -i [ (n(n-1) chi_a + m(m-1) chi_b)/2 c[n,m]
                      + g sqrt(n m) c[n-1,m-1]
                      + g* sqrt((n+1)(m+1)) c[n+1,m+1] ],

    with neighbors outside the truncation treated as zero.
    """
    c = psi.c
    coeffs = _rhs_coefficients(c.shape[0], params)
    return _apply_rhs(c, *coeffs)


def _rhs_coefficients(dim: int, params: SystemParams):
    n = np.arange(dim).reshape(-1, 1)
    m = np.arange(dim).reshape(1, -1)
    kerr = 0.5 * (n * (n - 1) * params.chi_a + m * (m - 1) * params.chi_b)
    down = params.g * np.sqrt(n * m)                      # weight on c[n-1, m-1]
    up = np.conj(params.g) * np.sqrt((n + 1) * (m + 1))   # weight on c[n+1, m+1]
    return kerr, down, up


def _apply_rhs(c: np.ndarray, kerr, down, up) -> np.ndarray:
    out = kerr * c.astype(complex)
    shifted = np.zeros_like(out)
    shifted[1:, 1:] = c[:-1, :-1]
    out += down * shifted
    shifted = np.zeros_like(out)
    shifted[:-1, :-1] = c[1:, 1:]
    out += up * shifted
    return -1j * out


def evolve_closed(
    psi0: TwoModeAmplitudes,
    params: SystemParams,
    integ: IntegratorConfig,
    norm_drift_step_tol: float = NORM_DRIFT_STEP_TOL,
    boundary_warn: float = BOUNDARY_WARN,
) -> ClosedTrajectory:
    """RK4-evolve a normalized amplitude lattice and sample the trajectory.

    The norm is monitored but never renormalized; a per-step norm change
    above ``norm_drift_step_tol`` raises StepSizeError.  Population on the
    truncation boundary rows is tracked and a warning is issued above
    ``boundary_warn``.
    """
    if abs(psi0.norm() - 1.0) > 1e-8:
        raise ValueError("initial state must be normalized")
    if psi0.c.shape[0] != params.dim:
        raise ValueError("state truncation does not match params.n_max")

    kerr, down, up = _rhs_coefficients(params.dim, params)

    def rhs(c):
        return _apply_rhs(c, kerr, down, up)

    c = psi0.c.astype(complex).copy()
    dt = integ.dt
    t0 = psi0.t
    times = [t0]
    states = [TwoModeAmplitudes(c.copy(), t0)]
    norm_sq_prev = float(np.sum(np.abs(c) ** 2))
    max_norm_drift = abs(norm_sq_prev - 1.0)
    max_boundary = _boundary_population(c)

    for step in range(1, integ.n_steps + 1):
        k1 = rhs(c)
        k2 = rhs(c + 0.5 * dt * k1)
        k3 = rhs(c + 0.5 * dt * k2)
        k4 = rhs(c + dt * k3)
        c = c + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)

        norm_sq = float(np.sum(np.abs(c) ** 2))
        if abs(norm_sq - norm_sq_prev) > norm_drift_step_tol:
            raise StepSizeError(
                f"norm changed by {abs(norm_sq - norm_sq_prev):.3e} in one step at "
                f"t={t0 + step * dt:.4f}; reduce dt"
            )
        norm_sq_prev = norm_sq
        max_norm_drift = max(max_norm_drift, abs(norm_sq - 1.0))

        if step % integ.sample_every == 0 or step == integ.n_steps:
            t = t0 + step * dt
            times.append(t)
            states.append(TwoModeAmplitudes(c.copy(), t))
            max_boundary = max(max_boundary, _boundary_population(c))

    warned = max_boundary > boundary_warn
    if warned:
        warnings.warn(
            f"truncation boundary population reached {max_boundary:.2e}; "
            "results may be truncation-limited, consider raising n_max",
            RuntimeWarning,
        )
    return ClosedTrajectory(
        times=np.array(times),
        states=states,
        diagnostics={
            "max_norm_drift": max_norm_drift,
            "max_boundary_population": max_boundary,
            "boundary_warning": warned,
            "dt": dt,
            "n_steps": integ.n_steps,
        },
    )


def _boundary_population(c: np.ndarray) -> float:
    return float(np.sum(np.abs(c[-1, :]) ** 2) + np.sum(np.abs(c[:-1, -1]) ** 2))
