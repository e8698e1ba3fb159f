"""Truncated two-mode Fock-space primitives shared by all dynamics modules.

Index conventions
-----------------
Pure states are stored as complex amplitude lattices ``c[n, m]`` where ``n``
counts photons in mode a and ``m`` photons in mode b, both capped at
``n_max``.

Density matrices are stored as rank-4 tensors ``rho[n, m, k, l]`` holding
``<k|_b <n|_a rho |m>_a |l>_b``: ``n, m`` are the mode-a ket/bra indices and
``k, l`` the mode-b ket/bra indices.  Every module in this package uses this
single convention.  The matrix view used for eigenvalue work flattens rows
as ``(n, k)`` and columns as ``(m, l)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: tolerance for accepting a state vector as normalized
NORM_TOL = 1e-8
#: positivity tolerance for density matrices, scaled by the trace
POSITIVITY_TOL = 1e-8


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the two pumped Kerr oscillators (hbar = 1).

    ``chi_a`` and ``chi_b`` are the Kerr nonlinearities of the two modes,
    ``g`` the (possibly complex) pair-pump strength, ``gamma_a``/``gamma_b``
    the damping rates and ``nbar_a``/``nbar_b`` the mean photon numbers of
    the attached reservoirs.  ``n_max`` is the highest Fock index kept per
    mode.  Default units: chi_a = chi_b = 1, so time is measured in 1/chi
    and ``g`` is quoted in units of chi.
    """

    chi_a: float = 1.0
    chi_b: float = 1.0
    g: complex = 0.15
    gamma_a: float = 0.0
    gamma_b: float = 0.0
    nbar_a: float = 0.0
    nbar_b: float = 0.0
    n_max: int = 10

    def __post_init__(self):
        if self.chi_a + self.chi_b <= 0:
            raise ValueError("chi_a + chi_b must be positive")
        for name in ("gamma_a", "gamma_b", "nbar_a", "nbar_b"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")

    @property
    def total_kerr(self) -> float:
        """Combined Kerr strength chi_a + chi_b."""
        return self.chi_a + self.chi_b

    @property
    def pump_ratio(self) -> complex:
        """Pump strength relative to the combined Kerr strength, g / (chi_a + chi_b)."""
        return self.g / self.total_kerr

    @property
    def dim(self) -> int:
        """Fock dimension per mode, n_max + 1."""
        return self.n_max + 1


@dataclass
class TwoModeAmplitudes:
    """Pure two-mode state as a complex amplitude lattice ``c[n, m]``."""

    c: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=complex)
        if self.c.ndim != 2 or self.c.shape[0] != self.c.shape[1]:
            raise ValueError("amplitude lattice must be square")

    @property
    def n_max(self) -> int:
        return self.c.shape[0] - 1

    def norm(self) -> float:
        """Euclidean norm of the amplitude lattice (1 for physical states)."""
        return float(np.sqrt(np.sum(np.abs(self.c) ** 2)))

    def copy(self) -> "TwoModeAmplitudes":
        return TwoModeAmplitudes(self.c.copy(), self.t)


@dataclass
class TwoModeDensityMatrix:
    """Mixed two-mode state ``rho[n, m, k, l]`` = <k|<n| rho |m>|l>."""

    rho: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=complex)
        if self.rho.ndim != 4 or len(set(self.rho.shape)) != 1:
            raise ValueError("density tensor must have four equal axes")

    @property
    def n_max(self) -> int:
        return self.rho.shape[0] - 1

    def trace(self) -> float:
        return float(np.real(np.einsum("nnkk->", self.rho)))

    def matrix_view(self) -> np.ndarray:
        """Flatten to a matrix with row index (n, k) and column index (m, l)."""
        d = self.rho.shape[0]
        return np.ascontiguousarray(self.rho.transpose(0, 2, 1, 3)).reshape(d * d, d * d)

    def hermiticity_defect(self) -> float:
        """Largest deviation from rho = rho^dagger (swap n<->m, k<->l and conjugate)."""
        return float(np.max(np.abs(self.rho - self.rho.transpose(1, 0, 3, 2).conj())))

    def min_eigenvalue(self) -> float:
        """Smallest eigenvalue of the Hermitian part of the matrix view."""
        m = self.matrix_view()
        return float(np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min())

    def validate(self, trace_tol: float = NORM_TOL, positivity_tol: float = POSITIVITY_TOL) -> None:
        """Raise ValueError if Hermiticity, unit trace or positivity fail."""
        if self.hermiticity_defect() > trace_tol:
            raise ValueError("density matrix is not Hermitian within tolerance")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"density matrix trace {tr} deviates from 1")
        if self.min_eigenvalue() < -positivity_tol * abs(tr):
            raise ValueError("density matrix has a significant negative eigenvalue")

    def copy(self) -> "TwoModeDensityMatrix":
        return TwoModeDensityMatrix(self.rho.copy(), self.t)


def make_vacuum_state(params: SystemParams) -> TwoModeAmplitudes:
    """Both modes empty: c[0, 0] = 1, everything else 0, at t = 0."""
    c = np.zeros((params.dim, params.dim), dtype=complex)
    c[0, 0] = 1.0
    return TwoModeAmplitudes(c)


def vacuum_density(params: SystemParams) -> TwoModeDensityMatrix:
    """Vacuum as a density matrix, rho[0, 0, 0, 0] = 1."""
    return amplitudes_to_density(make_vacuum_state(params))


def amplitudes_to_density(psi: TwoModeAmplitudes, norm_tol: float = NORM_TOL) -> TwoModeDensityMatrix:
    """Outer product of a normalized pure state: rho[n,m,k,l] = c[n,k] conj(c[m,l]).

    Rejects lattices whose norm deviates from 1 by more than ``norm_tol``.
    """
    nrm = psi.norm()
    if abs(nrm - 1.0) > norm_tol:
        raise ValueError(f"state norm {nrm} deviates from 1 beyond tolerance {norm_tol}")
    rho = np.einsum("nk,ml->nmkl", psi.c, psi.c.conj())
    return TwoModeDensityMatrix(rho, psi.t)


def fidelity(psi_a: TwoModeAmplitudes, psi_b: TwoModeAmplitudes) -> float:
    """Squared overlap |<psi_a|psi_b>|^2 of two pure states.

    Lattices of different size are compared by zero-padding the smaller one,
    which leaves the overlap unchanged.
    """
    ca, cb = psi_a.c, psi_b.c
    if ca.shape != cb.shape:
        d = max(ca.shape[0], cb.shape[0])
        ca = _pad(ca, d)
        cb = _pad(cb, d)
    overlap = np.vdot(ca, cb)
    return float(min(1.0, abs(overlap) ** 2))


def _pad(c: np.ndarray, d: int) -> np.ndarray:
    if c.shape[0] == d:
        return c
    out = np.zeros((d, d), dtype=complex)
    out[: c.shape[0], : c.shape[1]] = c
    return out
