"""Closed-form dynamics restricted to the three lowest pair states.

For weak pumping the vacuum-seeded closed dynamics essentially stays inside
the pair ladder |0,0>, |1,1>, |2,2>, where the Schroedinger equation reduces
to the 3x3 linear system

    i c00' = g* c11
    i c11' = g  c00 + 2 g* c22
    i c22' = 2g c11 + A  c22,       A = chi_a + chi_b.

For real g the generator is Hermitian and the propagator diagonalizes in
closed form through the Cardano solution of the cubic characteristic
polynomial.  The three amplitudes are sums of complex exponentials,

    c_ii(t) = r_i1 exp(s_1 t) + r_i2 exp(s_2 t) + r_i3 exp(s_3 t),

with purely imaginary exponents ``s_j`` and a 3x3 coefficient matrix ``r``
fixed by the vacuum initial condition (1, 0, 0).  The cube root entering the
Cardano form is branch-ambiguous, so the chosen branch is validated against
the initial condition instead of being trusted; every quantity is also
sanity-checked against the Hermitian-generator property Re(s_j) = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import SystemParams

_SQ3 = np.sqrt(3.0)

#: branch acceptance tolerance for the vacuum initial condition
IC_TOL = 1e-9
#: relative bound on the real part of the exponents (Hermitian generator)
EXPONENT_REALITY_TOL = 1e-10


class BranchError(ValueError):
    """No cube-root branch reproduces the vacuum initial condition."""


@dataclass(frozen=True)
class ThreeStateSolution:
    """Closed-form propagator data for the three-state reduction.

    ``s`` holds the three exponents, ``r`` the 3x3 amplitude matrix whose
    rows evaluate c00, c11, c22.  The intermediate parameters of the Cardano
    construction are kept for inspection: ``big_m`` is the selected cube
    root, ``kappa`` the square-root combination under it, ``x`` the pump
    ratio g/A and ``branch`` the cube-root branch index that passed the
    initial-condition validation.
    """

    s: np.ndarray
    r: np.ndarray
    big_m: complex
    kappa: float
    x1: complex
    x2: complex
    m1: complex
    m2: complex
    m3: complex
    x: float
    total_kerr: float
    branch: int

    def initial_condition_defect(self) -> float:
        rows = self.r.sum(axis=1)
        return float(abs(rows[0] - 1.0) + abs(rows[1]) + abs(rows[2]))


def _branch_coefficients(g: float, total_kerr: float, branch: int):
    """Exponents and amplitudes for one cube-root branch of the Cardano form."""
    x = g / total_kerr
    kappa = np.sqrt(3 + 66 * x**2 + 375 * x**4)
    m_cubed = -1 - 9 * x**2 + 3j * x * kappa
    big_m = np.exp((np.log(m_cubed) + 2j * np.pi * branch) / 3.0)
    p = 1 + 15 * x**2

    # the "starred" companions conjugate the numeric coefficients only,
    # leaving the cube root untouched; conjugating big_m as well breaks the
    # initial condition for every branch
    x1 = (3j - _SQ3) * p + (3j + _SQ3) * big_m**2
    x1s = (-3j - _SQ3) * p + (-3j + _SQ3) * big_m**2
    x2 = (1j - _SQ3) * p + (1j + _SQ3) * big_m**2
    x2s = (-1j - _SQ3) * p + (-1j + _SQ3) * big_m**2

    m1 = x1 * x1s
    m2 = (-1 - 15 * x**2 + big_m**2) * x1
    m3 = (-1 - 15 * x**2 + big_m**2) * x1s

    s = np.array(
        [
            (1j * g / (3 * x)) * (-1 + p / big_m + big_m),
            (g / (6 * x)) * (-2j - x2 / big_m),
            (g / (6 * x)) * (-2j + x2s / big_m),
        ]
    )

    q = 7 + 75 * x**2
    r01 = (12 * x / m1) * (-1j * x * q + kappa + big_m * (-2j * x + kappa) + 2j * x * big_m**2)
    r02 = (x / m2) * (
        (-3 - 1j * _SQ3) * q * x
        + (-3j + _SQ3) * kappa
        + 2 * (3 - 1j * _SQ3) * x * big_m
        + (3j + _SQ3) * kappa * big_m
        - 4j * _SQ3 * x * big_m**2
    )
    r03 = (x / m3) * (
        (3 - 1j * _SQ3) * q * x
        + (3j + _SQ3) * kappa
        - 2 * (3 + 1j * _SQ3) * x * big_m
        + (-3j + _SQ3) * kappa * big_m
        - 4j * _SQ3 * x * big_m**2
    )
    r11 = (12j * x * big_m / m1) * (15 * x**2 + (1 + big_m) ** 2)
    r12 = (_SQ3 * x * big_m / m2) * (x2 - 4j * big_m)
    r13 = -(_SQ3 * x * big_m / m3) * (x2s + 4j * big_m)
    r21 = -72j * x**2 * big_m**2 / m1
    r22 = 12j * _SQ3 * x**2 * big_m**2 / m2
    r23 = r22 * m2 / m3

    r = np.array([[r01, r02, r03], [r11, r12, r13], [r21, r22, r23]])
    # overall phase fixed by the vacuum initial condition: the raw Cardano
    # amplitudes come out uniformly rotated by -i, so rotate back
    r = 1j * r
    return s, r, big_m, float(kappa), x1, x2, m1, m2, m3, x


def solve_three_state(params: SystemParams, ic_tol: float = IC_TOL) -> ThreeStateSolution:
    """Solve the three-state reduction in closed form for real positive g.

    Cube-root branches are tried in order (principal first) and the first
    one whose amplitude rows reproduce c(0) = (1, 0, 0) within ``ic_tol``
    is selected.  Raises BranchError when no branch validates and
    ValueError for complex g, which the closed form does not cover (the
    general numerical evolver handles it).
    """
    g = params.g
    if abs(complex(g).imag) > 0:
        raise ValueError("closed form requires real g; use the numerical evolver for complex pumping")
    g = float(complex(g).real)
    if g <= 0:
        raise ValueError("closed form requires g > 0")

    for branch in range(3):
        s, r, big_m, kappa, x1, x2, m1, m2, m3, x = _branch_coefficients(g, params.total_kerr, branch)
        rows = r.sum(axis=1)
        defect = abs(rows[0] - 1.0) + abs(rows[1]) + abs(rows[2])
        reality = max(abs(sj.real) / max(abs(sj), 1e-300) for sj in s)
        if defect <= ic_tol and reality <= EXPONENT_REALITY_TOL:
            return ThreeStateSolution(
                s=s, r=r, big_m=big_m, kappa=kappa, x1=x1, x2=x2,
                m1=m1, m2=m2, m3=m3, x=x, total_kerr=params.total_kerr, branch=branch,
            )
    raise BranchError(
        f"no cube-root branch satisfies the vacuum initial condition within {ic_tol} "
        f"(g={g}, A={params.total_kerr})"
    )


def eval_three_state(sol: ThreeStateSolution, t: float) -> np.ndarray:
    """Amplitudes (c00, c11, c22) at scaled time t."""
    return sol.r @ np.exp(sol.s * t)


def eval_three_state_grid(sol: ThreeStateSolution, times: np.ndarray) -> np.ndarray:
    """Vectorized evaluation; returns an array of shape (len(times), 3)."""
    times = np.asarray(times, dtype=float)
    return np.exp(np.outer(times, sol.s)) @ sol.r.T
