"""Normally ordered intensity correlations and the Cauchy-Schwartz parameter R."""

from __future__ import annotations

import numpy as np

from .fock import TwoModeDensityMatrix

#: denominators below this fraction of (tr rho)^2 make R undefined
DENOMINATOR_FLOOR = 1e-12


def gamma2(rho: TwoModeDensityMatrix | np.ndarray, modes: tuple = ("a", "b")) -> float:
    """Second-order intensity correlation <: I_k I_l :> for k, l in {a, b}.

    Same-mode: <a^dag a^dag a a> = sum n(n-1) p(n, .); cross-mode operators
    commute, so <a^dag a b^dag b> = sum n k p(n, k).  p(n, k) is the joint
    photon-number distribution (the diagonal of the density tensor).
    """
    k, l = modes
    if {k, l} - {"a", "b"}:
        raise ValueError("modes must be 'a' or 'b'")
    r = rho.rho if isinstance(rho, TwoModeDensityMatrix) else np.asarray(rho)
    p = np.real(np.einsum("nnkk->nk", r))
    ns = np.arange(p.shape[0], dtype=float)
    if k == l == "a":
        return float((ns * (ns - 1)) @ p.sum(axis=1))
    if k == l == "b":
        return float(p.sum(axis=0) @ (ns * (ns - 1)))
    return float(ns @ p @ ns)


def csi_parameter(rho: TwoModeDensityMatrix | np.ndarray, denom_floor: float = DENOMINATOR_FLOOR):
    """Cross- to same-mode correlation ratio R; values above 1 are nonclassical.

    R = Gamma_ab / sqrt(Gamma_aa Gamma_bb).  Returns None when the
    denominator is below ``denom_floor`` times the squared trace (near
    vacuum both numerator and denominator vanish and R is genuinely
    undefined); callers emit a gap instead of a number.
    """
    gaa = gamma2(rho, ("a", "a"))
    gbb = gamma2(rho, ("b", "b"))
    gab = gamma2(rho, ("a", "b"))
    r = rho.rho if isinstance(rho, TwoModeDensityMatrix) else np.asarray(rho)
    trace = float(np.real(np.einsum("nnkk->", r)))
    denom_sq = gaa * gbb
    if denom_sq <= (denom_floor * trace * trace) ** 2 or denom_sq <= 0:
        return None
    return float(gab / np.sqrt(denom_sq))
