"""Markovian master equation for the damped, pumped Kerr pair.

The generator combines the coherent part -i[H, rho] with standard thermal
dissipators for each mode,

    gamma (nbar+1) D[a] rho + gamma nbar D[a^dag] rho,
    D[L] rho = L rho L^dag - (L^dag L rho + rho L^dag L) / 2,

written element-wise in the rho[n, m, k, l] convention of :mod:`.fock` with
neighbors outside the truncation set to zero.  Truncation makes the thermal
pump terms leak a little trace through the boundary row (the upward jump
out of the kept space has no destination); the leak rate is
gamma*nbar*(n_max+1) times the boundary population and is reported, never
hidden.  For nbar = 0 the truncated generator preserves the trace exactly.

Time stepping is fixed-step RK4.  The generator is linear and time
independent, so the evolver assembles it once as a sparse matrix and steps
the flattened state; :func:`lindblad_rhs` is the independent element-wise
reference implementation the matrix is tested against.  Vacuum-seeded
states never leave the sector where the photon-number difference between
the modes is equal on ket and bra side (the pump creates pairs, each
dissipator moves ket and bra together), and the evolver restricts the
generator to that sector automatically when the initial state allows it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .closed import IntegratorConfig
from .fock import SystemParams, TwoModeDensityMatrix

#: most negative eigenvalue tolerated before the run is aborted
POSITIVITY_ABORT = 1e-6


class PositivityError(RuntimeError):
    """Density matrix developed a significant negative eigenvalue."""


def lindblad_rhs(rho: TwoModeDensityMatrix, params: SystemParams) -> np.ndarray:
    """d(rho)/dt as a dense tensor; reference element-wise implementation.

    Element flows, with ``gs = conj(g)`` and out-of-range neighbors zero::

        d rho[n,m,k,l] = -(i/2) (chi_a (n(n-1)-m(m-1)) + chi_b (k(k-1)-l(l-1))) rho[n,m,k,l]
                         -(1/2) (gamma_a ((2 nbar_a + 1)(n+m) + 2 nbar_a)
                               + gamma_b ((2 nbar_b + 1)(k+l) + 2 nbar_b)) rho[n,m,k,l]
                         - i g  sqrt(n k)         rho[n-1,m,k-1,l]
                         - i gs sqrt((n+1)(k+1))  rho[n+1,m,k+1,l]
                         + i g  sqrt((m+1)(l+1))  rho[n,m+1,k,l+1]
                         + i gs sqrt(m l)         rho[n,m-1,k,l-1]
                         + gamma_a (nbar_a+1) sqrt((n+1)(m+1)) rho[n+1,m+1,k,l]
                         + gamma_a  nbar_a    sqrt(n m)        rho[n-1,m-1,k,l]
                         + gamma_b (nbar_b+1) sqrt((k+1)(l+1)) rho[n,m,k+1,l+1]
                         + gamma_b  nbar_b    sqrt(k l)        rho[n,m,k-1,l-1]
    """
    r = rho.rho
    d = r.shape[0]
    n = np.arange(d).reshape(-1, 1, 1, 1)
    m = np.arange(d).reshape(1, -1, 1, 1)
    k = np.arange(d).reshape(1, 1, -1, 1)
    l = np.arange(d).reshape(1, 1, 1, -1)
    g = params.g
    gs = np.conj(g)

    diag = -0.5j * (params.chi_a * (n * (n - 1) - m * (m - 1)) + params.chi_b * (k * (k - 1) - l * (l - 1)))
    diag = diag - 0.5 * params.gamma_a * ((2 * params.nbar_a + 1) * (n + m) + 2 * params.nbar_a)
    diag = diag - 0.5 * params.gamma_b * ((2 * params.nbar_b + 1) * (k + l) + 2 * params.nbar_b)
    out = diag * r

    out += (-1j * g) * np.sqrt(n * k) * _shift(r, (1, 0, 1, 0))
    out += (-1j * gs) * np.sqrt((n + 1) * (k + 1)) * _shift(r, (-1, 0, -1, 0))
    out += (1j * g) * np.sqrt((m + 1) * (l + 1)) * _shift(r, (0, -1, 0, -1))
    out += (1j * gs) * np.sqrt(m * l) * _shift(r, (0, 1, 0, 1))

    out += params.gamma_a * (params.nbar_a + 1) * np.sqrt((n + 1) * (m + 1)) * _shift(r, (-1, -1, 0, 0))
    out += params.gamma_a * params.nbar_a * np.sqrt(n * m) * _shift(r, (1, 1, 0, 0))
    out += params.gamma_b * (params.nbar_b + 1) * np.sqrt((k + 1) * (l + 1)) * _shift(r, (0, 0, -1, -1))
    out += params.gamma_b * params.nbar_b * np.sqrt(k * l) * _shift(r, (0, 0, 1, 1))
    return out


def lindblad_rhs_unbalanced(rho: TwoModeDensityMatrix, params: SystemParams) -> np.ndarray:
    """Debug variant of the element table with two deliberate differences.

    The pump terms enter without the -i phase and the thermal part of the
    diagonal enters with the opposite sign.  This transcription is NOT
    trace preserving for nbar > 0 and is kept only so the tests can
    demonstrate that trace preservation singles out :func:`lindblad_rhs`.
    """
    r = rho.rho
    d = r.shape[0]
    n = np.arange(d).reshape(-1, 1, 1, 1)
    m = np.arange(d).reshape(1, -1, 1, 1)
    k = np.arange(d).reshape(1, 1, -1, 1)
    l = np.arange(d).reshape(1, 1, 1, -1)
    g = params.g
    gs = np.conj(g)

    diag = -0.5j * (params.chi_a * (n * (n - 1) - m * (m - 1)) + params.chi_b * (k * (k - 1) - l * (l - 1)))
    diag = diag - 0.5 * params.gamma_a * ((n + m) - 2 * params.nbar_a * (n + m + 1))
    diag = diag - 0.5 * params.gamma_b * ((k + l) - 2 * params.nbar_b * (k + l + 1))
    out = diag * r

    out += g * np.sqrt(n * k) * _shift(r, (1, 0, 1, 0))
    out += gs * np.sqrt((n + 1) * (k + 1)) * _shift(r, (-1, 0, -1, 0))
    out += -g * np.sqrt((m + 1) * (l + 1)) * _shift(r, (0, -1, 0, -1))
    out += -gs * np.sqrt(m * l) * _shift(r, (0, 1, 0, 1))

    out += params.gamma_a * (params.nbar_a + 1) * np.sqrt((n + 1) * (m + 1)) * _shift(r, (-1, -1, 0, 0))
    out += params.gamma_a * params.nbar_a * np.sqrt(n * m) * _shift(r, (1, 1, 0, 0))
    out += params.gamma_b * (params.nbar_b + 1) * np.sqrt((k + 1) * (l + 1)) * _shift(r, (0, 0, -1, -1))
    out += params.gamma_b * params.nbar_b * np.sqrt(k * l) * _shift(r, (0, 0, 1, 1))
    return out


def _shift(r: np.ndarray, by: tuple) -> np.ndarray:
    """Shift the tensor by the given offsets, filling vacated entries with zero.

    ``by[i] = +1`` means the output at index q reads the input at q-1 along
    axis i (source shifted towards higher indices).
    """
    out = np.zeros_like(r)
    src = []
    dst = []
    for b in by:
        if b == 0:
            src.append(slice(None))
            dst.append(slice(None))
        elif b > 0:
            src.append(slice(None, -b))
            dst.append(slice(b, None))
        else:
            src.append(slice(-b, None))
            dst.append(slice(None, b))
    out[tuple(dst)] = r[tuple(src)]
    return out


@dataclass
class LindbladGenerator:
    """Sparse matrix form of the generator over a flattened element list."""

    matrix: sp.csr_matrix
    elements: list
    index: dict
    n_max: int
    pair_sector: bool
    herm_perm: np.ndarray
    diag_indices: np.ndarray
    boundary_diag_indices: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def from_tensor(self, rho: np.ndarray) -> np.ndarray:
        idx = tuple(np.array(self.elements).T)
        return rho[idx]

    def to_tensor(self, vec: np.ndarray) -> np.ndarray:
        d = self.n_max + 1
        rho = np.zeros((d, d, d, d), dtype=complex)
        idx = tuple(np.array(self.elements).T)
        rho[idx] = vec
        return rho

    def trace(self, vec: np.ndarray) -> float:
        return float(np.real(vec[self.diag_indices].sum()))

    def hermiticity_defect(self, vec: np.ndarray) -> float:
        return float(np.max(np.abs(vec - vec[self.herm_perm].conj())))

    def symmetrize(self, vec: np.ndarray) -> np.ndarray:
        return 0.5 * (vec + vec[self.herm_perm].conj())

    def boundary_population(self, vec: np.ndarray) -> float:
        if len(self.boundary_diag_indices) == 0:
            return 0.0
        return float(np.real(vec[self.boundary_diag_indices].sum()))


def build_generator(params: SystemParams, pair_sector: bool = False) -> LindbladGenerator:
    """Assemble the sparse generator, optionally restricted to the pair sector.

    The pair sector keeps only elements with n - k == m - l; it is invariant
    under the full generator, so restricting is exact for states supported
    inside it.
    """
    d = params.dim
    elements = []
    index = {}
    for n in range(d):
        for m in range(d):
            for k in range(d):
                for l in range(d):
                    if pair_sector and (n - k != m - l):
                        continue
                    index[(n, m, k, l)] = len(elements)
                    elements.append((n, m, k, l))

    g = params.g
    gs = np.conj(g)
    ga, gb = params.gamma_a, params.gamma_b
    na, nb = params.nbar_a, params.nbar_b
    rows, cols, vals = [], [], []

    def add(tgt_i, source, val):
        j = index.get(source)
        if j is not None:
            rows.append(tgt_i)
            cols.append(j)
            vals.append(val)

    for i, (n, m, k, l) in enumerate(elements):
        diag = -0.5j * (params.chi_a * (n * (n - 1) - m * (m - 1)) + params.chi_b * (k * (k - 1) - l * (l - 1)))
        diag += -0.5 * ga * ((2 * na + 1) * (n + m) + 2 * na)
        diag += -0.5 * gb * ((2 * nb + 1) * (k + l) + 2 * nb)
        add(i, (n, m, k, l), diag)
        if n >= 1 and k >= 1:
            add(i, (n - 1, m, k - 1, l), -1j * g * np.sqrt(n * k))
        if n + 1 < d and k + 1 < d:
            add(i, (n + 1, m, k + 1, l), -1j * gs * np.sqrt((n + 1) * (k + 1)))
        if m + 1 < d and l + 1 < d:
            add(i, (n, m + 1, k, l + 1), 1j * g * np.sqrt((m + 1) * (l + 1)))
        if m >= 1 and l >= 1:
            add(i, (n, m - 1, k, l - 1), 1j * gs * np.sqrt(m * l))
        if n + 1 < d and m + 1 < d:
            add(i, (n + 1, m + 1, k, l), ga * (na + 1) * np.sqrt((n + 1) * (m + 1)))
        if n >= 1 and m >= 1:
            add(i, (n - 1, m - 1, k, l), ga * na * np.sqrt(n * m))
        if k + 1 < d and l + 1 < d:
            add(i, (n, m, k + 1, l + 1), gb * (nb + 1) * np.sqrt((k + 1) * (l + 1)))
        if k >= 1 and l >= 1:
            add(i, (n, m, k - 1, l - 1), gb * nb * np.sqrt(k * l))

    matrix = sp.csr_matrix(
        sp.coo_matrix((vals, (rows, cols)), shape=(len(elements), len(elements)), dtype=complex)
    )
    herm_perm = np.array([index[(m, n, l, k)] for (n, m, k, l) in elements])
    diag_indices = np.array([i for i, (n, m, k, l) in enumerate(elements) if n == m and k == l])
    boundary = np.array(
        [i for i, (n, m, k, l) in enumerate(elements)
         if n == m and k == l and (n == params.n_max or k == params.n_max)]
    )
    return LindbladGenerator(
        matrix=matrix, elements=elements, index=index, n_max=params.n_max,
        pair_sector=pair_sector, herm_perm=herm_perm, diag_indices=diag_indices,
        boundary_diag_indices=boundary,
    )


def in_pair_sector(rho: np.ndarray) -> bool:
    """True when every element with n - k != m - l vanishes exactly."""
    d = rho.shape[0]
    n = np.arange(d).reshape(-1, 1, 1, 1)
    m = np.arange(d).reshape(1, -1, 1, 1)
    k = np.arange(d).reshape(1, 1, -1, 1)
    l = np.arange(d).reshape(1, 1, 1, -1)
    mask = (n - k) != (m - l)
    return bool(np.all(rho[np.broadcast_to(mask, rho.shape)] == 0))


@dataclass
class OpenTrajectory:
    """Sampled open evolution: observable tracks plus drift diagnostics."""

    times: np.ndarray
    observables: dict
    final: TwoModeDensityMatrix
    diagnostics: dict = field(default_factory=dict)
    states: list | None = None
    checkpoints: list | None = None
    generator: LindbladGenerator | None = None


def evolve_open(
    rho0: TwoModeDensityMatrix,
    params: SystemParams,
    integ: IntegratorConfig,
    observers: dict | None = None,
    keep_states: bool = False,
    checkpoint_every: float | None = None,
    positivity_tol: float = POSITIVITY_ABORT,
    check_positivity_every: int = 1,
    pair_sector: bool | None = None,
) -> OpenTrajectory:
    """RK4-evolve a density matrix, sampling observables along the way.

    ``observers`` maps column names to callables taking a
    TwoModeDensityMatrix and returning a float; they are evaluated at every
    sample point.  Hermiticity is enforced once per step by averaging rho
    with its Hermitian conjugate, with the pre-symmetrization defect
    reported in the diagnostics.  Trace drift is reported, never corrected.
    A PositivityError aborts the run when the smallest eigenvalue at a
    checked sample falls below -``positivity_tol``.

    ``pair_sector=None`` restricts the generator to the pair sector exactly
    when the initial state is supported there; pass False to force the full
    space.  ``checkpoint_every`` (scaled time) stores flattened snapshots
    that event refinement can re-integrate from.
    """
    rho0.validate()
    if rho0.rho.shape[0] != params.dim:
        raise ValueError("state truncation does not match params.n_max")
    if pair_sector is None:
        pair_sector = in_pair_sector(rho0.rho)
    gen = build_generator(params, pair_sector=pair_sector)
    mat = gen.matrix
    v = gen.from_tensor(rho0.rho.astype(complex))
    dt = integ.dt
    t0 = rho0.t

    observers = observers or {}
    times = [t0]
    tracks = {name: [fn(rho0)] for name, fn in observers.items()}
    states = [rho0.copy()] if keep_states else None
    checkpoint_steps = (
        max(1, int(round(checkpoint_every / dt))) if checkpoint_every else None
    )
    checkpoints = [(t0, v.copy())] if checkpoint_steps else None

    trace0 = gen.trace(v)
    max_trace_drift = abs(trace0 - 1.0)
    max_herm_defect = 0.0
    min_eig = np.inf
    max_boundary = gen.boundary_population(v)
    samples_since_check = 0

    for step in range(1, integ.n_steps + 1):
        k1 = mat @ v
        k2 = mat @ (v + (0.5 * dt) * k1)
        k3 = mat @ (v + (0.5 * dt) * k2)
        k4 = mat @ (v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

        is_sample = step % integ.sample_every == 0 or step == integ.n_steps
        if is_sample:
            max_herm_defect = max(max_herm_defect, gen.hermiticity_defect(v))
        v = gen.symmetrize(v)

        if checkpoint_steps and step % checkpoint_steps == 0:
            checkpoints.append((t0 + step * dt, v.copy()))

        if is_sample:
            t = t0 + step * dt
            state = TwoModeDensityMatrix(gen.to_tensor(v), t)
            times.append(t)
            for name, fn in observers.items():
                tracks[name].append(fn(state))
            if keep_states:
                states.append(state)
            max_trace_drift = max(max_trace_drift, abs(gen.trace(v) - 1.0))
            max_boundary = max(max_boundary, gen.boundary_population(v))
            samples_since_check += 1
            if samples_since_check >= check_positivity_every:
                samples_since_check = 0
                eig = state.min_eigenvalue()
                min_eig = min(min_eig, eig)
                if eig < -positivity_tol:
                    raise PositivityError(
                        f"smallest eigenvalue {eig:.3e} below -{positivity_tol:.1e} at t={t:.4f}; "
                        "truncation or step size is failing"
                    )

    final = TwoModeDensityMatrix(gen.to_tensor(v), t0 + integ.n_steps * dt)
    return OpenTrajectory(
        times=np.array(times),
        observables={name: np.array(vals) for name, vals in tracks.items()},
        final=final,
        diagnostics={
            "max_trace_drift": max_trace_drift,
            "max_hermiticity_defect": max_herm_defect,
            "min_eigenvalue": None if np.isinf(min_eig) else float(min_eig),
            "max_boundary_population": max_boundary,
            "pair_sector": pair_sector,
            "dt": dt,
            "n_steps": integ.n_steps,
        },
        states=states,
        checkpoints=checkpoints,
        generator=gen,
    )


def integrate_between(
    gen: LindbladGenerator, v: np.ndarray, t_from: float, t_to: float, dt: float
) -> np.ndarray:
    """RK4 from t_from to t_to with fixed dt plus one shortened final step."""
    if t_to < t_from:
        raise ValueError("cannot integrate backwards")
    mat = gen.matrix
    remaining = t_to - t_from
    n_full = int(remaining / dt)
    v = v.copy()
    for step_dt in [dt] * n_full + [remaining - n_full * dt]:
        if step_dt <= 0:
            continue
        k1 = mat @ v
        k2 = mat @ (v + (0.5 * step_dt) * k1)
        k3 = mat @ (v + (0.5 * step_dt) * k2)
        k4 = mat @ (v + step_dt * k3)
        v = v + (step_dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        v = gen.symmetrize(v)
    return v


def steady_state(params: SystemParams, pair_sector: bool = True) -> TwoModeDensityMatrix:
    """Stationary state of the generator with unit trace (dense solve).

    With any damping on, the generator restricted to the pair sector has a
    unique trace-one stationary state; it is the long-time limit of every
    vacuum-seeded trajectory.  For thermal reservoirs the truncated
    generator leaks a little trace through the boundary, so the returned
    state is quasi-stationary: the unavoidable defect is confined to the
    equation traded for the trace constraint and equals the boundary leak
    rate; every other equation is satisfied to round-off, which is what the
    residual check enforces.
    """
    if params.gamma_a <= 0 and params.gamma_b <= 0:
        raise ValueError("steady state requires damping")
    gen = build_generator(params, pair_sector=pair_sector)
    a = gen.matrix.toarray()
    tr_row = np.zeros(gen.dim, dtype=complex)
    tr_row[gen.diag_indices] = 1.0
    i0 = gen.index[(0, 0, 0, 0)]
    a[i0, :] = tr_row
    b = np.zeros(gen.dim, dtype=complex)
    b[i0] = 1.0
    v = np.linalg.solve(a, b)
    flow = np.abs(gen.matrix @ v)
    flow[i0] = 0.0
    resid = float(flow.max())
    if resid > 1e-8:
        raise RuntimeError(f"stationary solve residual {resid:.2e} too large")
    v = gen.symmetrize(v)
    return TwoModeDensityMatrix(gen.to_tensor(v), np.inf)
