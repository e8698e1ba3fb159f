"""Qubit-qubit entanglement analysis: projections, negativities, event detection.

A qubit pair (i, j) singles out the four product states

    |i>_a|i>_b,  |i>_a|j>_b,  |j>_a|i>_b,  |j>_a|j>_b

and the analysis works with the 4x4 block of the full density matrix on
this basis.  The block is a projection, not a partial trace: its trace is
the population of the subspace and it is kept UNNORMALIZED by default.
That convention is what the long-time negativity plateaus of the damped
dynamics calibrate against (the renormalized variant overshoots them); it
also leaves every entanglement threshold intact, since rescaling by a
positive weight cannot change eigenvalue signs.

Negativity is normalized so Bell states give 1: twice the magnitude of the
most negative eigenvalue of the partial transpose, transposing the mode-b
side.  For vacuum-seeded trajectories the projected block is exactly of X
form (diagonal plus the outer corners), where the partial transpose
diagonalizes in closed form; the generic eigensolver route and the X-form
route are kept as mutually checking implementations.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closed import IntegratorConfig
from .fock import SystemParams, TwoModeDensityMatrix, vacuum_density
from . import lindblad

#: negativity below which a sample counts as disentangled
DEAD_THRESHOLD = 1e-6
#: default minimum plateau length, in samples
MIN_DEAD_SAMPLES = 20
#: off-pattern tolerance for accepting a 4x4 block as X-form
X_FORM_TOL = 1e-10


class XFormError(ValueError):
    """Off-pattern elements exceed tolerance; the block is not an X matrix."""


@dataclass(frozen=True)
class QubitPairSpec:
    """The two Fock levels spanning the qubit in each mode."""

    i: int
    j: int

    def __post_init__(self):
        if not (0 <= self.i < self.j):
            raise ValueError("need 0 <= i < j")

    @property
    def label(self) -> str:
        """Subsystem tag in the N_ijji naming scheme, e.g. '0110'."""
        return f"{self.i}{self.j}{self.j}{self.i}"


@dataclass
class QubitPairReduced:
    """4x4 block of the full state on a qubit-pair product basis."""

    matrix: np.ndarray
    pair: QubitPairSpec
    weight: float
    renormalized: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (4, 4):
            raise ValueError("reduced block must be 4x4")


@dataclass(frozen=True)
class EntanglementEvent:
    """Sudden death or sudden birth, with its bracketing sample interval."""

    kind: str  # "sudden_death" | "sudden_birth"
    t: float
    pair: QubitPairSpec | None
    bracket: tuple


def project_qubit_pair(
    rho: TwoModeDensityMatrix | np.ndarray,
    pair: QubitPairSpec,
    renormalize: bool = False,
) -> QubitPairReduced:
    """Project the full state onto the (i, j) qubit-pair product basis."""
    r = rho.rho if isinstance(rho, TwoModeDensityMatrix) else np.asarray(rho)
    if pair.j > r.shape[0] - 1:
        raise ValueError("pair levels exceed the truncation")
    levels = (pair.i, pair.j)
    block = np.empty((4, 4), dtype=complex)
    for p, (na, kb) in enumerate(_basis(levels)):
        for q, (ma, lb) in enumerate(_basis(levels)):
            block[p, q] = r[na, ma, kb, lb]
    weight = float(np.real(np.trace(block)))
    if renormalize:
        if weight <= 0:
            raise ValueError("cannot renormalize a block with non-positive weight")
        block = block / weight
    return QubitPairReduced(block, pair, weight, renormalize)


def _basis(levels):
    i, j = levels
    return ((i, i), (i, j), (j, i), (j, j))


def partial_transpose(matrix: np.ndarray) -> np.ndarray:
    """Transpose the second qubit's indices of a 4x4 two-qubit matrix."""
    return np.ascontiguousarray(
        np.asarray(matrix).reshape(2, 2, 2, 2).transpose(0, 3, 2, 1)
    ).reshape(4, 4)


def negativity_signed(reduced: QubitPairReduced | np.ndarray) -> float:
    """-2 times the smallest partial-transpose eigenvalue, without clamping.

    Positive iff the block is entangled; crosses zero transversally at
    sudden-death and sudden-birth instants, which makes it the right
    quantity to root-find on.
    """
    m = reduced.matrix if isinstance(reduced, QubitPairReduced) else np.asarray(reduced)
    eigs = np.linalg.eigvalsh(partial_transpose(m))
    return float(-2.0 * eigs.min())


def negativity(reduced: QubitPairReduced | np.ndarray) -> float:
    """Entanglement negativity, max(0, -2 min eig of the partial transpose)."""
    return max(0.0, negativity_signed(reduced))


def xstate_eigenvalues(reduced: QubitPairReduced | np.ndarray, tol: float = X_FORM_TOL) -> np.ndarray:
    """Partial-transpose eigenvalues of an X-form block, in closed form.

    With diagonal (a11, a22, a33, a44) and corners a14, a41 the partial
    transpose has eigenvalues

        a11,  a44,  (a22 + a33 -+ sqrt((a22 - a33)^2 + 4 a14 a41)) / 2.

    Raises XFormError when off-pattern entries exceed ``tol`` relative to
    the block's scale.
    """
    m = reduced.matrix if isinstance(reduced, QubitPairReduced) else np.asarray(reduced)
    pattern = np.zeros((4, 4), dtype=bool)
    pattern[np.diag_indices(4)] = True
    pattern[0, 3] = pattern[3, 0] = True
    scale = max(float(np.max(np.abs(m))), 1e-300)
    off = float(np.max(np.abs(m[~pattern])))
    if off > tol * max(scale, 1.0):
        raise XFormError(f"off-pattern magnitude {off:.2e} exceeds tolerance")
    a11, a22, a33, a44 = (float(np.real(m[p, p])) for p in range(4))
    root = np.sqrt(abs((a22 - a33) ** 2 + 4 * np.real(m[0, 3] * m[3, 0])))
    lam2 = 0.5 * ((a22 + a33) - root)
    lam3 = 0.5 * ((a22 + a33) + root)
    return np.array([a11, lam2, lam3, a44])


def xstate_negativity(reduced: QubitPairReduced | np.ndarray, tol: float = X_FORM_TOL) -> float:
    """Negativity from the X-form closed form; equals :func:`negativity` on X input."""
    return max(0.0, float(-2.0 * xstate_eigenvalues(reduced, tol).min()))


def border_ratio(rho: TwoModeDensityMatrix | np.ndarray, pair: QubitPairSpec) -> tuple:
    """Coherence and population products whose crossing marks death/birth.

    Returns (F, G) with F the squared magnitude of the corner coherence
    between |i,i> and |j,j> and G the product of the |i,j> and |j,i>
    populations.  For X-form blocks the partial transpose has a negative
    eigenvalue exactly when F > G, so sign(F - G) = sign of the signed
    negativity and the F/G crossings coincide with sudden death and birth.
    """
    r = rho.rho if isinstance(rho, TwoModeDensityMatrix) else np.asarray(rho)
    i, j = pair.i, pair.j
    coherence = r[i, j, i, j] * r[j, i, j, i]
    population = r[i, i, j, j] * r[j, j, i, i]
    return float(np.real(coherence)), float(np.real(population))


def detect_events(
    times: np.ndarray,
    values: np.ndarray,
    pair: QubitPairSpec | None = None,
    dead_threshold: float = DEAD_THRESHOLD,
    min_dead_samples: int = MIN_DEAD_SAMPLES,
    min_dead_duration: float | None = None,
    evaluator=None,
    refine_tol: float = 1e-3,
) -> list:
    """Find sudden-death and sudden-birth events in a sampled negativity.

    A maximal run of samples below ``dead_threshold`` is a plateau; it
    qualifies as death when it lasts at least ``min_dead_samples`` samples
    (or ``min_dead_duration`` time units when given, which takes
    precedence).  Death is the entry into a qualifying plateau, birth the
    exit from one.  Instantaneous zero touches, shorter than the minimum,
    produce no events.  A qualifying plateau running into the end of the
    series yields a death without a birth.

    When ``evaluator`` is provided (a callable t -> signed negativity) each
    event time is refined by bisection until the bracket is narrower than
    ``refine_tol``.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.shape != values.shape:
        raise ValueError("times and values must have equal length")
    n = len(times)
    if min_dead_duration is not None:
        if n > 1:
            step = float(np.median(np.diff(times)))
            min_run = max(1, int(round(min_dead_duration / step)))
        else:
            min_run = 1
    else:
        min_run = min_dead_samples

    dead = values < dead_threshold
    events = []
    i = 0
    while i < n:
        if not dead[i]:
            i += 1
            continue
        j = i
        while j < n and dead[j]:
            j += 1
        if j - i >= min_run:
            if i > 0:
                events.append(_make_event("sudden_death", times, i - 1, i, pair, evaluator, refine_tol))
            if j < n:
                events.append(_make_event("sudden_birth", times, j - 1, j, pair, evaluator, refine_tol))
        i = j
    return events


def _make_event(kind, times, i_lo, i_hi, pair, evaluator, refine_tol):
    t_lo, t_hi = float(times[i_lo]), float(times[i_hi])
    if evaluator is not None:
        t_lo, t_hi = _bisect_zero(evaluator, t_lo, t_hi, refine_tol)
    return EntanglementEvent(kind=kind, t=0.5 * (t_lo + t_hi), pair=pair, bracket=(t_lo, t_hi))


def _bisect_zero(f, t_lo: float, t_hi: float, tol: float):
    """Shrink [t_lo, t_hi] around a sign change of f by bisection."""
    f_lo = f(t_lo)
    f_hi = f(t_hi)
    if f_lo == 0.0:
        return t_lo, t_lo
    if f_hi == 0.0:
        return t_hi, t_hi
    if np.sign(f_lo) == np.sign(f_hi):
        # no strict sign change (e.g. the function only touches zero);
        # return the unrefined bracket rather than guessing
        return t_lo, t_hi
    while t_hi - t_lo > tol:
        t_mid = 0.5 * (t_lo + t_hi)
        f_mid = f(t_mid)
        if f_mid == 0.0:
            return t_mid, t_mid
        if np.sign(f_mid) == np.sign(f_lo):
            t_lo, f_lo = t_mid, f_mid
        else:
            t_hi, f_hi = t_mid, f_mid
    return t_lo, t_hi


def make_negativity_evaluator(traj: lindblad.OpenTrajectory, pair: QubitPairSpec):
    """Signed-negativity-at-time callable backed by trajectory checkpoints.

    Requires the trajectory to have been run with ``checkpoint_every``; each
    call re-integrates from the latest checkpoint at or before t with the
    trajectory's own step size.
    """
    if not traj.checkpoints or traj.generator is None:
        raise ValueError("trajectory carries no checkpoints to refine from")
    gen = traj.generator
    dt = traj.diagnostics["dt"]
    cp_times = np.array([t for t, _ in traj.checkpoints])

    def signed_negativity(t: float) -> float:
        idx = int(np.searchsorted(cp_times, t + 1e-12) - 1)
        if idx < 0:
            raise ValueError(f"t={t} precedes the first checkpoint")
        t0, v0 = traj.checkpoints[idx]
        v = lindblad.integrate_between(gen, v0, t0, t, dt)
        rho = gen.to_tensor(v)
        return negativity_signed(project_qubit_pair(rho, pair).matrix)

    return signed_negativity


@dataclass
class BoundaryCurves:
    """Death/birth instants along a damping grid for one qubit pair."""

    pair: QubitPairSpec
    gammas: np.ndarray
    death_times: list
    birth_times: list
    events: list = field(default_factory=list)


def sweep_gamma_boundaries(
    params: SystemParams,
    gammas,
    pair: QubitPairSpec,
    integ: IntegratorConfig,
    min_dead_duration: float | None = 10.0,
    workers: int = 1,
) -> BoundaryCurves:
    """First death and subsequent birth instants as damping is swept.

    Both damping rates are set to each grid value in turn; each run starts
    from vacuum.  Returns None entries where a run shows no qualifying
    event inside the integration window.
    """
    gammas = list(gammas)
    if len(gammas) < 2:
        raise ValueError("need a grid of at least 2 damping values")
    jobs = [(params, g, pair, integ) for g in gammas]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            tracks = list(pool.map(_negativity_track, jobs))
    else:
        tracks = [_negativity_track(job) for job in jobs]

    death_times, birth_times, all_events = [], [], []
    for times, values in tracks:
        events = detect_events(times, values, pair, min_dead_duration=min_dead_duration)
        death = next((e for e in events if e.kind == "sudden_death"), None)
        birth = None
        if death is not None:
            birth = next((e for e in events if e.kind == "sudden_birth" and e.t > death.t), None)
        death_times.append(death.t if death else None)
        birth_times.append(birth.t if birth else None)
        all_events.append(events)
    return BoundaryCurves(
        pair=pair, gammas=np.asarray(gammas, dtype=float),
        death_times=death_times, birth_times=birth_times, events=all_events,
    )


def _negativity_track(job):
    params, gamma, pair, integ = job
    p = SystemParams(
        chi_a=params.chi_a, chi_b=params.chi_b, g=params.g,
        gamma_a=gamma, gamma_b=gamma, nbar_a=params.nbar_a, nbar_b=params.nbar_b,
        n_max=params.n_max,
    )
    traj = lindblad.evolve_open(
        vacuum_density(p), p, integ,
        observers={"N": lambda rho: negativity(project_qubit_pair(rho, pair).matrix)},
        check_positivity_every=20,
    )
    return traj.times, traj.observables["N"]
