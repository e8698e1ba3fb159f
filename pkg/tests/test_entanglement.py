import numpy as np
import pytest

from kerrpump import (
    IntegratorConfig,
    QubitPairSpec,
    SystemParams,
    XFormError,
    amplitudes_to_density,
    border_ratio,
    detect_events,
    evolve_open,
    make_negativity_evaluator,
    negativity,
    negativity_signed,
    partial_transpose,
    project_qubit_pair,
    sweep_gamma_boundaries,
    vacuum_density,
    xstate_eigenvalues,
    xstate_negativity,
)

from conftest import pair_superposition


def random_x_matrix(rng, unit_trace=False):
    """Random Hermitian X-form 4x4 with nonnegative diagonal."""
    diag = rng.random(4)
    if unit_trace:
        diag /= diag.sum()
    corner = (rng.standard_normal() + 1j * rng.standard_normal()) * 0.5
    m = np.diag(diag).astype(complex)
    m[0, 3] = corner
    m[3, 0] = np.conj(corner)
    return m


class TestProjection:
    def test_vacuum(self):
        red = project_qubit_pair(vacuum_density(SystemParams(n_max=3)), QubitPairSpec(0, 1))
        want = np.zeros((4, 4))
        want[0, 0] = 1.0
        assert np.allclose(red.matrix, want)
        assert red.weight == pytest.approx(1.0)

    def test_bell_block(self):
        # (|00> + i|11>)/sqrt(2): populations 1/2, corners -+i/2
        rho = amplitudes_to_density(pair_superposition(3, 0, 1, phase=1j))
        red = project_qubit_pair(rho, QubitPairSpec(0, 1))
        m = red.matrix
        assert m[0, 0] == pytest.approx(0.5)
        assert m[3, 3] == pytest.approx(0.5)
        assert m[0, 3] == pytest.approx(-0.5j)
        assert m[3, 0] == pytest.approx(+0.5j)
        assert m[1, 1] == 0.0 and m[2, 2] == 0.0

    def test_unnormalized_weight(self):
        # pair (1,2) block of a (0,1) superposition only catches the |11|
        # population; the projection is kept unnormalized
        rho = amplitudes_to_density(pair_superposition(3, 0, 1))
        red = project_qubit_pair(rho, QubitPairSpec(1, 2))
        assert red.weight == pytest.approx(0.5)
        assert not red.renormalized
        ren = project_qubit_pair(rho, QubitPairSpec(1, 2), renormalize=True)
        assert np.trace(ren.matrix).real == pytest.approx(1.0)

    def test_level_beyond_truncation(self):
        with pytest.raises(ValueError):
            project_qubit_pair(vacuum_density(SystemParams(n_max=2)), QubitPairSpec(0, 3))

    def test_pair_spec_validation(self):
        with pytest.raises(ValueError):
            QubitPairSpec(2, 1)
        assert QubitPairSpec(0, 2).label == "0220"


class TestNegativity:
    def test_bell_states_give_one(self):
        for phase in (1.0, -1.0, 1j, -1j):
            rho = amplitudes_to_density(pair_superposition(3, 0, 1, phase=phase))
            red = project_qubit_pair(rho, QubitPairSpec(0, 1))
            assert negativity(red) == pytest.approx(1.0, abs=1e-12)

    def test_product_state_gives_zero(self):
        red = project_qubit_pair(vacuum_density(SystemParams(n_max=3)), QubitPairSpec(0, 1))
        assert negativity(red) == 0.0
        assert negativity_signed(red) <= 0.0

    def test_partial_transpose_convention(self):
        m = np.arange(16, dtype=complex).reshape(4, 4)
        pt = partial_transpose(m)
        # swapping the second qubit's ket/bra moves (0,3) to (1,2)
        assert pt[1, 2] == m[0, 3]
        assert pt[0, 0] == m[0, 0]
        assert pt[2, 1] == m[3, 0]

    def test_local_phase_invariance(self, rng):
        pair_phase = np.exp(1j * rng.uniform(0, 2 * np.pi, size=2))
        u = np.kron(np.diag([1.0, pair_phase[0]]), np.diag([1.0, pair_phase[1]]))
        for _ in range(20):
            m = random_x_matrix(rng)
            rotated = u @ m @ u.conj().T
            assert negativity(rotated) == pytest.approx(negativity(m), abs=1e-12)

    def test_local_unitary_invariance(self, rng):
        for _ in range(10):
            qa, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            qb, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
            u = np.kron(qa, qb)
            m = random_x_matrix(rng, unit_trace=True)
            rotated = u @ m @ u.conj().T
            assert negativity(rotated) == pytest.approx(negativity(m), abs=1e-11)


class TestXState:
    def test_diagonal_input(self):
        m = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
        assert np.allclose(np.sort(xstate_eigenvalues(m)), [0.1, 0.2, 0.3, 0.4])
        assert xstate_negativity(m) == 0.0

    def test_bell_closed_form(self):
        rho = amplitudes_to_density(pair_superposition(3, 0, 1, phase=1j))
        red = project_qubit_pair(rho, QubitPairSpec(0, 1))
        eigs = xstate_eigenvalues(red)
        assert eigs.min() == pytest.approx(-0.5, abs=1e-12)
        assert xstate_negativity(red) == pytest.approx(1.0, abs=1e-12)

    def test_matches_dense_eigensolver(self, rng):
        for _ in range(1000):
            m = random_x_matrix(rng)
            assert xstate_negativity(m) == pytest.approx(negativity(m), abs=1e-12)

    def test_rejects_off_pattern(self, rng):
        m = random_x_matrix(rng)
        m[0, 1] = 0.05
        m[1, 0] = 0.05
        with pytest.raises(XFormError):
            xstate_negativity(m)


class TestBorderRatio:
    def test_bell_block_entangled(self):
        rho = amplitudes_to_density(pair_superposition(3, 0, 1, phase=1j))
        f, g = border_ratio(rho, QubitPairSpec(0, 1))
        assert f == pytest.approx(0.25)
        assert g == pytest.approx(0.0)

    def test_diagonal_mixture_unentangled(self):
        d = 3
        rho = np.zeros((d, d, d, d), dtype=complex)
        rho[0, 0, 1, 1] = 0.5  # |0,1> population
        rho[1, 1, 0, 0] = 0.5  # |1,0> population
        f, g = border_ratio(rho, QubitPairSpec(0, 1))
        assert f == 0.0
        assert g == pytest.approx(0.25)

    def test_sign_matches_negativity_along_a_damped_run(self):
        p = SystemParams(g=0.6, gamma_a=0.05, gamma_b=0.05, n_max=5)
        pair = QubitPairSpec(0, 1)
        traj = evolve_open(
            vacuum_density(p), p, IntegratorConfig(dt=1e-3, t_end=30.0),
            observers={
                "Ns": lambda rho: negativity_signed(project_qubit_pair(rho, pair).matrix),
                "F": lambda rho: border_ratio(rho, pair)[0],
                "G": lambda rho: border_ratio(rho, pair)[1],
            },
            check_positivity_every=50,
        )
        ns = traj.observables["Ns"]
        fg = traj.observables["F"] - traj.observables["G"]
        # away from the crossings the signs must agree exactly
        significant = np.abs(ns) > 1e-9
        assert np.all(np.sign(ns[significant]) == np.sign(fg[significant]))


class TestClosedRunStructure:
    def test_entanglement_transfer_zeros_coincide(self):
        # undamped weak pumping: when the (0,1) negativity touches zero the
        # (1,2) one vanishes with it (both need the single-pair amplitude),
        # while (0,2) entanglement survives
        from kerrpump import IntegratorConfig, SystemParams, evolve_closed, make_vacuum_state

        p = SystemParams(g=0.15, n_max=6)
        traj = evolve_closed(make_vacuum_state(p), p, IntegratorConfig(dt=1e-3, t_end=25.0))
        tracks = {key: [] for key in ("01", "02", "12")}
        for state in traj.states:
            rho = amplitudes_to_density(state)
            for key, pair in (("01", QubitPairSpec(0, 1)), ("02", QubitPairSpec(0, 2)),
                              ("12", QubitPairSpec(1, 2))):
                tracks[key].append(negativity(project_qubit_pair(rho, pair).matrix))
        tracks = {k: np.array(v) for k, v in tracks.items()}
        idx = 1 + int(np.argmin(tracks["01"][1:]))  # skip the vacuum start
        assert tracks["01"][idx] < 0.01
        assert tracks["12"][idx] < 0.01
        assert tracks["02"][idx] > 0.02


class TestDetectEvents:
    def test_no_events_for_instantaneous_touches(self):
        t = np.arange(0, 40.0, 0.05)
        values = np.abs(np.sin(0.5 * t))  # touches zero but never dwells
        assert detect_events(t, values) == []

    def test_death_and_birth_with_brackets(self):
        t = np.arange(0, 30.0, 0.05)
        values = np.where((t > 10.0) & (t < 20.0), 0.0, 0.5)
        events = detect_events(t, values)
        assert [e.kind for e in events] == ["sudden_death", "sudden_birth"]
        death, birth = events
        assert death.bracket[0] < 10.05 <= death.bracket[1] + 1e-12
        assert death.bracket[1] - death.bracket[0] == pytest.approx(0.05)
        assert 10.0 < death.t < 10.1
        assert 19.95 < birth.t < 20.05

    def test_terminal_plateau_is_death_without_birth(self):
        t = np.arange(0, 10.0, 0.05)
        values = np.where(t < 5.0, 0.3, 0.0)
        events = detect_events(t, values)
        assert [e.kind for e in events] == ["sudden_death"]

    def test_min_duration_filters_short_windows(self):
        t = np.arange(0, 30.0, 0.05)
        values = np.full_like(t, 0.4)
        values[(t > 5.0) & (t < 6.5)] = 0.0    # 1.5-unit touch
        values[(t > 15.0) & (t < 27.0)] = 0.0  # 12-unit plateau
        events = detect_events(t, values, min_dead_duration=10.0)
        assert len(events) == 2
        assert events[0].kind == "sudden_death" and 14.9 < events[0].t < 15.2
        # the default sample rule catches both windows
        assert len(detect_events(t, values)) == 4

    def test_bisection_refinement(self):
        t = np.arange(0, 10.0, 0.5)
        crossing = 3.21
        values = np.maximum(0.0, crossing - t)
        events = detect_events(t, values, min_dead_samples=3, evaluator=lambda x: crossing - x)
        assert events
        death = events[0]
        assert death.bracket[1] - death.bracket[0] <= 1e-3
        assert death.t == pytest.approx(crossing, abs=1e-3)

    def test_mismatched_lengths_rejected(self):
        with pytest.raises(ValueError):
            detect_events(np.arange(4.0), np.arange(5.0))


class TestRefinerIntegration:
    def test_checkpoint_evaluator_matches_samples(self):
        p = SystemParams(g=0.6, gamma_a=0.05, gamma_b=0.05, n_max=4)
        pair = QubitPairSpec(0, 1)
        traj = evolve_open(
            vacuum_density(p), p, IntegratorConfig(dt=1e-3, t_end=8.0),
            observers={"Ns": lambda rho: negativity_signed(project_qubit_pair(rho, pair).matrix)},
            checkpoint_every=2.0,
            check_positivity_every=40,
        )
        f = make_negativity_evaluator(traj, pair)
        for idx in (20, 77, 130):
            assert f(traj.times[idx]) == pytest.approx(traj.observables["Ns"][idx], abs=1e-9)

    def test_evaluator_requires_checkpoints(self):
        p = SystemParams(g=0.5, gamma_a=0.05, gamma_b=0.05, n_max=3)
        traj = evolve_open(vacuum_density(p), p, IntegratorConfig(dt=1e-3, t_end=1.0))
        with pytest.raises(ValueError):
            make_negativity_evaluator(traj, QubitPairSpec(0, 1))


class TestSweep:
    def test_death_times_decrease_with_damping(self):
        p = SystemParams(g=0.6, n_max=6)
        curves = sweep_gamma_boundaries(
            p, [0.05, 0.1], QubitPairSpec(0, 1),
            IntegratorConfig(dt=1e-3, t_end=60.0),
            min_dead_duration=10.0,
        )
        assert curves.death_times[0] is not None
        assert curves.death_times[1] is not None
        assert curves.death_times[1] < curves.death_times[0]

    def test_workers_do_not_change_results(self):
        p = SystemParams(g=0.6, n_max=4)
        integ = IntegratorConfig(dt=1e-3, t_end=30.0)
        serial = sweep_gamma_boundaries(p, [0.05, 0.1], QubitPairSpec(0, 1), integ, workers=1)
        parallel = sweep_gamma_boundaries(p, [0.05, 0.1], QubitPairSpec(0, 1), integ, workers=2)
        assert serial.death_times == parallel.death_times
        assert serial.birth_times == parallel.birth_times

    def test_rejects_singleton_grid(self):
        with pytest.raises(ValueError):
            sweep_gamma_boundaries(
                SystemParams(g=0.6), [0.01], QubitPairSpec(0, 1), IntegratorConfig(t_end=1.0)
            )
