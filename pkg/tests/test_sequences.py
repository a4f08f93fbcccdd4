import numpy as np
import pytest

from conegate.hamiltonians import FieldParams
from conegate.linalg import bloch_vector, fidelity, is_unitary
from conegate.phases import (
    canonical_phase,
    cone_eigenstate,
    geometric_phase_cone,
    phase_distance,
    two_qubit_loop_params,
)
from conegate.sequences import (
    SINGLE_QUBIT,
    TWO_QUBIT,
    ConditionalLoop,
    FieldLoop,
    FreeEvolve,
    PulseSequence,
    RotX,
    RotY,
    RotZ,
    SOpSolution,
    apply_sequence,
    build_conditional_loop,
    build_s_operation,
    from_json,
    invert_sequence,
    s_operation_params,
    sequence_trajectory,
    simulate_sequence,
    to_json,
)

CNOT_DELTA = 4 / np.sqrt(7)

# frozen from the arctan formulas at delta/J = 1.058, omega1/J = 1
EXPECTED_J_TC = 0.5302750602609773
EXPECTED_PHI_PRIME = 0.5882101538843943


def up_state(dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0] = 1.0
    return psi


def sector_state(b_up: bool, psi_a: np.ndarray) -> np.ndarray:
    b = np.array([1.0, 0.0]) if b_up else np.array([0.0, 1.0])
    return np.kron(b, psi_a).astype(complex)


class TestSOperationParams:
    def test_experimental_point(self):
        sol = s_operation_params(1.058, 1.0, 1.0)
        assert sol.t_c == pytest.approx(EXPECTED_J_TC, abs=1e-12)
        assert sol.phi_prime == pytest.approx(EXPECTED_PHI_PRIME, abs=1e-12)

    def test_constraint_residuals(self, rng):
        for _ in range(30):
            j = rng.uniform(0.2, 2.0)
            delta = rng.uniform(0.1, 4.0)
            omega1 = rng.uniform(0.1, 5.0)
            sol = s_operation_params(delta, j, omega1)
            r1 = np.tan(sol.phi_prime + j * sol.t_c) - (delta + j) / omega1
            r2 = np.tan(sol.phi_prime - j * sol.t_c) - (delta - j) / omega1
            assert abs(r1) < 1e-12
            assert abs(r2) < 1e-12

    def test_prepared_angles(self):
        sol = s_operation_params(1.058, 1.0, 1.0)
        assert sol.theta_plus == pytest.approx(np.arctan(1.0 / 2.058), abs=1e-14)
        assert sol.theta_minus == pytest.approx(np.arctan(1.0 / 0.058), abs=1e-14)

    def test_symmetric_offset(self):
        # delta = j: the minus constraint collapses to arctan(0) = 0
        sol = s_operation_params(1.0, 1.0, 0.7)
        assert sol.t_c == pytest.approx(0.5 * np.arctan(2.0 / 0.7), abs=1e-14)
        assert sol.phi_prime == pytest.approx(sol.t_c, abs=1e-14)

    def test_monotone_in_omega1(self):
        omega1 = np.arange(0.5, 10.0 + 1e-9, 0.05)
        sols = [s_operation_params(1.058, 1.0, float(w)) for w in omega1]
        j_tc = np.array([s.t_c for s in sols])
        phi = np.array([s.phi_prime for s in sols])
        assert np.all(np.diff(j_tc) < 0)
        assert np.all(np.diff(phi) < 0)

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            s_operation_params(1.0, 1.0, 0.0)
        with pytest.raises(ValueError):
            s_operation_params(1.0, 0.0, 1.0)


class TestBuildSOperation:
    def test_prepares_conditional_eigenstates(self):
        sol = s_operation_params(1.058, 1.0, 1.0)
        seq = build_s_operation(sol, 1.058, 1.0)
        u4 = apply_sequence(seq, 4)
        for b_up, offset in ((True, 2.058), (False, 0.058)):
            out = u4 @ sector_state(b_up, np.array([1, 0]))
            target = cone_eigenstate(offset, 1.0).psi0
            a_part = out[:2] if b_up else out[2:]
            assert abs(target.conj() @ a_part) == pytest.approx(1.0, abs=1e-12)

    def test_many_random_draws(self, rng):
        for _ in range(50):
            j = rng.uniform(0.2, 2.0)
            delta = j * rng.uniform(1.01, 4.0)
            omega1 = rng.uniform(0.2, 4.0)
            sol = s_operation_params(delta, j, omega1)
            seq = build_s_operation(sol, delta, j)
            u4 = apply_sequence(seq, 4)
            for b_up, offset in ((True, delta + j), (False, delta - j)):
                out = u4 @ sector_state(b_up, np.array([1, 0]))
                target = cone_eigenstate(offset, omega1).psi0
                a_part = out[:2] if b_up else out[2:]
                assert abs(target.conj() @ a_part) >= 1 - 1e-8

    def test_uncoupled_limit(self):
        # j -> 0: both branches coincide with the single-spin eigenstate;
        # the timing becomes irrelevant, so the record is built by hand
        delta, omega1 = 1.3, 0.9
        phi = float(np.arctan(delta / omega1))
        sol = SOpSolution(t_c=0.0, phi_prime=phi,
                          theta_plus=np.pi / 2 - phi, theta_minus=np.pi / 2 - phi)
        seq = build_s_operation(sol, delta, 0.0)
        u4 = apply_sequence(seq, 4)
        target = cone_eigenstate(delta, omega1).psi0
        for b_up in (True, False):
            out = u4 @ sector_state(b_up, np.array([1, 0]))
            a_part = out[:2] if b_up else out[2:]
            assert abs(target.conj() @ a_part) == pytest.approx(1.0, abs=1e-12)

    def test_rejects_inconsistent_record(self):
        sol = s_operation_params(1.058, 1.0, 1.0)
        broken = SOpSolution(sol.t_c * 1.01, sol.phi_prime,
                             sol.theta_plus, sol.theta_minus)
        with pytest.raises(ValueError):
            build_s_operation(broken, 1.058, 1.0)


class TestInvertSequence:
    def test_single_rotation(self):
        seq = PulseSequence((RotY(np.pi / 2),))
        assert invert_sequence(seq).steps == (RotY(-np.pi / 2),)

    def test_empty(self):
        seq = PulseSequence(())
        assert invert_sequence(seq).steps == ()

    def test_structural_involution(self):
        sol = s_operation_params(1.5, 1.0, 1.2)
        seq = build_s_operation(sol, 1.5, 1.0)
        assert invert_sequence(invert_sequence(seq)) == seq

    def test_s_inverse_cancels(self):
        sol = s_operation_params(1.058, 1.0, 1.0)
        seq = build_s_operation(sol, 1.058, 1.0)
        u = apply_sequence(seq, 4)
        u_inv = apply_sequence(invert_sequence(seq), 4)
        assert fidelity(u_inv @ u, np.eye(4, dtype=complex)) >= 1 - 1e-10

    def test_loop_inverse_cancels(self):
        gamma = -2.0
        p = FieldParams(1.0, 1.0, gamma, omega_z=gamma)
        seq = PulseSequence((FieldLoop(p),), frame=SINGLE_QUBIT)
        u = apply_sequence(seq, 2)
        u_inv = apply_sequence(invert_sequence(seq), 2)
        assert np.max(np.abs(u_inv @ u - np.eye(2))) < 1e-12
        # the integrator route inverts too
        u_sim = simulate_sequence(seq, 2, steps_per_loop=4000)
        u_inv_sim = simulate_sequence(invert_sequence(seq), 2, steps_per_loop=4000)
        assert fidelity(u_inv_sim @ u_sim, np.eye(2, dtype=complex)) >= 1 - 1e-10


class TestApplySequence:
    def test_y_pulse_convention(self):
        u = apply_sequence(PulseSequence((RotY(np.pi / 2),)), 2)
        out = u @ up_state(2)
        assert np.allclose(bloch_vector(out), [1, 0, 0], atol=1e-15)

    def test_z_pulse_matrix(self):
        alpha = 0.73
        u = apply_sequence(PulseSequence((RotZ(alpha),)), 2)
        assert np.allclose(u, np.diag([np.exp(-0.5j * alpha), np.exp(0.5j * alpha)]))

    def test_time_order_is_left_to_right(self):
        seq = PulseSequence((RotY(np.pi / 2), RotZ(np.pi / 2)))
        out = apply_sequence(seq, 2) @ up_state(2)
        # y pulse to +x, then a quarter turn about z lands on +y
        assert np.allclose(bloch_vector(out), [0, 1, 0], atol=1e-14)

    def test_frame_dim_mismatch(self):
        seq = PulseSequence((RotX(0.1),), frame=TWO_QUBIT)
        with pytest.raises(ValueError):
            apply_sequence(seq, 2)
        seq2 = PulseSequence((RotX(0.1),), frame=SINGLE_QUBIT)
        with pytest.raises(ValueError):
            apply_sequence(seq2, 4)

    def test_coupled_free_evolution_needs_two_qubit_frame(self):
        seq = PulseSequence((FreeEvolve(1.0, 0.5, j=1.0),), frame=SINGLE_QUBIT)
        with pytest.raises(ValueError):
            apply_sequence(seq, 2)

    def test_conditional_loop_needs_dim_4(self):
        step = FieldLoop(ConditionalLoop(1.5, 1.0))
        seq = PulseSequence((step,), frame=SINGLE_QUBIT)
        with pytest.raises(ValueError):
            apply_sequence(seq, 2)


class TestPrimitiveValidation:
    def test_negative_duration(self):
        with pytest.raises(ValueError):
            FreeEvolve(-1.0, 1.0)

    def test_nonpositive_revolutions(self):
        with pytest.raises(ValueError):
            FieldLoop(FieldParams(1, 1, -2, omega_z=-2), revolutions=0.0)

    def test_loop_needs_rotation(self):
        with pytest.raises(ValueError):
            FieldLoop(FieldParams(1, 1, 0.0))

    def test_compensation_consistency(self):
        with pytest.raises(ValueError):
            FieldLoop(FieldParams(1, 1, -2.0), compensated=True)
        with pytest.raises(ValueError):
            FieldLoop(FieldParams(1, 1, -2.0, omega_z=-2.0), compensated=False)


class TestConditionalLoopSequence:
    def test_composite_is_diagonal(self):
        seq = build_conditional_loop(CNOT_DELTA, 1.0)
        u = apply_sequence(seq, 4)
        off = u - np.diag(np.diag(u))
        assert np.max(np.abs(off)) < 1e-12

    def test_diagonal_phases(self):
        setting = two_qubit_loop_params(CNOT_DELTA, 1.0)
        g_plus = geometric_phase_cone(setting.theta_plus)
        g_minus = geometric_phase_cone(setting.theta_minus)
        u = apply_sequence(build_conditional_loop(CNOT_DELTA, 1.0), 4)
        expected = (g_plus, -g_plus, g_minus, -g_minus)
        for k in range(4):
            assert phase_distance(np.angle(u[k, k]), expected[k]) < 1e-10

    def test_phase_antisymmetry(self):
        u = apply_sequence(build_conditional_loop(1.8, 1.0), 4)
        angles = np.angle(np.diag(u))
        assert phase_distance(angles[0], -angles[1]) < 1e-10
        assert phase_distance(angles[2], -angles[3]) < 1e-10

    def test_simulated_composite_matches_target(self):
        from conegate.gates import conditional_phase_diag

        seq = build_conditional_loop(CNOT_DELTA, 1.0)
        u = simulate_sequence(seq, 4, steps_per_loop=20_000)
        target = conditional_phase_diag(CNOT_DELTA, 1.0)
        assert fidelity(u, target) >= 1 - 1e-6
        off = u - np.diag(np.diag(u))
        assert np.max(np.abs(off)) < 1e-7

    def test_requires_offset_above_coupling(self):
        with pytest.raises(ValueError):
            build_conditional_loop(0.9, 1.0)

    def test_composite_unitary(self):
        assert is_unitary(apply_sequence(build_conditional_loop(2.0, 1.0), 4), atol=1e-10)


class TestSimulateSequence:
    def test_matches_closed_form_for_pulses(self):
        seq = PulseSequence((RotY(0.4), RotZ(-1.1), RotX(2.2)))
        assert np.allclose(apply_sequence(seq, 2), simulate_sequence(seq, 2))

    def test_matches_closed_form_for_loops(self):
        gamma = -2.0
        p = FieldParams(1.0, 1.0, gamma, omega_z=gamma)
        seq = PulseSequence((RotY(0.3), FieldLoop(p), RotY(-0.3)))
        u_closed = apply_sequence(seq, 2)
        u_sim = simulate_sequence(seq, 2, steps_per_loop=30_000)
        assert np.max(np.abs(u_closed - u_sim)) < 5e-9


class TestSequenceTrajectory:
    def test_replay_and_accessor(self):
        gamma = -2.0
        p = FieldParams(1.0, 1.0, gamma, omega_z=gamma)
        seq = PulseSequence((RotY(0.2), FieldLoop(p), RotY(-0.2)))
        psi0 = up_state(2)
        traj = sequence_trajectory(seq, 2, psi0, steps_per_loop=4000)
        assert traj.times[0] == 0.0
        assert np.max(np.abs(
            np.einsum("kij,j->ki", traj.propagators, psi0) - traj.states
        )) < 1e-9
        h_mid = traj.hamiltonian_at(traj.duration / 2)
        assert h_mid.shape == (2, 2)


class TestSerialization:
    def build_reference(self) -> PulseSequence:
        sol = s_operation_params(1.058, 1.0, 1.0)
        base = build_s_operation(sol, 1.058, 1.0)
        loop = FieldLoop(ConditionalLoop(1.058, 1.0), revolutions=1.0)
        return PulseSequence(
            base.steps + (loop,) + invert_sequence(base).steps, frame=TWO_QUBIT
        )

    def test_round_trip_is_bit_exact(self):
        seq = self.build_reference()
        text = to_json(seq)
        assert to_json(from_json(text)) == text
        assert from_json(text) == seq

    def test_single_qubit_loop_round_trip(self):
        p = FieldParams(0.123456789012345, 1.0, -2.25, omega_z=-2.25, phase0=0.7)
        seq = PulseSequence((RotZ(-0.1), FieldLoop(p, revolutions=3.0), RotZ(0.1)))
        text = to_json(seq)
        assert to_json(from_json(text)) == text

    def test_inverse_primitives_round_trip(self):
        seq = invert_sequence(self.build_reference())
        text = to_json(seq)
        assert from_json(text) == seq

    def test_malformed_step_reports_index(self):
        with pytest.raises(ValueError, match="step 1"):
            from_json('{"frame": "single-qubit", "steps": '
                      '[{"op": "rot_x", "angle": 1.0}, {"op": "rot_y"}]}')

    def test_unknown_op_rejected(self):
        with pytest.raises(ValueError, match="unknown op"):
            from_json('{"frame": "single-qubit", "steps": [{"op": "warp", "angle": 1}]}')
