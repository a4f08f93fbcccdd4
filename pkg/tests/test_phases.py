import numpy as np
import pytest

from conegate.hamiltonians import FieldParams, h_compensated, h_rotating
from conegate.linalg import SIGMA_X, SIGMA_Z, bloch_vector, eigensystem_2x2
from conegate.phases import (
    canonical_phase,
    compensation_gamma,
    cone_eigenstate,
    dynamical_phase,
    geometric_phase_cone,
    phase_decomposition,
    phase_distance,
    two_qubit_loop_params,
)
from conegate.propagation import (
    Trajectory,
    integrate_loop,
    loop_duration,
    propagator_compensated,
    propagator_uncompensated,
)

from conftest import random_field_draws

CNOT_DELTA = 4 / np.sqrt(7)


def closed_form_loop_trajectory(p: FieldParams, n: int = 2001) -> Trajectory:
    """Trajectory of the upper cone eigenstate under the compensated loop,
    sampled from the closed-form propagator."""
    geom = cone_eigenstate(p.omega0, p.omega1)
    times = np.linspace(0.0, loop_duration(p), n)
    props = np.stack([propagator_compensated(p, float(t)) for t in times])
    states = np.einsum("kij,j->ki", props, geom.psi0)
    return Trajectory(times, states, props, lambda t: h_compensated(p, t))


class TestConeEigenstate:
    def test_vertical_field(self):
        geom = cone_eigenstate(1.5, 0.0)
        assert geom.theta == 0.0
        assert np.allclose(geom.psi0, [1, 0])
        assert geom.eigenvalue == pytest.approx(0.75)

    def test_symmetric_field(self):
        geom = cone_eigenstate(1.0, 1.0)
        assert geom.theta == pytest.approx(np.pi / 4)
        assert np.allclose(geom.psi0, [np.cos(np.pi / 8), np.sin(np.pi / 8)])

    def test_experimental_ratio_cross_check(self):
        geom = cone_eigenstate(2.058, 1.0)
        assert geom.theta == pytest.approx(np.arctan(1 / 2.058), abs=1e-15)
        h0 = 0.5 * (2.058 * SIGMA_Z + 1.0 * SIGMA_X)
        values, vectors = eigensystem_2x2(h0)
        assert geom.eigenvalue == pytest.approx(values[0], abs=1e-14)
        assert np.max(np.abs(geom.psi0 - vectors[:, 0])) < 1e-12

    def test_lower_branch(self):
        geom = cone_eigenstate(1.0, 1.0, branch="lower")
        assert geom.theta == pytest.approx(3 * np.pi / 4)
        assert geom.eigenvalue == pytest.approx(-np.sqrt(2) / 2)
        upper = cone_eigenstate(1.0, 1.0)
        assert abs(upper.psi0.conj() @ geom.psi0) < 1e-14

    def test_eigenstate_property(self, rng):
        for omega0, omega1 in random_field_draws(rng, 20):
            geom = cone_eigenstate(omega0, omega1)
            h0 = 0.5 * (omega0 * SIGMA_Z + omega1 * SIGMA_X)
            residual = h0 @ geom.psi0 - geom.eigenvalue * geom.psi0
            assert np.max(np.abs(residual)) < 1e-10

    def test_zero_field_rejected(self):
        with pytest.raises(ValueError):
            cone_eigenstate(0.0, 0.0)


class TestCompensationGamma:
    def test_symmetric_value(self):
        assert compensation_gamma(1.0, 1.0) == -2.0

    def test_vertical_limit(self):
        assert compensation_gamma(1.5, 0.0) == pytest.approx(-1.5)

    def test_zero_vertical_rejected(self):
        with pytest.raises(ValueError):
            compensation_gamma(0.0, 1.0)

    def test_nulls_energy_expectation(self, rng):
        for omega0, omega1 in random_field_draws(rng, 20):
            gamma = compensation_gamma(omega0, omega1)
            geom = cone_eigenstate(omega0, omega1)
            p = FieldParams(omega0, omega1, gamma, omega_z=gamma)
            for t in np.linspace(0, loop_duration(p), 7):
                psi = propagator_compensated(p, float(t)) @ geom.psi0
                value = (psi.conj() @ (h_compensated(p, float(t)) @ psi)).real
                assert abs(value) < 1e-10

    def test_max_energy_expectation_over_draws(self, rng):
        # dense sampling along the loop for 50 draws
        worst = 0.0
        for omega0, omega1 in random_field_draws(rng, 50):
            gamma = compensation_gamma(omega0, omega1)
            p = FieldParams(omega0, omega1, gamma, omega_z=gamma)
            traj = closed_form_loop_trajectory(p, n=501)
            values = np.einsum(
                "ki,kij,kj->k",
                traj.states.conj(),
                traj.hamiltonian_at(traj.times),
                traj.states,
            ).real
            worst = max(worst, float(np.max(np.abs(values))))
        assert worst < 1e-9


class TestTwoQubitLoopParams:
    def test_cnot_point_values(self):
        setting = two_qubit_loop_params(CNOT_DELTA, 1.0)
        assert setting.omega1 == pytest.approx(3 * np.sqrt(7) / 7, abs=1e-14)
        assert setting.gamma == pytest.approx(-2 * CNOT_DELTA, abs=1e-14)

    def test_cosine_difference_is_half(self):
        setting = two_qubit_loop_params(CNOT_DELTA, 1.0)
        diff = np.cos(setting.theta_plus) - np.cos(setting.theta_minus)
        assert abs(diff - 0.5) < 1e-12

    def test_simultaneous_conditions(self, rng):
        for _ in range(20):
            j = rng.uniform(0.2, 2.0)
            delta = j * rng.uniform(1.01, 4.0)
            setting = two_qubit_loop_params(delta, j)
            for sign, theta in ((+1, setting.theta_plus), (-1, setting.theta_minus)):
                offset = delta + sign * j
                residual = setting.gamma * np.cos(theta) + np.hypot(offset, setting.omega1)
                assert abs(residual) < 1e-12

    def test_requires_offset_above_coupling(self):
        with pytest.raises(ValueError):
            two_qubit_loop_params(1.0, 1.0)
        with pytest.raises(ValueError):
            two_qubit_loop_params(0.5, 1.0)


class TestDynamicalPhase:
    def test_static_eigenstate(self):
        omega0, omega1, t_end = 1.3, 0.7, 5.0
        geom = cone_eigenstate(omega0, omega1)
        h0 = 0.5 * (omega0 * SIGMA_Z + omega1 * SIGMA_X)
        times = np.linspace(0, t_end, 101)
        states = np.stack(
            [np.exp(-1j * geom.eigenvalue * t) * geom.psi0 for t in times]
        )
        traj = Trajectory(
            times, states, None,
            lambda t: np.broadcast_to(h0, np.shape(t) + (2, 2)).copy(),
        )
        assert dynamical_phase(traj) == pytest.approx(-geom.eigenvalue * t_end, abs=1e-12)

    def test_compensated_loop_vanishes(self):
        p = FieldParams(1.0, 1.0, -2.0, omega_z=-2.0)
        traj = closed_form_loop_trajectory(p)
        assert abs(dynamical_phase(traj)) < 1e-9

    def test_uncompensated_loop_matches_analytic_integral(self):
        omega0, omega1, gamma = 1.0, 1.0, 0.5
        p = FieldParams(omega0, omega1, gamma)
        geom = cone_eigenstate(omega0, omega1)
        tau = loop_duration(p)

        times = np.linspace(0, tau, 4001)
        props = np.stack([propagator_uncompensated(p, float(t)) for t in times])
        states = np.einsum("kij,j->ki", props, geom.psi0)
        traj = Trajectory(times, states, props, lambda t: h_rotating(p, t))
        measured = dynamical_phase(traj)

        # independent closed-form integral: <psi|H|psi> = <H1> + (gamma/2) z(t),
        # z(t) the z component of the initial Bloch vector precessing about
        # the axis of H1 = H0 - gamma sigma_z / 2
        h1 = 0.5 * ((omega0 - gamma) * SIGMA_Z + omega1 * SIGMA_X)
        big_omega = np.hypot(omega0 - gamma, omega1)
        axis = np.array([omega1, 0.0, omega0 - gamma]) / big_omega
        r0 = bloch_vector(geom.psi0)
        h1_expect = (geom.psi0.conj() @ (h1 @ geom.psi0)).real
        a = axis[2] * (axis @ r0)
        b = r0[2] - a
        c = np.cross(axis, r0)[2]
        integral = (
            h1_expect * tau
            + 0.5 * gamma * (
                a * tau
                + b * np.sin(big_omega * tau) / big_omega
                + c * (1 - np.cos(big_omega * tau)) / big_omega
            )
        )
        assert abs(measured) > 0.1  # genuinely nonzero
        assert measured == pytest.approx(-integral, abs=1e-8)

    def test_needs_three_samples(self):
        times = np.array([0.0, 1.0])
        states = np.stack([np.array([1, 0]), np.array([1, 0])]).astype(complex)
        traj = Trajectory(times, states, None,
                          lambda t: np.broadcast_to(SIGMA_Z, np.shape(t) + (2, 2)).copy())
        with pytest.raises(ValueError):
            dynamical_phase(traj)


class TestPhaseDecomposition:
    def test_compensated_loop_geometric_phase(self):
        p = FieldParams(1.0, 1.0, -2.0, omega_z=-2.0)
        dec = phase_decomposition(closed_form_loop_trajectory(p))
        expected = geometric_phase_cone(np.pi / 4)
        assert phase_distance(dec.geometric, expected) < 1e-9

    def test_simulated_loop_geometric_phase(self):
        p = FieldParams(1.0, 1.0, -2.0, omega_z=-2.0)
        geom = cone_eigenstate(1.0, 1.0)
        traj = integrate_loop(
            p, compensated=True, steps_per_loop=30_000, psi0=geom.psi0, samples=2001
        )
        dec = phase_decomposition(traj)
        assert phase_distance(dec.geometric, geometric_phase_cone(geom.theta)) < 1e-7

    def test_static_field_gives_zero_geometric(self):
        omega0, omega1, t_end = 0.9, 1.2, 4.0
        geom = cone_eigenstate(omega0, omega1)
        h0 = 0.5 * (omega0 * SIGMA_Z + omega1 * SIGMA_X)
        times = np.linspace(0, t_end, 201)
        states = np.stack(
            [np.exp(-1j * geom.eigenvalue * t) * geom.psi0 for t in times]
        )
        traj = Trajectory(times, states, None,
                          lambda t: np.broadcast_to(h0, np.shape(t) + (2, 2)).copy())
        dec = phase_decomposition(traj)
        assert phase_distance(dec.geometric, 0.0) < 1e-10
        assert dec.total == pytest.approx(dec.dynamical + dec.geometric)

    def test_decomposition_identity_mod_2pi(self):
        p = FieldParams(1.3, 0.8, compensation_gamma(1.3, 0.8),
                        omega_z=compensation_gamma(1.3, 0.8))
        dec = phase_decomposition(closed_form_loop_trajectory(p))
        assert phase_distance(dec.total, dec.dynamical + dec.geometric) < 1e-12

    def test_two_qubit_sector_phases(self):
        setting = two_qubit_loop_params(CNOT_DELTA, 1.0)
        phases = {}
        for sign, theta in ((+1, setting.theta_plus), (-1, setting.theta_minus)):
            p = FieldParams(
                CNOT_DELTA + sign * 1.0, setting.omega1, setting.gamma,
                omega_z=setting.gamma,
            )
            dec = phase_decomposition(closed_form_loop_trajectory(p))
            assert phase_distance(dec.geometric, geometric_phase_cone(theta)) < 1e-9
            phases[sign] = geometric_phase_cone(theta)
        assert phases[+1] == pytest.approx(phases[-1] - np.pi / 2, abs=1e-12)

    def test_noncyclic_rejected_with_defect(self):
        p = FieldParams(1.0, 1.0, 0.9)  # uncompensated: visibly noncyclic
        geom = cone_eigenstate(1.0, 1.0)
        times = np.linspace(0, loop_duration(p), 101)
        props = np.stack([propagator_uncompensated(p, float(t)) for t in times])
        states = np.einsum("kij,j->ki", props, geom.psi0)
        traj = Trajectory(times, states, props, lambda t: h_rotating(p, t))
        with pytest.raises(ValueError, match="defect"):
            phase_decomposition(traj)


class TestGeometricPhaseCone:
    def test_equator(self):
        assert geometric_phase_cone(np.pi / 2) == pytest.approx(-np.pi)

    def test_degenerate_cone(self):
        value = geometric_phase_cone(0.0)
        assert value == pytest.approx(-2 * np.pi)
        assert phase_distance(value, 0.0) < 1e-15

    def test_cnot_point_value(self):
        setting = two_qubit_loop_params(CNOT_DELTA, 1.0)
        assert geometric_phase_cone(setting.theta_minus) == pytest.approx(
            -4.434162710708865, abs=1e-12
        )

    def test_branch_sum(self, rng):
        for theta in rng.uniform(0, np.pi, size=20):
            total = geometric_phase_cone(theta) + geometric_phase_cone(np.pi - theta)
            assert total == pytest.approx(-2 * np.pi, abs=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            geometric_phase_cone(-0.1)


class TestCanonicalPhase:
    def test_representative_interval(self):
        assert canonical_phase(3 * np.pi) == pytest.approx(np.pi)
        assert canonical_phase(-np.pi) == pytest.approx(np.pi)
        assert canonical_phase(0.3) == pytest.approx(0.3)
        assert canonical_phase(-0.3 - 4 * np.pi) == pytest.approx(-0.3)
