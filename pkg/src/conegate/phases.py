"""Cone eigenstate geometry, compensation-field solving, and the split of
a cyclic evolution's total phase into dynamical and geometric parts.

Sign conventions: the eigenvalue of the frozen field Hamiltonian
H0 = (omega0 sigma_z + omega1 sigma_x) / 2 is +-sqrt(omega0^2 + omega1^2)/2
(the one-half is essential: only with it does the compensation condition
gamma cos(theta) = -sqrt(omega0^2 + omega1^2) null the instantaneous
energy expectation). The dynamical-phase-free loop traverses the field
revolution in the sense fixed by the compensation solution (negative
gamma for omega0 > 0); its per-branch geometric phase is
-pi (1 + cos theta) with theta the branch's own cone angle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.integrate import simpson

TWO_PI = 2 * np.pi


def canonical_phase(x: float) -> float:
    """Representative of x modulo 2 pi in (-pi, pi]."""
    y = np.remainder(x, TWO_PI)
    if y > np.pi:
        y -= TWO_PI
    return float(y)


def phase_distance(a: float, b: float) -> float:
    """Distance between two angles modulo 2 pi."""
    return abs(canonical_phase(a - b))


@dataclass(frozen=True)
class ConeGeometry:
    """One eigenstate branch of the frozen field Hamiltonian.

    theta       cone half-angle of the branch, in [0, pi]
    eigenvalue  +-sqrt(omega0^2 + omega1^2)/2
    psi0        the eigenstate, azimuth 0
    """

    theta: float
    eigenvalue: float
    psi0: np.ndarray


def cone_eigenstate(omega0: float, omega1: float, branch: str = "upper") -> ConeGeometry:
    """Eigenstate of (omega0 sigma_z + omega1 sigma_x)/2 on its cone."""
    if omega1 < 0:
        raise ValueError("omega1 must be nonnegative")
    magnitude = np.hypot(omega0, omega1)
    if magnitude == 0.0:
        raise ValueError("zero field has no cone eigenstate")
    theta = float(np.arctan2(omega1, omega0))
    if branch == "upper":
        psi0 = np.array([np.cos(theta / 2), np.sin(theta / 2)], dtype=complex)
        return ConeGeometry(theta, 0.5 * magnitude, psi0)
    if branch == "lower":
        psi0 = np.array([np.sin(theta / 2), -np.cos(theta / 2)], dtype=complex)
        if theta == 0.0:
            psi0 = np.array([0.0, 1.0], dtype=complex)
        return ConeGeometry(float(np.pi - theta), -0.5 * magnitude, psi0)
    raise ValueError("branch must be 'upper' or 'lower'")


def compensation_gamma(omega0: float, omega1: float) -> float:
    """Rotation speed (and compensation field) that makes the eigenstate's
    instantaneous energy expectation vanish along the loop.

    Solves gamma cos(theta) = -sqrt(omega0^2 + omega1^2); the returned
    speed is antiparallel to the vertical field component.
    """
    if omega0 == 0.0:
        raise ValueError("no finite compensation speed exists for omega0 = 0")
    return -(omega0 * omega0 + omega1 * omega1) / omega0


class TwoQubitLoopSetting(NamedTuple):
    omega1: float
    gamma: float
    theta_plus: float
    theta_minus: float


def two_qubit_loop_params(delta: float, j: float) -> TwoQubitLoopSetting:
    """RF amplitude and loop speed that null the dynamical phase for both
    spectator sectors simultaneously.

    The two sector conditions gamma cos(theta_pm) = -sqrt((delta+-j)^2 + omega1^2)
    are solved by omega1 = sqrt(delta^2 - j^2) and gamma = -2 delta, giving
    cos(theta_pm) = sqrt((delta +- j) / (2 delta)).
    """
    if j <= 0:
        raise ValueError("coupling j must be positive")
    if delta <= j:
        raise ValueError("conditional loop requires delta > j")
    omega1 = float(np.sqrt(delta * delta - j * j))
    gamma = -2.0 * delta
    theta_plus = float(np.arccos(np.sqrt((delta + j) / (2 * delta))))
    theta_minus = float(np.arccos(np.sqrt((delta - j) / (2 * delta))))
    return TwoQubitLoopSetting(omega1, gamma, theta_plus, theta_minus)


@dataclass(frozen=True)
class PhaseDecomposition:
    """Total, dynamical and geometric phase of one cyclic evolution.

    `total` is the argument of the cyclic overlap (in (-pi, pi]); the
    other two are raw accumulated values with geometric = total - dynamical,
    so the decomposition identity holds exactly. Compare any of them
    modulo 2 pi (see canonical()).
    """

    total: float
    dynamical: float
    geometric: float

    def canonical(self) -> "PhaseDecomposition":
        return PhaseDecomposition(
            canonical_phase(self.total),
            canonical_phase(self.dynamical),
            canonical_phase(self.geometric),
        )


def energy_expectations(traj) -> np.ndarray:
    """<psi(t)| H(t) |psi(t)> at every sample of a trajectory."""
    if traj.hamiltonian_at is None:
        raise ValueError("trajectory carries no Hamiltonian accessor")
    t = traj.times
    try:
        h = np.asarray(traj.hamiltonian_at(t), dtype=complex)
        if h.shape != t.shape + traj.states.shape[1:] + traj.states.shape[1:]:
            raise ValueError
    except Exception:
        h = np.stack([np.asarray(traj.hamiltonian_at(float(tk)), dtype=complex) for tk in t])
    return np.einsum("ki,kij,kj->k", traj.states.conj(), h, traj.states).real


def dynamical_phase(traj) -> float:
    """Accumulated dynamical phase -integral of <psi|H|psi> dt, by
    composite Simpson quadrature over the stored samples."""
    if traj.times.size < 3:
        raise ValueError("dynamical phase needs at least 3 trajectory samples")
    values = energy_expectations(traj)
    return float(-simpson(values, x=traj.times))


def phase_decomposition(traj, cyclic_tol: float = 1e-6) -> PhaseDecomposition:
    """Split the phase of a cyclic evolution into dynamical and geometric
    parts. Raises if the trajectory is not cyclic, naming the overlap
    defect."""
    overlap = complex(traj.states[0].conj() @ traj.states[-1])
    defect = abs(1.0 - abs(overlap))
    if defect > cyclic_tol:
        raise ValueError(
            f"trajectory is not cyclic: overlap modulus defect {defect:.3e} "
            f"exceeds {cyclic_tol:.1e}"
        )
    total = float(np.angle(overlap))
    dyn = dynamical_phase(traj)
    return PhaseDecomposition(total, dyn, total - dyn)


def geometric_phase_cone(theta: float) -> float:
    """Geometric phase -pi (1 + cos theta) of a branch at cone angle theta
    after one dynamical-phase-free revolution, traversed in the sense the
    compensation solution fixes (negative speed about the cone axis)."""
    if not 0.0 <= theta <= np.pi:
        raise ValueError("theta must lie in [0, pi]")
    return float(-np.pi * (1.0 + np.cos(theta)))
