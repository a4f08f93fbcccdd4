"""Minimal dense complex linear algebra for two- and four-level systems.

States are plain 1-d complex ndarrays, operators are square complex
ndarrays. Dimensions are restricted to 2 and 4; nothing here scales
beyond that and nothing needs to.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_ATOL = 1e-12
UNITARY_ATOL = 1e-10
STATE_NORM_ATOL = 1e-12

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)
IDENTITY_4 = np.eye(4, dtype=complex)


def require_finite(a: np.ndarray, name: str = "array") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return a


def is_hermitian(h: np.ndarray, atol: float = HERMITIAN_ATOL) -> bool:
    h = np.asarray(h)
    return h.ndim == 2 and h.shape[0] == h.shape[1] and np.allclose(
        h, h.conj().T, rtol=1e-10, atol=atol
    )


def require_hermitian(h: np.ndarray, atol: float = HERMITIAN_ATOL) -> np.ndarray:
    h = require_finite(h, "operator")
    if not is_hermitian(h, atol=atol):
        raise ValueError("operator is not Hermitian within tolerance")
    return h


def is_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    d = u.shape[0]
    return np.allclose(u.conj().T @ u, np.eye(d), atol=atol)


def require_unitary(u: np.ndarray, atol: float = UNITARY_ATOL) -> np.ndarray:
    u = require_finite(u, "operator")
    if not is_unitary(u, atol=atol):
        raise ValueError("operator is not unitary within tolerance")
    return u


def require_state(psi: np.ndarray, atol: float = STATE_NORM_ATOL) -> np.ndarray:
    psi = require_finite(psi, "state")
    if psi.ndim != 1 or psi.shape[0] not in (2, 4):
        raise ValueError("state must be a complex vector of dimension 2 or 4")
    if abs(np.linalg.norm(psi) - 1.0) > atol:
        raise ValueError("state is not normalized within tolerance")
    return psi


def normalize_state(psi: np.ndarray) -> np.ndarray:
    psi = require_finite(psi, "state")
    n = np.linalg.norm(psi)
    if n == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / n


def mat_exp_hermitian(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, exact up to rounding.

    Dimension 2 uses the closed form c*I + r n.sigma; larger dimensions
    go through a Hermitian eigendecomposition.
    """
    h = require_hermitian(h)
    if not np.isfinite(t):
        raise ValueError("duration must be finite")
    d = h.shape[0]
    if d == 2:
        c = 0.5 * np.trace(h).real
        a = h[0, 0].real - c
        b = h[0, 1]
        r = np.hypot(a, abs(b))
        if r == 0.0:
            u = IDENTITY_2.copy()
        else:
            n_sigma = (h - c * IDENTITY_2) / r
            u = np.cos(r * t) * IDENTITY_2 - 1j * np.sin(r * t) * n_sigma
        return np.exp(-1j * c * t) * u
    vals, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * vals * t)) @ vecs.conj().T


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor as the most significant subsystem."""
    a = require_finite(a, "left factor")
    b = require_finite(b, "right factor")
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError("tensor expects two 2x2 matrices")
    return np.kron(a, b)


def fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """Global-phase-invariant gate fidelity |Tr(u^dag v)| / d in [0, 1].

    Rounding can push the raw value a hair above 1 for near-unitary
    inputs; that excess is clipped. A gross excess means the inputs were
    not unitary and raises instead.
    """
    u = require_finite(u, "u")
    v = require_finite(v, "v")
    if u.shape != v.shape or u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("fidelity expects two square matrices of equal dimension")
    d = u.shape[0]
    value = float(abs(np.trace(u.conj().T @ v)) / d)
    if value > 1.0 + 1e-6:
        raise ValueError("fidelity above 1: inputs are not unitary")
    return min(1.0, value)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    # first component of significant magnitude made real nonnegative
    idx = int(np.argmax(np.abs(v) > 1e-12 * max(np.max(np.abs(v)), 1.0)))
    ph = v[idx]
    if abs(ph) == 0.0:
        return v
    return v * (ph.conjugate() / abs(ph))


def eigensystem_2x2(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Spectral decomposition of a 2x2 Hermitian matrix.

    Returns (values, vectors): values sorted descending, vectors[:, k] the
    orthonormal eigenvector for values[k], phase-fixed so the first
    significant component is real nonnegative. A degenerate input returns
    the standard basis.
    """
    h = require_hermitian(h)
    if h.shape != (2, 2):
        raise ValueError("eigensystem_2x2 expects a 2x2 matrix")
    a = h[0, 0].real
    c = h[1, 1].real
    b = h[0, 1]
    m = 0.5 * (a + c)
    r = np.hypot(0.5 * (a - c), abs(b))
    values = np.array([m + r, m - r])
    if r == 0.0:
        return values, np.eye(2, dtype=complex)
    if abs(b) == 0.0:
        vectors = np.eye(2, dtype=complex) if a >= c else np.eye(2, dtype=complex)[:, ::-1]
    else:
        upper = np.array([b, values[0] - a], dtype=complex)
        upper /= np.linalg.norm(upper)
        lower = np.array([-upper[1].conjugate(), upper[0].conjugate()])
        vectors = np.column_stack([upper, lower])
    vectors = np.column_stack([_fix_phase(vectors[:, 0]), _fix_phase(vectors[:, 1])])
    return values, vectors


def bloch_vector(psi: np.ndarray) -> np.ndarray:
    """Bloch coordinates (x, y, z) of a normalized two-level state.

    Tolerates the norm drift long exact-exponential products accumulate
    from rounding (the result is renormalized), but rejects vectors that
    are not close to normalized.
    """
    psi = require_finite(psi, "state")
    if psi.ndim != 1 or psi.shape[0] != 2:
        raise ValueError("bloch_vector is defined for dimension 2 only")
    norm_sq = float((psi.conj() @ psi).real)
    if abs(norm_sq - 1.0) > 1e-6:
        raise ValueError("state is not normalized")
    return np.array(
        [
            (psi.conj() @ (SIGMA_X @ psi)).real,
            (psi.conj() @ (SIGMA_Y @ psi)).real,
            (psi.conj() @ (SIGMA_Z @ psi)).real,
        ]
    ) / norm_sq
