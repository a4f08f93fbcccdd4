import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)


def random_hermitian(rng, dim):
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (a + a.conj().T)


def random_field_draws(rng, n):
    """(omega0, omega1) pairs with omega0 bounded away from zero."""
    omega0 = rng.uniform(0.2, 2.0, size=n)
    omega1 = rng.uniform(0.0, 2.0, size=n)
    return np.column_stack([omega0, omega1])
