import numpy as np
import pytest

from paeback.ar import ARModel, SimSpec, simulate

AR5_PHI = (0.5, -0.4, 0.3, -0.2, 0.1)


@pytest.fixture(scope="session")
def ar5_model():
    return ARModel(AR5_PHI, 1.0, 0.0)


def simulate_ar(phi, n, seed, sigma2=1.0, mean=0.0, burn_in=500):
    return simulate(SimSpec(n=n, seed=seed, generator=ARModel(tuple(phi), sigma2, mean),
                            burn_in=burn_in))


def random_stationary_phi(rng, p):
    """Random stationary coefficients via reflection coefficients in (-1, 1)."""
    kappas = rng.uniform(-0.9, 0.9, size=p)
    phi = np.zeros(p)
    for m, k in enumerate(kappas):
        phi[:m] = phi[:m] - k * phi[:m][::-1]
        phi[m] = k
    return phi
