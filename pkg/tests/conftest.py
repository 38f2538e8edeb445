import numpy as np
import pytest

import beamstab as bs

ELL = np.pi


def ref1_coeffs(**overrides):
    kw = dict(rho1=1.0, rho2=1.0, rho3=1.0, k=1.0, k0=2.0, b=2.0, varpi=1.0,
              gamma=1.0, l=0.5, ell=ELL, sigma=1.0, tau=1.0)
    kw.update(overrides)
    return bs.BeamCoefficients(**kw)


@pytest.fixture(scope="session")
def unit_exp():
    # mu(s) = exp(-s): unit g-mass, mu(0) = g(0) = 1
    return bs.prony_kernel([(1.0, 1.0)])


@pytest.fixture(scope="session")
def ref1(unit_exp):
    c = ref1_coeffs()
    return {
        "BGP": bs.SystemSpec("BGP", c, kernel_g=unit_exp, kernel_h=unit_exp),
        "BMC": bs.SystemSpec("BMC", c),
        "TGP": bs.SystemSpec("TGP", c, kernel_g=unit_exp),
        "TMC": bs.SystemSpec("TMC", c),
        "BF": bs.SystemSpec("BF", c),
        "TF": bs.SystemSpec("TF", c),
    }


@pytest.fixture(scope="session")
def refexp(unit_exp):
    # varpi = 2 with the same unit-mass kernels, so varpi*g(0) = 2 and both
    # memory stability numbers vanish
    c = ref1_coeffs(varpi=2.0)
    return bs.SystemSpec("BGP", c, kernel_g=unit_exp, kernel_h=unit_exp)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240811)


def random_states(rng, dim, count):
    return rng.normal(size=(count, dim)) + 1j * rng.normal(size=(count, dim))


def wnorm(W, u):
    return float(np.sqrt(np.real(np.conj(u) @ (W @ u))))
