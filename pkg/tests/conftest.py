import numpy as np
import pytest

from bztduct.eos import make_vdw_like, make_polytropic
from bztduct.kinematics import BernoulliContext


@pytest.fixture(scope="session")
def bzt():
    return make_vdw_like()


@pytest.fixture(scope="session")
def bzt_landmarks(bzt):
    return bzt.landmarks()


@pytest.fixture(scope="session")
def poly():
    return make_polytropic(1.4)


@pytest.fixture(scope="session")
def ctx_fan(bzt):
    """Dilute-branch context (tau0 above the concave interval): both
    corner waves are fans."""
    tau0 = 3.0
    c0 = tau0 * np.sqrt(-bzt.dp(tau0))
    return BernoulliContext(bzt, 1.6 * c0, tau0)


@pytest.fixture(scope="session")
def ctx_poly(poly):
    """Polytropic gamma=1.4 at inlet Mach 2 (tau0 = 1)."""
    c0 = np.sqrt(1.4)
    return BernoulliContext(poly, 2.0 * c0, 1.0)


@pytest.fixture(scope="session")
def ctx_sf(bzt, bzt_landmarks):
    """tau0 inside the concave interval: shock / shock-fan corner waves."""
    lm = bzt_landmarks
    cmax = lm.tau2_i * np.sqrt(-bzt.dp(lm.tau2_i))
    return BernoulliContext(bzt, 1.8 * cmax, 1.3)


@pytest.fixture(scope="session")
def ctx_fsf(bzt, bzt_landmarks):
    """tau0 between the lower double-sonic and inflection volumes."""
    lm = bzt_landmarks
    cmax = lm.tau2_i * np.sqrt(-bzt.dp(lm.tau2_i))
    return BernoulliContext(bzt, 1.8 * cmax, 1.0)
