"""Shared fixtures: the six-phase jump model used throughout the test suite."""

import numpy as np
import pytest

from levy_saddle.costs import GameCosts
from levy_saddle.model import LevyModelSpec, PhaseTypeDist, Side
from levy_saddle.scale import scale_rep

# Six-phase sub-generator fitted to a log-normal jump law (EM output printed
# to four decimals, hence the tiny positive row sums repaired on load).
PH_T = np.array(
    [
        [-5.7714, 0.0881, 0.0080, 0.0031, 0.0002, 0.0036],
        [0.0000, -6.3823, 0.0031, 0.0000, 0.0000, 6.3793],
        [0.0000, 5.8540, -5.8540, 0.0000, 0.0000, 0.0000],
        [6.6551, 0.0353, 1.4502, -8.1408, 0.0000, 0.0003],
        [0.0000, 0.0007, 0.0054, 6.0959, -6.1029, 0.0009],
        [0.0000, 0.0092, 0.0049, 0.0000, 6.4107, -6.4249],
    ]
)
PH_ALPHA = np.array([0.0, 0.0, 1.0, 0.0, 0.0, 0.0])

Q = 0.05
DELTA = 2.5
KAPPA = 2.5


def make_model(side="SN", sigma=1.0, q=Q, delta=DELTA, kappa=KAPPA):
    return LevyModelSpec(
        side=Side(side),
        sigma=sigma,
        delta=delta,
        kappa=kappa,
        jumps=PhaseTypeDist(PH_ALPHA.copy(), PH_T.copy()),
        q=q,
    )


def make_costs(alpha_h=1.0, beta_h=1.0, C_g=1.0, K_g=1.0):
    return GameCosts(alpha_h=alpha_h, beta_h=beta_h, C_g=C_g, K_g=K_g)


@pytest.fixture(scope="session")
def jumps():
    return PhaseTypeDist(PH_ALPHA.copy(), PH_T.copy())


@pytest.fixture(scope="session")
def model_sn_bv():
    return make_model("SN", sigma=0.0)


@pytest.fixture(scope="session")
def model_sn_uv():
    return make_model("SN", sigma=1.0)


@pytest.fixture(scope="session")
def model_sp_bv():
    return make_model("SP", sigma=0.0)


@pytest.fixture(scope="session")
def model_sp_uv():
    return make_model("SP", sigma=1.0)


@pytest.fixture(scope="session")
def rep_bv(model_sn_bv):
    return scale_rep(model_sn_bv)


@pytest.fixture(scope="session")
def rep_uv(model_sn_uv):
    return scale_rep(model_sn_uv)


@pytest.fixture(scope="session")
def rep_sp_bv(model_sp_bv):
    return scale_rep(model_sp_bv)


@pytest.fixture(scope="session")
def rep_sp_uv(model_sp_uv):
    return scale_rep(model_sp_uv)


@pytest.fixture(scope="session")
def default_costs():
    return make_costs()
