import math

import pytest
from hypothesis import settings

from biparabolic_qrm import ConstantProfile, ForwardOperator, SpectralDomain, sign_changing_profile

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture(scope="session")
def unit_interval():
    return SpectralDomain.interval(1.0, 256)


@pytest.fixture(scope="session")
def op_const(unit_interval):
    return ForwardOperator(unit_interval, ConstantProfile(1.0))


@pytest.fixture(scope="session")
def op_sign(unit_interval):
    return ForwardOperator(unit_interval, sign_changing_profile())


@pytest.fixture(scope="session")
def op_pi():
    # lambda_1 = 1
    return ForwardOperator(SpectralDomain.interval(math.pi, 256), ConstantProfile(1.0))
