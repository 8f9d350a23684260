import os

import pytest
from hypothesis import HealthCheck, settings

from jetcalc.charts import BundleSpec
from jetcalc.corpus import KLEIN_GORDON
from jetcalc.lagrangian import load_system

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def kg():
    return load_system(BundleSpec(2, 1), KLEIN_GORDON, "klein-gordon")


@pytest.fixture
def affine():
    return load_system(BundleSpec(2, 1), "y1*v1_1", "affine")


# the running evaluation point
KG_POINT = {"x1": 0.0, "x2": 0.0, "y1": 1.0, "v1_1": 2.0, "v1_2": 1.0}
