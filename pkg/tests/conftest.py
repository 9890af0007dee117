import pytest

from common.enums import Picture
from flow.recorders import standard_recorders
from flow.trajectory import run_trajectory
from mesh.surfaces import make_model_surface
from schema.functional_config import FunctionalConfig
from schema.shrinker_model import ShrinkerModel


@pytest.fixture(scope="session")
def circle():
    return ShrinkerModel.circle()


@pytest.fixture(scope="session")
def cylinder():
    return ShrinkerModel.cylinder()


@pytest.fixture(scope="session")
def functional_cfg():
    return FunctionalConfig()


@pytest.fixture(scope="session")
def static_circle_traj(circle, functional_cfg):
    """The sqrt 2 circle under the rescaled flow on [0, 6], recorded every 0.05."""
    initial = make_model_surface(circle, 64)
    return run_trajectory(
        initial,
        None,
        Picture.RESCALED,
        (0.0, 6.0),
        1e-3,
        recorders=standard_recorders(circle, functional_cfg),
        record_every=50,
    )

