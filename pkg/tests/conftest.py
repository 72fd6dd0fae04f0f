from __future__ import annotations

import pytest

from plugnet.scenario import parse_scenario_dict, paper_example
from plugnet.sim import run


@pytest.fixture(scope="session")
def golden_doc():
    return parse_scenario_dict(paper_example())


@pytest.fixture(scope="session")
def golden_traj(golden_doc):
    """The bundled example simulated once; several tests read it."""
    return run(golden_doc.build_scenario())
