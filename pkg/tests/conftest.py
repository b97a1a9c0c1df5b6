import pytest

from hpctwin.config import SystemConfig


@pytest.fixture(scope="session")
def frontier() -> SystemConfig:
    return SystemConfig().validate()


@pytest.fixture()
def tiny() -> SystemConfig:
    """A 80-node toy machine (2 CDUs x 3 racks x 16 nodes, last CDU partial)
    that keeps scheduler and engine tests fast."""
    return SystemConfig.from_dict({
        "topology": {
            "num_cdus": 2,
            "racks_per_cdu": 3,
            "chassis_per_rack": 2,
            "rectifiers_per_rack": 8,
            "blades_per_rack": 8,
            "nodes_per_rack": 16,
            "sivocs_per_rack": 16,
            "switches_per_rack": 4,
            "nodes_total": 80,
        },
    })
