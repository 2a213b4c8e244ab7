import numpy as np
import pytest

from maskloop.geo import instance_distances
from maskloop.instance import (
    CandidateSite,
    DisposalSite,
    GlobalParams,
    Hospital,
    Instance,
    generate_synthetic,
)

# acceptance outcomes collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")


def make_site(sid, lat=49.0, lon=-124.0, **kw):
    base = dict(
        fixed_cost_collection=1000.0,
        fixed_cost_reprocessing=4000.0,
        unit_cost_collection=0.1,
        unit_cost_reprocessing=0.4,
        fixed_emission_collection=100.0,
        fixed_emission_reprocessing=500.0,
        unit_emission_collection=0.001,
        unit_emission_reprocessing=0.01,
        jobs_collection=3,
        jobs_reprocessing=8,
    )
    base.update(kw)
    return CandidateSite(id=sid, lat=lat, lon=lon, **base)


def make_params(**kw):
    base = dict(
        price=2.0,
        production_emission=0.06,
        transport_cost_per_km=2.0,
        truck_emission_per_km=0.3,
        budget=20_000.0,
        alpha=0.8,
        beta=0.95,
    )
    base.update(kw)
    return GlobalParams(**base)


@pytest.fixture
def forced_instance():
    """One hospital, one site, budget exactly covering both facilities."""
    return Instance(
        hospitals=[Hospital("H1", "Only", 49.0, -124.0, 10_000)],
        sites=[make_site("S1", 49.1, -124.1)],
        disposal_sites=[DisposalSite("D1", 0.5, 0.008)],
        params=make_params(budget=5000.0),
    )


@pytest.fixture
def toy22():
    inst = generate_synthetic(11, 2, 2, 1)
    return inst, instance_distances(inst)


@pytest.fixture
def toy23():
    """Two hospitals, three candidate sites: 21 binaries, inside the oracle cap."""
    inst = generate_synthetic(5, 2, 3, 1)
    return inst, instance_distances(inst)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
