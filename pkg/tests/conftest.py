import numpy as np
import pytest

from wgmps.mps import Mps, SiteTensor


def random_sites(rng, phys, bond=3):
    """Random chain with the given physical extents and interior bond ``bond``."""
    n = len(phys)
    bonds = [1] + [bond] * (n - 1) + [1]
    sites = []
    for k, d in enumerate(phys):
        a = rng.normal(size=(bonds[k], d, bonds[k + 1])) + 1j * rng.normal(size=(bonds[k], d, bonds[k + 1]))
        sites.append(SiteTensor(a, "time_bin", k))
    return sites


def random_mps(rng, phys, bond=3, oc=0, bond_max=64):
    return Mps(random_sites(rng, phys, bond), oc, bond_max)


def random_state(rng, n):
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
