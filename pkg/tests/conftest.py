"""Shared fixtures and helper distributions for the test suite."""

import numpy as np
import pytest

from geomtail.dist import LatticeDistribution, SummandDistribution


class PointMass(SummandDistribution):
    """Degenerate severity with a single atom, for lattice-semantics tests."""

    def __init__(self, atom):
        self.atom = float(atom)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.atom, 1.0, 0.0)

    def tail_ge(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= self.atom, 1.0, 0.0)


def random_lattice(rng, max_atoms=25):
    """Random finite severity on a lattice with no truncated mass."""
    bandwidth = float(rng.choice([0.25, 0.5, 1.0]))
    n = int(rng.integers(5, max_atoms + 1))
    raw = rng.random(n + 1)
    raw[0] *= 0.2  # keep the atom at zero from dominating
    masses = raw / raw.sum()
    return LatticeDistribution(bandwidth=bandwidth, masses=masses,
                               truncation_point=bandwidth * n,
                               truncated_mass=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20250818)
