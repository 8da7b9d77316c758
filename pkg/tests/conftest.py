import numpy as np
import pytest

from qwlab import graphs, groups


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_unitary(dim: int, rng) -> np.ndarray:
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def direction_group(cay: graphs.CayleyGraph, *cycle_texts: str) -> groups.PermGroup:
    """Closure of the basis automorphisms induced by direction permutations."""
    gens = [
        groups.direction_perm_to_automorphism(cay, groups.parse_cycles(t, cay.degree))
        for t in cycle_texts
    ]
    dim = graphs.BasisIndexing.from_graph(cay.graph).total_dim
    return groups.closure(gens, dim=dim)


def full_direction_group(cay: graphs.CayleyGraph) -> groups.PermGroup:
    """All direction permutations, generated by adjacent transpositions."""
    d = cay.degree
    texts = [f"({i},{i + 1})" for i in range(1, d)]
    return direction_group(cay, *texts)
