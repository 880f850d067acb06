import pytest

from maas_market import (decompose_flows, extract_duals, fig5,
                         generate_constraints_algorithm1, solve_matching)


def pipeline_artifacts(network, demand, subsidies=None):
    """Matching, duals, decomposition, and lexicographic constraint system."""
    matching = solve_matching(network, demand)
    duals = extract_duals(network, demand, matching.activations)
    decomposition = decompose_flows(network, demand, matching, duals)
    system = generate_constraints_algorithm1(network, demand, matching,
                                             decomposition, subsidies=subsidies)
    return matching, duals, decomposition, system


@pytest.fixture(scope="session")
def fig5_instance():
    return fig5()


@pytest.fixture(scope="session")
def fig5_pipeline(fig5_instance):
    network, demand = fig5_instance
    return pipeline_artifacts(network, demand)
