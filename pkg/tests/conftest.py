import pytest

from resonance_atlas.cases import case_N, case_T, gap_case, three_crossing_case
from resonance_atlas.phase_graph import build_phase_graph, enumerate_directed_cycles


@pytest.fixture(scope="session")
def cfg_T():
    return case_T()


@pytest.fixture(scope="session")
def cfg_N():
    return case_N()


@pytest.fixture(scope="session")
def graph_T(cfg_T):
    return build_phase_graph(cfg_T)


@pytest.fixture(scope="session")
def graph_N(cfg_N):
    return build_phase_graph(cfg_N)


@pytest.fixture(scope="session")
def cycles_T(graph_T):
    return enumerate_directed_cycles(graph_T)


@pytest.fixture(scope="session")
def graph_three():
    return build_phase_graph(three_crossing_case())


@pytest.fixture(scope="session")
def graph_gap():
    return build_phase_graph(gap_case())
