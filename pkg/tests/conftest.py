import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from setdyn.geometry import BoxCover, WorkingDomain
from setdyn.graph import TransitionGraph

settings.register_profile(
    "default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=300, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

UNIT = WorkingDomain((0.0,), (1.0,))
SQUARE = WorkingDomain((-1.0, -1.0), (1.0, 1.0))


def interval_cover(domain, depth, pairs):
    """Cover of the boxes inside each closed ``[lo, hi]`` (in domain units)."""
    w = (domain.hi[0] - domain.lo[0]) / 2**depth
    coords = set()
    for lo, hi in pairs:
        a = int(round((lo - domain.lo[0]) / w))
        b = int(round((hi - domain.lo[0]) / w))
        coords.update(range(a, b))
    return BoxCover(domain, depth, np.array(sorted(coords), dtype=np.int64).reshape(-1, 1))


@st.composite
def covers(draw, domain=UNIT, depth=None, min_depth=1, max_depth=5):
    """Random nonempty cover of ``domain``."""
    d = draw(st.integers(min_depth, max_depth)) if depth is None else depth
    n = 2**d
    dim = domain.dimension
    cells = draw(
        st.lists(st.tuples(*[st.integers(0, n - 1)] * dim), min_size=1, max_size=min(12, n**dim), unique=True)
    )
    return BoxCover(domain, d, np.array(cells, dtype=np.int64))


@st.composite
def range_graphs(draw, max_n=30):
    """Random range-compressed graph with escapes, over a 1-D cover."""
    n = draw(st.integers(1, max_n))
    depth = max(1, int(np.ceil(np.log2(max(n, 2)))))
    cover = BoxCover(UNIT, depth, np.arange(n, dtype=np.int64).reshape(-1, 1))
    indptr, rstart, rstop = [0], [], []
    for _ in range(n):
        k = draw(st.integers(0, 2))
        for _ in range(k):
            a = draw(st.integers(0, n - 1))
            b = draw(st.integers(a + 1, min(n, a + 4)))
            rstart.append(a)
            rstop.append(b)
        indptr.append(len(rstart))
    out_esc = np.array(draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    in_esc = np.array(draw(st.lists(st.booleans(), min_size=n, max_size=n)))
    # a node with no successors must escape, as in every built graph
    counts = np.diff(indptr)
    out_esc |= counts == 0
    return TransitionGraph(
        cover,
        np.array(indptr, dtype=np.int64),
        np.array(rstart, dtype=np.int64),
        np.array(rstop, dtype=np.int64),
        out_esc,
        in_esc,
    )


def adjacency(graph):
    src, dst = graph.edges()
    adj = [set() for _ in range(graph.n)]
    for a, b in zip(src.tolist(), dst.tolist()):
        adj[a].add(b)
    return adj


@pytest.fixture(scope="session")
def unit():
    return UNIT


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
