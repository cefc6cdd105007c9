import numpy as np
import pytest

from fraclap.graph import build_graph


def make_p2():
    return build_graph([("x1", 1.0), ("x2", 1.0)], [("x1", "x2", 1.0)])


def make_k3():
    return build_graph(
        [("x1", 1.0), ("x2", 1.0), ("x3", 1.0)],
        [("x1", "x2", 1.0), ("x2", "x3", 1.0), ("x1", "x3", 1.0)],
    )


def make_weighted_path(n=10, seed=3):
    rng = np.random.default_rng(seed)
    verts = [(f"p{i}", float(rng.uniform(0.5, 2.0))) for i in range(n)]
    edges = [
        (f"p{i}", f"p{i + 1}", float(rng.uniform(0.5, 2.0))) for i in range(n - 1)
    ]
    return build_graph(verts, edges)


def make_er20(seed=0, n=20, p=0.25):
    # seed 0 gives a connected draw; keep it pinned for reproducibility
    rng = np.random.default_rng(seed)
    verts = [(f"v{i}", float(rng.uniform(0.5, 2.0))) for i in range(n)]
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((f"v{i}", f"v{j}", float(rng.uniform(0.5, 2.0))))
    return build_graph(verts, edges)


@pytest.fixture(scope="session")
def p2():
    return make_p2()


@pytest.fixture(scope="session")
def k3():
    return make_k3()


@pytest.fixture(scope="session")
def path10():
    return make_weighted_path()


@pytest.fixture(scope="session")
def er20():
    return make_er20()


@pytest.fixture(scope="session")
def all_graphs(p2, k3, path10, er20):
    return {"p2": p2, "k3": k3, "path10": path10, "er20": er20}
