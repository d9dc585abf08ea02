import functools

import pytest

from firecontain import explore_tree, lp_tree, nukc, pipeline_tree

from helpers import audit_vertex

_original = lp_tree.solve_vertex


@functools.wraps(_original)
def _audited(poly, objective=None):
    x = _original(poly, objective)
    audit_vertex(poly, x)
    return x


def pytest_configure(config):
    # every tree LP vertex the suite produces gets its loose count checked
    for module in (lp_tree, explore_tree, nukc, pipeline_tree):
        if hasattr(module, "solve_vertex"):
            module.solve_vertex = _audited


@pytest.fixture
def rng():
    import random
    return random.Random(12345)


def pytest_collection_modifyitems(config, items):
    # the loose-count audit must see the vertices of every other test first
    last = [i for i in items if i.name == "test_c3_vertex_sparsity"]
    items[:] = [i for i in items if i.name != "test_c3_vertex_sparsity"] + last
