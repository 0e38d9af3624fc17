import json

import numpy as np
import pytest

from guidepath.artifacts import dumps, gains_from_dict, gains_to_dict
from guidepath.demo import demo_environment
from guidepath.pipeline import plan, synthesize
from guidepath.rrt import PlannerParams
from guidepath.tree import tree_from_dict, tree_to_dict

# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = {}


class DemoRun:
    """Seed-7 demo pipeline, with tree and gains taken through their JSON
    form exactly as the command line does."""

    def __init__(self):
        self.env = demo_environment()
        self.raw, simp = plan(self.env, params=PlannerParams(1000, 60.0), seed=7)
        self.tree = tree_from_dict(json.loads(dumps(tree_to_dict(simp))))
        bundle = synthesize(self.tree, self.env)
        self.bundle = gains_from_dict(json.loads(dumps(gains_to_dict(bundle))))


@pytest.fixture(scope="session")
def demo():
    return DemoRun()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
