import sys
import textwrap

import pytest

from voxnas.spaces import HyperparameterSpec, SearchSpace, space_preset


@pytest.fixture
def segnas11():
    return space_preset("segnas11")


@pytest.fixture
def segnas4():
    return space_preset("segnas4")


@pytest.fixture
def segnas7():
    return space_preset("segnas7")


@pytest.fixture
def one_dim_space():
    """Only n is free: the smallest population the optimizer supports."""
    return SearchSpace("one-dim", [
        HyperparameterSpec("n", 8, 33),
        HyperparameterSpec("p", 2, 3, fixed_value=2),
        HyperparameterSpec("sup", 0, 1, fixed_value=0),
        HyperparameterSpec("res", 0, 1, fixed_value=0),
        HyperparameterSpec("nodes", 2, 3, fixed_value=2),
        HyperparameterSpec("ops0", 2, 3, fixed_value=2),
    ])


def write_mock_trainer(tmp_path, name, body):
    """Drop a tiny executable trainer script and return its command line."""
    script = tmp_path / f"{name}.py"
    script.write_text(textwrap.dedent(body), encoding="utf-8")
    return (sys.executable, str(script))


@pytest.fixture
def mock_trainer(tmp_path):
    def factory(name, body):
        return write_mock_trainer(tmp_path, name, body)

    return factory
