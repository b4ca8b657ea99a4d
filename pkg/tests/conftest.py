import numpy as np
import pytest

from qpauli.system import Symmetry, build_system, random_system


@pytest.fixture
def two_state():
    """Degenerate pair [-1, +1] coupled by v = 1."""
    return build_system([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]], 0.01, symmetry=Symmetry.BOTH)


@pytest.fixture
def cp_system():
    return random_system(3, Symmetry.CP, 0.01, shell_count=2, seed=11)


@pytest.fixture
def cpt_system():
    return random_system(3, Symmetry.CPT, 0.01, shell_count=2, seed=12)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Empty cwd and HOME so no qpauli.conf is picked up."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("HOME", str(tmp_path))
    monkeypatch.delenv("QPAULI_OUTPUT_DIR", raising=False)
    return tmp_path
