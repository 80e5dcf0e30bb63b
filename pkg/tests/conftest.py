"""Shared fixtures: a small glyph dataset and helpers for random states."""

from __future__ import annotations

import numpy as np
import pytest

from qnntest.statevec import StateVector
from qnntest.synthdata import generate_dataset


def random_state(rng: np.random.Generator, n_qubits: int) -> StateVector:
    dim = 1 << n_qubits
    amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return StateVector(n_qubits, amps / np.linalg.norm(amps))


@pytest.fixture(scope="session")
def glyph_data_dir(tmp_path_factory):
    """Small two-class glyph dataset in IDX layout (classes 3 and 6)."""
    root = tmp_path_factory.mktemp("glyphs")
    generate_dataset(root, n_train=700, n_test=260, seed=1234, classes=[3, 6])
    return root
