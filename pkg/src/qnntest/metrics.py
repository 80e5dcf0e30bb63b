"""Pure-state similarity metrics and campaign statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .statevec import StateVector


@dataclass(frozen=True)
class SimilarityThresholds:
    """Quality gate for generated samples.

    A candidate passes when ``fidelity > min_fidelity`` OR/AND
    ``trace_distance < max_trace_distance`` according to ``combine``.
    """

    min_fidelity: float = 0.90
    max_trace_distance: float = 0.45
    combine: str = "or"  # "or" | "and"

    def __post_init__(self) -> None:
        if self.combine not in ("or", "and"):
            raise ValueError(f"combine must be 'or' or 'and', got {self.combine!r}")
        if math.isinf(self.min_fidelity) and math.isinf(self.max_trace_distance):
            raise ValueError("at least one similarity bound must be finite")


def _check_pair(a: StateVector, b: StateVector) -> None:
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2; symmetric and global-phase invariant."""
    _check_pair(a, b)
    return min(float(np.abs(np.vdot(a.amps, b.amps)) ** 2), 1.0)


def trace_distance(a: StateVector, b: StateVector) -> float:
    """Trace distance; for pure states sqrt(1 - fidelity)."""
    _check_pair(a, b)
    return math.sqrt(max(1.0 - fidelity(a, b), 0.0))


def afm(pairs: Sequence[tuple[StateVector, StateVector]]) -> float:
    """Mean fidelity between originals and their generated samples."""
    if len(pairs) == 0:
        raise ValueError("empty pair list")
    return float(np.mean([fidelity(a, b) for a, b in pairs]))


def atd(pairs: Sequence[tuple[StateVector, StateVector]]) -> float:
    """Mean trace distance between originals and their generated samples."""
    if len(pairs) == 0:
        raise ValueError("empty pair list")
    return float(np.mean([trace_distance(a, b) for a, b in pairs]))


def gen_rate(n_generated: int, n_inputs: int) -> float:
    """Fraction of seed inputs that produced an accepted sample."""
    if n_inputs <= 0:
        raise ValueError("n_inputs must be > 0")
    if n_generated > n_inputs:
        raise ValueError("n_generated cannot exceed n_inputs")
    return n_generated / n_inputs


def passes_quality(original: StateVector, candidate: StateVector,
                   thresholds: SimilarityThresholds) -> bool:
    """Similarity gate on an (original, candidate) pair."""
    f_ok = fidelity(original, candidate) > thresholds.min_fidelity
    d_ok = trace_distance(original, candidate) < thresholds.max_trace_distance
    return (f_ok or d_ok) if thresholds.combine == "or" else (f_ok and d_ok)
