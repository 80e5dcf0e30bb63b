"""Shot-based measurement simulation and Wilson-interval sampling-cost analysis.

Reading out a prediction qubit with a finite shot budget is a Bernoulli
sampling problem; the Wilson score interval gives the half-width of the
confidence interval achievable with N shots, which is what "sampling cost"
means throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gradients import readout_marginal_batch
from .models import QnnModel, forward
from .statevec import StateVector


@dataclass(frozen=True)
class ShotConfig:
    shots: int = 10_000
    z: float = 2.58  # right-tail quantile; 2.58 ~ 99% confidence
    seed: int = 0

    def __post_init__(self) -> None:
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not self.z > 0:
            raise ValueError("z must be > 0")


def sample_estimate(p: float, cfg: ShotConfig) -> float:
    """Mean of N Bernoulli(p) draws from the seeded generator."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must be in [0, 1], got {p}")
    rng = np.random.default_rng(cfg.seed)
    return float(rng.binomial(cfg.shots, p)) / cfg.shots


def wilson_epsilon(p_bar: float, n_shots: int, z: float) -> float:
    """Wilson score interval half-width for an estimated proportion."""
    if not 0.0 <= p_bar <= 1.0:
        raise ValueError(f"p_bar must be in [0, 1], got {p_bar}")
    if n_shots < 1:
        raise ValueError("n_shots must be >= 1")
    pref = z / (1.0 + z * z / n_shots)
    return pref * math.sqrt(p_bar * (1.0 - p_bar) / n_shots + z * z / (4.0 * n_shots * n_shots))


def _shot_label(marginal: np.ndarray, n_classes: int, shots: int,
                rng: np.random.Generator) -> int:
    counts = rng.multinomial(shots, marginal / marginal.sum())
    return int(np.argmax(counts[:n_classes]))


def shot_predict_label(model: QnnModel, state: StateVector, cfg: ShotConfig) -> int:
    """Finite-shot replacement for predict_label.

    Samples the full readout-qubit distribution with N shots and applies the
    renormalized-argmax readout to the counts; converges to predict_label as
    N grows.
    """
    out = forward(model, state)
    marginal = readout_marginal_batch(model, out.amps[None, :])[0]
    rng = np.random.default_rng(cfg.seed)
    return _shot_label(marginal, model.n_classes, cfg.shots, rng)


def _macro_prf(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> tuple[float, float, float]:
    precisions, recalls = [], []
    for c in range(n_classes):
        tp = int(np.sum((y_pred == c) & (y_true == c)))
        fp = int(np.sum((y_pred == c) & (y_true != c)))
        fn = int(np.sum((y_pred != c) & (y_true == c)))
        precisions.append(tp / (tp + fp) if tp + fp else 0.0)
        recalls.append(tp / (tp + fn) if tp + fn else 0.0)
    p = float(np.mean(precisions))
    r = float(np.mean(recalls))
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def _precompute(model: QnnModel, samples: Sequence[tuple[StateVector, int]]):
    marginals = []
    ideal = []
    labels = np.array([int(y) for _, y in samples])
    for state, _ in samples:
        out = forward(model, state)
        m = readout_marginal_batch(model, out.amps[None, :])[0]
        marginals.append(m)
        restricted = m[: model.n_classes]
        ideal.append(int(np.argmax(restricted / restricted.sum())))
    return marginals, np.array(ideal), labels


def sampling_experiment(model: QnnModel, seed_samples: Sequence[tuple[StateVector, int]],
                        n_grid: Sequence[int], repeats: int, rng_seed: int = 0,
                        eval_samples: Sequence[tuple[StateVector, int]] | None = None) -> list[dict]:
    """Error-rate and quality-indicator statistics across a shot-budget grid.

    Per N and repeat, every seed sample is classified with the finite-shot
    readout and the error rate is its disagreement with the ideal
    (infinite-shot) prediction.  Accuracy/precision/recall/F1 (macro) are
    computed against the given labels on ``eval_samples`` -- ordinarily the
    clean labeled evaluation split; they default to the seed samples.  Each
    (set, N, repeat, sample) cell owns a spawned substream, so the table is
    reproducible and cell-order independent.
    """
    if len(seed_samples) == 0:
        raise ValueError("empty seed sample set")
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n_grid must be strictly ascending")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if eval_samples is None:
        eval_samples = seed_samples

    seed_marg, seed_ideal, _ = _precompute(model, seed_samples)
    eval_marg, _, eval_labels = _precompute(model, eval_samples)

    rows: list[dict] = []
    root = np.random.SeedSequence(rng_seed)

    def cell_rng(branch: int, ni: int, rep: int, si: int) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(entropy=root.entropy, spawn_key=(branch, ni, rep, si)))

    for ni, n_shots in enumerate(n_grid):
        err_rates, accs, precs, recs, f1s = [], [], [], [], []
        for rep in range(repeats):
            preds = np.array([
                _shot_label(m, model.n_classes, n_shots, cell_rng(0, ni, rep, si))
                for si, m in enumerate(seed_marg)])
            err_rates.append(float(np.mean(preds != seed_ideal)))
            epreds = np.array([
                _shot_label(m, model.n_classes, n_shots, cell_rng(1, ni, rep, si))
                for si, m in enumerate(eval_marg)])
            accs.append(float(np.mean(epreds == eval_labels)))
            p, r, f1 = _macro_prf(eval_labels, epreds, model.n_classes)
            precs.append(p)
            recs.append(r)
            f1s.append(f1)
        rows.append({
            "n_shots": n_shots,
            "error_rate_mean": float(np.mean(err_rates)),
            "error_rate_std": float(np.std(err_rates)),
            "accuracy": float(np.mean(accs)),
            "precision": float(np.mean(precs)),
            "recall": float(np.mean(recs)),
            "f1": float(np.mean(f1s)),
        })
    return rows


def ideal_quality(model: QnnModel, seed_samples: Sequence[tuple[StateVector, int]]) -> dict:
    """Infinite-shot reference values for the sampling_experiment indicators."""
    labels = np.array([int(y) for _, y in seed_samples])
    preds = []
    for state, _ in seed_samples:
        out = forward(model, state)
        m = readout_marginal_batch(model, out.amps[None, :])[0]
        restricted = m[: model.n_classes]
        preds.append(int(np.argmax(restricted / restricted.sum())))
    preds = np.array(preds)
    p, r, f1 = _macro_prf(labels, preds, model.n_classes)
    return {
        "accuracy": float(np.mean(preds == labels)),
        "precision": p,
        "recall": r,
        "f1": f1,
    }
