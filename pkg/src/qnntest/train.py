"""Gradient-descent training of QNN parameters on encoded datasets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .gradients import batch_loss_and_param_grads, class_probs_batch
from .models import QnnModel, build_model
from .statevec import StateVector, run_prims

Sample = tuple[StateVector, int]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    learning_rate: float = 0.01
    optimizer: str = "adam"  # "adam" | "sgd"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


class _Adam:
    def __init__(self, n: int, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8) -> None:
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n)
        self.v = np.zeros(n)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        self.t += 1
        self.m = self.b1 * self.m + (1 - self.b1) * grad
        self.v = self.b2 * self.v + (1 - self.b2) * grad**2
        mhat = self.m / (1 - self.b1**self.t)
        vhat = self.v / (1 - self.b2**self.t)
        return params - self.lr * mhat / (np.sqrt(vhat) + self.eps)


class _Sgd:
    def __init__(self, n: int, lr: float) -> None:
        self.lr = lr

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        return params - self.lr * grad


def _stack(samples: Sequence[Sample]) -> tuple[np.ndarray, np.ndarray]:
    amps = np.stack([s.amps for s, _ in samples])
    labels = np.array([int(y) for _, y in samples])
    return amps, labels


def param_gradient(model: QnnModel, batch: Sequence[Sample]) -> np.ndarray:
    """Gradient of the mean cross-entropy loss with respect to model.params."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    amps, labels = _stack(batch)
    if amps.shape[1] != 1 << model.n_qubits:
        raise ValueError("batch dimension does not match model qubit count")
    _, grads = batch_loss_and_param_grads(model, amps, labels)
    return grads.mean(axis=0)


def _dataset_metrics(model: QnnModel, amps: np.ndarray, labels: np.ndarray,
                     chunk: int = 512) -> tuple[float, float]:
    losses = []
    hits = 0
    for lo in range(0, amps.shape[0], chunk):
        a = amps[lo:lo + chunk]
        y = labels[lo:lo + chunk]
        out = run_prims(a, model.n_qubits, model.circuit.prims, model.params)
        q = class_probs_batch(model, out)
        rows = np.arange(q.shape[0])
        losses.append(-np.log(q[rows, y] + 1e-12))
        hits += int(np.sum(np.argmax(q, axis=1) == y))
    return float(np.mean(np.concatenate(losses))), hits / amps.shape[0]


def evaluate_accuracy(model: QnnModel, testset: Sequence[Sample]) -> float:
    """Fraction of samples whose predicted label matches the given label."""
    if len(testset) == 0:
        raise ValueError("empty test set")
    amps, labels = _stack(testset)
    _, acc = _dataset_metrics(model, amps, labels)
    return acc


def train(model: QnnModel, trainset: Sequence[Sample], cfg: TrainConfig,
          testset: Sequence[Sample] | None = None) -> tuple[QnnModel, list[dict]]:
    """Train a copy of the model; returns (trained model, per-epoch log rows).

    Log rows carry epoch, train_loss, train_acc and test_acc (NaN when no
    test set is supplied).
    """
    if len(trainset) == 0:
        raise ValueError("empty training set")
    amps, labels = _stack(trainset)
    if amps.shape[1] != 1 << model.n_qubits:
        raise ValueError("training data does not match model qubit count")

    params = model.params.copy()
    opt = (_Adam if cfg.optimizer == "adam" else _Sgd)(params.shape[0], cfg.learning_rate)
    rng = np.random.default_rng(cfg.seed)
    log: list[dict] = []

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(amps.shape[0])
        for lo in range(0, len(order), cfg.batch_size):
            sel = order[lo:lo + cfg.batch_size]
            m = model.with_params(params)
            _, grads = batch_loss_and_param_grads(m, amps[sel], labels[sel])
            params = opt.step(params, grads.mean(axis=0))
        m = model.with_params(params)
        train_loss, train_acc = _dataset_metrics(m, amps, labels)
        if testset is not None and len(testset) > 0:
            t_amps, t_labels = _stack(testset)
            _, test_acc = _dataset_metrics(m, t_amps, t_labels)
        else:
            test_acc = float("nan")
        log.append({
            "epoch": epoch,
            "train_loss": train_loss,
            "train_acc": train_acc,
            "test_acc": test_acc,
        })
    return model.with_params(params), log


def retrain_augmented(model: QnnModel, trainset: Sequence[Sample],
                      adversarial_set: Sequence[Sample], cfg: TrainConfig,
                      testset: Sequence[Sample] | None = None) -> tuple[QnnModel, list[dict]]:
    """Retrain from a fresh initialization on the union of clean + adversarial sets.

    Adversarial samples must carry their original (correct) labels.  The fresh
    initialization re-derives the model's seeded starting parameters, so an
    empty adversarial set reproduces plain training exactly.
    """
    for state, _ in adversarial_set:
        if state.n_qubits != model.n_qubits:
            raise ValueError("adversarial sample dimension does not match model")
    fresh = build_model(model.arch, model.n_qubits, model.depth, model.n_classes, model.seed)
    union = list(trainset) + list(adversarial_set)
    return train(fresh, union, cfg, testset)
