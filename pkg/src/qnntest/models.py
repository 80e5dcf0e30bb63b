"""QNN classifier architectures: builders, forward pass, and readout.

Three parameterized-circuit families are provided.  Gate and parameter counts
are introspectable and stable for a fixed (arch, n_qubits, depth); all
trainable angles live in a single shared parameter vector initialized
uniformly in [0, 2pi) from the model seed.

* QCL: depth blocks of per-qubit (RX, RZ, RX) rotations followed by a CNOT
  ring.  8 qubits at the default depth 5 give 160 gates / 120 parameters.
* CCQC: depth blocks of per-qubit (RZ, RY, RZ) rotations followed by an
  entangling ring; every third block uses trainable controlled rotations
  whose control range hops over 1, 3, 5, ... while the remaining blocks use
  fixed CZ rings.  8 qubits at the default depth 6 give 192 gates / 192
  parameters.
* QCNN: alternating convolution stages (general two-qubit blocks on adjacent
  active pairs, decomposed into single-angle rotations around a three-CNOT
  core) and pooling stages (a controlled three-angle rotation from each
  discarded qubit onto its kept partner, after which the discarded qubit is
  never touched again), until only the readout qubit(s) survive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from math import ceil, log2
from pathlib import Path

import numpy as np

from .statevec import Circuit, GateKind, GateOp, StateVector, apply_circuit, measure_probs

LOSS_EPS = 1e-12
_RENORM_TOL = 1e-12


class Arch(str, Enum):
    QCL = "QCL"
    CCQC = "CCQC"
    QCNN = "QCNN"


DEFAULT_DEPTHS = {Arch.QCL: 5, Arch.CCQC: 6, Arch.QCNN: 1}


@dataclass(frozen=True)
class ReadoutScheme:
    """Measured qubits and the class <-> outcome mapping.

    Outcome c of the measured qubits (first listed qubit = most significant
    bit) maps to class c; probabilities are renormalized over the first
    n_classes outcomes.
    """

    qubits: tuple[int, ...]
    n_classes: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(int(q) for q in self.qubits))
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if (1 << len(self.qubits)) < self.n_classes:
            raise ValueError(
                f"{len(self.qubits)} readout qubits cannot encode {self.n_classes} classes"
            )


@dataclass(frozen=True)
class QnnModel:
    arch: Arch
    circuit: Circuit
    params: np.ndarray
    readout: ReadoutScheme
    n_classes: int
    depth: int
    seed: int

    def __post_init__(self) -> None:
        params = np.asarray(self.params, dtype=np.float64).reshape(-1)
        object.__setattr__(self, "params", params)
        if params.shape[0] != self.circuit.n_params:
            raise ValueError(
                f"params length {params.shape[0]} != circuit.n_params {self.circuit.n_params}"
            )

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    @property
    def gate_count(self) -> int:
        return self.circuit.gate_count

    @property
    def param_count(self) -> int:
        return self.circuit.n_params

    def with_params(self, params: np.ndarray) -> "QnnModel":
        return replace(self, params=np.asarray(params, dtype=np.float64).copy())


class _SlotCounter:
    def __init__(self) -> None:
        self.n = 0

    def take(self, k: int) -> tuple[int, ...]:
        out = tuple(range(self.n, self.n + k))
        self.n += k
        return out


def _ring_pairs(n: int) -> list[tuple[int, int]]:
    if n == 2:
        return [(0, 1)]
    return [(q, (q + 1) % n) for q in range(n)]


def _build_qcl(n: int, depth: int) -> tuple[list[GateOp], int]:
    gates: list[GateOp] = []
    slots = _SlotCounter()
    for _ in range(depth):
        for q in range(n):
            for kind in (GateKind.RX, GateKind.RZ, GateKind.RX):
                gates.append(GateOp(kind, (q,), slots.take(1)))
        for c, t in _ring_pairs(n):
            gates.append(GateOp(GateKind.CNOT, (c, t)))
    return gates, slots.n


_CCQC_RANGES = (1, 3, 5, 7, 9, 11)


def _build_ccqc(n: int, depth: int) -> tuple[list[GateOp], int]:
    gates: list[GateOp] = []
    slots = _SlotCounter()
    hops = [r for r in _CCQC_RANGES if r % n != 0] or [1]
    for layer in range(depth):
        for q in range(n):
            for kind in (GateKind.RZ, GateKind.RY, GateKind.RZ):
                gates.append(GateOp(kind, (q,), slots.take(1)))
        if layer % 3 == 0:
            r = hops[(layer // 3) % len(hops)]
            for q in range(n):
                gates.append(GateOp(GateKind.CROT, (q, (q + r) % n), slots.take(3)))
        else:
            for c, t in _ring_pairs(n):
                gates.append(GateOp(GateKind.CZ, (c, t)))
    return gates, slots.n


def _two_qubit_block(q1: int, q2: int, slots: _SlotCounter) -> list[GateOp]:
    """15-parameter general two-qubit block: local triplets around 3 CNOTs."""
    gates: list[GateOp] = []
    for q in (q1, q2):
        for kind in (GateKind.RZ, GateKind.RY, GateKind.RZ):
            gates.append(GateOp(kind, (q,), slots.take(1)))
    gates.append(GateOp(GateKind.CNOT, (q2, q1)))
    gates.append(GateOp(GateKind.RZ, (q1,), slots.take(1)))
    gates.append(GateOp(GateKind.RY, (q2,), slots.take(1)))
    gates.append(GateOp(GateKind.CNOT, (q1, q2)))
    gates.append(GateOp(GateKind.RY, (q2,), slots.take(1)))
    gates.append(GateOp(GateKind.CNOT, (q2, q1)))
    for q in (q1, q2):
        for kind in (GateKind.RZ, GateKind.RY, GateKind.RZ):
            gates.append(GateOp(kind, (q,), slots.take(1)))
    return gates


def _build_qcnn(n: int, depth: int, n_classes: int) -> tuple[list[GateOp], int, tuple[int, ...]]:
    gates: list[GateOp] = []
    slots = _SlotCounter()
    active = list(range(n))
    target_keep = max(1, ceil(log2(n_classes)))
    while len(active) > target_keep:
        for rep in range(depth):
            offset = rep % 2
            for i in range(offset, len(active) - 1, 2):
                gates.extend(_two_qubit_block(active[i], active[i + 1], slots))
        n_pairs = min(len(active) // 2, len(active) - target_keep)
        kept: list[int] = []
        i = 0
        for _ in range(n_pairs):
            keep, drop = active[i], active[i + 1]
            gates.append(GateOp(GateKind.CROT, (drop, keep), slots.take(3)))
            kept.append(keep)
            i += 2
        kept.extend(active[i:])
        active = kept
    return gates, slots.n, tuple(active)


def build_model(arch: Arch | str, n_qubits: int, depth: int | None = None,
                n_classes: int = 2, seed: int = 0) -> QnnModel:
    """Deterministically construct a model for (arch, n_qubits, depth, seed)."""
    arch = Arch(arch)
    if not 2 <= n_qubits <= 12:
        raise ValueError(f"n_qubits must be in 2..12, got {n_qubits}")
    if depth is None:
        depth = DEFAULT_DEPTHS[arch]
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if n_classes < 2:
        raise ValueError("need at least 2 classes")

    n_readout = ceil(log2(n_classes))
    if arch == Arch.QCL:
        gates, n_params = _build_qcl(n_qubits, depth)
        readout_qubits = tuple(range(n_readout))
    elif arch == Arch.CCQC:
        gates, n_params = _build_ccqc(n_qubits, depth)
        readout_qubits = tuple(range(n_readout))
    else:
        gates, n_params, survivors = _build_qcnn(n_qubits, depth, n_classes)
        readout_qubits = survivors[:n_readout]

    circuit = Circuit(n_qubits, tuple(gates), n_params)
    params = np.random.default_rng(seed).uniform(0.0, 2.0 * np.pi, n_params)
    readout = ReadoutScheme(readout_qubits, n_classes)
    return QnnModel(arch, circuit, params, readout, n_classes, depth, seed)


def forward(model: QnnModel, state: StateVector) -> StateVector:
    """Run the model circuit on an input state."""
    if state.n_qubits != model.n_qubits:
        raise ValueError(
            f"input has {state.n_qubits} qubits, model expects {model.n_qubits}"
        )
    return apply_circuit(state, model.circuit, model.params)


def readout_marginal(model: QnnModel, output: StateVector) -> np.ndarray:
    """Full Born distribution over the readout qubits (before renormalization)."""
    return measure_probs(output, model.readout.qubits)


def restrict_probs(marginal: np.ndarray, n_classes: int) -> np.ndarray:
    restricted = np.asarray(marginal, dtype=np.float64)[:n_classes]
    total = float(restricted.sum())
    if total < _RENORM_TOL:
        raise ValueError(f"restricted readout mass {total:.3e} too small to renormalize")
    return restricted / total


def predict_probs(model: QnnModel, output: StateVector) -> np.ndarray:
    """Class probabilities from a forward-pass output state."""
    return restrict_probs(readout_marginal(model, output), model.n_classes)


def predict_label(model: QnnModel, state: StateVector) -> int:
    """Argmax class for an input state; ties break toward the lower index."""
    return int(np.argmax(predict_probs(model, forward(model, state))))


def loss(probs: np.ndarray, label: int) -> float:
    """Cross-entropy -log(probs[label] + eps)."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= label < probs.shape[0]:
        raise ValueError(f"label {label} invalid for {probs.shape[0]} classes")
    return -float(np.log(probs[label] + LOSS_EPS))


CHECKPOINT_VERSION = 1


def save_checkpoint(model: QnnModel, path: str | Path) -> None:
    """Write a model checkpoint; parameters round-trip bit-exactly via hex."""
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "arch": model.arch.value,
        "n_qubits": model.n_qubits,
        "depth": model.depth,
        "seed": model.seed,
        "n_classes": model.n_classes,
        "readout_qubits": list(model.readout.qubits),
        "params_hex": [float(v).hex() for v in model.params],
    }
    Path(path).write_text(json.dumps(doc, indent=1))


def load_checkpoint(path: str | Path) -> QnnModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    doc = json.loads(path.read_text())
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    model = build_model(doc["arch"], doc["n_qubits"], doc["depth"], doc["n_classes"], doc["seed"])
    params = np.array([float.fromhex(h) for h in doc["params_hex"]], dtype=np.float64)
    if params.shape[0] != model.param_count:
        raise ValueError(
            f"checkpoint has {params.shape[0]} params, circuit expects {model.param_count}"
        )
    if tuple(doc["readout_qubits"]) != model.readout.qubits:
        raise ValueError("checkpoint readout does not match rebuilt circuit")
    return model.with_params(params)
