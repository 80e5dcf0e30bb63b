"""Reverse-mode (adjoint) differentiation through circuits and readout.

Gradients are exact: every parameterized primitive has the form
U(theta) = exp(-i*theta/2 * G) with a known generator G, so
dU/dtheta |psi_pre> = (-i/2) G |psi_post> and the whole parameter vector is
obtained in a single backward sweep that un-applies each primitive.

Complex gradients ``g`` follow the convention dL = Re(g^dagger d psi); the
real and imaginary parts of ``g`` are then literally the derivatives of L
with respect to the real and imaginary parts of the amplitudes.

All functions accept batched amplitude arrays (state dimension last).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .models import LOSS_EPS, QnnModel
from .statevec import Circuit, apply_prim, apply_prim_generator, run_prims


def backprop(circuit: Circuit, params: np.ndarray, out_amps: np.ndarray,
             out_cotangent: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Backward sweep from the circuit output.

    Args:
        out_amps: amplitudes after the circuit, shape (..., 2**n).
        out_cotangent: complex gradient at the output, same shape.

    Returns:
        (param_grads, in_amps, in_cotangent) where param_grads has shape
        (..., n_params), and in_cotangent is the complex gradient with
        respect to the circuit input.
    """
    n = circuit.n_qubits
    params = np.asarray(params, dtype=np.float64)
    psi = np.asarray(out_amps, dtype=np.complex128)
    lam = np.asarray(out_cotangent, dtype=np.complex128)
    grads = np.zeros((*psi.shape[:-1], circuit.n_params))
    for prim in reversed(circuit.prims):
        if prim.slot >= 0:
            dpsi = apply_prim_generator(psi, n, prim)
            grads[..., prim.slot] += np.real(np.sum(np.conj(lam) * dpsi, axis=-1))
        psi = apply_prim(psi, n, prim, params, dagger=True)
        lam = apply_prim(lam, n, prim, params, dagger=True)
    return grads, psi, lam


@lru_cache(maxsize=64)
def _outcome_matrix(n_qubits: int, readout_qubits: tuple[int, ...]) -> np.ndarray:
    """(2**n, 2**k) 0/1 matrix mapping basis indices to readout outcomes."""
    dim = 1 << n_qubits
    idx = np.arange(dim)
    outcome = np.zeros(dim, dtype=np.int64)
    k = len(readout_qubits)
    for pos, q in enumerate(readout_qubits):
        bit = (idx >> (n_qubits - 1 - q)) & 1
        outcome |= bit << (k - 1 - pos)
    mat = np.zeros((dim, 1 << k))
    mat[idx, outcome] = 1.0
    return mat


def readout_marginal_batch(model: QnnModel, out_amps: np.ndarray) -> np.ndarray:
    """Born marginal over the readout qubits for a batch of output states."""
    mat = _outcome_matrix(model.n_qubits, model.readout.qubits)
    return (np.abs(out_amps) ** 2) @ mat


def class_probs_batch(model: QnnModel, out_amps: np.ndarray) -> np.ndarray:
    m = readout_marginal_batch(model, out_amps)
    restricted = m[..., : model.n_classes]
    return restricted / restricted.sum(axis=-1, keepdims=True)


def class_prob_cotangent(model: QnnModel, out_amps: np.ndarray,
                         d_dq: np.ndarray) -> np.ndarray:
    """Pull a gradient on renormalized class probabilities back to amplitudes.

    ``d_dq`` holds dL/dq_c for the n_classes renormalized probabilities;
    returns the complex output-state cotangent.
    """
    mat = _outcome_matrix(model.n_qubits, model.readout.qubits)
    n_out = mat.shape[1]
    C = model.n_classes
    m = (np.abs(out_amps) ** 2) @ mat
    s = m[..., :C].sum(axis=-1, keepdims=True)
    q = m[..., :C] / s
    inner = np.sum(d_dq * q, axis=-1, keepdims=True)
    d_dm = np.zeros((*out_amps.shape[:-1], n_out))
    d_dm[..., :C] = (d_dq - inner) / s
    d_dp = d_dm @ mat.T
    return 2.0 * d_dp * out_amps


def cross_entropy_dq(q: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """dL/dq for L = -log(q[label] + eps), batched."""
    d = np.zeros_like(q)
    rows = np.arange(q.shape[0])
    d[rows, labels] = -1.0 / (q[rows, labels] + LOSS_EPS)
    return d


def batch_loss_and_param_grads(model: QnnModel, amps: np.ndarray,
                               labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample cross-entropy losses and parameter gradients.

    Args:
        amps: (B, 2**n) encoded input amplitudes.
        labels: (B,) integer class labels.

    Returns:
        (losses (B,), grads (B, n_params)).
    """
    out = run_prims(amps, model.n_qubits, model.circuit.prims, model.params)
    q = class_probs_batch(model, out)
    rows = np.arange(q.shape[0])
    losses = -np.log(q[rows, labels] + LOSS_EPS)
    cot = class_prob_cotangent(model, out, cross_entropy_dq(q, labels))
    grads, _, _ = backprop(model.circuit, model.params, out, cot)
    return losses, grads


def param_gradient_shift(model: QnnModel, amps: np.ndarray,
                         labels: np.ndarray) -> np.ndarray:
    """Two-term parameter-shift oracle (pi/2 shifts) for the mean batch loss.

    Valid only for circuits whose parameterized primitives all have involutory
    generators (plain and two-qubit Pauli rotations); raises for controlled
    rotations, whose projected generator needs the four-term rule.
    """
    circuit = model.circuit
    for prim in circuit.prims:
        if prim.kind == "crot":
            raise ValueError("shift oracle does not support controlled rotations")
    mat = _outcome_matrix(model.n_qubits, model.readout.qubits)
    C = model.n_classes
    rows = np.arange(amps.shape[0])

    def marginals(params: np.ndarray) -> np.ndarray:
        out = run_prims(amps, model.n_qubits, circuit.prims, params)
        return (np.abs(out) ** 2) @ mat

    m0 = marginals(model.params)
    s0 = m0[..., :C].sum(axis=-1, keepdims=True)
    q0 = m0[..., :C] / s0
    d_dq = cross_entropy_dq(q0, labels)
    inner = np.sum(d_dq * q0, axis=-1, keepdims=True)
    d_dm = np.zeros_like(m0)
    d_dm[..., :C] = (d_dq - inner) / s0

    grads = np.zeros(circuit.n_params)
    for slot in range(circuit.n_params):
        plus = model.params.copy()
        plus[slot] += np.pi / 2
        minus = model.params.copy()
        minus[slot] -= np.pi / 2
        dm = (marginals(plus) - marginals(minus)) / 2.0
        grads[slot] = float(np.mean(np.sum(d_dm * dm, axis=-1)))
    return grads
