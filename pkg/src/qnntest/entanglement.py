"""Meyer-Wallach global entanglement measure and the entanglement-adequacy
criterion built on it.

The measure is computed three ways, which the test suite cross-checks:

* :func:`mw_measure` evaluates the defining sum of parallelogram areas over
  the qubit-deletion maps (the contract path),
* :func:`mw_measure_purity` evaluates ``2 * (1 - mean single-qubit purity)``
  from reduced density matrices (oracle, tests only),
* :func:`mw_value_and_cotangent` evaluates the algebraically identical
  Gram-determinant form together with its exact complex gradient (the path
  the optimizer differentiates).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevec import StateVector

_NORM_TOL = 1e-6


@dataclass(frozen=True)
class QeaConfig:
    """Weighting of output-state vs input-state entanglement.

    ``k`` scales the output-state term; ``balanced`` switches to the variant
    with coefficients 2k/(k+1) and 2/(k+1), which keeps the magnitude of the
    term comparable across k values (used as a signed optimization objective).
    """

    k: float = 1.0
    balanced: bool = False

    def __post_init__(self) -> None:
        if not self.k > 0:
            raise ValueError(f"k must be > 0, got {self.k}")

    @property
    def out_coeff(self) -> float:
        return 2.0 * self.k / (self.k + 1.0) if self.balanced else self.k

    @property
    def in_coeff(self) -> float:
        return 2.0 / (self.k + 1.0) if self.balanced else 1.0


def _check_normalized(state: StateVector) -> None:
    if state.norm_error() > _NORM_TOL:
        raise ValueError(f"state norm deviates by {state.norm_error():.3e} (> {_NORM_TOL})")


def iota_map(state: StateVector, j: int, b: int) -> np.ndarray:
    """Delete qubit ``j`` (1-based label), keeping amplitudes whose j-th bit is ``b``.

    Returns the (generally unnormalized) vector of length 2**(n-1).
    """
    n = state.n_qubits
    if not 1 <= j <= n:
        raise ValueError(f"qubit label j={j} out of range 1..{n}")
    if b not in (0, 1):
        raise ValueError(f"b must be 0 or 1, got {b}")
    t = state.amps.reshape([2] * n)
    return np.take(t, b, axis=j - 1).reshape(-1).copy()


def parallelogram_area(u: np.ndarray, v: np.ndarray) -> float:
    """Squared-area sum sum_{i<j} |u_i v_j - u_j v_i|^2 of two complex vectors."""
    u = np.asarray(u, dtype=np.complex128).reshape(-1)
    v = np.asarray(v, dtype=np.complex128).reshape(-1)
    if u.shape != v.shape:
        raise ValueError(f"length mismatch: {u.shape[0]} vs {v.shape[0]}")
    m = np.outer(u, v)
    d = m - m.T
    return 0.5 * float(np.sum(np.abs(d) ** 2))


def _mw_raw(state: StateVector) -> float:
    n = state.n_qubits
    total = 0.0
    for j in range(1, n + 1):
        total += parallelogram_area(iota_map(state, j, 0), iota_map(state, j, 1))
    return 4.0 / n * total


def mw_measure(state: StateVector) -> float:
    """Meyer-Wallach measure in [0, 1]; 0 for product states, 1 for GHZ/Bell."""
    _check_normalized(state)
    return min(max(_mw_raw(state), 0.0), 1.0)


def mw_measure_purity(state: StateVector) -> float:
    """Purity-form oracle: 2 * (1 - mean_j tr(rho_j^2)) over single-qubit marginals."""
    _check_normalized(state)
    n = state.n_qubits
    t = state.amps.reshape([2] * n)
    purities = []
    for j in range(n):
        a = np.moveaxis(t, j, 0).reshape(2, -1)
        rho = a @ a.conj().T
        purities.append(float(np.real(np.trace(rho @ rho))))
    return 2.0 * (1.0 - float(np.mean(purities)))


def mw_value_and_cotangent(amps: np.ndarray, n: int) -> tuple[float, np.ndarray]:
    """MW measure of a raw amplitude vector and its complex gradient.

    The gradient ``g`` satisfies dQ = Re(g^dagger d amps); its real/imaginary
    parts are the derivatives with respect to the real/imaginary parts of the
    amplitudes.  Uses S(u, v) = |u|^2 |v|^2 - |<v|u>|^2 per deleted qubit.
    """
    t = amps.reshape([2] * n)
    g = np.zeros_like(amps).reshape([2] * n)
    scale = 4.0 / n
    total = 0.0
    sel: list[slice | int] = [slice(None)] * n
    for j in range(n):
        u = np.take(t, 0, axis=j).reshape(-1)
        v = np.take(t, 1, axis=j).reshape(-1)
        nu = float(np.real(np.vdot(u, u)))
        nv = float(np.real(np.vdot(v, v)))
        c = np.vdot(v, u)  # sum_i u_i conj(v_i)
        total += nu * nv - float(np.abs(c)) ** 2
        gu = 2.0 * scale * (nv * u - c * v)
        gv = 2.0 * scale * (nu * v - np.conj(c) * u)
        sel[j] = 0
        g[tuple(sel)] += gu.reshape([2] * (n - 1))
        sel[j] = 1
        g[tuple(sel)] += gv.reshape([2] * (n - 1))
        sel[j] = slice(None)
    return scale * total, g.reshape(-1)


def qea_term(state_in: StateVector, state_out: StateVector, cfg: QeaConfig) -> float:
    """Signed per-sample adequacy term: out_coeff*Q(out) - in_coeff*Q(in)."""
    _check_normalized(state_in)
    _check_normalized(state_out)
    return cfg.out_coeff * mw_measure(state_out) - cfg.in_coeff * mw_measure(state_in)


def qea(inputs: list[StateVector], model, cfg: QeaConfig) -> float:
    """Entanglement adequacy of a test set against a model.

    Mean over inputs of |k*Q(U x) - Q(x)|; the balanced variant averages the
    signed balanced term instead.
    """
    from .models import forward

    if not inputs:
        raise ValueError("empty input set")
    terms = []
    for x in inputs:
        out = forward(model, x)
        if cfg.balanced:
            terms.append(qea_term(x, out, cfg))
        else:
            terms.append(abs(cfg.k * mw_measure(out) - mw_measure(x)))
    return float(np.mean(terms))
