"""Dense statevector simulation of n-qubit pure states.

Conventions used throughout the package:

* Qubit 0 is the most significant bit of a computational basis index, so the
  basis state |b0 b1 ... b_{n-1}> lives at index sum_j b_j * 2**(n-1-j).
* Amplitudes are complex128 and states are kept unit-norm; operations return
  new values (the input state is never mutated).
* Global phase is not tracked: every quantity consumed downstream
  (probabilities, entanglement measure, fidelity) is phase invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Sequence

import numpy as np

NORM_ATOL = 1e-10

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)

_PAULI = {"x": _X, "y": _Y, "z": _Z}


def _rot_matrix(axis: str, theta: float) -> np.ndarray:
    """exp(-i*theta/2 * P) for a Pauli axis P."""
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    if axis == "x":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if axis == "y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if axis == "z":
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=np.complex128)
    raise ValueError(f"unknown rotation axis {axis!r}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Unit-norm complex amplitude vector over ``n_qubits`` qubits."""

    n_qubits: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "amps", amps)
        if self.n_qubits < 1:
            raise ValueError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if amps.shape[0] != 1 << self.n_qubits:
            raise ValueError(
                f"amplitude vector has length {amps.shape[0]}, expected 2**{self.n_qubits}"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    @staticmethod
    def basis(n_qubits: int, index: int = 0) -> "StateVector":
        """Computational basis state |index> on n_qubits."""
        amps = np.zeros(1 << n_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return StateVector(n_qubits, amps)

    @staticmethod
    def from_unnormalized(amps: np.ndarray) -> "StateVector":
        """Build a state from an arbitrary nonzero vector, normalizing it."""
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        n = int(round(np.log2(amps.shape[0])))
        if 1 << n != amps.shape[0]:
            raise ValueError(f"length {amps.shape[0]} is not a power of two")
        nrm = np.linalg.norm(amps)
        if nrm < 1e-12:
            raise ValueError("cannot normalize an (almost) zero vector")
        return StateVector(n, amps / nrm)

    def norm_error(self) -> float:
        return abs(float(np.linalg.norm(self.amps)) - 1.0)


class GateKind(str, Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    U3 = "U3"
    H = "H"
    X = "X"
    CNOT = "CNOT"
    CZ = "CZ"
    CROT = "CRot"
    SU4 = "SU4"


_N_TARGETS = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.U3: 1,
    GateKind.H: 1, GateKind.X: 1,
    GateKind.CNOT: 2, GateKind.CZ: 2, GateKind.CROT: 2, GateKind.SU4: 2,
}

_N_SLOTS = {
    GateKind.RX: 1, GateKind.RY: 1, GateKind.RZ: 1, GateKind.U3: 3,
    GateKind.H: 0, GateKind.X: 0, GateKind.CNOT: 0, GateKind.CZ: 0,
    GateKind.CROT: 3, GateKind.SU4: 15,
}


@dataclass(frozen=True)
class GateOp:
    """A single gate: kind, target qubits, and parameter-slot references.

    Slot conventions for parameterized kinds:

    * ``RX/RY/RZ``: one slot, the rotation angle.
    * ``U3``: slots (theta, phi, lam); the gate equals RZ(phi) RY(theta) RZ(lam)
      up to global phase.
    * ``CRot``: slots (theta, phi, lam); applies the same three-angle rotation
      to ``targets[1]`` when control ``targets[0]`` is |1>.
    * ``SU4``: 15 slots; a general two-qubit block decomposed as per-qubit
      three-angle rotations around an XX/YY/ZZ entangling core.
    """

    kind: GateKind
    targets: tuple[int, ...]
    param_slots: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "param_slots", tuple(int(s) for s in self.param_slots))
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if len(self.targets) != _N_TARGETS[kind]:
            raise ValueError(f"{kind.value} takes {_N_TARGETS[kind]} targets, got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{kind.value} targets must be distinct, got {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ValueError(f"negative target index in {self.targets}")
        if len(self.param_slots) != _N_SLOTS[kind]:
            raise ValueError(
                f"{kind.value} requires {_N_SLOTS[kind]} parameter slots, got {len(self.param_slots)}"
            )
        if any(s < 0 for s in self.param_slots):
            raise ValueError(f"negative parameter slot in {self.param_slots}")


# -- primitive operations -------------------------------------------------
#
# Every gate compiles to a sequence of primitives: single-angle rotations
# (plain, controlled, or two-qubit Pauli-pair), plus fixed 1q/controlled-1q
# matrices.  Primitives are what the kernels and the reverse-mode gradient
# engine operate on; each parameterized primitive has the generator form
# U(theta) = exp(-i*theta/2 * G) with dU/dtheta = (-i/2) G U.

@dataclass(frozen=True)
class Prim:
    kind: str                 # "rot" | "crot" | "rot2" | "fixed" | "cfixed"
    qubits: tuple[int, ...]
    axis: str = ""            # pauli axis for rot/crot, pauli pair for rot2
    slot: int = -1
    mat: np.ndarray | None = field(default=None, compare=False)


def _compile_u3(q: int, slots: tuple[int, int, int], ctrl: int | None = None) -> list[Prim]:
    s_theta, s_phi, s_lam = slots
    kind = "rot" if ctrl is None else "crot"
    qs = (q,) if ctrl is None else (ctrl, q)
    return [
        Prim(kind, qs, axis="z", slot=s_lam),
        Prim(kind, qs, axis="y", slot=s_theta),
        Prim(kind, qs, axis="z", slot=s_phi),
    ]


def compile_gate(gate: GateOp) -> list[Prim]:
    k, t, s = gate.kind, gate.targets, gate.param_slots
    if k in (GateKind.RX, GateKind.RY, GateKind.RZ):
        return [Prim("rot", t, axis=k.value[-1].lower(), slot=s[0])]
    if k == GateKind.U3:
        return _compile_u3(t[0], s)  # type: ignore[arg-type]
    if k == GateKind.H:
        return [Prim("fixed", t, mat=_H)]
    if k == GateKind.X:
        return [Prim("fixed", t, mat=_X)]
    if k == GateKind.CNOT:
        return [Prim("cfixed", t, mat=_X)]
    if k == GateKind.CZ:
        return [Prim("cfixed", t, mat=_Z)]
    if k == GateKind.CROT:
        return _compile_u3(t[1], s, ctrl=t[0])  # type: ignore[arg-type]
    if k == GateKind.SU4:
        q1, q2 = t
        prims = _compile_u3(q1, (s[0], s[1], s[2])) + _compile_u3(q2, (s[3], s[4], s[5]))
        prims += [
            Prim("rot2", t, axis="xx", slot=s[6]),
            Prim("rot2", t, axis="yy", slot=s[7]),
            Prim("rot2", t, axis="zz", slot=s[8]),
        ]
        prims += _compile_u3(q1, (s[9], s[10], s[11])) + _compile_u3(q2, (s[12], s[13], s[14]))
        return prims
    raise ValueError(f"unsupported gate kind {k!r}")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate program over a shared parameter vector."""

    n_qubits: int
    gates: tuple[GateOp, ...]
    n_params: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.n_qubits < 1:
            raise ValueError("circuit needs at least one qubit")
        if self.n_params < 0:
            raise ValueError("n_params must be >= 0")
        for g in self.gates:
            if any(t >= self.n_qubits for t in g.targets):
                raise ValueError(
                    f"gate {g.kind.value} targets {g.targets} out of range for {self.n_qubits} qubits"
                )
            if any(s >= self.n_params for s in g.param_slots):
                raise ValueError(
                    f"gate {g.kind.value} references slot >= n_params ({self.n_params})"
                )

    @cached_property
    def prims(self) -> tuple[Prim, ...]:
        out: list[Prim] = []
        for g in self.gates:
            out.extend(compile_gate(g))
        return tuple(out)

    @property
    def gate_count(self) -> int:
        return len(self.gates)


# -- kernels ---------------------------------------------------------------
# All kernels take a raw amplitude array whose LAST axis is the state
# dimension; leading axes are treated as a batch.

def apply_1q(amps: np.ndarray, n: int, q: int, mat: np.ndarray) -> np.ndarray:
    lead = amps.shape[:-1]
    right = 1 << (n - 1 - q)
    t = amps.reshape(-1, 2, right)
    return np.matmul(mat, t).reshape(*lead, 1 << n)


def _ctrl_views(amps: np.ndarray, n: int, control: int, target: int):
    a, b = (control, target) if control < target else (target, control)
    mid = 1 << (b - a - 1)
    right = 1 << (n - 1 - b)
    return amps.reshape(-1, 2, mid, 2, right)


def _ctrl_block_apply(block: np.ndarray, mat: np.ndarray, target_first: bool) -> np.ndarray:
    """Apply mat to the target axis of a control=1 block.

    ``block`` is (B, mid, 2, right) when the control precedes the target and
    (B, 2, mid, right) otherwise.
    """
    if target_first:
        return np.moveaxis(np.matmul(mat, np.moveaxis(block, 1, -2)), -2, 1)
    return np.matmul(mat, block)


def apply_ctrl_1q(amps: np.ndarray, n: int, control: int, target: int, mat: np.ndarray) -> np.ndarray:
    lead = amps.shape[:-1]
    t = _ctrl_views(amps, n, control, target).copy()
    if control < target:
        t[:, 1] = _ctrl_block_apply(t[:, 1], mat, target_first=False)
    else:
        t[:, :, :, 1, :] = _ctrl_block_apply(t[:, :, :, 1, :], mat, target_first=True)
    return t.reshape(*lead, 1 << n)


def apply_proj1_ctrl_1q(amps: np.ndarray, n: int, control: int, target: int, mat: np.ndarray) -> np.ndarray:
    """mat on the control=1 block, zero on the control=0 block.

    Realizes the projected generator |1><1| (x) P needed for derivatives of
    controlled rotations.
    """
    lead = amps.shape[:-1]
    t = _ctrl_views(amps, n, control, target)
    out = np.zeros_like(t)
    if control < target:
        out[:, 1] = _ctrl_block_apply(t[:, 1], mat, target_first=False)
    else:
        out[:, :, :, 1, :] = _ctrl_block_apply(t[:, :, :, 1, :], mat, target_first=True)
    return out.reshape(*lead, 1 << n)


def apply_2q(amps: np.ndarray, n: int, q1: int, q2: int, mat4: np.ndarray) -> np.ndarray:
    lead = amps.shape[:-1]
    t = amps.reshape(-1, *([2] * n))
    t = np.moveaxis(t, (1 + q1, 1 + q2), (1, 2))
    rest = t.shape[3:]
    m = np.ascontiguousarray(t).reshape(t.shape[0], 4, -1)
    out = np.matmul(mat4, m).reshape(t.shape[0], 2, 2, *rest)
    out = np.moveaxis(out, (1, 2), (1 + q1, 1 + q2))
    return np.ascontiguousarray(out).reshape(*lead, 1 << n)


def _rot2_matrix(axis: str, theta: float) -> np.ndarray:
    p = _PAULI[axis[0]]
    pp = np.kron(p, p)
    return np.cos(theta / 2.0) * np.eye(4, dtype=np.complex128) - 1j * np.sin(theta / 2.0) * pp


def apply_prim(amps: np.ndarray, n: int, prim: Prim, params: np.ndarray, dagger: bool = False) -> np.ndarray:
    sign = -1.0 if dagger else 1.0
    if prim.kind == "rot":
        return apply_1q(amps, n, prim.qubits[0], _rot_matrix(prim.axis, sign * params[prim.slot]))
    if prim.kind == "crot":
        return apply_ctrl_1q(amps, n, prim.qubits[0], prim.qubits[1],
                             _rot_matrix(prim.axis, sign * params[prim.slot]))
    if prim.kind == "rot2":
        return apply_2q(amps, n, prim.qubits[0], prim.qubits[1],
                        _rot2_matrix(prim.axis, sign * params[prim.slot]))
    if prim.kind == "fixed":
        mat = prim.mat.conj().T if dagger else prim.mat
        return apply_1q(amps, n, prim.qubits[0], mat)
    if prim.kind == "cfixed":
        mat = prim.mat.conj().T if dagger else prim.mat
        return apply_ctrl_1q(amps, n, prim.qubits[0], prim.qubits[1], mat)
    raise ValueError(f"unknown primitive kind {prim.kind!r}")


def apply_prim_generator(amps: np.ndarray, n: int, prim: Prim) -> np.ndarray:
    """Apply dU/dtheta * U^dagger = -i/2 * G to a batch of amplitudes."""
    if prim.kind == "rot":
        return apply_1q(amps, n, prim.qubits[0], -0.5j * _PAULI[prim.axis])
    if prim.kind == "crot":
        return apply_proj1_ctrl_1q(amps, n, prim.qubits[0], prim.qubits[1], -0.5j * _PAULI[prim.axis])
    if prim.kind == "rot2":
        p = _PAULI[prim.axis[0]]
        return apply_2q(amps, n, prim.qubits[0], prim.qubits[1], -0.5j * np.kron(p, p))
    raise ValueError(f"primitive {prim.kind!r} has no parameter")


# -- public operations -----------------------------------------------------

def _check_params(gate_or_circuit, params: np.ndarray, required: int) -> np.ndarray:
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if params.shape[0] < required:
        raise ValueError(
            f"parameter vector of length {params.shape[0]} does not cover slot index {required - 1}"
        )
    return params


def apply_gate(state: StateVector, gate: GateOp, params: Sequence[float] = ()) -> StateVector:
    """Apply a single gate, returning a new state (value semantics)."""
    if any(t >= state.n_qubits for t in gate.targets):
        raise ValueError(f"gate targets {gate.targets} out of range for {state.n_qubits} qubits")
    required = max(gate.param_slots, default=-1) + 1
    p = _check_params(gate, params, required)
    amps = state.amps
    for prim in compile_gate(gate):
        amps = apply_prim(amps, state.n_qubits, prim, p)
    return StateVector(state.n_qubits, amps)


def apply_circuit(state: StateVector, circuit: Circuit, params: Sequence[float]) -> StateVector:
    """Left-fold of apply_gate over the circuit's gates, in order."""
    if state.n_qubits != circuit.n_qubits:
        raise ValueError(
            f"state has {state.n_qubits} qubits but circuit expects {circuit.n_qubits}"
        )
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if params.shape[0] != circuit.n_params:
        raise ValueError(
            f"parameter vector length {params.shape[0]} != circuit.n_params {circuit.n_params}"
        )
    amps = run_prims(state.amps, circuit.n_qubits, circuit.prims, params)
    return StateVector(state.n_qubits, amps)


def run_prims(amps: np.ndarray, n: int, prims: Sequence[Prim], params: np.ndarray) -> np.ndarray:
    for prim in prims:
        amps = apply_prim(amps, n, prim, params)
    return amps


MATRIX_QUBIT_LIMIT = 6


def circuit_matrix(circuit: Circuit, params: Sequence[float]) -> np.ndarray:
    """Dense 2^n x 2^n unitary of the circuit; verification oracle for small n."""
    if circuit.n_qubits > MATRIX_QUBIT_LIMIT:
        raise ValueError(
            f"circuit_matrix limited to {MATRIX_QUBIT_LIMIT} qubits, got {circuit.n_qubits}"
        )
    params = np.asarray(params, dtype=np.float64).reshape(-1)
    if params.shape[0] != circuit.n_params:
        raise ValueError("parameter vector length mismatch")
    dim = 1 << circuit.n_qubits
    basis = np.eye(dim, dtype=np.complex128)  # row i is |i>
    cols = run_prims(basis, circuit.n_qubits, circuit.prims, params)
    return np.ascontiguousarray(cols.T)


def measure_probs(state: StateVector, qubits: Sequence[int]) -> np.ndarray:
    """Marginal Born probabilities of the listed qubits.

    The outcome index orders bits as listed: the first qubit in ``qubits`` is
    the most significant bit of the outcome.
    """
    qs = [int(q) for q in qubits]
    if len(set(qs)) != len(qs):
        raise ValueError(f"duplicate qubit index in {qs}")
    if any(q < 0 or q >= state.n_qubits for q in qs):
        raise ValueError(f"qubit index out of range in {qs}")
    n = state.n_qubits
    p = np.abs(state.amps.reshape([2] * n)) ** 2
    drop = tuple(ax for ax in range(n) if ax not in qs)
    marg = p.sum(axis=drop) if drop else p
    # after summing, surviving axes are in increasing qubit order
    kept_sorted = sorted(qs)
    perm = [kept_sorted.index(q) for q in qs]
    return np.transpose(marg, perm).reshape(-1)
