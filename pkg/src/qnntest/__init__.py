"""Entanglement-guided adversarial testing toolkit for QNN classifiers."""

__version__ = "0.1.0"

from .statevec import Circuit, GateKind, GateOp, StateVector  # noqa: F401
