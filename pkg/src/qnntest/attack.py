"""Adversarial test-sample generation guided by entanglement adequacy.

The generation loop ascends the joint objective

    w * [out_coeff * Q(U x) - in_coeff * Q(x)] + strategy_weight * f(probs, y_ori)

over the input amplitudes, where Q is the Meyer-Wallach measure, f is the
configured attack term (loss increase or non-original class mass), and each
step renormalizes the perturbed vector back onto the unit sphere.  A seed is
accepted once the model's prediction flips AND the similarity gate passes.
"""

from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .entanglement import QeaConfig, mw_value_and_cotangent
from .gradients import backprop, class_prob_cotangent, class_probs_batch, cross_entropy_dq
from .metrics import SimilarityThresholds, afm, atd, fidelity, passes_quality, trace_distance
from .models import LOSS_EPS, QnnModel, predict_label
from .statevec import StateVector, run_prims

STRATEGIES = ("fgsm", "dlfuzz")
_DEGENERATE_NORM = 1e-12


class DegenerateStepError(RuntimeError):
    """The perturbation step cancelled the state vector (zero after update)."""


@dataclass(frozen=True)
class AttackConfig:
    strategy: str = "dlfuzz"
    w: float = 1.0                  # entanglement-term weight
    k: float = 1.0                  # output-entanglement balance inside the QEA term
    strategy_weight: float = 1.0    # adversarial-term weight; only the ratio to w matters
    r: float = 0.05                 # gradient-ascent step size
    max_iters: int = 10
    thresholds: SimilarityThresholds | None = field(default_factory=SimilarityThresholds)
    balanced_qea: bool = False
    sign_mode: bool = False         # ablation: perturb with the componentwise gradient sign
    dlfuzz_targets: tuple[int, ...] | None = None  # None = all non-original classes

    def __post_init__(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.w < 0:
            raise ValueError("w must be >= 0")
        if not self.k > 0:
            raise ValueError("k must be > 0")
        if self.strategy_weight < 0:
            raise ValueError("strategy_weight must be >= 0")
        if not self.r > 0:
            raise ValueError("r must be > 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")

    @property
    def qea_config(self) -> QeaConfig:
        return QeaConfig(k=self.k, balanced=self.balanced_qea)


@dataclass(frozen=True)
class NoiseConfig:
    """Random coherent-noise baseline: per-qubit three-angle rotations with
    Gaussian angles of standard deviation sigma, applied each iteration."""

    sigma: float = 0.02
    max_iters: int = 10
    thresholds: SimilarityThresholds | None = field(default_factory=SimilarityThresholds)

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass
class AdversarialRecord:
    seed_id: int
    original_state: StateVector
    final_state: StateVector
    y_true: int
    y_ori: int
    y_adv: int
    iterations_used: int
    fidelity: float
    trace_distance: float
    qea_term_final: float
    q_in: float
    q_out: float
    accepted: bool
    failure: str | None = None          # None | "max_iters" | "degenerate_step"
    norm_error_max: float = 0.0
    objective_trace: list[float] = field(default_factory=list)

    def check_invariants(self, thresholds: SimilarityThresholds | None) -> None:
        if self.accepted:
            assert self.y_adv != self.y_ori, "accepted record without a label flip"
            if thresholds is not None:
                assert passes_quality(self.original_state, self.final_state, thresholds), \
                    "accepted record fails the similarity gate"


def adversarial_term(probs: np.ndarray, y_ori: int, strategy: str,
                     targets: tuple[int, ...] | None = None) -> float:
    """Attack term f: fgsm -> cross-entropy loss; dlfuzz -> target mass minus
    original-class mass (targets default to every non-original class)."""
    probs = np.asarray(probs, dtype=np.float64)
    if not 0 <= y_ori < probs.shape[0]:
        raise ValueError(f"label {y_ori} invalid for {probs.shape[0]} classes")
    if strategy == "fgsm":
        return -float(np.log(probs[y_ori] + LOSS_EPS))
    if strategy == "dlfuzz":
        if targets is None:
            targets = tuple(c for c in range(probs.shape[0]) if c != y_ori)
        return float(sum(probs[c] for c in targets) - probs[y_ori])
    raise ValueError(f"unknown strategy {strategy!r}")


def _strategy_dq(q: np.ndarray, y_ori: int, cfg: AttackConfig) -> np.ndarray:
    """df/dq for the configured strategy on a single probability row."""
    if cfg.strategy == "fgsm":
        # the fgsm term IS the loss (ascended), so df/dq = dL/dq
        return cross_entropy_dq(q[None, :], np.array([y_ori]))[0]
    d = np.zeros_like(q)
    targets = cfg.dlfuzz_targets
    if targets is None:
        targets = tuple(c for c in range(q.shape[0]) if c != y_ori)
    for c in targets:
        d[c] += 1.0
    d[y_ori] -= 1.0
    return d


def _objective_and_gradient(model: QnnModel, x: np.ndarray, y_ori: int,
                            cfg: AttackConfig) -> tuple[float, np.ndarray]:
    """Joint objective value and its complex input gradient, in one pass."""
    n = model.n_qubits
    qea_cfg = cfg.qea_config
    out = run_prims(x, n, model.circuit.prims, model.params)

    value = 0.0
    g_out = np.zeros_like(out)
    if cfg.w != 0.0:
        q_out, g_q_out = mw_value_and_cotangent(out, n)
        value += cfg.w * qea_cfg.out_coeff * q_out
        g_out = g_out + cfg.w * qea_cfg.out_coeff * g_q_out
    if cfg.strategy_weight != 0.0:
        q = class_probs_batch(model, out[None, :])[0]
        value += cfg.strategy_weight * adversarial_term(q, y_ori, cfg.strategy, cfg.dlfuzz_targets)
        d_dq = cfg.strategy_weight * _strategy_dq(q, y_ori, cfg)
        g_out = g_out + class_prob_cotangent(model, out[None, :], d_dq[None, :])[0]

    _, _, g_in = backprop(model.circuit, model.params, out, g_out)
    if cfg.w != 0.0:
        q_in, g_q_in = mw_value_and_cotangent(x, n)
        value -= cfg.w * qea_cfg.in_coeff * q_in
        g_in = g_in - cfg.w * qea_cfg.in_coeff * g_q_in
    return value, g_in


def _interleave(g: np.ndarray) -> np.ndarray:
    out = np.empty(2 * g.shape[0])
    out[0::2] = g.real
    out[1::2] = g.imag
    return out


def _deinterleave(grad: np.ndarray, dim: int) -> np.ndarray:
    grad = np.asarray(grad, dtype=np.float64).reshape(-1)
    if grad.shape[0] != 2 * dim:
        raise ValueError(f"gradient length {grad.shape[0]} != 2 * {dim}")
    return grad[0::2] + 1j * grad[1::2]


def joint_objective(model: QnnModel, state: StateVector, y_ori: int,
                    cfg: AttackConfig) -> float:
    """Value of the joint optimization objective at a state."""
    value, _ = _objective_and_gradient(model, state.amps, y_ori, cfg)
    return value


def input_gradient(model: QnnModel, state: StateVector, y_ori: int,
                   cfg: AttackConfig) -> np.ndarray:
    """Gradient of the joint objective w.r.t. the amplitudes' real degrees of
    freedom, as an interleaved (re, im) vector of length 2 * 2**n."""
    _, g = _objective_and_gradient(model, state.amps, y_ori, cfg)
    return _interleave(g)


def perturbation_op(state: StateVector, grad: np.ndarray, r: float) -> StateVector:
    """Componentwise amplitude update followed by renormalization.

    Returns normalize(x + r * g) where g is the complex form of ``grad``.
    Note the variant that doubles the state before adding the increment,
    x* = x + (x + r*g) = 2x + r*g, normalizes to the same direction as
    x + (r/2)*g: after projection back onto the unit sphere the two differ
    only in effective step size, so only this form is implemented.
    Raises DegenerateStepError when the update cancels the state.
    """
    z = _deinterleave(grad, state.dim)
    cand = state.amps + r * z
    nrm = float(np.linalg.norm(cand))
    if nrm < _DEGENERATE_NORM:
        raise DegenerateStepError("perturbation step cancelled the state vector")
    return StateVector(state.n_qubits, cand / nrm)


def _gate_ok(original: StateVector, candidate: StateVector,
             thresholds: SimilarityThresholds | None) -> bool:
    return True if thresholds is None else passes_quality(original, candidate, thresholds)


def _finish_record(model: QnnModel, seed_id: int, original: StateVector,
                   final: StateVector, y_true: int, y_ori: int, y_adv: int,
                   iters: int, accepted: bool, failure: str | None,
                   norm_err: float, trace: list[float],
                   qea_cfg: QeaConfig) -> AdversarialRecord:
    from .entanglement import mw_measure
    from .models import forward

    out_final = forward(model, final)
    q_in = mw_measure(final)
    q_out = mw_measure(out_final)
    return AdversarialRecord(
        seed_id=seed_id,
        original_state=original,
        final_state=final,
        y_true=y_true,
        y_ori=y_ori,
        y_adv=y_adv,
        iterations_used=iters,
        fidelity=fidelity(original, final),
        trace_distance=trace_distance(original, final),
        qea_term_final=qea_cfg.out_coeff * q_out - qea_cfg.in_coeff * q_in,
        q_in=q_in,
        q_out=q_out,
        accepted=accepted,
        failure=failure,
        norm_error_max=norm_err,
        objective_trace=trace,
    )


def generate_adversarial(model: QnnModel, seed_input: StateVector, y_true: int,
                         cfg: AttackConfig, seed_id: int = 0) -> AdversarialRecord:
    """Iterate forward / gradient / perturbation until the prediction flips and
    the similarity gate passes, or the iteration budget runs out."""
    y_ori = predict_label(model, seed_input)
    x = seed_input
    norm_err = x.norm_error()
    trace: list[float] = []
    accepted = False
    failure: str | None = None
    y_adv = y_ori
    iters = 0
    for it in range(1, cfg.max_iters + 1):
        value, g = _objective_and_gradient(model, x.amps, y_ori, cfg)
        trace.append(value)
        step = np.sign(_interleave(g)) if cfg.sign_mode else _interleave(g)
        try:
            x = perturbation_op(x, step, cfg.r)
        except DegenerateStepError:
            failure = "degenerate_step"
            iters = it
            break
        norm_err = max(norm_err, x.norm_error())
        assert norm_err < 1e-10, "state drifted off the unit sphere"
        y_adv = predict_label(model, x)
        iters = it
        if y_adv != y_ori and _gate_ok(seed_input, x, cfg.thresholds):
            accepted = True
            break
    if not accepted and failure is None:
        failure = "max_iters"
    trace.append(joint_objective(model, x, y_ori, cfg))
    rec = _finish_record(model, seed_id, seed_input, x, y_true, y_ori, y_adv,
                         iters, accepted, failure, norm_err, trace, cfg.qea_config)
    rec.check_invariants(cfg.thresholds)
    return rec


def random_coherent_noise(model: QnnModel, seed_input: StateVector, y_true: int,
                          cfg: NoiseConfig, rng: np.random.Generator,
                          seed_id: int = 0) -> AdversarialRecord:
    """Baseline: accumulate per-qubit Gaussian three-angle rotations until the
    prediction flips under the same quality gate."""
    from .statevec import GateKind, GateOp, apply_gate

    y_ori = predict_label(model, seed_input)
    x = seed_input
    norm_err = x.norm_error()
    accepted = False
    y_adv = y_ori
    iters = 0
    for it in range(1, cfg.max_iters + 1):
        for q in range(model.n_qubits):
            angles = rng.normal(0.0, cfg.sigma, size=3)
            x = apply_gate(x, GateOp(GateKind.U3, (q,), (0, 1, 2)), angles)
        norm_err = max(norm_err, x.norm_error())
        y_adv = predict_label(model, x)
        iters = it
        if y_adv != y_ori and _gate_ok(seed_input, x, cfg.thresholds):
            accepted = True
            break
    failure = None if accepted else "max_iters"
    rec = _finish_record(model, seed_id, seed_input, x, y_true, y_ori, y_adv,
                         iters, accepted, failure, norm_err, [], QeaConfig())
    rec.check_invariants(cfg.thresholds)
    return rec


@dataclass(frozen=True)
class CampaignSummary:
    n_seeds: int
    n_accepted: int
    gen_rate: float
    afm: float | None
    atd: float | None
    mean_qea: float


def run_campaign(model: QnnModel, seeds: Sequence[tuple[StateVector, int]],
                 cfg: AttackConfig | NoiseConfig, campaign_seed: int = 0,
                 threads: int = 1) -> tuple[list[AdversarialRecord], CampaignSummary]:
    """Process every seed independently and aggregate campaign metrics.

    AFM/ATD are computed over accepted records only, Gen_Rate over all seeds,
    and mean QEA (|k*Q(out) - Q(in)| on the final states) over all records.
    Noise campaigns draw per-seed substreams from the campaign seed, so
    results are reproducible and independent of scheduling order.
    """
    if len(seeds) == 0:
        raise ValueError("empty seed set")
    is_noise = isinstance(cfg, NoiseConfig)
    streams = np.random.SeedSequence(campaign_seed).spawn(len(seeds)) if is_noise else None

    def work(i: int) -> AdversarialRecord:
        state, y_true = seeds[i]
        if is_noise:
            rng = np.random.default_rng(streams[i])
            return random_coherent_noise(model, state, y_true, cfg, rng, seed_id=i)
        return generate_adversarial(model, state, y_true, cfg, seed_id=i)

    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(work, range(len(seeds))))
    else:
        records = [work(i) for i in range(len(seeds))]

    return records, summarize_records(records, k=1.0 if is_noise else cfg.k)


def summarize_records(records: Sequence[AdversarialRecord], k: float = 1.0) -> CampaignSummary:
    accepted = [r for r in records if r.accepted]
    pairs = [(r.original_state, r.final_state) for r in accepted]
    return CampaignSummary(
        n_seeds=len(records),
        n_accepted=len(accepted),
        gen_rate=len(accepted) / len(records),
        afm=afm(pairs) if pairs else None,
        atd=atd(pairs) if pairs else None,
        mean_qea=float(np.mean([abs(k * r.q_out - r.q_in) for r in records])),
    )
