"""Command-line interface.

Subcommands cover the full workflow: ``synth-data`` writes a stand-in glyph
dataset, ``train`` fits a model and writes a checkpoint, ``attack`` / ``noise``
run generation campaigns, ``retrain`` augments the training set with generated
records, and ``sampling`` runs the shot-budget experiment.

Every run takes an optional JSON config file; command-line flags override the
corresponding config entries.  The effective configuration is echoed into the
output directory together with fixed-name outputs (checkpoint.json,
records.jsonl, summary.csv, train_log.csv, sampling.csv, figures/*.png).

Exit codes: 0 success, 1 internal error, 2 user/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import traceback
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import report
from .attack import (AdversarialRecord, AttackConfig, CampaignSummary, NoiseConfig,
                     run_campaign)
from .data import TaskSpec, build_task
from .metrics import SimilarityThresholds
from .models import Arch, QnnModel, build_model, load_checkpoint, save_checkpoint
from .sampling import ideal_quality, sampling_experiment
from .statevec import StateVector
from .synthdata import generate_dataset
from .train import TrainConfig, evaluate_accuracy, retrain_augmented, train


class UserError(Exception):
    """Configuration or input problem attributable to the caller."""


# -- config plumbing -------------------------------------------------------

def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.exists():
        raise UserError(f"config file not found: {p}")
    try:
        doc = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UserError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise UserError(f"config file {p} must hold a JSON object")
    return doc


def _section(cfg: dict, name: str) -> dict:
    sec = cfg.get(name, {})
    if not isinstance(sec, dict):
        raise UserError(f"config section {name!r} must be an object")
    return dict(sec)


def _override(sec: dict, **flags: Any) -> dict:
    for key, value in flags.items():
        if value is not None:
            sec[key] = value
    return sec


def _out_dir(args, cfg: dict) -> Path:
    out = args.out or cfg.get("out_dir")
    if out is None:
        raise UserError("no output directory: pass --out or set out_dir in the config")
    path = Path(out)
    (path / "figures").mkdir(parents=True, exist_ok=True)
    return path


def _global_seed(args, cfg: dict) -> int:
    return int(args.seed if args.seed is not None else cfg.get("seed", 0))


def _echo_config(out: Path, effective: dict) -> None:
    (out / "config.json").write_text(json.dumps(effective, indent=2, default=str))


def _write_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def _task_spec(args, cfg: dict) -> TaskSpec:
    sec = _override(
        _section(cfg, "task"),
        dataset=getattr(args, "dataset", None),
        classes=[int(c) for c in args.classes.split(",")] if getattr(args, "classes", None) else None,
        image_side=getattr(args, "image_side", None),
        train_limit=getattr(args, "train_limit", None),
        test_limit=getattr(args, "test_limit", None),
    )
    sec.setdefault("dataset", "mnist")
    sec.setdefault("classes", (3, 6))
    try:
        return TaskSpec(
            dataset=sec["dataset"],
            classes=tuple(sec["classes"]),
            image_side=int(sec.get("image_side", 16)),
            train_limit=int(sec.get("train_limit", 2000)),
            test_limit=int(sec.get("test_limit", 500)),
        )
    except ValueError as exc:
        raise UserError(f"invalid task spec: {exc}") from exc


def _data_dir(args, cfg: dict) -> Path:
    d = getattr(args, "data_dir", None) or cfg.get("data_dir")
    if d is None:
        raise UserError("no dataset directory: pass --data-dir or set data_dir in the config")
    path = Path(d)
    if not path.exists():
        raise UserError(f"dataset directory not found: {path}")
    return path


def _load_split(args, cfg: dict, seed: int) -> tuple[TaskSpec, list, list]:
    spec = _task_spec(args, cfg)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(0,)))
    try:
        trainset, testset = build_task(spec, rng, _data_dir(args, cfg))
    except (FileNotFoundError, ValueError) as exc:
        raise UserError(str(exc)) from exc
    return spec, trainset, testset


def _thresholds(args, sec: dict) -> SimilarityThresholds | None:
    sec = _override(
        sec,
        min_fidelity=getattr(args, "min_fidelity", None),
        max_trace_distance=getattr(args, "max_trace_distance", None),
        combine=getattr(args, "combine", None),
    )
    if getattr(args, "no_similarity_gate", False) or sec.get("no_similarity_gate", False):
        return None
    try:
        return SimilarityThresholds(
            min_fidelity=float(sec.get("min_fidelity", 0.90)),
            max_trace_distance=float(sec.get("max_trace_distance", 0.45)),
            combine=str(sec.get("combine", "or")),
        )
    except ValueError as exc:
        raise UserError(f"invalid similarity thresholds: {exc}") from exc


def _figures_enabled(args, cfg: dict) -> bool:
    if getattr(args, "no_figures", False):
        return False
    return bool(cfg.get("figures", True))


# -- record (de)serialization ----------------------------------------------

def _state_to_list(state: StateVector) -> list[float]:
    out = np.empty(2 * state.dim)
    out[0::2] = state.amps.real
    out[1::2] = state.amps.imag
    return [float(v) for v in out]


def _state_from_list(values: Sequence[float]) -> StateVector:
    arr = np.asarray(values, dtype=np.float64)
    amps = arr[0::2] + 1j * arr[1::2]
    return StateVector.from_unnormalized(amps)


def _record_to_json(rec: AdversarialRecord, dump_states: bool) -> dict:
    doc = {
        "seed_id": rec.seed_id,
        "y_true": rec.y_true,
        "y_ori": rec.y_ori,
        "y_adv": rec.y_adv,
        "iterations_used": rec.iterations_used,
        "fidelity": rec.fidelity,
        "trace_distance": rec.trace_distance,
        "qea_term_final": rec.qea_term_final,
        "q_in": rec.q_in,
        "q_out": rec.q_out,
        "accepted": rec.accepted,
        "failure": rec.failure,
        "norm_error_max": rec.norm_error_max,
    }
    if dump_states:
        doc["original_state"] = _state_to_list(rec.original_state)
        doc["final_state"] = _state_to_list(rec.final_state)
    return doc


def _write_records(path: Path, records: list[AdversarialRecord], dump_states: bool) -> None:
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(_record_to_json(rec, dump_states)) + "\n")


def _read_records(paths: Sequence[str | Path]) -> list[dict]:
    docs: list[dict] = []
    for path in paths:
        p = Path(path)
        if not p.exists():
            raise UserError(f"records file not found: {p}")
        for line_no, line in enumerate(p.read_text().splitlines(), start=1):
            if not line.strip():
                continue
            try:
                docs.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise UserError(f"{p}:{line_no}: invalid JSONL record: {exc}") from exc
    return docs


def _summary_row(model_name: str, task: str, strategy: str, cfg: AttackConfig | NoiseConfig,
                 summary: CampaignSummary) -> dict:
    thr = cfg.thresholds
    return {
        "model": model_name,
        "task": task,
        "strategy": strategy,
        "w": getattr(cfg, "w", ""),
        "k": getattr(cfg, "k", ""),
        "r": getattr(cfg, "r", ""),
        "sigma": getattr(cfg, "sigma", ""),
        "max_iters": cfg.max_iters,
        "min_fidelity": thr.min_fidelity if thr else "",
        "max_trace_distance": thr.max_trace_distance if thr else "",
        "combine": thr.combine if thr else "none",
        "n_seeds": summary.n_seeds,
        "n_accepted": summary.n_accepted,
        "gen_rate": summary.gen_rate,
        "afm": "" if summary.afm is None else summary.afm,
        "atd": "" if summary.atd is None else summary.atd,
        "mean_qea": summary.mean_qea,
    }


def _select_seeds(testset: list, n_seeds: int, n_classes: int, seed: int) -> list:
    """Balanced per-class random draw from the encoded test split."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(1,)))
    by_class: dict[int, list] = {}
    for state, y in testset:
        by_class.setdefault(y, []).append((state, y))
    for y in by_class:
        order = rng.permutation(len(by_class[y]))
        by_class[y] = [by_class[y][i] for i in order]
    picked: list = []
    cursor = {y: 0 for y in by_class}
    classes = sorted(by_class)
    while len(picked) < n_seeds:
        progressed = False
        for y in classes:
            if len(picked) >= n_seeds:
                break
            if cursor[y] < len(by_class[y]):
                picked.append(by_class[y][cursor[y]])
                cursor[y] += 1
                progressed = True
        if not progressed:
            raise UserError(f"test split has only {len(picked)} samples, need {n_seeds}")
    return picked


# -- subcommands ------------------------------------------------------------

def cmd_synth_data(args, cfg: dict) -> int:
    classes = [int(c) for c in args.classes.split(",")] if args.classes else None
    root = generate_dataset(args.out, n_train=args.train, n_test=args.test,
                            seed=args.seed if args.seed is not None else 0,
                            classes=classes)
    print(f"wrote glyph dataset under {root}")
    return 0


def _model_from_args(args, cfg: dict, spec: TaskSpec) -> QnnModel:
    sec = _override(_section(cfg, "model"),
                    arch=getattr(args, "arch", None),
                    depth=getattr(args, "depth", None),
                    seed=getattr(args, "model_seed", None))
    try:
        arch = Arch(str(sec.get("arch", "QCL")))
        return build_model(arch, spec.n_qubits, sec.get("depth"), spec.n_classes,
                           int(sec.get("seed", 0)))
    except ValueError as exc:
        raise UserError(f"invalid model config: {exc}") from exc


def _checkpoint_model(args, cfg: dict) -> QnnModel:
    path = getattr(args, "checkpoint", None) or _section(cfg, "model").get("checkpoint")
    if path is None:
        raise UserError("no checkpoint: pass --checkpoint or set model.checkpoint")
    try:
        return load_checkpoint(path)
    except (FileNotFoundError, ValueError) as exc:
        raise UserError(str(exc)) from exc


def _train_config(args, cfg: dict, seed: int) -> TrainConfig:
    sec = _override(_section(cfg, "train"),
                    epochs=getattr(args, "epochs", None),
                    batch_size=getattr(args, "batch_size", None),
                    learning_rate=getattr(args, "learning_rate", None),
                    optimizer=getattr(args, "optimizer", None))
    try:
        return TrainConfig(
            epochs=int(sec.get("epochs", 30)),
            batch_size=int(sec.get("batch_size", 32)),
            learning_rate=float(sec.get("learning_rate", 0.01)),
            optimizer=str(sec.get("optimizer", "adam")),
            seed=int(sec.get("seed", seed)),
        )
    except ValueError as exc:
        raise UserError(f"invalid train config: {exc}") from exc


def cmd_train(args, cfg: dict) -> int:
    seed = _global_seed(args, cfg)
    out = _out_dir(args, cfg)
    spec, trainset, testset = _load_split(args, cfg, seed)
    model = _model_from_args(args, cfg, spec)
    tcfg = _train_config(args, cfg, seed)
    _echo_config(out, {
        "command": "train", "seed": seed, "task": vars_of(spec),
        "model": {"arch": model.arch.value, "depth": model.depth, "seed": model.seed},
        "train": vars_of(tcfg),
    })
    trained, log = train(model, trainset, tcfg, testset)
    save_checkpoint(trained, out / "checkpoint.json")
    _write_csv(out / "train_log.csv", [
        {k: row[k] for k in ("epoch", "train_loss", "train_acc", "test_acc")} for row in log
    ])
    if _figures_enabled(args, cfg):
        report.training_curves(log, out / "figures" / "training_curves.png")
    final = log[-1]
    print(f"trained {model.arch.value}-{model.n_qubits} for {tcfg.epochs} epochs: "
          f"train_acc={final['train_acc']:.4f} test_acc={final['test_acc']:.4f}")
    print(f"checkpoint: {out / 'checkpoint.json'}")
    return 0


def _attack_config(args, cfg: dict) -> AttackConfig:
    sec = _override(_section(cfg, "attack"),
                    strategy=getattr(args, "strategy", None),
                    w=getattr(args, "w", None),
                    k=getattr(args, "k", None),
                    strategy_weight=getattr(args, "strategy_weight", None),
                    r=getattr(args, "r", None),
                    max_iters=getattr(args, "max_iters", None))
    if getattr(args, "no_guidance", False):
        sec["w"] = 0.0
    if getattr(args, "balanced_qea", False):
        sec["balanced_qea"] = True
    if getattr(args, "sign_mode", False):
        sec["sign_mode"] = True
    try:
        return AttackConfig(
            strategy=str(sec.get("strategy", "dlfuzz")),
            w=float(sec.get("w", 1.0)),
            k=float(sec.get("k", 1.0)),
            strategy_weight=float(sec.get("strategy_weight", 1.0)),
            r=float(sec.get("r", 0.05)),
            max_iters=int(sec.get("max_iters", 10)),
            thresholds=_thresholds(args, sec),
            balanced_qea=bool(sec.get("balanced_qea", False)),
            sign_mode=bool(sec.get("sign_mode", False)),
        )
    except ValueError as exc:
        raise UserError(f"invalid attack config: {exc}") from exc


def _noise_config(args, cfg: dict) -> NoiseConfig:
    sec = _override(_section(cfg, "noise"),
                    sigma=getattr(args, "sigma", None),
                    max_iters=getattr(args, "max_iters", None))
    try:
        return NoiseConfig(
            sigma=float(sec.get("sigma", 0.02)),
            max_iters=int(sec.get("max_iters", 10)),
            thresholds=_thresholds(args, sec),
        )
    except ValueError as exc:
        raise UserError(f"invalid noise config: {exc}") from exc


def _run_generation(args, cfg: dict, gen_cfg: AttackConfig | NoiseConfig, label: str) -> int:
    seed = _global_seed(args, cfg)
    out = _out_dir(args, cfg)
    model = _checkpoint_model(args, cfg)
    spec, _, testset = _load_split(args, cfg, seed)
    if spec.n_qubits != model.n_qubits:
        raise UserError(
            f"task encodes to {spec.n_qubits} qubits but checkpoint has {model.n_qubits}")
    n_seeds = int(args.n_seeds if args.n_seeds is not None else cfg.get("n_seeds", 100))
    seeds = _select_seeds(testset, n_seeds, spec.n_classes, seed)
    threads = int(args.threads if args.threads is not None
                  else cfg.get("threads", os.cpu_count() or 1))

    records, summary = run_campaign(model, seeds, gen_cfg, campaign_seed=seed, threads=threads)
    records.sort(key=lambda r: r.seed_id)

    task_name = spec.dataset + "[" + ",".join(str(c) for c in spec.classes) + "]"
    _echo_config(out, {
        "command": label, "seed": seed, "n_seeds": n_seeds, "threads": threads,
        "task": vars_of(spec), "generator": vars_of(gen_cfg),
        "checkpoint": str(getattr(args, "checkpoint", None) or _section(cfg, "model").get("checkpoint")),
    })
    _write_records(out / "records.jsonl", records, dump_states=bool(args.dump_states))
    strategy = getattr(gen_cfg, "strategy", "random_noise")
    _write_csv(out / "summary.csv",
               [_summary_row(f"{model.arch.value}-{model.n_qubits}", task_name, strategy,
                             gen_cfg, summary)])
    if _figures_enabled(args, cfg):
        report.iteration_histogram(records, out / "figures" / "iterations.png")
        report.similarity_distributions(records, out / "figures" / "similarity.png")
    print(f"{label}: {summary.n_accepted}/{summary.n_seeds} accepted "
          f"(gen_rate={summary.gen_rate:.4f}, afm={summary.afm}, atd={summary.atd}, "
          f"mean_qea={summary.mean_qea:.4f})")
    print(f"records: {out / 'records.jsonl'}")
    return 0


def cmd_attack(args, cfg: dict) -> int:
    return _run_generation(args, cfg, _attack_config(args, cfg), "attack")


def cmd_noise(args, cfg: dict) -> int:
    return _run_generation(args, cfg, _noise_config(args, cfg), "noise")


def _decode_adversarial(docs: list[dict], n_qubits: int) -> list[tuple[StateVector, int]]:
    out = []
    for doc in docs:
        if not doc.get("accepted"):
            continue
        if "final_state" not in doc:
            raise UserError(
                "records lack amplitudes; re-run the campaign with --dump-states")
        state = _state_from_list(doc["final_state"])
        if state.n_qubits != n_qubits:
            raise UserError(
                f"record seed_id={doc.get('seed_id')} has {state.n_qubits} qubits, expected {n_qubits}")
        out.append((state, int(doc["y_true"])))
    return out


def cmd_retrain(args, cfg: dict) -> int:
    seed = _global_seed(args, cfg)
    out = _out_dir(args, cfg)
    model = _checkpoint_model(args, cfg)
    spec, trainset, testset = _load_split(args, cfg, seed)
    tcfg = _train_config(args, cfg, seed)
    adversarial = _decode_adversarial(_read_records(args.records), model.n_qubits)

    before = evaluate_accuracy(model, testset)
    retrained, log = retrain_augmented(model, trainset, adversarial, tcfg, testset)
    after = evaluate_accuracy(retrained, testset)

    _echo_config(out, {
        "command": "retrain", "seed": seed, "task": vars_of(spec),
        "train": vars_of(tcfg), "records": [str(p) for p in args.records],
    })
    save_checkpoint(retrained, out / "checkpoint.json")
    _write_csv(out / "train_log.csv", [
        {k: row[k] for k in ("epoch", "train_loss", "train_acc", "test_acc")} for row in log
    ])
    report_doc = {
        "before_test_acc": before,
        "after_test_acc": after,
        "n_adversarial": len(adversarial),
        "n_train": len(trainset),
        "records": [str(p) for p in args.records],
    }
    (out / "retrain_report.json").write_text(json.dumps(report_doc, indent=2))
    if _figures_enabled(args, cfg):
        report.retrain_comparison(before, after, out / "figures" / "retrain.png")
    print(f"retrained with {len(adversarial)} adversarial samples: "
          f"clean test accuracy {before:.4f} -> {after:.4f}")
    return 0


def cmd_sampling(args, cfg: dict) -> int:
    seed = _global_seed(args, cfg)
    out = _out_dir(args, cfg)
    model = _checkpoint_model(args, cfg)
    sec = _section(cfg, "sampling")

    docs = _read_records(args.records)
    use = str(args.seed_selection or sec.get("seed_selection", "failed"))
    if use == "failed":
        docs = [d for d in docs if not d.get("accepted")]
    elif use == "accepted":
        docs = [d for d in docs if d.get("accepted")]
    elif use != "all":
        raise UserError(f"seed-selection must be failed|accepted|all, got {use!r}")
    if not docs:
        raise UserError(f"no records left after seed-selection {use!r}")
    samples = []
    for doc in docs:
        if "final_state" not in doc:
            raise UserError("records lack amplitudes; re-run the campaign with --dump-states")
        samples.append((_state_from_list(doc["final_state"]), int(doc["y_true"])))

    grid = ([int(v) for v in args.shots_grid.split(",")] if args.shots_grid
            else [int(v) for v in sec.get("shots_grid", [10, 100, 1000, 10_000, 100_000])])
    repeats = int(args.repeats if args.repeats is not None else sec.get("repeats", 10))

    # quality indicators run on the clean labeled test split when available
    eval_samples = samples
    if getattr(args, "data_dir", None) or cfg.get("data_dir"):
        _, _, testset = _load_split(args, cfg, seed)
        limit = int(args.eval_limit if args.eval_limit is not None else sec.get("eval_limit", 200))
        eval_samples = testset[:limit]
    try:
        rows = sampling_experiment(model, samples, grid, repeats, rng_seed=seed,
                                   eval_samples=eval_samples)
    except ValueError as exc:
        raise UserError(str(exc)) from exc
    ideal = ideal_quality(model, eval_samples)

    _echo_config(out, {
        "command": "sampling", "seed": seed, "shots_grid": grid, "repeats": repeats,
        "seed_selection": use, "n_samples": len(samples),
        "records": [str(p) for p in args.records],
    })
    _write_csv(out / "sampling.csv", rows)
    if _figures_enabled(args, cfg):
        report.sampling_curves(rows, ideal, out / "figures" / "sampling.png")
        report.wilson_cost_curves(out / "figures" / "wilson_cost.png")
    print(f"sampling experiment over {len(samples)} seed samples, N in {grid}:")
    for row in rows:
        print(f"  N={row['n_shots']:>7d}  error_rate={row['error_rate_mean']:.4f}"
              f"(+/-{row['error_rate_std']:.4f})  acc={row['accuracy']:.4f}  f1={row['f1']:.4f}")
    return 0


def vars_of(obj) -> dict:
    """Dataclass fields as JSON-encodable values."""
    out = {}
    for key, value in vars(obj).items():
        if isinstance(value, (str, int, float, bool)) or value is None:
            out[key] = value
        elif isinstance(value, tuple):
            out[key] = list(value)
        else:
            out[key] = str(value)
    return out


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnntest",
        description="Entanglement-guided adversarial testing of QNN classifiers.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, checkpoint: bool = False) -> None:
        p.add_argument("--config", help="JSON config file; flags override its entries")
        p.add_argument("--out", help="output directory")
        p.add_argument("--data-dir", dest="data_dir", help="dataset root directory")
        p.add_argument("--seed", type=int, help="global seed (default 0)")
        p.add_argument("--threads", type=int, help="worker threads for campaigns (default 1)")
        p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
        p.add_argument("--dataset", choices=["mnist", "fashion"])
        p.add_argument("--classes", help="comma-separated class ids, e.g. 3,6")
        p.add_argument("--image-side", dest="image_side", type=int, choices=[16, 28])
        p.add_argument("--train-limit", dest="train_limit", type=int)
        p.add_argument("--test-limit", dest="test_limit", type=int)
        if checkpoint:
            p.add_argument("--checkpoint", help="model checkpoint path")

    p = sub.add_parser("synth-data", help="generate the stand-in glyph dataset (IDX files)")
    p.add_argument("--out", required=True)
    p.add_argument("--train", type=int, default=6000)
    p.add_argument("--test", type=int, default=1500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", help="comma-separated class ids (default 0-9)")
    p.set_defaults(func=cmd_synth_data)

    p = sub.add_parser("train", help="train a model and write a checkpoint")
    common(p)
    p.add_argument("--arch", choices=[a.value for a in Arch])
    p.add_argument("--depth", type=int)
    p.add_argument("--model-seed", dest="model_seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--optimizer", choices=["adam", "sgd"])
    p.set_defaults(func=cmd_train)

    def campaign_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--n-seeds", dest="n_seeds", type=int, help="seed inputs drawn from the test split")
        p.add_argument("--max-iters", dest="max_iters", type=int)
        p.add_argument("--min-fidelity", dest="min_fidelity", type=float)
        p.add_argument("--max-trace-distance", dest="max_trace_distance", type=float)
        p.add_argument("--combine", choices=["or", "and"])
        p.add_argument("--no-similarity-gate", dest="no_similarity_gate", action="store_true",
                       help="accept on label flip alone")
        p.add_argument("--dump-states", dest="dump_states", action="store_true",
                       help="include amplitudes in records.jsonl")

    p = sub.add_parser("attack", help="run an adversarial generation campaign")
    common(p, checkpoint=True)
    campaign_flags(p)
    p.add_argument("--strategy", choices=["fgsm", "dlfuzz"])
    p.add_argument("--w", type=float, help="entanglement-term weight")
    p.add_argument("--k", type=float, help="output-entanglement balance")
    p.add_argument("--strategy-weight", dest="strategy_weight", type=float)
    p.add_argument("--r", type=float, help="gradient-ascent step size")
    p.add_argument("--no-guidance", dest="no_guidance", action="store_true", help="alias for --w 0")
    p.add_argument("--balanced-qea", dest="balanced_qea", action="store_true")
    p.add_argument("--sign-mode", dest="sign_mode", action="store_true")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("noise", help="run the random coherent-noise baseline")
    common(p, checkpoint=True)
    campaign_flags(p)
    p.add_argument("--sigma", type=float, help="Gaussian angle standard deviation")
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("retrain", help="retrain on the clean set augmented with generated records")
    common(p, checkpoint=True)
    p.add_argument("records", nargs="+", help="records.jsonl files (need --dump-states)")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--optimizer", choices=["adam", "sgd"])
    p.set_defaults(func=cmd_retrain)

    p = sub.add_parser("sampling", help="shot-budget experiment on recorded seed samples")
    common(p, checkpoint=True)
    p.add_argument("records", nargs="+", help="records.jsonl files (need --dump-states)")
    p.add_argument("--shots-grid", dest="shots_grid", help="comma-separated shot counts")
    p.add_argument("--repeats", type=int)
    p.add_argument("--seed-selection", dest="seed_selection", choices=["failed", "accepted", "all"],
                   help="which records become seed samples (default: failed)")
    p.add_argument("--eval-limit", dest="eval_limit", type=int,
                   help="clean test samples used for the quality indicators (default 200)")
    p.set_defaults(func=cmd_sampling)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = {}
    try:
        if getattr(args, "config", None):
            cfg = _load_config(args.config)
        return args.func(args, cfg)
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
