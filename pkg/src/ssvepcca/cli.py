"""Command-line front end: ``ssvepcca {gen,train,recognize,eval,report}``.

Usage errors exit with status 2 (argparse), data errors with status 1 and
a one-line diagnostic on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import simgen
from .data import Epoch, load_dataset, read_f32, read_manifest, save_dataset
from .errors import SsvepError
from .evaluation import (Sweep, compare_methods, emit_report, loro_cv, read_report_csv,
                         read_report_json)
from .pipeline import METHODS, TrainConfig, load_model, recognize_raw, save_model, train

PRESETS = ("paper", "phase-stable", "default")


def _floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _n_train(text: str) -> List[Optional[int]]:
    return [None if v.strip() == "all" else int(v) for v in text.split(",") if v.strip()]


def _methods(text: str) -> List[str]:
    out = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in out if m not in METHODS]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown method(s) {bad}; choose from {list(METHODS)}")
    return out


def channel_sets(values: Optional[Sequence[str]]) -> List[str]:
    """Split ``--channels`` values into channel-set specs.

    ``paper4,paper8`` names two aliased sets; ``O1,Oz,O2`` is one explicit set.
    """
    if not values:
        return ["paper8"]
    out = []
    for v in values:
        parts = [p.strip() for p in v.split(",") if p.strip()]
        if parts and all(p in simgen.CHANNEL_SETS for p in parts):
            out.extend(parts)
        else:
            out.append(",".join(parts))
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssvepcca", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic dataset archive")
    g.add_argument("--preset", choices=PRESETS, default="paper",
                   help="paper: 4 targets, 30 channels, 20 runs of 4 s; phase-stable: "
                        "same montage with jitter-free, harmonic-rich responses")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--subject", type=int, default=None,
                   help="draw subject-specific latency, gains and SNR (seeded by --seed)")
    g.add_argument("--snr-db", type=float, default=None)
    g.add_argument("--jitter-deg", type=float, default=None)
    g.add_argument("--latency", type=float, default=None)
    g.add_argument("--noise", choices=("white", "pink"), default=None)
    g.add_argument("--runs", type=int, default=None)
    g.add_argument("--trial-seconds", type=float, default=None)
    g.add_argument("--out", required=True)

    t = sub.add_parser("train", help="train a model on a dataset archive")
    t.add_argument("--data", required=True)
    t.add_argument("--method", choices=METHODS, required=True)
    t.add_argument("--channels", default="paper8")
    t.add_argument("--tw", type=float, default=4.0)
    t.add_argument("--harmonics", type=int, default=2)
    t.add_argument("--n-train", type=int, default=None)
    t.add_argument("--runs", type=_ints, default=None, help="training runs, e.g. 0,1,2")
    t.add_argument("--out", required=True)

    r = sub.add_parser("recognize", help="recognize one trial file with a trained model")
    r.add_argument("--model", required=True)
    r.add_argument("--trial", required=True,
                   help="trial_f*_r*.f32 file; its directory's manifest gives the geometry")

    e = sub.add_parser("eval", help="leave-one-run-out cross-validation")
    e.add_argument("--data", nargs="+", required=True, help="one archive per subject")
    e.add_argument("--method", type=_methods, default=["cca"], help="comma-separated methods")
    e.add_argument("--tw", type=_floats, default=[1.0, 2.0, 3.0, 4.0])
    e.add_argument("--channels", action="append", default=None,
                   help="alias list (paper4,paper8) or explicit labels; repeatable")
    e.add_argument("--harmonics", type=_ints, default=[2])
    e.add_argument("--n-train", type=_n_train, default=[None], help="comma list or 'all'")
    e.add_argument("--jobs", type=int, default=None, help="worker threads per evaluation")
    e.add_argument("--format", choices=("csv", "json"), default=None)
    e.add_argument("--timing", action="store_true", help="include wall-clock timing in JSON")
    e.add_argument("--out", required=True)

    m = sub.add_parser("report", help="merge reports and run paired t-tests")
    m.add_argument("inputs", nargs="+")
    m.add_argument("--format", choices=("csv", "json"), default=None)
    m.add_argument("--out", required=True)
    return p


def _format(fmt: Optional[str], out: str) -> str:
    if fmt:
        return fmt
    return "json" if out.lower().endswith(".json") else "csv"


def cmd_gen(a) -> int:
    overrides = {}
    for key, val in (("snr_db", a.snr_db), ("phase_jitter_deg", a.jitter_deg),
                     ("latency_s", a.latency), ("noise_model", a.noise), ("runs", a.runs),
                     ("trial_seconds", a.trial_seconds)):
        if val is not None:
            overrides[key] = val
    if a.preset == "default":
        cfg = replace(simgen.GeneratorConfig(seed=a.seed), **overrides)
    else:
        stable = a.preset == "phase-stable"
        if a.subject is not None:
            kw = dict(simgen.PHASE_STABLE) if stable else {}
            if stable:
                kw["snr_center_db"] = simgen.PHASE_STABLE_SNR_DB
            snr = overrides.pop("snr_db", None)
            if snr is not None:
                kw["snr_center_db"] = snr
            kw.update(overrides)
            cfg = simgen.subject_config(a.subject, base_seed=a.seed, **kw)
        else:
            kw = dict(simgen.PHASE_STABLE, snr_db=simgen.PHASE_STABLE_SNR_DB) if stable else {}
            kw.update(overrides)
            cfg = simgen.paper_config(a.seed, **kw)
    root = save_dataset(simgen.generate(cfg), a.out)
    print(f"wrote {root} ({len(cfg.stim_freqs_hz)} frequencies x {cfg.runs} runs, "
          f"{len(cfg.channels)} channels, {cfg.n_samples} samples)")
    return 0


def cmd_train(a) -> int:
    ds = load_dataset(a.data)
    cfg = TrainConfig(channels=a.channels, tw_s=a.tw, harmonics=a.harmonics, n_train=a.n_train)
    model = train(ds, a.method, cfg, runs=a.runs)
    save_model(model, a.out)
    print(f"wrote {a.method} model to {a.out} (trained in {model.train_seconds:.3f} s)")
    return 0


def cmd_recognize(a) -> int:
    model = load_model(a.model)
    path = Path(a.trial)
    manifest = read_manifest(path.parent)
    labels = manifest["channel_labels"]
    n_samples = manifest.get("n_samples")
    if n_samples is None:
        n_samples = path.stat().st_size // 4 // max(len(labels), 1)
    x = read_f32(path, (len(labels), int(n_samples)))
    result = recognize_raw(model, Epoch(x, labels, float(manifest["sample_rate_hz"])))
    print(json.dumps({"scores": list(result.scores), "decided_index": result.decided_index,
                      "decided_freq_hz": result.decided_freq_hz}))
    return 0


def cmd_eval(a) -> int:
    sweep = Sweep(tw_s=tuple(a.tw), channel_sets=tuple(channel_sets(a.channels)),
                  harmonics=tuple(a.harmonics), n_train=tuple(a.n_train))
    reports = []
    for data in a.data:
        ds = load_dataset(data)
        subject = Path(data).resolve().name
        for method in a.method:
            reports.append(loro_cv(ds, method, sweep, subject=subject, n_jobs=a.jobs))
    emit_report(reports, a.out, _format(a.format, a.out), include_timing=a.timing)
    print(f"wrote {len(reports)} report(s) to {a.out}")
    return 0


def cmd_report(a) -> int:
    reports = []
    for path in a.inputs:
        reader = read_report_json if path.lower().endswith(".json") else read_report_csv
        try:
            reports.extend(reader(path))
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            raise SsvepError(f"cannot parse report {path}: {exc}") from None
    emit_report(reports, a.out, _format(a.format, a.out))
    print(f"merged {len(reports)} report(s) into {a.out}")
    for c in compare_methods(reports):
        print(f"TW={c.tw_s} {c.channels} H={c.harmonics} n_train={c.n_train}: "
              f"{c.method_a} {c.mean_a:.3f} vs {c.method_b} {c.mean_b:.3f}, "
              f"t={c.t:.3f}, p={c.p:.4g} (n={c.n_subjects})")
    return 0


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "recognize": cmd_recognize,
            "eval": cmd_eval, "report": cmd_report}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SsvepError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
