"""Command-line entry point: ``ecf evaluate | explain | demo | stats``.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .axioms import EcfConfig
from .core import Task, build_augmented
from .demo import run_demo
from .errors import EcfError, ValidationError
from .evaluation import evaluate
from .explainers import (
    KnnModel,
    ShapleyExplainer,
    SurrogateExplainer,
    default_background,
    explain_all,
    fit_linear,
)
from .io import (
    dumps_json,
    load_dataset,
    load_explanations,
    load_predictions,
    read_report,
    write_explanations,
    write_report,
)

log = logging.getLogger("ecf")

_CONFIG_FLAGS = {
    "seed": "seed",
    "bins": "regression_bins",
    "clustering": "stability_clustering",
    "pair_counting": "pair_counting",
    "tolerance": "equality_tolerance",
    "exact_threshold": "exact_threshold",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass
class RunManifest:
    """Everything an ``evaluate`` run needs; loadable from a JSON file."""

    dataset_path: Path
    task: Task
    predictions_path: Path | None = None
    explanations_path: Path | None = None
    explainer: dict[str, Any] = field(default_factory=dict)
    config: dict[str, Any] = field(default_factory=dict)
    output_dir: Path = Path("ecf-report")
    seed: int = 0

    def __post_init__(self):
        self.task = Task(self.task)
        self.dataset_path = Path(self.dataset_path)
        self.output_dir = Path(self.output_dir)
        for name in ("predictions_path", "explanations_path"):
            value = getattr(self, name)
            if value is not None:
                setattr(self, name, Path(value))
        for path in (self.dataset_path, self.predictions_path, self.explanations_path):
            if path is not None and not path.is_file():
                raise ValidationError(f"{path}: file not found")
        if self.predictions_path is None:
            raise ValidationError("a predictions file is required")
        known = {f.name for f in fields(EcfConfig)}
        unknown = set(self.config) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    @classmethod
    def from_file(cls, path) -> "RunManifest":
        try:
            data = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ValidationError(f"{path}: manifest not found") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid manifest JSON ({exc})") from None
        base = Path(path).parent
        for key in ("dataset_path", "predictions_path", "explanations_path"):
            if data.get(key) is not None:
                data[key] = base / data[key]
        try:
            return cls(**data)
        except TypeError as exc:
            raise ValidationError(f"{path}: {exc}") from None

    def ecf_config(self) -> EcfConfig:
        return EcfConfig(**{"seed": self.seed, **self.config})


def _build_model(kind: str, objects, predictions, k: int):
    X = objects.features
    if kind == "linear":
        if predictions.is_classification:
            raise ValidationError("the linear model is for regression; use --model knn")
        return fit_linear(X, predictions.values)
    if kind == "knn":
        return KnnModel(X, predictions.values, k=k, task=predictions.task, n_classes=predictions.n_classes)
    raise ValidationError(f"unknown model {kind!r}")


def _build_explainer(options: dict[str, Any], objects, predictions, seed: int):
    method = options.get("method", "shapley")
    default_model = "knn" if predictions.is_classification else "linear"
    model = _build_model(options.get("model", default_model), objects, predictions, int(options.get("k", 5)))
    if method == "shapley":
        background = options.get("background")
        rows = load_dataset(background).features if background else objects.features
        return ShapleyExplainer(model, default_background(rows, int(options.get("background_cap", 100)), seed))
    if method == "surrogate":
        return SurrogateExplainer.from_training(
            model,
            objects.features,
            n_samples=int(options.get("n_samples", 1000)),
            kernel_width=options.get("kernel_width"),
            seed=options.get("surrogate_seed"),
        )
    raise ValidationError(f"unknown explanation method {method!r}")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--bins", type=int, help="regression bins for the large-n stability heuristic")
    p.add_argument("--clustering", choices=["kmeans-informed", "agnes-single", "agnes-ward"])
    p.add_argument("--pair-counting", choices=["ordered", "unordered"])
    p.add_argument("--tolerance", type=float, help="relative-or-absolute equality tolerance")
    p.add_argument("--exact-threshold", type=int, help="largest n evaluated with the exact checks")


def _config_overrides(args) -> dict[str, Any]:
    return {
        target: getattr(args, flag)
        for flag, target in _CONFIG_FLAGS.items()
        if flag != "seed" and getattr(args, flag, None) is not None
    }


def _explainer_flags(p: argparse.ArgumentParser, required: bool) -> None:
    p.add_argument("--method", choices=["shapley", "surrogate"], required=required)
    p.add_argument("--model", choices=["linear", "knn"], help="toy model fitted to data and predictions")
    p.add_argument("--k", type=int, default=5, help="neighbours for --model knn")
    p.add_argument("--background", help="CSV of background rows for Shapley (default: the data)")
    p.add_argument("--n-samples", type=int, default=1000, help="surrogate perturbation count")
    p.add_argument("--kernel-width", type=float, help="surrogate kernel width")
    p.add_argument("--surrogate-seed", type=int, help="fix the surrogate sampler (default: fresh entropy)")


def _explainer_options(args) -> dict[str, Any]:
    options = {"method": args.method, "k": args.k, "n_samples": args.n_samples}
    for name in ("model", "background", "kernel_width", "surrogate_seed"):
        if getattr(args, name) is not None:
            options[name] = getattr(args, name)
    return options


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecf", description="Explanation consistency evaluation")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evaluate", help="score explanations against the three axioms")
    ev.add_argument("--manifest", help="JSON run manifest; flags override its values")
    ev.add_argument("--data")
    ev.add_argument("--preds")
    ev.add_argument("--expl", help="explanations CSV (header must match the data)")
    ev.add_argument("--task", choices=[t.value for t in Task])
    ev.add_argument("--name", help="method name shown in the report")
    ev.add_argument("--out", help="report directory")
    _explainer_flags(ev, required=False)
    _add_config_flags(ev)

    ex = sub.add_parser("explain", help="write reference explanations to CSV")
    ex.add_argument("--data", required=True)
    ex.add_argument("--preds", required=True)
    ex.add_argument("--task", choices=[t.value for t in Task], default="regression")
    ex.add_argument("--out", required=True)
    ex.add_argument("--seed", type=int, default=0)
    _explainer_flags(ex, required=True)

    demo = sub.add_parser("demo", help="generate synthetic datasets and run the full suite")
    demo.add_argument("--out", default="ecf-demo")
    _add_config_flags(demo)

    st = sub.add_parser("stats", help="summarize existing report.json files")
    st.add_argument("reports", nargs="+")
    st.add_argument("--json", action="store_true", help="print a machine-readable summary")
    return parser


def _cmd_evaluate(args) -> int:
    if args.manifest:
        manifest_data = RunManifest.from_file(args.manifest)
        data = {f.name: getattr(manifest_data, f.name) for f in fields(RunManifest)}
    else:
        data = {}
    flag_map = {
        "data": "dataset_path",
        "preds": "predictions_path",
        "expl": "explanations_path",
        "task": "task",
        "out": "output_dir",
        "seed": "seed",
    }
    for flag, key in flag_map.items():
        if getattr(args, flag) is not None:
            data[key] = getattr(args, flag)
    if args.method:
        data["explainer"] = _explainer_options(args)
    data["config"] = {**data.get("config", {}), **_config_overrides(args)}
    if "dataset_path" not in data or "task" not in data:
        raise ValidationError("evaluate needs --data and --task (or a manifest providing them)")
    manifest = RunManifest(**data)

    objects = load_dataset(manifest.dataset_path)
    predictions = load_predictions(manifest.predictions_path, manifest.task)
    explanations = None
    if manifest.explanations_path is not None:
        explanations = load_explanations(manifest.explanations_path, objects.feature_names)
    explainer = None
    if manifest.explainer:
        explainer = _build_explainer(manifest.explainer, objects, predictions, manifest.seed)
    if explanations is None and explainer is None:
        raise ValidationError("supply --expl, --method, or both")
    name = args.name or (manifest.explainer.get("method") if manifest.explainer else "explanations")
    report = evaluate(
        objects, predictions, explanations, explainer, manifest.ecf_config(), method_name=name,
        extra_echo={"dataset": manifest.dataset_path.name},
    )
    for path in write_report(report, manifest.output_dir):
        print(path)
    _print_summary(report)
    return 0


def _cmd_explain(args) -> int:
    objects = load_dataset(args.data)
    predictions = load_predictions(args.preds, args.task)
    explainer = _build_explainer(_explainer_options(args), objects, predictions, args.seed)
    explanations = explain_all(explainer, build_augmented(objects, predictions))
    print(write_explanations(args.out, explanations, objects.feature_names))
    return 0


def _cmd_demo(args) -> int:
    overrides = _config_overrides(args)
    seed = args.seed if args.seed is not None else 0
    reports = run_demo(args.out, seed, EcfConfig(seed=seed, **overrides))
    for report in reports.values():
        _print_summary(report)
    return 0


def report_summary(report) -> dict[str, Any]:
    out: dict[str, Any] = {
        "method_name": report.method_name,
        "task": report.task.value,
        "verdicts": {v.axiom.value: v.to_dict() for v in report.verdicts},
    }
    if report.rho_summary is not None:
        r = report.rho_summary
        out["rho"] = {"min": r.min, "max": r.max, "mean": r.mean, "median": r.median}
    if report.cluster_table is not None:
        out["jaccard"] = {str(k): v for k, v in report.cluster_table.per_label_jaccard.items()}
    return out


def _print_summary(report) -> None:
    print(f"{report.method_name} [{report.task.value}]")
    for v in report.verdicts:
        if v.assessed:
            print(f"  {v.axiom.value:<13} violated={v.violated} satisfied={v.satisfied} "
                  f"({100 * v.satisfied_fraction:.4f}%) via {v.method}")
        else:
            print(f"  {v.axiom.value:<13} not assessed")
    if report.rho_summary is not None:
        r = report.rho_summary
        print(f"  rho min={r.min:.4f} max={r.max:.4f} mean={r.mean:.4f} median={r.median:.4f}")
    if report.cluster_table is not None:
        cells = " ".join(f"{k}={v:.4f}" for k, v in report.cluster_table.per_label_jaccard.items())
        print(f"  jaccard {cells}")


def _cmd_stats(args) -> int:
    reports = [read_report(p) for p in args.reports]
    if args.json:
        sys.stdout.write(dumps_json([report_summary(r) for r in reports]))
    else:
        for report in reports:
            _print_summary(report)
    return 0


_COMMANDS = {"evaluate": _cmd_evaluate, "explain": _cmd_explain, "demo": _cmd_demo, "stats": _cmd_stats}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (EcfError, OSError, RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
