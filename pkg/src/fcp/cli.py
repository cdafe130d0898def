"""Command-line entry point wiring the library into reproducible workflows.

Commands: train, explain, importance, compare, bias-report, flip. Every
command takes --seed, writes fixed-named artifacts under --out, and never
touches its input files. Files are written atomically (temp file, then
rename) so an interrupted run cannot leave a half-written artifact.

Exit codes: 0 success, 2 configuration error, 3 data or model error,
4 numeric/degeneracy failure.
"""

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone

from .attribution import (
    DegenerateAttributionError,
    global_importance,
    global_lrp_importance,
    write_attribution_csv,
)
from .dataprep import (
    DataError,
    Dataset,
    apply_scaler,
    load_csv,
    load_schema,
    load_uci_german,
    minmax_scale,
    recode_german_gender,
)
from .evaluation import (
    UndefinedCorrelationError,
    bias_report,
    flip_experiment,
)
from .fcp import explain, explanation_to_dict
from .linalg import ShapeError
from .network import Activation, ModelFormatError, load_model, save_model
from .trainer import (
    Hyperparams,
    default_hidden_widths,
    init_network,
    stratified_split,
    train,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

ACTIVATION_CHOICES = ("elu", "leaky_relu", "sigmoid", "tanh", "relu")


class ConfigError(Exception):
    """Command line arguments are invalid or inconsistent."""


@dataclass
class RunConfig:
    command: str
    data: str | None = None
    format: str = "csv"
    schema: str | None = None
    model: str | None = None
    out: str | None = None
    input_values: list[float] | None = None
    seed: int = 0
    activations: tuple[Activation, ...] = ()
    hp: Hyperparams = Hyperparams()
    epsilon: float = 1e-9
    reps: int = 20
    protected: tuple[str, ...] = ("age", "gender")
    method: str = "fcp"
    train_fraction: float = 0.8
    scale_fit: str = "full"
    flip_means: str = "eval"
    random_baseline: bool = False


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _atomic_write(path: str, text: str) -> None:
    tmp = f"{path}.tmp-{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _write_json(path: str, doc: dict) -> None:
    _atomic_write(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _parse_activations(raw: str) -> tuple[Activation, ...]:
    kinds = [part.strip() for part in raw.split(",") if part.strip()]
    if not kinds:
        raise ConfigError("--activation needs at least one name")
    for kind in kinds:
        if kind not in ACTIVATION_CHOICES:
            raise ConfigError(
                f"unknown activation {kind!r}; choose from {', '.join(ACTIVATION_CHOICES)}"
            )
    if len(set(kinds)) != len(kinds):
        raise ConfigError("--activation names must be unique")
    return tuple(Activation(kind) for kind in kinds)


def _parse_input_vector(raw: str) -> list[float]:
    try:
        values = [float(part) for part in raw.split(",")]
    except ValueError:
        raise ConfigError(f"--input must be comma-separated numbers, got {raw!r}") from None
    if not values:
        raise ConfigError("--input must not be empty")
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcp",
        description="Train dense classifiers and explain them with "
        "forward-propagated feature compositions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_args(p):
        p.add_argument("--data", required=True, help="dataset file")
        p.add_argument("--format", choices=("csv", "uci-german"), default="csv")
        p.add_argument("--schema", help="JSON schema sidecar (csv format only)")

    def add_train_args(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--epochs", type=int, default=100)
        p.add_argument("--lr", type=float, default=0.001)
        p.add_argument("--batch", type=int, default=32)
        p.add_argument("--train-fraction", type=float, default=0.8)
        p.add_argument(
            "--scale-fit",
            choices=("full", "train"),
            default="full",
            help="fit the min-max scaler on the full dataset or the train split only",
        )

    p_train = sub.add_parser("train", help="train a classifier and save it")
    add_data_args(p_train)
    add_train_args(p_train)
    p_train.add_argument("--out", required=True)
    p_train.add_argument("--activation", default="relu", help="hidden activation kind")

    p_explain = sub.add_parser("explain", help="composition trace for one instance")
    p_explain.add_argument("--model", required=True)
    p_explain.add_argument("--input", required=True, help="comma-separated feature values")
    p_explain.add_argument("--out", help="directory for explanation.json (default: stdout)")

    p_imp = sub.add_parser("importance", help="global feature importance over a dataset")
    add_data_args(p_imp)
    p_imp.add_argument("--model", required=True)
    p_imp.add_argument("--out", required=True)
    p_imp.add_argument("--method", choices=("fcp", "lrp"), default="fcp")
    p_imp.add_argument("--epsilon", type=float, default=1e-9)

    p_cmp = sub.add_parser("compare", help="FCP vs LRP mean attributions side by side")
    add_data_args(p_cmp)
    p_cmp.add_argument("--model", required=True)
    p_cmp.add_argument("--out", required=True)
    p_cmp.add_argument("--epsilon", type=float, default=1e-9)

    p_bias = sub.add_parser("bias-report", help="protected-feature analysis per activation")
    add_data_args(p_bias)
    add_train_args(p_bias)
    p_bias.add_argument("--out", required=True)
    p_bias.add_argument(
        "--activation",
        default="elu,leaky_relu,sigmoid,tanh",
        help="comma-separated hidden activation kinds",
    )
    p_bias.add_argument("--protected", default="age,gender", help="age and gender feature names")

    p_flip = sub.add_parser("flip", help="feature-flipping curves per activation")
    add_data_args(p_flip)
    add_train_args(p_flip)
    p_flip.add_argument("--out", required=True)
    p_flip.add_argument(
        "--activation", default="elu,sigmoid,tanh", help="comma-separated hidden activation kinds"
    )
    p_flip.add_argument("--reps", type=int, default=20)
    p_flip.add_argument(
        "--flip-means",
        choices=("eval", "train"),
        default="eval",
        help="which split's feature means replace flipped columns",
    )
    p_flip.add_argument(
        "--random-baseline",
        action="store_true",
        help="also evaluate a seeded random ranking on the same trained models",
    )
    return parser


def build_config(argv) -> RunConfig:
    return _config_from_args(_build_parser().parse_args(argv))


def _config_from_args(args) -> RunConfig:
    cfg = RunConfig(command=args.command)
    for name in (
        "data",
        "format",
        "schema",
        "model",
        "out",
        "seed",
        "epsilon",
        "reps",
        "method",
        "random_baseline",
    ):
        if hasattr(args, name):
            setattr(cfg, name, getattr(args, name))
    if hasattr(args, "train_fraction"):
        cfg.train_fraction = args.train_fraction
    if hasattr(args, "scale_fit"):
        cfg.scale_fit = args.scale_fit
    if hasattr(args, "flip_means"):
        cfg.flip_means = args.flip_means
    if hasattr(args, "activation"):
        cfg.activations = _parse_activations(args.activation)
    if hasattr(args, "input"):
        cfg.input_values = _parse_input_vector(args.input)
    if hasattr(args, "protected"):
        names = tuple(part.strip() for part in args.protected.split(",") if part.strip())
        if len(names) != 2:
            raise ConfigError("--protected needs exactly two names: age feature, gender feature")
        cfg.protected = names
    if hasattr(args, "epochs"):
        try:
            cfg.hp = Hyperparams(
                learning_rate=args.lr,
                epochs=args.epochs,
                batch_size=args.batch,
                seed=args.seed,
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if not 0.0 < cfg.train_fraction < 1.0:
            raise ConfigError(f"--train-fraction must be in (0, 1), got {cfg.train_fraction}")
    if hasattr(args, "reps") and cfg.reps < 1:
        raise ConfigError(f"--reps must be >= 1, got {cfg.reps}")
    if hasattr(args, "epsilon") and cfg.epsilon <= 0:
        raise ConfigError(f"--epsilon must be positive, got {cfg.epsilon}")

    for path_name in ("data", "model", "schema"):
        path = getattr(cfg, path_name)
        if path is not None and not os.path.exists(path):
            raise ConfigError(f"--{path_name} path does not exist: {path}")
    if cfg.format == "csv" and cfg.data is not None and cfg.schema is None:
        raise ConfigError("--schema is required for csv datasets")
    if cfg.format == "uci-german" and cfg.schema is not None:
        raise ConfigError("--schema only applies to csv datasets")
    if cfg.out is not None:
        os.makedirs(cfg.out, exist_ok=True)
        if not os.access(cfg.out, os.W_OK):
            raise ConfigError(f"output directory not writable: {cfg.out}")
    return cfg


def _load_problem(cfg: RunConfig) -> Dataset:
    """Load and encode the dataset, unscaled; recodes gender for uci-german."""
    if cfg.format == "uci-german":
        return recode_german_gender(load_uci_german(cfg.data))
    schema, label_column = load_schema(cfg.schema)
    return load_csv(cfg.data, schema, label_column)


def _split_and_scale(
    data: Dataset, cfg: RunConfig, seed: int
) -> tuple[Dataset, Dataset]:
    """Stratified split plus min-max scaling per the --scale-fit mode."""
    if cfg.scale_fit == "train":
        train_d, test_d = stratified_split(data, cfg.train_fraction, seed)
        train_scaled, scaler = minmax_scale(train_d)
        return train_scaled, apply_scaler(test_d, scaler)
    scaled, _ = minmax_scale(data)
    return stratified_split(scaled, cfg.train_fraction, seed)


def _train_one(problem: Dataset, cfg: RunConfig, activation: Activation, seed: int):
    train_d, test_d = _split_and_scale(problem, cfg, seed)
    net0 = init_network(
        problem.n_features,
        default_hidden_widths(problem.n_features),
        len(problem.class_names),
        activation,
        seed,
    )
    hp = Hyperparams(
        learning_rate=cfg.hp.learning_rate,
        epochs=cfg.hp.epochs,
        batch_size=cfg.hp.batch_size,
        seed=seed,
    )
    trained, report = train(net0, train_d, hp, eval_data=test_d)
    return trained, report, train_d, test_d


def _cmd_train(cfg: RunConfig) -> int:
    if len(cfg.activations) != 1:
        raise ConfigError("train takes exactly one --activation")
    problem = _load_problem(cfg)
    trained, report, train_d, test_d = _train_one(problem, cfg, cfg.activations[0], cfg.seed)
    buf = io.StringIO()
    save_model(trained, buf)
    _atomic_write(os.path.join(cfg.out, "model.json"), buf.getvalue())

    lines = io.StringIO()
    writer = csv.writer(lines)
    writer.writerow(["epoch", "mean_loss"])
    for epoch, loss in enumerate(report.epoch_mean_loss, start=1):
        writer.writerow([epoch, repr(loss)])
    _atomic_write(os.path.join(cfg.out, "train_report.csv"), lines.getvalue())

    _write_json(
        os.path.join(cfg.out, "metrics.json"),
        {
            "command": "train",
            "activation": cfg.activations[0].kind,
            "seed": cfg.seed,
            "epochs": cfg.hp.epochs,
            "learning_rate": cfg.hp.learning_rate,
            "batch_size": cfg.hp.batch_size,
            "train_fraction": cfg.train_fraction,
            "scale_fit": cfg.scale_fit,
            "n_train": train_d.n_instances,
            "n_test": test_d.n_instances,
            "train_accuracy": report.train_accuracy,
            "test_accuracy": report.test_accuracy,
            "generated_at": _utc_now(),
        },
    )
    return EXIT_OK


def _cmd_explain(cfg: RunConfig) -> int:
    net = load_model(cfg.model)
    trace = explain(net, cfg.input_values)
    doc = explanation_to_dict(trace, cfg.input_values)
    if cfg.out is None:
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        _write_json(os.path.join(cfg.out, "explanation.json"), doc)
    return EXIT_OK


def _prepared_for_model(cfg: RunConfig) -> Dataset:
    """Dataset scaled the same way training scaled it (full-dataset fit)."""
    scaled, _ = minmax_scale(_load_problem(cfg))
    return scaled


def _cmd_importance(cfg: RunConfig) -> int:
    net = load_model(cfg.model)
    data = _prepared_for_model(cfg)
    if cfg.method == "lrp":
        ranking = global_lrp_importance(net, data, cfg.epsilon)
        method = "LRP"
    else:
        ranking = global_importance(net, data)
        method = "FCP"
    write_attribution_csv(
        os.path.join(cfg.out, "importance.csv"),
        ranking.order,
        data.feature_names,
        method,
        "global",
    )
    return EXIT_OK


def _cmd_compare(cfg: RunConfig) -> int:
    net = load_model(cfg.model)
    data = _prepared_for_model(cfg)
    fcp_scores = {idx: score for idx, score in global_importance(net, data).order}
    lrp_scores = {idx: score for idx, score in global_lrp_importance(net, data, cfg.epsilon).order}
    lines = io.StringIO()
    lines.write(
        "# FCP and LRP magnitudes are not directly comparable; compare rankings only.\n"
    )
    writer = csv.writer(lines)
    writer.writerow(["feature", "name", "fcp_mean_abs", "lrp_mean_abs"])
    for idx, name in enumerate(data.feature_names):
        writer.writerow([idx, name, repr(fcp_scores[idx]), repr(lrp_scores[idx])])
    _atomic_write(os.path.join(cfg.out, "comparison.csv"), lines.getvalue())
    return EXIT_OK


def _cmd_bias_report(cfg: RunConfig) -> int:
    problem = _load_problem(cfg)
    age_name, gender_name = cfg.protected
    age_idx = problem.feature_index(age_name)
    gender_idx = problem.feature_index(gender_name)
    doc: dict = {
        "command": "bias-report",
        "seed": cfg.seed,
        "epochs": cfg.hp.epochs,
        "train_fraction": cfg.train_fraction,
        "scale_fit": cfg.scale_fit,
        "protected": {"age": age_name, "gender": gender_name},
        "activations": {},
    }
    for act in cfg.activations:
        trained, report, _, test_d = _train_one(problem, cfg, act, cfg.seed)
        rep = bias_report(trained, test_d, age_idx, gender_idx)
        doc["activations"][act.kind] = {
            "kappa": rep.kappa,
            "r_by_class": {
                name: rep.r_by_class[i] for i, name in enumerate(rep.class_names)
            },
            "group_counts": {
                cat: {name: int(rep.group_counts[g, c]) for c, name in enumerate(rep.class_names)}
                for g, cat in enumerate(rep.gender_categories)
            },
            "degenerate_instances": rep.degenerate_count,
            "n_evaluated": rep.n_evaluated,
            "train_accuracy": report.train_accuracy,
            "test_accuracy": report.test_accuracy,
        }
        lines = io.StringIO()
        writer = csv.writer(lines)
        writer.writerow(["instance", "age_value", "age_composition", "predicted_class"])
        for inst, age_value, age_comp, pred in rep.density:
            writer.writerow([inst, repr(age_value), repr(age_comp), rep.class_names[pred]])
        _atomic_write(os.path.join(cfg.out, f"density_{act.kind}.csv"), lines.getvalue())
    doc["generated_at"] = _utc_now()
    _write_json(os.path.join(cfg.out, "bias_report.json"), doc)
    return EXIT_OK


def _cmd_flip(cfg: RunConfig) -> int:
    problem = _load_problem(cfg)
    scaled, _ = minmax_scale(problem)
    result = flip_experiment(
        scaled,
        Hyperparams(
            learning_rate=cfg.hp.learning_rate,
            epochs=cfg.hp.epochs,
            batch_size=cfg.hp.batch_size,
            seed=cfg.seed,
        ),
        cfg.activations,
        cfg.reps,
        train_fraction=cfg.train_fraction,
        means_from_train=(cfg.flip_means == "train"),
        random_baseline=cfg.random_baseline,
    )

    def curve_csv(curves: dict) -> str:
        lines = io.StringIO()
        writer = csv.writer(lines)
        writer.writerow(["activation", "k", "kappa_mean", "kappa_std", "reps"])
        for act in cfg.activations:
            curve = curves[act.kind]
            for k, mean, std in zip(curve.k, curve.mean, curve.std):
                writer.writerow([act.kind, k, repr(mean), repr(std), curve.reps])
        return lines.getvalue()

    _atomic_write(os.path.join(cfg.out, "flip_curves.csv"), curve_csv(result.curves))
    if result.random_curves is not None:
        _atomic_write(
            os.path.join(cfg.out, "flip_curves_random.csv"), curve_csv(result.random_curves)
        )
    return EXIT_OK


_COMMANDS = {
    "train": _cmd_train,
    "explain": _cmd_explain,
    "importance": _cmd_importance,
    "compare": _cmd_compare,
    "bias-report": _cmd_bias_report,
    "flip": _cmd_flip,
}


def run(cfg: RunConfig) -> int:
    """Execute one configured command; exceptions map to exit codes in main."""
    return _COMMANDS[cfg.command](cfg)


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    command = "fcp"
    try:
        args = _build_parser().parse_args(argv)
        command = args.command
        cfg = _config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        print(f"fcp {command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ModelFormatError) as exc:
        print(f"fcp {command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"fcp {command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ShapeError, DegenerateAttributionError, UndefinedCorrelationError, ValueError) as exc:
        print(f"fcp {command}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
