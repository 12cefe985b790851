"""Command-line experiment pipeline.

Subcommands: generate, resample, verify, train, evaluate, run, sweep,
ablate. Every command reads one TOML config describing the dataset,
the split, and the training hyperparameters; outputs are CSV and JSON
files stamped with a hash of the resolved config so any two artifacts
from the same configuration can be matched up.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 training
divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import numpy as np

from .dataset import (
    CsvSchema,
    GroupedDataset,
    SyntheticSpec,
    generate_synthetic,
    load_csv,
    save_csv,
    split,
    subgroup_table,
)
from .errors import ConfigError, DataError, TrainingDiverged
from .metrics import evaluate_predictions
from .model import load_checkpoint, save_checkpoint
from .samplers import (
    build_label_views,
    oversample,
    plan_to_dict,
    select_ids,
    undersample,
    upweight,
    view_from_dict,
    view_to_dict,
    weights_to_dict,
)
from .stats import check_mimicking, rounding_bound, verify_independence
from .train import (
    TrainConfig,
    normalize_method,
    run_dy_ablation,
    run_sensitivity_sweep,
    train_with_method,
)

DEFAULT_METHODS = ("vanilla", "us", "os", "uw", "bm")
DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_SWEEP_XS = (0.0, 25.0, 50.0, 75.0, 100.0)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Resolved experiment description: dataset, split, training, matrix."""

    synthetic: SyntheticSpec | None
    csv_path: str | None
    csv_num_classes: int | None
    csv_num_groups: int | None
    train_frac: float
    balanced_test: bool
    train: TrainConfig
    methods: tuple[str, ...]
    seeds: tuple[int, ...]
    sweep_xs: tuple[float, ...]
    out: str

    def resolved(self) -> dict:
        """Canonical dict of every setting, defaults included."""
        if self.synthetic is not None:
            spec = dataclasses.asdict(self.synthetic)
            if isinstance(spec["bias_strength"], tuple):
                spec["bias_strength"] = list(spec["bias_strength"])
            if isinstance(spec["dominant_group"], tuple):
                spec["dominant_group"] = list(spec["dominant_group"])
            dataset = {"source": "synthetic", **spec}
        else:
            dataset = {
                "source": "csv",
                "path": self.csv_path,
                "num_classes": self.csv_num_classes,
                "num_groups": self.csv_num_groups,
            }
        return {
            "dataset": dataset,
            "split": {"train_frac": self.train_frac, "balanced_test": self.balanced_test},
            "train": self.train.to_dict(),
            "run": {"methods": list(self.methods), "seeds": list(self.seeds)},
            "sweep": {"percentages": list(self.sweep_xs)},
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _section(raw: dict, name: str, allowed: set[str]) -> dict:
    sec = raw.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{name}]: {', '.join(sorted(unknown))}")
    return sec


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate a TOML experiment config."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML ({e})") from None

    known_sections = {"dataset", "split", "train", "run", "sweep"}
    unknown = set(raw) - known_sections
    if unknown:
        raise ConfigError(f"unknown config section(s): {', '.join(sorted(unknown))}")

    ds = _section(raw, "dataset", {
        "source", "path", "num_classes", "num_groups", "samples_per_class",
        "bias_strength", "dominant_group", "class_center_separation",
        "group_shift_magnitude", "feature_dim", "noise_sigma", "seed",
    })
    source = str(ds.get("source", "synthetic"))
    synthetic = None
    csv_path = None
    csv_c = ds.get("num_classes")
    csv_g = ds.get("num_groups")
    if source == "synthetic":
        try:
            synthetic = SyntheticSpec(
                num_classes=int(ds.get("num_classes", 2)),
                num_groups=int(ds.get("num_groups", 2)),
                samples_per_class=int(ds.get("samples_per_class", 2000)),
                bias_strength=(
                    tuple(float(r) for r in ds["bias_strength"])
                    if isinstance(ds.get("bias_strength"), list)
                    else float(ds.get("bias_strength", 0.95))
                ),
                dominant_group=(
                    tuple(int(g) for g in ds["dominant_group"])
                    if "dominant_group" in ds
                    else None
                ),
                class_center_separation=float(ds.get("class_center_separation", 2.2)),
                group_shift_magnitude=float(ds.get("group_shift_magnitude", 4.5)),
                feature_dim=int(ds.get("feature_dim", 6)),
                noise_sigma=float(ds.get("noise_sigma", 1.0)),
                seed=int(ds.get("seed", 0)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"bad [dataset] value: {e}") from None
        synthetic.validate()
    elif source == "csv":
        if "path" not in ds:
            raise ConfigError("[dataset] source = 'csv' requires a path")
        csv_path = str(ds["path"])
        csv_c = int(csv_c) if csv_c is not None else None
        csv_g = int(csv_g) if csv_g is not None else None
    else:
        raise ConfigError(f"[dataset] source must be 'synthetic' or 'csv', got {source!r}")

    sp = _section(raw, "split", {"train_frac", "balanced_test"})
    train_frac = float(sp.get("train_frac", 0.5))
    if not 0.0 < train_frac < 1.0:
        raise ConfigError(f"train_frac must lie in (0, 1), got {train_frac}")
    balanced_test = bool(sp.get("balanced_test", True))

    train_cfg = TrainConfig.from_dict(raw.get("train", {}))

    rn = _section(raw, "run", {"methods", "seeds", "out"})
    methods = tuple(normalize_method(str(m)) for m in rn.get("methods", DEFAULT_METHODS))
    seeds = tuple(int(s) for s in rn.get("seeds", DEFAULT_SEEDS))
    if not methods or not seeds:
        raise ConfigError("[run] needs at least one method and one seed")
    out = str(rn.get("out", "results"))

    sw = _section(raw, "sweep", {"percentages"})
    sweep_xs = tuple(float(x) for x in sw.get("percentages", DEFAULT_SWEEP_XS))
    for x in sweep_xs:
        if not 0.0 <= x <= 100.0:
            raise ConfigError(f"sweep percentage {x} outside [0, 100]")

    return ExperimentConfig(
        synthetic=synthetic,
        csv_path=csv_path,
        csv_num_classes=csv_c if source == "csv" else None,
        csv_num_groups=csv_g if source == "csv" else None,
        train_frac=train_frac,
        balanced_test=balanced_test,
        train=train_cfg,
        methods=methods,
        seeds=seeds,
        sweep_xs=sweep_xs,
        out=out,
    )


def _load_dataset(cfg: ExperimentConfig, seed: int | None = None) -> GroupedDataset:
    """Dataset for one run; synthetic sources regenerate with the run seed."""
    if cfg.synthetic is not None:
        spec = cfg.synthetic
        if seed is not None:
            spec = dataclasses.replace(spec, seed=seed)
        return generate_synthetic(spec)
    schema = CsvSchema(num_classes=cfg.csv_num_classes, num_groups=cfg.csv_num_groups)
    return load_csv(cfg.csv_path, schema)


def _split_for_run(cfg: ExperimentConfig, seed: int):
    d = _load_dataset(cfg, seed)
    d_train, d_test = split(d, cfg.train_frac, cfg.balanced_test, seed=seed)
    overlap = np.intersect1d(d_train.ids, d_test.ids)
    if len(overlap):
        raise DataError("train/test splits share sample ids")
    return d_train, d_test


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if v is None:
        return ""
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list], config_hash: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# config_hash={config_hash}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_csv_quote(_fmt_cell(v)) for v in row) + "\n")


def _csv_quote(s: str) -> str:
    if any(c in s for c in ',"\n'):
        return '"' + s.replace('"', '""') + '"'
    return s


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _metrics_header(C: int, G: int) -> list[str]:
    cols = ["method", "seed", "UA", "BC", "BA"]
    cols += [f"acc_y{y}_b{b}" for y in range(C) for b in range(G)]
    cols.append("error")
    return cols


def _metrics_row(method: str, seed: int, rep) -> list:
    row = [method, seed, rep.ua, rep.bc, rep.ba]
    row += [float(a) for a in rep.accuracy.ravel()]
    row.append("")
    return row


def _error_row(method: str, seed: int, n_subgroups: int, err: Exception) -> list:
    row = [method, seed, None, None, None]
    row += [None] * n_subgroups
    row.append(f"{type(err).__name__}: {err}")
    return row


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_generate(cfg: ExperimentConfig, args) -> int:
    if cfg.synthetic is None:
        raise ConfigError("generate requires [dataset] source = 'synthetic'")
    spec = cfg.synthetic
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    d = generate_synthetic(spec)
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    save_csv(d, out / "dataset.csv")
    t = subgroup_table(d)
    dominant = t.dominant_groups()
    manifest = {
        "config_hash": cfg.config_hash(),
        "seed": spec.seed,
        "spec": {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in dataclasses.asdict(spec).items()
        },
        "num_samples": len(d),
        "subgroup_counts": t.counts.tolist(),
        "dominant_groups": dominant.tolist(),
        "dominant_fraction": [
            float(t.counts[y, dominant[y]] / t.counts[y].sum())
            for y in range(t.num_classes)
        ],
    }
    _write_json(out / "manifest.json", manifest)
    print(f"wrote {out / 'dataset.csv'} ({len(d)} samples) and {out / 'manifest.json'}")
    return 0


def cmd_resample(cfg: ExperimentConfig, args) -> int:
    method = normalize_method(args.method)
    seed = args.seed if args.seed is not None else cfg.train.seed
    d = _load_dataset(cfg, seed if cfg.synthetic is not None else None)
    t = subgroup_table(d)
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    hash_ = cfg.config_hash()
    if method == "bm":
        views = build_label_views(d, seed, mimic_percent=args.percent)
        payload = {
            "config_hash": hash_,
            "seed": seed,
            "views": [view_to_dict(v) for v in views],
        }
        _write_json(out / "views.json", payload)
        sizes = ", ".join(f"d{v.positive_class}={len(v)}" for v in views)
        print(f"wrote {out / 'views.json'} (view sizes: {sizes})")
    elif method == "uw":
        w = upweight(t)
        payload = {"config_hash": hash_, "seed": seed, **weights_to_dict(w)}
        _write_json(out / "weights.json", payload)
        print(f"wrote {out / 'weights.json'}")
    else:
        plan = (undersample if method == "us" else oversample)(t, seed)
        ids = select_ids(d, plan)
        payload = {"config_hash": hash_, **plan_to_dict(plan, ids=ids)}
        _write_json(out / "plan.json", payload)
        print(f"wrote {out / 'plan.json'} ({len(ids)} sample slots)")
    return 0


def _print_report(label: str, rep) -> None:
    line = (
        f"{label:<24} max_residual={rep.max_residual:<12.6g} "
        f"tolerance={rep.tolerance:<12.6g} {'PASS' if rep.passed else 'FAIL'}"
    )
    if rep.derived_bound is not None:
        line += f"  (premise_spread={rep.premise_spread:.6g}, bound={rep.derived_bound:.6g})"
    print(line)


def cmd_verify(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.out)
    hash_ = cfg.config_hash()
    reports = []
    if args.views:
        try:
            fh = open(args.views, encoding="utf-8")
        except OSError as e:
            raise DataError(f"{args.views}: cannot open ({e})") from None
        with fh:
            try:
                payload = json.load(fh)
            except json.JSONDecodeError as e:
                raise DataError(f"{args.views}: not valid JSON ({e})") from None
        views = [view_from_dict(v) for v in payload.get("views", [])]
        if not views:
            raise DataError(f"{args.views}: no views found")
        for v in views:
            tol = args.tolerance
            if tol is None:
                tol = rounding_bound(v.achieved_table)
            rep = check_mimicking(v.achieved_table, v.positive_class, tol)
            reports.append((f"view d{v.positive_class} mimicking", rep))
            # The independence gate is the bound its own premise spread
            # implies; it can only fail on arithmetic bugs, which is
            # exactly what a verifier should catch. Both sides come from
            # the same exact-rational pass, so comparing the rounded
            # floats cannot flip the verdict.
            ind = verify_independence(v.achieved_table)
            ind = dataclasses.replace(
                ind,
                tolerance=ind.derived_bound,
                passed=bool(ind.max_residual <= ind.derived_bound),
            )
            reports.append((f"view d{v.positive_class} independence", ind))
    else:
        seed = args.seed if args.seed is not None else cfg.train.seed
        d = _load_dataset(cfg, seed if cfg.synthetic is not None else None)
        t = subgroup_table(d)
        reports.append(("dataset independence", verify_independence(t, args.tolerance)))
        for y in range(t.num_classes):
            reports.append(
                (f"mimicking vs class {y}", check_mimicking(t, y, args.tolerance))
            )
    for label, rep in reports:
        _print_report(label, rep)
    _write_json(
        out / "verify.json",
        {
            "config_hash": hash_,
            "reports": [{"label": label, **rep.to_dict()} for label, rep in reports],
        },
    )
    print(f"wrote {out / 'verify.json'}")
    if not all(rep.passed for _, rep in reports):
        raise DataError("verification failed: residual exceeds tolerance")
    return 0


def cmd_train(cfg: ExperimentConfig, args) -> int:
    train_cfg = cfg.train
    if args.method:
        train_cfg = dataclasses.replace(train_cfg, method=normalize_method(args.method))
    if args.head_sampler:
        train_cfg = dataclasses.replace(
            train_cfg, head_sampler=normalize_method(args.head_sampler)
        )
    if args.seed is not None:
        train_cfg = dataclasses.replace(train_cfg, seed=args.seed)
    train_cfg.validate()
    d_train, d_test = _split_for_run(cfg, train_cfg.seed)
    model, log, _ = train_with_method(d_train, train_cfg)
    rep = evaluate_predictions(
        model.predict(d_test.features), d_test, subgroup_table(d_train)
    )
    out = Path(args.out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    hash_ = cfg.config_hash()
    save_checkpoint(model, out / "checkpoint.json")
    _stamp_json(out / "checkpoint.json", hash_)
    _write_json(out / "runlog.json", {"config_hash": hash_, **log.to_dict()})
    _write_csv(
        out / "metrics.csv",
        _metrics_header(d_test.num_classes, d_test.num_groups),
        [_metrics_row(train_cfg.method, train_cfg.seed, rep)],
        hash_,
    )
    print(
        f"{train_cfg.method} seed={train_cfg.seed}: "
        f"UA={rep.ua:.4f} BC={rep.bc:.4f} BA={rep.ba:.4f}"
    )
    print(f"wrote {out / 'checkpoint.json'}, {out / 'runlog.json'}, {out / 'metrics.csv'}")
    return 0


def _stamp_json(path: Path, config_hash: str) -> None:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    obj["config_hash"] = config_hash
    _write_json(path, obj)


def cmd_evaluate(cfg: ExperimentConfig, args) -> int:
    model = load_checkpoint(args.checkpoint)
    seed = args.seed if args.seed is not None else cfg.train.seed
    d_train, d_test = _split_for_run(cfg, seed)
    rep = evaluate_predictions(
        model.predict(d_test.features), d_test, subgroup_table(d_train)
    )
    out = Path(args.out or cfg.out)
    hash_ = cfg.config_hash()
    if args.format == "json":
        _write_json(out / "metrics.json", {"config_hash": hash_, "seed": seed, **rep.to_dict()})
        print(f"wrote {out / 'metrics.json'}")
    else:
        _write_csv(
            out / "metrics.csv",
            _metrics_header(d_test.num_classes, d_test.num_groups),
            [_metrics_row("evaluate", seed, rep)],
            hash_,
        )
        print(f"wrote {out / 'metrics.csv'}")
    print(f"UA={rep.ua:.4f} BC={rep.bc:.4f} BA={rep.ba:.4f}")
    return 0


def cmd_run(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.out)
    hash_ = cfg.config_hash()
    seeds = (args.seed,) if args.seed is not None else cfg.seeds
    detail_rows: list[list] = []
    per_method: dict[str, list] = {m: [] for m in cfg.methods}
    header = None
    for seed in seeds:
        d_train, d_test = _split_for_run(cfg, seed)
        if header is None:
            header = _metrics_header(d_test.num_classes, d_test.num_groups)
        train_table = subgroup_table(d_train)
        for method in cfg.methods:
            train_cfg = dataclasses.replace(cfg.train, method=method, seed=seed)
            try:
                model, log, aux = train_with_method(d_train, train_cfg)
                if method == "bm":
                    _gate_views(aux["views"])
                rep = evaluate_predictions(
                    model.predict(d_test.features), d_test, train_table
                )
            except (ConfigError, DataError, TrainingDiverged) as e:
                detail_rows.append(
                    _error_row(method, seed, d_test.num_classes * d_test.num_groups, e)
                )
                continue
            run_dir = out / f"run_{method}_seed{seed}"
            run_dir.mkdir(parents=True, exist_ok=True)
            save_checkpoint(model, run_dir / "checkpoint.json")
            _stamp_json(run_dir / "checkpoint.json", hash_)
            _write_json(run_dir / "runlog.json", {"config_hash": hash_, **log.to_dict()})
            detail_rows.append(_metrics_row(method, seed, rep))
            per_method[method].append(rep)
    _write_csv(out / "metrics.csv", header, detail_rows, hash_)

    summary_rows = []
    for method in cfg.methods:
        reps = per_method[method]
        if not reps:
            summary_rows.append([method, 0] + [None] * 6)
            continue
        ua = np.array([r.ua for r in reps])
        bc = np.array([r.bc for r in reps])
        ba = np.array([r.ba for r in reps])
        summary_rows.append(
            [method, len(reps),
             float(ua.mean()), float(ua.std()),
             float(bc.mean()), float(bc.std()),
             float(ba.mean()), float(ba.std())]
        )
    _write_csv(
        out / "summary.csv",
        ["method", "n_seeds", "UA_mean", "UA_std", "BC_mean", "BC_std", "BA_mean", "BA_std"],
        summary_rows,
        hash_,
    )
    for row in summary_rows:
        if row[1]:
            print(
                f"{row[0]:<8} seeds={row[1]} UA={row[2]:.4f}±{row[3]:.4f} "
                f"BC={row[4]:.4f}±{row[5]:.4f} BA={row[6]:.4f}±{row[7]:.4f}"
            )
        else:
            print(f"{row[0]:<8} all runs failed")
    print(f"wrote {out / 'metrics.csv'} and {out / 'summary.csv'}")
    return 0


def _gate_views(views) -> None:
    """Hard gate: every view must meet its integer-rounding bound."""
    for v in views:
        bound = rounding_bound(v.achieved_table)
        rep = check_mimicking(v.achieved_table, v.positive_class, bound)
        if not rep.passed:
            raise DataError(
                f"view d{v.positive_class} violates the mimicking bound: "
                f"residual {rep.max_residual:.6g} > {bound:.6g}"
            )


def cmd_sweep(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.out)
    hash_ = cfg.config_hash()
    xs = cfg.sweep_xs
    if args.percentages:
        xs = tuple(float(x) for x in args.percentages.split(","))
    seeds = (args.seed,) if args.seed is not None else cfg.seeds
    detail = []
    by_x: dict[float, list] = {float(x): [] for x in xs}
    for seed in seeds:
        d_train, d_test = _split_for_run(cfg, seed)
        train_cfg = dataclasses.replace(cfg.train, method="bm", seed=seed)
        for row in run_sensitivity_sweep(d_train, d_test, train_cfg, xs):
            detail.append([row["x"], row["UA"], row["BC"], seed])
            by_x[row["x"]].append(row)
    _write_csv(out / "sweep.csv", ["x", "UA", "BC", "seed"], detail, hash_)
    summary = []
    for x in xs:
        rows = by_x[float(x)]
        ua = np.array([r["UA"] for r in rows])
        bc = np.array([r["BC"] for r in rows])
        summary.append(
            [float(x), len(rows), float(ua.mean()), float(ua.std()),
             float(bc.mean()), float(bc.std())]
        )
    _write_csv(
        out / "sweep_summary.csv",
        ["x", "n_seeds", "UA_mean", "UA_std", "BC_mean", "BC_std"],
        summary,
        hash_,
    )
    for row in summary:
        print(f"x={row[0]:<6g} UA={row[2]:.4f}±{row[3]:.4f} BC={row[4]:.4f}±{row[5]:.4f}")
    print(f"wrote {out / 'sweep.csv'} and {out / 'sweep_summary.csv'}")
    return 0


def cmd_ablate(cfg: ExperimentConfig, args) -> int:
    out = Path(args.out or cfg.out)
    hash_ = cfg.config_hash()
    seeds = (args.seed,) if args.seed is not None else cfg.seeds
    detail = []
    by_variant: dict[str, list] = {}
    for seed in seeds:
        d_train, d_test = _split_for_run(cfg, seed)
        train_cfg = dataclasses.replace(cfg.train, method="bm", seed=seed)
        for row in run_dy_ablation(d_train, d_test, train_cfg):
            detail.append([row["variant"], row["UA1"], row["UA2"], row["UA"], seed])
            by_variant.setdefault(row["variant"], []).append(row)
    _write_csv(out / "ablate.csv", ["variant", "UA1", "UA2", "UA", "seed"], detail, hash_)
    summary = []
    for variant in ("d1", "d2", "d1+d2"):
        rows = by_variant.get(variant, [])
        if not rows:
            continue
        ua1 = np.array([r["UA1"] for r in rows])
        ua2 = np.array([r["UA2"] for r in rows])
        ua = np.array([r["UA"] for r in rows])
        summary.append(
            [variant, len(rows), float(ua1.mean()), float(ua2.mean()), float(ua.mean())]
        )
    _write_csv(
        out / "ablate_summary.csv",
        ["variant", "n_seeds", "UA1_mean", "UA2_mean", "UA_mean"],
        summary,
        hash_,
    )
    for row in summary:
        print(f"{row[0]:<6} UA1={row[2]:.4f} UA2={row[3]:.4f} UA={row[4]:.4f}")
    print(f"wrote {out / 'ablate.csv'} and {out / 'ablate_summary.csv'}")
    return 0


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="TOML experiment config")
    common.add_argument("--seed", type=int, default=None, help="override the seed")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument(
        "--format", choices=("csv", "json"), default="csv",
        help="output format where both are supported",
    )

    p = argparse.ArgumentParser(
        prog="biasmimic",
        description="Subgroup resampling and bias-mitigation experiment pipeline.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("generate", parents=[common], help="write a synthetic dataset CSV")

    rp = sub.add_parser("resample", parents=[common], help="emit a resample plan or views")
    rp.add_argument("--method", required=True,
                    help="undersample | oversample | upweight | bm")
    rp.add_argument("--percent", type=float, default=100.0,
                    help="mimic percentage for bm views")

    vp = sub.add_parser("verify", parents=[common],
                        help="check mimicking/independence residuals")
    vp.add_argument("--views", default=None, help="views.json to verify")
    vp.add_argument("--tolerance", type=float, default=None)

    tp = sub.add_parser("train", parents=[common], help="train one model")
    tp.add_argument("--method", default=None, help="override [train] method")
    tp.add_argument("--head-sampler", dest="head_sampler", default=None,
                    help="override the stage-2 head sampler")

    ep = sub.add_parser("evaluate", parents=[common], help="score a checkpoint")
    ep.add_argument("--checkpoint", required=True)

    sub.add_parser("run", parents=[common], help="full method x seed matrix")

    wp = sub.add_parser("sweep", parents=[common], help="mimic-percentage sensitivity")
    wp.add_argument("--percentages", default=None,
                    help="comma-separated percentages, e.g. 0,50,100")

    sub.add_parser("ablate", parents=[common], help="per-view ablation (binary tasks)")
    return p


_COMMANDS = {
    "generate": cmd_generate,
    "resample": cmd_resample,
    "verify": cmd_verify,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except TrainingDiverged as e:
        print(f"training diverged: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
