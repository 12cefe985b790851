"""Training loops: plain joint training, resampled/weighted variants,
and the two-stage mimicking schedule.

The mimicking loop is the interesting one. Stage 1 makes exactly one
pass over the union of all view samples per epoch: each shuffled batch
goes through the extractor once, every view whose samples appear in
the batch contributes a binary-head loss on the shared features, and
the accumulated feature gradient is pushed back through the extractor
in a single backward step. Stage 2 then resets the multiclass head to
its seeded initial values and trains it on detached features over a
stream drawn by the configured head sampler, so the inference head
never moves the extractor.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, fields

import numpy as np

from . import rng
from .dataset import GroupedDataset, SubgroupTable, subgroup_table
from .errors import ConfigError, DataError, TrainingDiverged
from .metrics import evaluate_predictions
from .model import Classifier
from .samplers import (
    LabelView,
    ResamplePlan,
    SampleWeights,
    build_label_views,
    oversample,
    select_ids,
    undersample,
    upweight,
)

__all__ = [
    "TrainConfig",
    "RunLog",
    "train_vanilla",
    "train_resampled",
    "train_bias_mimicking",
    "train_with_method",
    "run_sensitivity_sweep",
    "run_dy_ablation",
    "normalize_method",
]

METHODS = ("vanilla", "us", "os", "uw", "bm")
HEAD_SAMPLERS = ("vanilla", "us", "uw", "os")

_ALIASES = {
    "vanilla": "vanilla",
    "us": "us",
    "undersample": "us",
    "os": "os",
    "oversample": "os",
    "uw": "uw",
    "upweight": "uw",
    "bm": "bm",
    "mimic": "bm",
}


def normalize_method(name: str) -> str:
    try:
        return _ALIASES[name.strip().lower()]
    except KeyError:
        raise ConfigError(
            f"unknown method {name!r}; expected one of {', '.join(METHODS)}"
        ) from None


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by every training loop.

    `lr_decay_epochs` lists epochs at which the learning rate is
    multiplied by `lr_decay_gamma`; the effective rate at epoch e is
    learning_rate * gamma^(number of listed epochs <= e). The
    head_sampler and refresh/head knobs only affect the mimicking
    method: head_sampler picks the stage-2 stream, refresh_views
    redraws each view's negative subsample every epoch instead of
    fixing it once, and head_epochs sets stage-2 passes per epoch.
    """

    method: str = "vanilla"
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.1
    lr_decay_epochs: tuple[int, ...] = (20,)
    lr_decay_gamma: float = 0.1
    momentum: float = 0.0
    seed: int = 0
    head_sampler: str = "os"
    refresh_views: bool = False
    head_epochs: int = 1
    feature_dim: int = 8
    hidden_dim: int = 0
    max_loss: float = 1e6

    def validate(self) -> "TrainConfig":
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.epochs < 0:
            raise ConfigError("epochs must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not 0.0 < self.lr_decay_gamma <= 1.0:
            raise ConfigError("lr_decay_gamma must lie in (0, 1]")
        if any(e < 0 for e in self.lr_decay_epochs):
            raise ConfigError("lr_decay_epochs must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must lie in [0, 1)")
        if self.head_sampler not in HEAD_SAMPLERS:
            raise ConfigError(
                f"head_sampler must be one of {HEAD_SAMPLERS}, got {self.head_sampler!r}"
            )
        if self.head_epochs < 1:
            raise ConfigError("head_epochs must be positive")
        if self.feature_dim < 1 or self.hidden_dim < 0:
            raise ConfigError("feature_dim must be >= 1 and hidden_dim >= 0")
        if self.max_loss <= 0:
            raise ConfigError("max_loss must be positive")
        return self

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "lr_decay_epochs": list(self.lr_decay_epochs),
            "lr_decay_gamma": self.lr_decay_gamma,
            "momentum": self.momentum,
            "seed": self.seed,
            "head_sampler": self.head_sampler,
            "refresh_views": self.refresh_views,
            "head_epochs": self.head_epochs,
            "feature_dim": self.feature_dim,
            "hidden_dim": self.hidden_dim,
            "max_loss": self.max_loss,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError(f"unknown training option(s): {', '.join(sorted(unknown))}")
        kwargs = dict(obj)
        if "method" in kwargs:
            kwargs["method"] = normalize_method(str(kwargs["method"]))
        if "head_sampler" in kwargs:
            hs = str(kwargs["head_sampler"]).strip().lower()
            kwargs["head_sampler"] = _ALIASES.get(hs, hs)
        if "lr_decay_epochs" in kwargs:
            kwargs["lr_decay_epochs"] = tuple(int(e) for e in kwargs["lr_decay_epochs"])
        try:
            cfg = cls(**kwargs)
        except TypeError as e:
            raise ConfigError(f"bad training config: {e}") from None
        return cfg.validate()


@dataclass
class RunLog:
    """Per-epoch record of one training run."""

    method: str
    seed: int
    config: dict
    epochs: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    wall_time_s: float = 0.0

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "seed": self.seed,
            "config": self.config,
            "epochs": self.epochs,
            "snapshots": self.snapshots,
            "wall_time_s": self.wall_time_s,
        }


def _lr_at(cfg: TrainConfig, epoch: int) -> float:
    passed = sum(1 for e in cfg.lr_decay_epochs if epoch >= e)
    return cfg.learning_rate * cfg.lr_decay_gamma**passed


def _guard(loss: float, cfg: TrainConfig, method: str, epoch: int) -> None:
    if not np.isfinite(loss) or loss > cfg.max_loss:
        raise TrainingDiverged(
            f"{method} training diverged at epoch {epoch}: loss={loss!r}"
        )


def _sgd(model: Classifier, grads: dict, lr: float, velocity: dict, momentum: float) -> None:
    for k, g in grads.items():
        if momentum > 0.0:
            v = velocity.get(k)
            v = g if v is None else momentum * v + g
            velocity[k] = v
            model.params[k] = model.params[k] - lr * v
        else:
            model.params[k] = model.params[k] - lr * g


def _new_model(d: GroupedDataset, cfg: TrainConfig) -> Classifier:
    return Classifier(
        input_dim=d.features.shape[1],
        num_classes=d.num_classes,
        feature_dim=cfg.feature_dim,
        hidden_dim=cfg.hidden_dim,
        seed=cfg.seed,
    )


def _maybe_snapshot(log: RunLog, model, epoch: int, eval_data) -> None:
    if eval_data is None:
        return
    d_eval, train_table = eval_data
    rep = evaluate_predictions(model.predict(d_eval.features), d_eval, train_table)
    log.snapshots.append({"epoch": epoch, "UA": rep.ua, "BC": rep.bc, "BA": rep.ba})


def _joint_loop(
    model: Classifier,
    d: GroupedDataset,
    rows: np.ndarray,
    weights: np.ndarray | None,
    cfg: TrainConfig,
    method: str,
    log: RunLog,
    eval_data=None,
) -> None:
    """Minibatch SGD over a fixed row stream, extractor and head jointly.

    `weights`, when given, must align with `rows`.
    """
    X_all = d.features[rows]
    y_all = d.targets[rows]
    w_all = weights
    velocity: dict = {}
    for epoch in range(cfg.epochs):
        lr = _lr_at(cfg, epoch)
        order = rng.stream(cfg.seed, rng.SHUFFLE, 1, epoch).permutation(len(rows))
        batch_losses = []
        for i in range(0, len(order), cfg.batch_size):
            idx = order[i : i + cfg.batch_size]
            wb = None if w_all is None else w_all[idx]
            loss, grads = model.multiclass_loss_and_grad(
                X_all[idx], y_all[idx], sample_weights=wb, detach_features=False
            )
            _guard(loss, cfg, method, epoch)
            _sgd(model, grads, lr, velocity, cfg.momentum)
            batch_losses.append(loss)
        log.epochs.append(
            {
                "epoch": epoch,
                "lr": lr,
                "loss": float(np.mean(batch_losses)) if batch_losses else 0.0,
                "batch_losses": batch_losses,
            }
        )
        _maybe_snapshot(log, model, epoch, eval_data)


def train_vanilla(d_train: GroupedDataset, cfg: TrainConfig, eval_data=None):
    """Joint SGD on the dataset as it comes."""
    cfg.validate()
    if len(d_train) == 0:
        raise DataError("empty training set")
    start = time.perf_counter()
    model = _new_model(d_train, cfg)
    log = RunLog(method="vanilla", seed=cfg.seed, config=cfg.to_dict())
    _joint_loop(
        model, d_train, np.arange(len(d_train)), None, cfg, "vanilla", log, eval_data
    )
    log.wall_time_s = time.perf_counter() - start
    return model, log


def train_resampled(
    d_train: GroupedDataset,
    plan: ResamplePlan | SampleWeights,
    cfg: TrainConfig,
    eval_data=None,
):
    """The vanilla loop over a resampled or weighted stream.

    A ResamplePlan is realized once (the same drawn ids are reused
    every epoch); SampleWeights keep the full stream and scale each
    sample's loss instead.
    """
    cfg.validate()
    if len(d_train) == 0:
        raise DataError("empty training set")
    start = time.perf_counter()
    model = _new_model(d_train, cfg)
    if isinstance(plan, SampleWeights):
        rows = np.arange(len(d_train))
        weights = plan.for_dataset(d_train)
        method = "uw"
    elif isinstance(plan, ResamplePlan):
        ids = select_ids(d_train, plan)
        rows = d_train.rows_for_ids(ids)
        weights = None
        method = _ALIASES.get(plan.method, plan.method)
    else:
        raise ConfigError(f"expected a resample plan or weights, got {type(plan).__name__}")
    log = RunLog(method=method, seed=cfg.seed, config=cfg.to_dict())
    _joint_loop(model, d_train, rows, weights, cfg, method, log, eval_data)
    log.wall_time_s = time.perf_counter() - start
    return model, log


def _head_stream(d: GroupedDataset, table: SubgroupTable, cfg: TrainConfig):
    """Row stream and optional weights for stage-2 head training."""
    if cfg.head_sampler == "vanilla":
        return np.arange(len(d)), None
    if cfg.head_sampler == "us":
        ids = select_ids(d, undersample(table, cfg.seed))
        return d.rows_for_ids(ids), None
    if cfg.head_sampler == "os":
        ids = select_ids(d, oversample(table, cfg.seed))
        return d.rows_for_ids(ids), None
    if cfg.head_sampler == "uw":
        return np.arange(len(d)), upweight(table).for_dataset(d)
    raise ConfigError(f"unknown head sampler {cfg.head_sampler!r}")


def _refresh_seed(base_seed: int, epoch: int) -> int:
    # Fresh 64-bit seed per epoch, derived deterministically.
    ss = np.random.SeedSequence([base_seed, rng.VIEWS, epoch + 1])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _view_row_data(d: GroupedDataset, views: list[LabelView]):
    data = []
    for v in views:
        member = np.isin(d.ids, v.included_ids)
        if member.sum() != len(v):
            raise DataError(
                f"view for class {v.positive_class} references sample ids "
                "outside the training set"
            )
        labels = (d.targets == v.positive_class).astype(np.float64)
        data.append((v.positive_class, member, labels))
    union = np.flatnonzero(np.any([m for _, m, _ in data], axis=0))
    return data, union


def train_bias_mimicking(
    d_train: GroupedDataset,
    views: list[LabelView],
    cfg: TrainConfig,
    eval_data=None,
):
    """Two-stage loop over per-class label views.

    Stage 1 per epoch: one seeded shuffle of the union of view samples;
    each batch is pushed through the extractor once and every view
    scores its own members with its binary head, so a sample
    contributes to all views that include it while the extractor sees
    it exactly once. Stage 2 per epoch: the multiclass head is reset to
    its seeded initialization and trained on detached features over the
    head-sampler stream. The returned model pairs the stage-1 extractor
    with the last stage-2 head.
    """
    cfg.validate()
    if len(d_train) == 0:
        raise DataError("empty training set")
    if not views:
        raise ConfigError("at least one label view is required")
    classes = [v.positive_class for v in views]
    if len(set(classes)) != len(classes):
        raise ConfigError("views must target distinct classes")
    start = time.perf_counter()
    model = _new_model(d_train, cfg)
    table = subgroup_table(d_train)
    view_data, union_rows = _view_row_data(d_train, views)
    head_rows, head_weights = _head_stream(d_train, table, cfg)
    log = RunLog(method="bm", seed=cfg.seed, config=cfg.to_dict())
    velocity: dict = {}
    mimic_percent = views[0].mimic_percent

    for epoch in range(cfg.epochs):
        lr = _lr_at(cfg, epoch)
        if cfg.refresh_views and epoch > 0:
            fresh = build_label_views(
                d_train, _refresh_seed(cfg.seed, epoch), mimic_percent
            )
            views = [fresh[y] for y in classes]
            view_data, union_rows = _view_row_data(d_train, views)

        # Stage 1: binary heads + extractor, one pass over the union.
        fwd_before = model.forward_sample_count
        order = union_rows[
            rng.stream(cfg.seed, rng.SHUFFLE, 1, epoch).permutation(len(union_rows))
        ]
        loss_sums = {y: 0.0 for y in classes}
        loss_counts = {y: 0 for y in classes}
        for i in range(0, len(order), cfg.batch_size):
            batch = order[i : i + cfg.batch_size]
            F, cache = model.features_cached(d_train.features[batch])
            dF = np.zeros_like(F)
            gw = np.zeros_like(model.params["bin_w"])
            gb = np.zeros_like(model.params["bin_b"])
            for y, member, labels in view_data:
                sel = member[batch]
                n_sel = int(sel.sum())
                if n_sel == 0:
                    continue
                loss, dFv, dwy, dby = model.binary_head_backward(
                    y, F[sel], labels[batch][sel]
                )
                _guard(loss, cfg, "bm", epoch)
                dF[sel] += dFv
                gw[y] += dwy
                gb[y] += dby
                loss_sums[y] += loss * n_sel
                loss_counts[y] += n_sel
            grads = model.extractor_backward(cache, dF)
            grads["bin_w"] = gw
            grads["bin_b"] = gb
            _sgd(model, grads, lr, velocity, cfg.momentum)
        stage1_forwards = model.forward_sample_count - fwd_before

        # Stage 2: head reset + detached training on the sampler stream.
        model.reset_multiclass_head()
        head_velocity: dict = {}
        fwd_before = model.forward_sample_count
        head_losses = []
        for inner in range(cfg.head_epochs):
            order = head_rows[
                rng.stream(cfg.seed, rng.SHUFFLE, 2, epoch, inner).permutation(
                    len(head_rows)
                )
            ]
            for i in range(0, len(order), cfg.batch_size):
                idx = order[i : i + cfg.batch_size]
                wb = None if head_weights is None else head_weights[idx]
                loss, grads = model.multiclass_loss_and_grad(
                    d_train.features[idx],
                    d_train.targets[idx],
                    sample_weights=wb,
                    detach_features=True,
                )
                _guard(loss, cfg, "bm", epoch)
                _sgd(model, grads, lr, head_velocity, cfg.momentum)
                head_losses.append(loss)
        stage2_forwards = model.forward_sample_count - fwd_before

        log.epochs.append(
            {
                "epoch": epoch,
                "lr": lr,
                "view_losses": {
                    str(y): (loss_sums[y] / loss_counts[y] if loss_counts[y] else 0.0)
                    for y in classes
                },
                "head_loss": float(np.mean(head_losses)) if head_losses else 0.0,
                "stage1_forward_passes": int(stage1_forwards),
                "stage2_forward_passes": int(stage2_forwards),
            }
        )
        _maybe_snapshot(log, model, epoch, eval_data)

    log.wall_time_s = time.perf_counter() - start
    return model, log


def train_with_method(d_train: GroupedDataset, cfg: TrainConfig, eval_data=None):
    """Build whatever the configured method needs, then train.

    Returns (model, log, aux) where aux carries the plan, weights, or
    views the method used, so callers can verify or serialize them.
    """
    cfg.validate()
    method = cfg.method
    aux: dict = {}
    if method == "vanilla":
        model, log = train_vanilla(d_train, cfg, eval_data)
    elif method in ("us", "os"):
        table = subgroup_table(d_train)
        plan = (undersample if method == "us" else oversample)(table, cfg.seed)
        aux["plan"] = plan
        model, log = train_resampled(d_train, plan, cfg, eval_data)
    elif method == "uw":
        weights = upweight(subgroup_table(d_train))
        aux["weights"] = weights
        model, log = train_resampled(d_train, weights, cfg, eval_data)
    elif method == "bm":
        views = build_label_views(d_train, cfg.seed)
        aux["views"] = views
        model, log = train_bias_mimicking(d_train, views, cfg, eval_data)
    else:
        raise ConfigError(f"unknown method {method!r}")
    return model, log, aux


def run_sensitivity_sweep(
    d_train: GroupedDataset,
    d_test: GroupedDataset,
    cfg: TrainConfig,
    xs=(0.0, 25.0, 50.0, 75.0, 100.0),
) -> list[dict]:
    """Train the mimicking method at several mimic percentages.

    Returns one row per x with UA and BC on `d_test`; x=100 matches a
    standard mimicking run with the same seed, x=0 trains on views
    whose distributions are untouched.
    """
    xs = list(xs)
    if not xs:
        raise ConfigError("at least one mimic percentage is required")
    for x in xs:
        if not 0.0 <= float(x) <= 100.0:
            raise ConfigError(f"mimic percentage must lie in [0, 100], got {x}")
    table = subgroup_table(d_train)
    rows = []
    for x in xs:
        views = build_label_views(d_train, cfg.seed, mimic_percent=float(x))
        model, _ = train_bias_mimicking(d_train, views, cfg)
        rep = evaluate_predictions(model.predict(d_test.features), d_test, table)
        rows.append({"x": float(x), "UA": rep.ua, "BC": rep.bc})
    return rows


def run_dy_ablation(
    d_train: GroupedDataset, d_test: GroupedDataset, cfg: TrainConfig
) -> list[dict]:
    """Train on each single label view and on both, for a binary task.

    Rows report UA restricted to each class's subgroups (UA1 for class
    0, UA2 for class 1) plus overall UA, for variants d1, d2, d1+d2.
    The d1+d2 variant is exactly the standard mimicking run.
    """
    if d_train.num_classes != 2:
        raise DataError(
            f"view ablation requires a binary task, got {d_train.num_classes} classes"
        )
    table = subgroup_table(d_train)
    views = build_label_views(d_train, cfg.seed)
    variants = [("d1", [views[0]]), ("d2", [views[1]]), ("d1+d2", views)]
    rows = []
    for name, subset in variants:
        model, _ = train_bias_mimicking(d_train, subset, cfg)
        rep = evaluate_predictions(model.predict(d_test.features), d_test, table)
        rows.append(
            {
                "variant": name,
                "UA1": float(rep.accuracy[0].mean()),
                "UA2": float(rep.accuracy[1].mean()),
                "UA": rep.ua,
            }
        )
    return rows
