"""
Synthetic two-group classification pipeline: plain, fair, private (DP-SGD)
and private-fair logistic regression, with per-group evaluation and
post-hoc per-group thresholds.

Privacy accounting for training uses basic composition: a run of T steps
with target (epsilon, delta) spends epsilon/T and delta/T per step, and the
Gaussian noise of each step is calibrated with :func:`gaussian_sigma` at
that per-step budget.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.special import expit

from . import fairness
from .accountant import BudgetLedger, charge, split_budget
from .errors import BudgetExhausted, EmptyGroup, NonFinite
from .fairness import LabeledDataset
from .mechanisms import gaussian_sigma

__all__ = [
    "SyntheticSpec",
    "TrainConfig",
    "Model",
    "EvalReport",
    "generate_synthetic",
    "loss_and_grad",
    "per_example_grads",
    "clip_rows",
    "train_logistic",
    "train_dp",
    "train_dp_fair",
    "threshold_postprocess",
    "evaluate",
    "run_variant",
    "seed_sweep",
    "seed_sweep_csv",
    "EmpiricalEvaluator",
    "VARIANTS",
    "SEED_SWEEP_HEADER",
]

VARIANTS = ("plain", "fair", "dp", "dp_fair")
SEED_SWEEP_HEADER = ("seed", "variant", "epsilon", "acc0", "acc1", "fpr0", "fpr1", "dp_gap", "eo_gap")


@dataclass(frozen=True)
class SyntheticSpec:
    """Two groups with their own sizes and positive-label base rates.

    Features are spherical Gaussians whose class means sit
    ``class_separation`` apart along the all-ones direction. With
    ``group_shift`` > 0 the minority group's clusters are additionally
    displaced along an orthogonal direction, so its best decision boundary
    differs from the majority's.
    """

    n0: int = 5000
    n1: int = 500
    base_rate0: float = 0.30
    base_rate1: float = 0.45
    d: int = 4
    class_separation: float = 1.8
    group_shift: float = 3.0

    def __post_init__(self):
        if self.n0 < 1 or self.n1 < 1:
            raise ValueError("both groups need at least one record")
        for r in (self.base_rate0, self.base_rate1):
            if not 0 < r < 1:
                raise ValueError(f"base rates must lie in (0, 1), got {r}")
        if self.d < 1:
            raise ValueError(f"d must be a positive count, got {self.d}")
        if self.class_separation < 0 or self.group_shift < 0:
            raise ValueError("class_separation and group_shift must be non-negative")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1.0
    epochs: int = 5
    batch_size: int = 1100
    clip_norm: float = 1.0
    target_epsilon: float | None = None
    target_delta: float = 1e-5
    fairness_lambda: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive counts")
        if self.clip_norm < 0:
            raise ValueError("clip_norm must be non-negative")
        if self.fairness_lambda < 0:
            raise ValueError("fairness_lambda must be non-negative")
        if self.target_epsilon is not None:
            if not self.target_epsilon > 0:
                raise ValueError("target_epsilon must be positive")
            if not 0 < self.target_delta < 1:
                raise ValueError("target_delta must lie in (0, 1) when target_epsilon is set")

    def steps(self, n_records: int) -> int:
        return self.epochs * math.ceil(n_records / min(self.batch_size, n_records))


@dataclass(frozen=True, eq=False)
class Model:
    """Logistic regression weights; the last entry is the bias."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)):
            raise NonFinite("model weights are not finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def zeros(cls, d: int) -> "Model":
        return cls(np.zeros(d + 1))

    def scores(self, features) -> np.ndarray:
        X = np.asarray(features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] + 1 != self.weights.size:
            raise ValueError(f"model expects {self.weights.size - 1} features, got {X.shape[1]}")
        return expit(X @ self.weights[:-1] + self.weights[-1])

    def predict(self, features, thresholds=None, groups=None) -> np.ndarray:
        """Binary predictions; a score equal to the threshold counts as positive."""
        s = self.scores(features)
        if thresholds is None:
            return (s >= 0.5).astype(np.int8)
        t = np.where(np.asarray(groups) == 0, thresholds[0], thresholds[1])
        return (s >= t).astype(np.int8)


@dataclass(frozen=True)
class EvalReport:
    accuracy: dict
    fpr: dict
    tpr: dict
    demographic_parity_gap: float
    equalized_odds_gap: float
    epsilon_spent: float
    overall_accuracy: float = math.nan
    thresholds: dict | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("accuracy", "fpr", "tpr", "thresholds"):
            if d[k] is not None:
                d[k] = {str(g): v for g, v in d[k].items()}
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def generate_synthetic(spec: SyntheticSpec, rng: np.random.Generator) -> LabeledDataset:
    """Group 0 records first, then group 1; labels drawn at each group's base rate."""
    d = spec.d
    direction = np.ones(d) / math.sqrt(d)
    if d > 1:
        orth = np.zeros(d)
        orth[0], orth[1] = 1.0, -1.0
        orth /= math.sqrt(2.0)
    else:
        orth = np.zeros(d)
    feats, labels, groups = [], [], []
    for g, (n, rate) in enumerate(((spec.n0, spec.base_rate0), (spec.n1, spec.base_rate1))):
        y = (rng.random(n) < rate).astype(np.int8)
        centre = (y[:, None] - 0.5) * spec.class_separation * direction
        if g == 1:
            centre = centre + spec.group_shift * orth
        feats.append(centre + rng.standard_normal((n, d)))
        labels.append(y)
        groups.append(np.full(n, g, dtype=np.int8))
    return LabeledDataset(np.vstack(feats), np.concatenate(labels), np.concatenate(groups))


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((len(X), 1))])


def per_example_grads(
    weights: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    groups: np.ndarray,
    fairness_lambda: float = 0.0,
) -> np.ndarray:
    """Per-record gradient rows whose mean is the gradient of :func:`loss_and_grad`.

    The fairness penalty lambda * (mean_0 p - mean_1 p)^2 is attributed to
    records in proportion to their share of their group's mean. The group
    gap itself is shared by all rows of the batch.
    """
    Xa = _augment(X)
    p = expit(Xa @ weights)
    rows = (p - y)[:, None] * Xa
    if fairness_lambda > 0:
        m0, m1 = groups == 0, groups == 1
        n0, n1 = int(m0.sum()), int(m1.sum())
        if n0 and n1:
            gap = p[m0].mean() - p[m1].mean()
            n = len(y)
            coef = np.where(m0, n / n0, -n / n1) * 2.0 * fairness_lambda * gap
            rows = rows + (coef * p * (1.0 - p))[:, None] * Xa
    return rows


def loss_and_grad(
    weights: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    groups: np.ndarray | None = None,
    fairness_lambda: float = 0.0,
) -> tuple[float, np.ndarray]:
    """Mean logistic loss plus the optional squared demographic-parity penalty.

    The penalty uses the difference of group means of predicted
    probabilities; it contributes nothing when a group is absent.
    """
    weights = np.asarray(weights, dtype=float)
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    z = _augment(X) @ weights
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    if fairness_lambda > 0 and groups is not None:
        p = expit(z)
        m0, m1 = groups == 0, groups == 1
        if m0.any() and m1.any():
            loss += fairness_lambda * float(p[m0].mean() - p[m1].mean()) ** 2
    if groups is None:
        groups = np.zeros(len(y), dtype=np.int8)
    grad = per_example_grads(weights, X, y, groups, fairness_lambda).mean(axis=0)
    return loss, grad


def clip_rows(rows: np.ndarray, clip_norm: float) -> np.ndarray:
    """Scale each row down to Euclidean norm at most ``clip_norm``."""
    norms = np.linalg.norm(rows, axis=1)
    factor = np.minimum(1.0, clip_norm / np.maximum(norms, 1e-300))
    return rows * factor[:, None]


def _batches(n: int, batch_size: int, epochs: int, rng: np.random.Generator):
    batch_size = min(batch_size, n)
    for _ in range(epochs):
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            yield perm[start:start + batch_size]


def _fit(data: LabeledDataset, config: TrainConfig, noise_rng=None, ledger=None, private=False):
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    X, y, a = data.features, data.labels.astype(float), data.groups
    w = np.zeros(data.dim + 1)
    order_rng = np.random.default_rng(config.seed)
    steps = config.steps(len(data))

    if private:
        eps_step = split_budget(config.target_epsilon, steps)
        delta_step = split_budget(config.target_delta, steps)
        if not ledger.can_afford(config.target_epsilon, config.target_delta):
            raise BudgetExhausted(
                f"training needs (epsilon={config.target_epsilon}, delta={config.target_delta}) but the ledger "
                f"has (epsilon={ledger.remaining_epsilon}, delta={ledger.remaining_delta}) left"
            )
        noise_multiplier = gaussian_sigma(eps_step, delta_step, 1.0)

    for t, idx in enumerate(_batches(len(data), config.batch_size, config.epochs, order_rng)):
        rows = per_example_grads(w, X[idx], y[idx], a[idx], config.fairness_lambda)
        if private:
            rows = clip_rows(rows, config.clip_norm)
            b = len(idx)
            grad = rows.mean(axis=0)
            std = config.clip_norm * noise_multiplier / b
            grad = grad + std * noise_rng.standard_normal(grad.shape)
            ledger = charge(ledger, eps_step, delta_step, f"dp-sgd step {t + 1}/{steps}")
        else:
            grad = rows.mean(axis=0)
        with np.errstate(over="ignore", invalid="ignore"):
            w = w - config.learning_rate * grad
        if not np.all(np.isfinite(w)):
            raise NonFinite(f"weights diverged at step {t + 1}; lower the learning rate")
    return Model(w), ledger


def train_logistic(data: LabeledDataset, config: TrainConfig) -> Model:
    """Non-private mini-batch gradient descent from zero weights.

    Batch order comes from ``config.seed``. A positive
    ``config.fairness_lambda`` adds the demographic-parity penalty (the
    "fair" variant); ``target_epsilon`` is ignored.
    """
    model, _ = _fit(data, config)
    return model


def train_dp(
    data: LabeledDataset,
    config: TrainConfig,
    ledger: BudgetLedger,
    rng: np.random.Generator,
) -> tuple[Model, BudgetLedger]:
    """DP-SGD: clip every per-record gradient, average, add Gaussian noise.

    Each step charges ``target_epsilon / steps`` (and ``target_delta /
    steps``) to the ledger, so the returned ledger has spent the full
    target. Noise has standard deviation ``clip_norm * z / batch_size``
    where ``z = gaussian_sigma(eps_step, delta_step, 1)``. Batch order uses
    ``config.seed`` exactly as :func:`train_logistic` does; the noise comes
    from ``rng``.

    Raises
    ------
    BudgetExhausted
        Before any step, if the ledger cannot afford the target.
    NonFinite
        If the weights diverge.
    """
    if config.target_epsilon is None:
        raise ValueError("train_dp needs config.target_epsilon")
    return _fit(data, config, noise_rng=rng, ledger=ledger, private=True)


def train_dp_fair(
    data: LabeledDataset,
    config: TrainConfig,
    ledger: BudgetLedger,
    rng: np.random.Generator,
) -> tuple[Model, BudgetLedger]:
    """:func:`train_dp` with the squared demographic-parity penalty in the loss."""
    if not config.fairness_lambda > 0:
        raise ValueError("train_dp_fair needs fairness_lambda > 0")
    return train_dp(data, config, ledger, rng)


def _threshold_grid(scores: np.ndarray) -> np.ndarray:
    u = np.unique(scores)
    mids = (u[:-1] + u[1:]) / 2.0
    return np.unique(np.concatenate([[0.0, 0.5, 1.0], mids]))


def _rates_by_threshold(scores, labels, grid):
    """Counts of predicted positives, true positives and correct calls at each threshold."""
    order = np.sort(scores)
    pos_scores = np.sort(scores[labels == 1])
    neg_scores = np.sort(scores[labels == 0])
    # number of scores >= t
    n_pos_pred = len(order) - np.searchsorted(order, grid, side="left")
    tp = len(pos_scores) - np.searchsorted(pos_scores, grid, side="left")
    fp = len(neg_scores) - np.searchsorted(neg_scores, grid, side="left")
    tn = len(neg_scores) - fp
    return n_pos_pred, tp, fp, tn, len(pos_scores), len(neg_scores)


def threshold_postprocess(scores, data: LabeledDataset, target: str = "demographic_parity") -> dict:
    """Pick one decision threshold per group.

    Among all pairs of thresholds from each group's grid (midpoints between
    consecutive distinct scores, plus 0, 0.5 and 1), keep those minimising
    the chosen gap, then take the one with the highest overall accuracy;
    remaining ties go to the lowest thresholds. ``target`` is
    ``"demographic_parity"`` or ``"equalized_odds"``. Only scores are used,
    so a privately trained model stays private after this step.
    """
    scores = np.asarray(scores, dtype=float)
    if len(scores) != len(data):
        raise ValueError(f"got {len(scores)} scores for {len(data)} records")
    if target not in ("demographic_parity", "equalized_odds"):
        raise ValueError(f"unknown target {target!r}")
    grids, stats = {}, {}
    for g in fairness.GROUPS:
        m = data.groups == g
        if not m.any():
            raise EmptyGroup(f"group {g} has no records")
        grids[g] = _threshold_grid(scores[m])
        stats[g] = _rates_by_threshold(scores[m], data.labels[m], grids[g])

    (pp0, tp0, fp0, tn0, P0, N0), (pp1, tp1, fp1, tn1, P1, N1) = stats[0], stats[1]
    n0, n1 = P0 + N0, P1 + N1
    correct = (tp0 + tn0)[:, None] + (tp1 + tn1)[None, :]
    if target == "demographic_parity":
        gap = np.abs((pp0 / n0)[:, None] - (pp1 / n1)[None, :])
    else:
        if min(P0, N0, P1, N1) == 0:
            raise fairness.DegenerateLabels("equalized odds needs both labels in both groups")
        gap = np.maximum(
            np.abs((fp0 / N0)[:, None] - (fp1 / N1)[None, :]),
            np.abs((tp0 / P0)[:, None] - (tp1 / P1)[None, :]),
        )
    best_gap = gap.min()
    candidates = gap <= best_gap + 1e-12
    acc = np.where(candidates, correct, -1)
    i, j = np.unravel_index(int(np.argmax(acc)), acc.shape)
    return {0: float(grids[0][i]), 1: float(grids[1][j])}


def evaluate(model: Model, data: LabeledDataset, ledger: BudgetLedger | None = None, thresholds=None) -> EvalReport:
    """Per-group accuracy/FPR/TPR and both gaps at 0.5 (or the given per-group thresholds)."""
    pred = model.predict(data.features, thresholds, data.groups)
    conf = fairness.confusion_by_group(pred, data)
    report = EvalReport(
        accuracy={g: conf[g].accuracy for g in fairness.GROUPS},
        fpr={g: conf[g].fpr for g in fairness.GROUPS},
        tpr={g: conf[g].tpr for g in fairness.GROUPS},
        demographic_parity_gap=fairness.demographic_parity_gap(pred, data),
        equalized_odds_gap=fairness.equalized_odds_gap(pred, data),
        epsilon_spent=ledger.spent_epsilon if ledger is not None else 0.0,
        overall_accuracy=float(np.mean(pred == data.labels)),
        thresholds=dict(thresholds) if thresholds is not None else None,
    )
    return report


def run_variant(
    variant: str,
    train: LabeledDataset,
    test: LabeledDataset,
    config: TrainConfig,
    epsilon: float | None = None,
    fairness_lambda: float = 10.0,
) -> tuple[Model, EvalReport]:
    """Train one of :data:`VARIANTS` and evaluate it on ``test``.

    ``fair`` and ``dp_fair`` use ``fairness_lambda``; ``dp`` and ``dp_fair``
    train under ``epsilon`` (falling back to ``config.target_epsilon``)
    against a fresh ledger capped at exactly that budget. Noise is seeded
    from ``config.seed``, independently of batch order.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; choose from {', '.join(VARIANTS)}")
    lam = fairness_lambda if variant in ("fair", "dp_fair") else 0.0
    if variant in ("plain", "fair"):
        model = train_logistic(train, replace(config, fairness_lambda=lam, target_epsilon=None))
        return model, evaluate(model, test)
    eps = epsilon if epsilon is not None else config.target_epsilon
    if eps is None:
        raise ValueError(f"variant {variant!r} needs an epsilon")
    cfg = replace(config, fairness_lambda=lam, target_epsilon=eps)
    ledger = BudgetLedger.with_cap(eps, cfg.target_delta)
    noise_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    model, ledger = (train_dp_fair if lam > 0 else train_dp)(train, cfg, ledger, noise_rng)
    return model, evaluate(model, test, ledger)


def _split_seeds(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    train_ss, test_ss = np.random.SeedSequence([seed, 0]).spawn(2)
    return np.random.default_rng(train_ss), np.random.default_rng(test_ss)


def seed_sweep(
    spec: SyntheticSpec,
    config: TrainConfig,
    seeds: Iterable[int],
    variants: Sequence[str] = VARIANTS,
    epsilon: float = 1.0,
    fairness_lambda: float = 10.0,
) -> list[dict]:
    """Run each variant for each seed on a fresh train/test draw of ``spec``.

    Returns one row per (seed, variant) with the columns of
    :data:`SEED_SWEEP_HEADER` plus ``accuracy`` (overall test accuracy).
    """
    rows = []
    for seed in seeds:
        train_rng, test_rng = _split_seeds(seed)
        train, test = generate_synthetic(spec, train_rng), generate_synthetic(spec, test_rng)
        cfg = replace(config, seed=seed)
        for v in variants:
            _, rep = run_variant(v, train, test, cfg, epsilon, fairness_lambda)
            rows.append({
                "seed": seed,
                "variant": v,
                "epsilon": epsilon if v.startswith("dp") else math.inf,
                "acc0": rep.accuracy[0],
                "acc1": rep.accuracy[1],
                "fpr0": rep.fpr[0],
                "fpr1": rep.fpr[1],
                "dp_gap": rep.demographic_parity_gap,
                "eo_gap": rep.equalized_odds_gap,
                "accuracy": rep.overall_accuracy,
            })
    return rows


def seed_sweep_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SEED_SWEEP_HEADER)
    for r in rows:
        w.writerow([r["seed"], r["variant"]] + [format(float(r[k]), ".10g") for k in SEED_SWEEP_HEADER[2:]])
    return buf.getvalue()


@dataclass
class EmpiricalEvaluator:
    """Sweep evaluator backed by DP training on synthetic data.

    For a grid cell (epsilon, n) it draws ``n`` records with a ``p`` share
    in the minority group (base rates and geometry from ``spec``), trains
    the ``variant`` model for each of ``seeds`` seeds and returns the mean
    test accuracy and mean demographic-parity gap. Per-cell seeds derive
    from ``(master_seed, cell_index, k)``, so results do not depend on the
    order cells are evaluated in.
    """

    spec: SyntheticSpec = field(default_factory=SyntheticSpec)
    config: TrainConfig = field(default_factory=TrainConfig)
    p: float = 0.1
    seeds: int = 3
    variant: str = "dp"
    master_seed: int = 0
    fairness_lambda: float = 10.0

    def __call__(self, epsilon: float, n: int, cell_index: int) -> tuple[float, float]:
        n1 = max(1, int(round(n * self.p)))
        n0 = max(1, int(n) - n1)
        spec = replace(self.spec, n0=n0, n1=n1)
        accs, gaps = [], []
        for k in range(self.seeds):
            ss = np.random.SeedSequence([self.master_seed, cell_index, k])
            train_ss, test_ss, order_ss = ss.spawn(3)
            train = generate_synthetic(spec, np.random.default_rng(train_ss))
            test = generate_synthetic(spec, np.random.default_rng(test_ss))
            cfg = replace(self.config, seed=int(order_ss.generate_state(1)[0]))
            _, rep = run_variant(self.variant, train, test, cfg, epsilon, self.fairness_lambda)
            accs.append(rep.overall_accuracy)
            gaps.append(rep.demographic_parity_gap)
        return float(np.mean(accs)), float(np.mean(gaps))
