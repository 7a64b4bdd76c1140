"""Training loops, learning-rate grid search and batch-size sweeps."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .. import optim
from ..errors import NGDLabError, NumericError, SearchError
from ..model import backward, forward, init_network, loss_eval
from ..optim import OptimConfig, lr_schedule, optimizer_bytes
from .data import Dataset, load_csv_dataset, make_synthetic, standardize

DEFAULT_ALPHAS = (1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1)
DIVERGENCE_FACTOR = 1e6


@dataclass
class TrainRecord:
    run_id: str
    method: str
    epoch: int
    step: int
    lr: float
    batch_size: int
    loss: float
    step_time_ns: int = 0
    optimizer_bytes: int = 0
    status: str = "ok"

    @property
    def log_loss(self) -> float | str:
        if self.loss > 0:
            return math.log(self.loss)
        if math.isnan(self.loss):
            return float("nan")
        return "-inf"


@dataclass
class RunConfig:
    optim: OptimConfig = field(default_factory=OptimConfig)
    hidden: tuple[int, ...] = (4,)
    activation: str = "tanh"
    batch_size: int = 128
    epochs: int = 10
    seed: int = 0
    dataset: Dataset | None = None
    dataset_path: str | None = None
    target: str | None = None
    task: str = "regression"
    synthetic: str | None = "linreg_gaussian"
    n: int = 2048
    d: int = 8
    standardize: bool = True
    record_time: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    @property
    def run_id(self) -> str:
        return f"{self.optim.method}-m{self.batch_size}-a{self.optim.alpha:g}-s{self.seed}"


def resolve_dataset(cfg: RunConfig) -> Dataset:
    if cfg.dataset is not None:
        return cfg.dataset
    if cfg.dataset_path is not None:
        if cfg.target is None:
            raise ValueError("a target column is required with a dataset path")
        ds = load_csv_dataset(cfg.dataset_path, cfg.target, cfg.task)
        return standardize(ds) if cfg.standardize else ds
    if cfg.synthetic is None:
        raise ValueError("no dataset configured")
    return make_synthetic(cfg.synthetic, cfg.n, cfg.d, cfg.seed)


def train_run(cfg: RunConfig, net=None) -> list[TrainRecord]:
    """Run ``epochs`` passes of seeded shuffled mini-batches and log every step.

    Divergence (non-finite loss, loss above 1e6 x the first loss, or a
    numeric failure inside a step) ends the run; the last record carries
    the status instead of an exception escaping.
    """
    ds = resolve_dataset(cfg)
    if cfg.batch_size > ds.n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {ds.n}")
    rng = np.random.default_rng(cfg.seed)
    if net is None:
        sizes = [ds.X.shape[0], *cfg.hidden, ds.Y.shape[0]]
        net = init_network(sizes, cfg.activation, ds.head, rng)
    method = cfg.optim.method
    m = cfg.batch_size
    run_id = cfg.run_id
    records: list[TrainRecord] = []
    first_loss = None
    step = 0
    for epoch in range(cfg.epochs):
        alpha = lr_schedule(cfg.optim, epoch)
        perm = rng.permutation(ds.n)
        for start in range(0, ds.n, m):
            idx = perm[start : start + m]
            nbytes = optimizer_bytes(net, idx.size, method)
            rec = TrainRecord(run_id, method, epoch, step, alpha, int(idx.size), float("nan"), optimizer_bytes=nbytes)
            records.append(rec)
            step += 1
            t0 = time.perf_counter_ns()
            try:
                pred, cache = forward(net, ds.X[:, idx])
                rec.loss = loss_eval(pred, ds.Y[:, idx], net.head)
                if first_loss is None:
                    first_loss = rec.loss
                if not math.isfinite(rec.loss) or rec.loss > DIVERGENCE_FACTOR * max(first_loss, 1e-300):
                    rec.status = "diverged"
                    return records
                grads = backward(net, cache, ds.Y[:, idx])
                optim.step(net, grads, cache, cfg.optim, alpha)
            except NumericError as exc:
                rec.status = "diverged"
                return records
            except NGDLabError as exc:
                rec.status = f"error: {exc}"
                return records
            if cfg.record_time:
                rec.step_time_ns = time.perf_counter_ns() - t0
    return records


def epoch_losses(records: Sequence[TrainRecord]) -> np.ndarray:
    """Mean batch loss per epoch (NaN for an epoch cut short by divergence is propagated)."""
    if not records:
        return np.array([])
    n_epochs = records[-1].epoch + 1
    sums = np.zeros(n_epochs)
    counts = np.zeros(n_epochs)
    for r in records:
        sums[r.epoch] += r.loss
        counts[r.epoch] += 1
    return sums / counts


def diverged(records: Sequence[TrainRecord]) -> bool:
    return bool(records) and records[-1].status != "ok"


def final_loss(records: Sequence[TrainRecord]) -> float:
    """Final-epoch mean batch loss; ``inf`` for a run that did not finish cleanly."""
    if not records or diverged(records):
        return math.inf
    return float(epoch_losses(records)[-1])


def epochs_to_reach(records: Sequence[TrainRecord], threshold: float) -> int | None:
    """Number of epochs until the epoch-mean loss first drops to ``threshold``."""
    if diverged(records):
        records = [r for r in records if r.epoch < records[-1].epoch]
    for k, loss in enumerate(epoch_losses(records)):
        if loss <= threshold:
            return k + 1
    return None


def _with_alpha(cfg: RunConfig, alpha: float) -> RunConfig:
    return replace(cfg, optim=replace(cfg.optim, alpha=alpha))


def grid_search_lr(cfg: RunConfig, alphas: Sequence[float] = DEFAULT_ALPHAS):
    """Train once per candidate with the same seed; return ``(best_alpha, {alpha: records})``.

    Best is the lowest final-epoch mean loss; ties go to the smaller alpha.
    """
    if not alphas:
        raise ValueError("no learning-rate candidates")
    results = {float(a): train_run(_with_alpha(cfg, float(a))) for a in alphas}
    finite = [(final_loss(rec), a) for a, rec in results.items() if math.isfinite(final_loss(rec))]
    if not finite:
        outcomes = ", ".join(f"{a:g}: {rec[-1].status if rec else 'empty'}" for a, rec in results.items())
        raise SearchError(f"every learning rate diverged ({outcomes})")
    best = min(finite)[1]
    return best, results


@dataclass
class SweepResult:
    batch_size: int
    alpha: float
    records: list[TrainRecord]

    @property
    def final_loss(self) -> float:
        return final_loss(self.records)


def batch_sweep(cfg: RunConfig, sizes: Sequence[int], alphas: Sequence[float] | None = None) -> list[SweepResult]:
    """One run per batch size; with ``alphas`` each size gets its own grid search."""
    out = []
    for m in sizes:
        sub = replace(cfg, batch_size=int(m))
        if alphas is None:
            out.append(SweepResult(int(m), cfg.optim.alpha, train_run(sub)))
        else:
            best, runs = grid_search_lr(sub, alphas)
            out.append(SweepResult(int(m), best, runs[best]))
    return out


def sweep_table(results: Sequence[SweepResult]) -> list[tuple[int, float, float]]:
    return [(r.batch_size, r.alpha, r.final_loss) for r in results]
