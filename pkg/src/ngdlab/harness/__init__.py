"""Experiment driver: data, training loops, sweeps, benchmarks and logs."""

from .bench import BenchRecord, loglog_slope, scaling_bench
from .data import Dataset, least_squares_optimum, load_csv_dataset, make_synthetic, standardize
from .logs import emit_bench, emit_logs, emit_verify
from .training import (
    DEFAULT_ALPHAS,
    RunConfig,
    SweepResult,
    TrainRecord,
    batch_sweep,
    epoch_losses,
    epochs_to_reach,
    final_loss,
    grid_search_lr,
    sweep_table,
    train_run,
)
