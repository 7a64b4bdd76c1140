"""Per-step time and optimizer-memory scaling across network sizes."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from .. import optim
from ..errors import CapacityError
from ..fisher import DENSE_CAP
from ..model import backward, forward, init_network, loss_eval, param_count
from ..optim import OptimConfig, optimizer_bytes


@dataclass
class BenchRecord:
    method: str
    depth: int
    width: int
    params: int
    batch_size: int
    median_step_ns: int
    optimizer_bytes: int
    status: str = "ok"


def _time_steps(net, X, Y, cfg, warmup, timed) -> list[int]:
    times = []
    for k in range(warmup + timed):
        t0 = time.perf_counter_ns()
        pred, cache = forward(net, X)
        loss_eval(pred, Y, net.head)
        grads = backward(net, cache, Y)
        optim.step(net, grads, cache, cfg)
        if k >= warmup:
            times.append(time.perf_counter_ns() - t0)
    return times


def scaling_bench(
    depths: Sequence[int],
    methods: Sequence[str],
    width: int = 20,
    d_in: int = 8,
    batch_size: int = 128,
    warmup: int = 5,
    timed: int = 20,
    seed: int = 0,
    dense_cap: int = DENSE_CAP,
    beta: float = 1e-2,
    threads: int | None = 1,
) -> list[BenchRecord]:
    """Time full training steps for networks with ``depth`` hidden layers of ``width`` units.

    Steps run at a tiny learning rate so the curvature stays comparable
    across repetitions. Sizes beyond ``dense_cap`` for the dense-Fisher
    methods are reported as ``infeasible`` rows.
    """
    if timed < 1 or warmup < 0:
        raise ValueError("need at least one timed step")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((d_in, batch_size))
    Y = rng.standard_normal((1, batch_size))
    rows = []
    with threadpool_limits(limits=threads):
        for depth in depths:
            net0 = init_network([d_in] + [width] * depth + [1], "tanh", "gaussian", seed)
            p = param_count(net0)
            for method in methods:
                method = method.replace("-", "_")
                cfg = OptimConfig(alpha=1e-6, beta=beta, method=method, dense_cap=dense_cap)
                nbytes = optimizer_bytes(net0, batch_size, method)
                too_big = method == "exact_ngd" and p > dense_cap
                too_big = too_big or (method == "block_ngd" and max(l.W.size for l in net0.layers) > dense_cap)
                if too_big:
                    rows.append(BenchRecord(method, depth, width, p, batch_size, 0, nbytes, "infeasible"))
                    continue
                try:
                    times = _time_steps(net0.copy(), X, Y, cfg, warmup, timed)
                except CapacityError:
                    rows.append(BenchRecord(method, depth, width, p, batch_size, 0, nbytes, "infeasible"))
                    continue
                rows.append(BenchRecord(method, depth, width, p, batch_size, int(np.median(times)), nbytes))
    return rows


def loglog_slope(rows: Sequence[BenchRecord], method: str) -> float:
    """Least-squares slope of log(median step time) against log(parameter count)."""
    pts = [(r.params, r.median_step_ns) for r in rows if r.method == method and r.status == "ok"]
    if len(pts) < 2:
        raise ValueError(f"need at least two feasible points for {method}")
    p, t = np.log(np.array(pts, dtype=np.float64)).T
    return float(np.polyfit(p, t, 1)[0])
