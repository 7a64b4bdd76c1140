"""The ten acceptance criteria, each printing one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the summary lines
(they are also printed without ``-s``).
"""

import math
import time

import numpy as np
import pytest

from ngdlab import fisher, model, optim, oracle
from ngdlab.harness import bench, cli, data, training
from ngdlab.harness.training import RunConfig
from ngdlab.optim import OptimConfig

from conftest import random_problem, random_sizes


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n[acceptance {number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")
        assert passed, detail

    return emit


def _grads(net, X, Y):
    _, cache = model.forward(net, X)
    return model.backward(net, cache, Y), cache


def test_criterion_01_woodbury_exactness(report):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(200):
        beta = (1e-3, 1e-1, 1.0)[k % 3]
        head = "categorical" if k % 2 else "gaussian"
        sizes = random_sizes(rng, 3, 8, 2 if head == "categorical" else 1)
        net, X, Y = random_problem(rng, sizes, head=head, m=int(rng.integers(1, 17)))
        g, cache = _grads(net, X, Y)
        cfg = OptimConfig(alpha=1.0, beta=beta)
        for a, b in zip(optim.tengrad_update(net, g, cache, cfg), optim.block_ngd_update(net, g, cache, cfg)):
            # elementwise relative error; exact zeros are guarded by a floor far below any real entry
            floor = 1e-15 * np.max(np.abs(b))
            worst = max(worst, float(np.max(np.abs(a - b) / np.maximum(np.abs(b), max(floor, 1e-300)))))
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-8 and elapsed < 10, f"tengrad vs block NGD, 200 instances: max elementwise rel err {worst:.2e} (tol 1e-8), {elapsed:.2f}s")


def test_criterion_02_gram_identity(report):
    rng = np.random.default_rng(102)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        d_in, d_out, m = (int(v) for v in rng.integers(1, 12, size=3))
        I = np.vstack([rng.standard_normal((d_in, m)), np.ones((1, m))])
        G = rng.standard_normal((d_out, m))
        J = fisher.layer_jacobian_explicit(I, G)
        direct = J @ J.T
        worst = max(worst, float(np.max(np.abs(fisher.gram_jacobian(I, G) - direct)) / np.max(np.abs(direct))))
    elapsed = time.perf_counter() - t0
    report(2, worst <= 1e-12 and elapsed < 1, f"(I^T I)*(G^T G) vs J J^T, 100 instances: max rel err {worst:.2e} (tol 1e-12), {elapsed:.2f}s")


def test_criterion_03_gradient_correctness(report):
    rng = np.random.default_rng(103)
    t0 = time.perf_counter()
    worst = 0.0
    for k in range(50):
        head = "categorical" if k % 2 else "gaussian"
        sizes = random_sizes(rng, 3, 6, 2 if head == "categorical" else 1)
        net, X, Y = random_problem(rng, sizes, head=head, m=int(rng.integers(1, 9)))
        g = model.flatten_grads(_grads(net, X, Y)[0])[:, 0]
        work = net.copy()

        def loss(theta):
            model.set_params(work, theta)
            return model.loss_eval(model.forward(work, X)[0], Y, head)

        fd = oracle.finite_diff_gradient(loss, model.get_params(net))
        scale = max(np.max(np.abs(g)), np.max(np.abs(fd)), 1e-12)
        worst = max(worst, float(np.max(np.abs(g - fd)) / scale))
    elapsed = time.perf_counter() - t0
    report(3, worst <= 1e-6 and elapsed < 30, f"backprop vs central differences, 50 tanh nets: max rel err {worst:.2e} (tol 1e-6), {elapsed:.2f}s")


def test_criterion_04_identity_battery(report):
    t0 = time.perf_counter()
    reports = oracle.run_battery(0)
    elapsed = time.perf_counter() - t0
    kinds = {"score_mean", "fim_vs_hessian", "kl_hessian", "kl_quadratic"}
    covered = {k for k in kinds if any(r.name.startswith(k) for r in reports)}
    failed = [r.name for r in reports if not r.passed]
    ok = not failed and covered == kinds and elapsed < 300
    report(4, ok, f"{len(reports)} oracle checks, failed: {failed or 'none'}, {elapsed:.1f}s")


def test_criterion_05_one_step_exactness(report):
    rng = np.random.default_rng(105)
    t0 = time.perf_counter()
    n, d = 100, 4
    X = rng.standard_normal((d, n))
    Y = rng.standard_normal((1, d)) @ X + 0.3 + 0.1 * rng.standard_normal((1, n))
    Xa = np.vstack([X, np.ones((1, n))])
    W_ls = np.linalg.solve(Xa @ Xa.T, Xa @ Y.T)
    net = model.init_network([d, 1], "identity", "gaussian", seed=0)
    g, cache = _grads(net, X, Y)
    optim.exact_ngd_step(net, g, cache, OptimConfig(method="exact_ngd", alpha=1.0, beta=1e-8, fisher="model"))
    err = float(np.max(np.abs(net.layers[0].W - W_ls)) / np.max(np.abs(W_ls)))
    elapsed = time.perf_counter() - t0
    report(5, err <= 1e-6 and elapsed < 1, f"exact NGD one full-batch step vs normal equations: rel err {err:.2e} (tol 1e-6), {elapsed:.3f}s")


def _linreg():
    ds = data.make_synthetic("linreg_gaussian", 2048, 8, seed=0)
    return ds, data.least_squares_optimum(ds)[1]


@pytest.mark.slow
def test_criterion_06_convergence_ordering(report):
    ds, opt = _linreg()
    target = 1.1 * opt
    t0 = time.perf_counter()
    ten_cfg = RunConfig(optim=OptimConfig(method="tengrad", beta=1e-4, lr_decay=0.9), dataset=ds, batch_size=128, epochs=60)
    best, runs = training.grid_search_lr(ten_cfg, (0.01, 0.03, 0.1, 0.3))
    ten_epochs = training.epochs_to_reach(runs[best], target)

    # SGD gets a longer budget and its own schedule grid; the fastest reach counts
    sgd_budget = 200
    sgd_epochs = None
    for decay in (1.0, 0.95, 0.9):
        cfg = RunConfig(optim=OptimConfig(method="sgd", lr_decay=decay), dataset=ds, batch_size=128, epochs=sgd_budget)
        _, sgd_runs = training.grid_search_lr(cfg, (0.01, 0.03, 0.1, 0.3, 1.0))
        for recs in sgd_runs.values():
            e = training.epochs_to_reach(recs, target)
            if e is not None and (sgd_epochs is None or e < sgd_epochs):
                sgd_epochs = e
    elapsed = time.perf_counter() - t0
    sgd_needed = sgd_epochs if sgd_epochs is not None else sgd_budget + 1
    sgd_text = str(sgd_epochs) if sgd_epochs is not None else f">{sgd_budget}"
    ok = ten_epochs is not None and 3 * ten_epochs <= sgd_needed and elapsed < 120
    report(6, ok, f"epochs to 1.1x optimum: tengrad {ten_epochs} (alpha={best:g}), sgd {sgd_text}, {elapsed:.1f}s")


@pytest.mark.slow
def test_criterion_07_batch_sensitivity(report):
    ds, opt = _linreg()
    t0 = time.perf_counter()
    finals = {}
    for method, beta, alphas in (("tengrad", 1e-3, (0.003, 0.01, 0.02, 0.03)), ("sgd", 0.0, (0.01, 0.03, 0.1, 0.3, 1.0))):
        cfg = RunConfig(optim=OptimConfig(method=method, beta=beta), dataset=ds, epochs=60)
        for res in training.batch_sweep(cfg, (8, 1024), alphas):
            finals[method, res.batch_size] = res.final_loss / opt
    elapsed = time.perf_counter() - t0
    ten_ratio = finals["tengrad", 8] / finals["tengrad", 1024]
    sgd_ratio = finals["sgd", 8] / finals["sgd", 1024]
    ok = finals["tengrad", 8] > finals["tengrad", 1024] and sgd_ratio < ten_ratio and elapsed < 180
    report(
        7,
        ok,
        f"final/optimum tengrad m=8 {finals['tengrad', 8]:.3f} m=1024 {finals['tengrad', 1024]:.3f} (ratio {ten_ratio:.2f}); "
        f"sgd m=8 {finals['sgd', 8]:.3f} m=1024 {finals['sgd', 1024]:.3f} (ratio {sgd_ratio:.2f}), {elapsed:.1f}s",
    )


@pytest.mark.slow
def test_criterion_08_scaling(report):
    t0 = time.perf_counter()
    # width 20: p = 201 + 420 (depth - 1); depth 13 exceeds the 5000-parameter dense cap
    rows = bench.scaling_bench((1, 2, 3, 4, 6, 13), ("sgd", "exact_ngd", "tengrad"), width=20, warmup=5, timed=20)
    elapsed = time.perf_counter() - t0
    slopes = {m: bench.loglog_slope(rows, m) for m in ("sgd", "exact_ngd", "tengrad")}
    capped = [r for r in rows if r.method == "exact_ngd" and r.params > 5000]
    ok = (
        slopes["exact_ngd"] >= 2
        and slopes["tengrad"] <= 1.3
        and slopes["sgd"] <= 1.3
        and capped
        and all(r.status == "infeasible" for r in capped)
        and elapsed < 300
    )
    report(8, ok, "log-log slopes " + ", ".join(f"{m} {s:.2f}" for m, s in slopes.items())
           + f"; exact NGD at p={capped[0].params if capped else '?'}: {capped[0].status if capped else 'missing'}, {elapsed:.1f}s")


def test_criterion_09_large_damping(report):
    rng = np.random.default_rng(109)
    worst = 0.0
    for k in range(20):
        head = "categorical" if k % 2 else "gaussian"
        sizes = random_sizes(rng, 3, 8, 2 if head == "categorical" else 1)
        net, X, Y = random_problem(rng, sizes, head=head, m=int(rng.integers(1, 17)))
        g, cache = _grads(net, X, Y)
        step = -model.flatten_grads(optim.tengrad_update(net, g, cache, OptimConfig(alpha=1.0, beta=1e6)))[:, 0]
        neg_g = -model.flatten_grads(g)[:, 0]
        cos = step @ neg_g / (np.linalg.norm(step) * np.linalg.norm(neg_g))
        worst = max(worst, math.acos(min(1.0, max(-1.0, float(cos)))))
    report(9, worst <= 1e-3, f"angle between tengrad step (beta=1e6) and -g over 20 instances: max {worst:.2e} rad (tol 1e-3)")


RUN_FLAGS = ["--synthetic", "linreg_gaussian", "--n", "256", "--d", "4", "--batch-size", "32", "--epochs", "3", "--seed", "7"]
SUBCOMMANDS = {
    "train": ["train", *RUN_FLAGS, "--method", "tengrad"],
    "grid-search": ["grid-search", *RUN_FLAGS, "--method", "exact-ngd", "--alphas", "0.01,0.1"],
    "batch-sweep": ["batch-sweep", *RUN_FLAGS, "--method", "block-ngd", "--sizes", "8,64", "--alphas", "0.01,0.1"],
    "verify": ["verify", "--seed", "3"],
}


def _twice(tmp_path, name, argv):
    outs = []
    for k in range(2):
        path = tmp_path / f"{name}-{k}.csv"
        code = cli.main([*argv, "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    return outs


def test_criterion_10_determinism(report, tmp_path):
    identical = {}
    for name, argv in SUBCOMMANDS.items():
        a, b = _twice(tmp_path, name, argv)
        identical[name] = a == b and len(a) > 0
    report(10, all(identical.values()), "byte-identical CSVs: " + ", ".join(f"{k} {'yes' if v else 'NO'}" for k, v in identical.items()))


@pytest.mark.xfail(strict=True, reason="bench-scaling records wall-clock step times, which differ between invocations")
def test_criterion_10_determinism_bench_scaling(report, tmp_path):
    argv = ["bench-scaling", "--depths", "1,2", "--methods", "sgd,tengrad", "--width", "5", "--warmup", "1", "--timed-steps", "3"]
    a, b = _twice(tmp_path, "bench", argv)
    report(10, a == b, "byte-identical CSVs: bench-scaling " + ("yes" if a == b else "NO (timing columns differ run to run)"))
