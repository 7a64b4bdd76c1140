"""
Per-step cost as the network deepens
====================================

Exact NGD inverts a p x p matrix, so its step time grows at least like p^2
(p^3 asymptotically). TENGraD only ever solves m x m systems per layer and
grows roughly linearly in p, like SGD.
"""

from ngdlab.harness import bench

rows = bench.scaling_bench((1, 2, 3, 4, 13), ("sgd", "exact_ngd", "tengrad"), width=20, warmup=2, timed=5)
for r in rows:
    print(f"{r.method:>10} p={r.params:<5} {r.status:>10} {r.median_step_ns / 1e6:9.2f} ms {r.optimizer_bytes / 2**20:8.2f} MiB")
for method in ("sgd", "exact_ngd", "tengrad"):
    print(f"{method}: log-log slope {bench.loglog_slope(rows, method):.2f}")
