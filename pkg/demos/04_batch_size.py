"""
How batch size changes the picture
==================================

With few samples per step the empirical Fisher has rank at most m, and the
damped inverse amplifies noise in the remaining directions. TENGraD's final
loss therefore depends strongly on m; plain SGD much less so.
"""

from ngdlab.harness import data, training
from ngdlab.harness.training import RunConfig
from ngdlab.optim import OptimConfig

ds = data.make_synthetic("linreg_gaussian", 2048, 8, seed=0)
_, optimum = data.least_squares_optimum(ds)

for method, beta, alphas in (("tengrad", 1e-3, (0.003, 0.01, 0.02)), ("sgd", 0.0, (0.03, 0.3, 1.0))):
    cfg = RunConfig(optim=OptimConfig(method=method, beta=beta), dataset=ds, epochs=30)
    for m, alpha, loss in training.sweep_table(training.batch_sweep(cfg, (8, 32, 1024), alphas)):
        print(f"{method:>8} m={m:<5} alpha={alpha:<6g} final loss / optimum = {loss / optimum:.3f}")
