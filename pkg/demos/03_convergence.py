"""
SGD against natural gradient on a linear regression
===================================================

The synthetic problem has a closed-form optimum, so convergence is measured
in epochs to get within 10% of it. Each method gets its own learning rate
from a small grid.
"""

from ngdlab.harness import data, training
from ngdlab.harness.training import RunConfig
from ngdlab.optim import OptimConfig

ds = data.make_synthetic("linreg_gaussian", 2048, 8, seed=0)
_, optimum = data.least_squares_optimum(ds)
print(f"least-squares optimum: {optimum:.6f}")

setups = {
    "sgd": (OptimConfig(method="sgd"), (0.03, 0.1, 0.3)),
    "tengrad": (OptimConfig(method="tengrad", beta=1e-4, lr_decay=0.9), (0.01, 0.03, 0.1)),
}
for name, (opt, alphas) in setups.items():
    cfg = RunConfig(optim=opt, dataset=ds, batch_size=128, epochs=40)
    best, runs = training.grid_search_lr(cfg, alphas)
    curve = training.epoch_losses(runs[best]) / optimum
    reach = training.epochs_to_reach(runs[best], 1.1 * optimum)
    print(f"{name:>8}: alpha={best:g}  loss/optimum after 5, 20, 40 epochs = "
          f"{curve[4]:.3f}, {curve[19]:.3f}, {curve[-1]:.3f}  reached 1.1x at epoch {reach if reach else 'never'}")
