"""
Checking the Fisher identities numerically
==========================================

The score has zero mean under the model, the Fisher equals minus the
expected Hessian of the log-likelihood, and it is also the Hessian of the
KL divergence at zero displacement. Each claim is checked by brute force.
"""

import numpy as np

from ngdlab import model, oracle

# %% a Bernoulli model: one logit, Fisher sigma(1 - sigma) = 0.25 at logit 0
coin = oracle.bernoulli_net(0.0)
x0 = np.zeros((1, 1))
mean, se = oracle.mc_score_expectation(coin, x0, 100_000, seed=1)
print("score mean / SE:", np.round(mean[3] / se[3], 2))

rep = oracle.kl_hessian_check(coin, x0)
print("KL Hessian vs Fisher at the logit:", rep.details["hessian"][3, 3], rep.details["fim"][3, 3])

# %% a tiny tanh network: Fisher + expected Hessian ~ 0
net = model.init_network([3, 4, 1], "tanh", "gaussian", seed=6)
rep = oracle.mc_fim_vs_hessian(net, np.random.default_rng(2).standard_normal((3, 4)), 50_000, seed=7)
print("Fisher vs -E[Hessian]:", "pass" if rep.passed else "fail", f"(largest |F+H| {rep.details['max_abs']:.3g})")

# %% the quadratic approximation of KL gets better by ~10x per decade of step size
t = np.zeros(4)
t[3] = 1.0
rep = oracle.kl_quadratic_check(oracle.bernoulli_net(0.8), x0, t)
for s, r in zip(rep.details["scales"], rep.details["ratios"]):
    print(f"step {s:g}: KL / quadratic = {r:.8f}")

# %% the full battery behind `ngdlab verify`
for r in oracle.run_battery(0):
    print(f"{r.name:<32} {'pass' if r.passed else 'FAIL'}")
