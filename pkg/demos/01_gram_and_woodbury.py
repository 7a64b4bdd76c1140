"""
Per-layer curvature without the p x p matrix
=============================================

A layer's empirical Fisher is J^T J / m, where row i of J is the flattened
outer product of the layer input and the output gradient of sample i. This
script builds that matrix explicitly, then shows the m x m Gram route gives
the same natural-gradient step.
"""

import numpy as np

from ngdlab import fisher, model, optim
from ngdlab.optim import OptimConfig

rng = np.random.default_rng(0)
net = model.init_network([6, 10, 3], "tanh", "categorical", seed=1)
X = rng.standard_normal((6, 8))
Y = model.one_hot(rng.integers(0, 3, 8), 3)

_, cache = model.forward(net, X)
grads = model.backward(net, cache, Y)

# %% the Gram matrix is a Hadamard product of two small Gram matrices
I, G = cache.inputs[0], cache.grads[0]
J = fisher.layer_jacobian_explicit(I, G)
print("J shape (m x p_l):", J.shape)
print("max |J J^T - (I^T I)*(G^T G)|:", np.abs(J @ J.T - fisher.gram_jacobian(I, G)).max())

# %% block NGD through an explicit solve vs TENGraD through the m x m system
cfg = OptimConfig(alpha=1.0, beta=0.1)
block = optim.block_ngd_update(net, grads, cache, cfg)
fast = optim.tengrad_update(net, grads, cache, cfg)
for l, (a, b) in enumerate(zip(fast, block)):
    print(f"layer {l}: max rel diff {np.max(np.abs(a - b)) / np.max(np.abs(b)):.2e}")

# %% memory: the explicit path stores p_l^2 numbers, the Gram path about 3 m^2
for method in ("exact_ngd", "block_ngd", "tengrad"):
    print(f"{method:>10}: {optim.optimizer_bytes(net, 8, method):>8} bytes")
