"""Check the autodiff core against finite differences on a tiny CNN.

Run: python3 demos/gradient_check.py
"""

import numpy as np

from tslearning import autodiff as ad
from tslearning.model import NetworkSpec, build_model, forward, parse_layer

spec = NetworkSpec(
    (1, 6, 6),
    tuple(parse_layer(t) for t in ("conv2d out=2 kernel=3", "relu", "maxpool2d window=2", "flatten",
                                     "linear out=4", "relu")),
    feature_dim=4,
    num_classes=3,
)
model = build_model(spec, init_seed=0)
rng = np.random.default_rng(1)
x = rng.normal(size=(5, 1, 6, 6))
y = np.eye(3)[rng.integers(0, 3, size=5)]


def loss() -> ad.Tensor:
    return ad.cross_entropy_loss(forward(model, x)[1], y)


params = list(model.params.values())
ad.backward(loss(), params)

h = 1e-5
print(f"{'parameter':<20}{'max |analytic - numeric|':>28}")
for name, p in model.params.items():
    numeric = np.zeros_like(p.data)
    for idx in np.ndindex(p.data.shape):
        old = p.data[idx]
        p.data[idx] = old + h
        up = loss().item()
        p.data[idx] = old - h
        down = loss().item()
        p.data[idx] = old
        numeric[idx] = (up - down) / (2 * h)
    print(f"{name:<20}{np.abs(p.grad - numeric).max():>28.2e}")
