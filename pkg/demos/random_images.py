"""Random-image augmentation: LCG draws, teacher pseudo-labels, batch expansion.

Run: python3 demos/random_images.py
"""

import numpy as np

from tslearning.augment import AugmentConfig, LcgState, expand_batch, generate_random_images, lcg_draws
from tslearning.model import NetworkSpec, build_model, freeze, parse_layer

state = LcgState.seeded(42)
draws, state = lcg_draws(state, 5)
print("first five draws for seed 42:", [int(v) for v in draws])

images, state = generate_random_images(LcgState.seeded(42), 4, (3, 8, 8))
print(f"four 3x8x8 images: min {images.min():.4f}, max {images.max():.4f}, mean {images.mean():.4f}")

# An untrained frozen network stands in for a teacher here; only the shapes matter.
teacher = freeze(build_model(NetworkSpec((3, 8, 8), (parse_layer("flatten"), parse_layer("linear out=16"),
                                                     parse_layer("relu")), 16, 10), init_seed=0))
x = np.zeros((128, 3, 8, 8))
y = np.eye(10)[np.arange(128) % 10]
xe, ye, state = expand_batch(x, y, AugmentConfig(178, (3, 8, 8)), LcgState.seeded(0), teacher)
print(f"real batch 128 + random 178 -> {len(xe)} images")
print("pseudo-label counts on the random part:", np.bincount(ye[128:].argmax(axis=1), minlength=10).tolist())
