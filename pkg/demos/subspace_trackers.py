"""GAN generator, Oja and GROUSE tracking the same spiked stream.

Run: python3 demos/subspace_trackers.py
"""

import math

import numpy as np

from subspace_lab.baselines import BaselineState, grouse_step, oja_step, run
from subspace_lab.gan import GanConfig, GanState, train
from subspace_lab.geometry import grassmann_distance, orthonormalize
from subspace_lab.model import SpikedModel, make_rng, sample, scaled_random_init

n, d, steps = 200, 2, 40_000
rng = make_rng(7)
truth = orthonormalize(rng.standard_normal((n, d)))
model = SpikedModel(truth, np.sqrt([3.0, 5.0]), noise_level=1.0)
start = orthonormalize(rng.standard_normal((n, d)))
print(f"initial distance: {grassmann_distance(truth, start):.3f} (orthogonal subspaces: {math.pi / 2 * math.sqrt(d):.3f})")

for name, step in (("oja", oja_step), ("grouse", grouse_step)):
    stream = (sample(model, rng)[0] for _ in range(steps))
    final = run(step, BaselineState(start), stream, tau=0.2 / n)
    print(f"{name:7s} after {steps} samples: {grassmann_distance(truth, final.basis):.3f}")

cfg = GanConfig(n, d, d, d, tau=0.2, tau_tilde=0.04, gen_noise=1.0, gen_cov_sqrt=np.sqrt([3.0, 5.0]))
state = GanState(scaled_random_init(n, d, 0.1, rng), orthonormalize(rng.standard_normal((n, d))))
final = train(state, model, cfg, steps, None, rng)
print(f"gan     after {steps} samples: {grassmann_distance(truth, final.generator):.3f}")
