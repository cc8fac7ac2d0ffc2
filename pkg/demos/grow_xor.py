"""
Growing a network one unit at a time
====================================

XOR cannot be separated by a single line, so a two-unit ReLU network
usually falls short. Here we let the network grow: after each training
round a new hidden unit is wired in with a zero output weight, the old
units are frozen, and growth stops once an extra unit no longer lifts
validation accuracy by the threshold.
"""

import numpy as np

from incrnet import datapipe, growth, synthetic, traincore
from incrnet.datapipe import SplitSpec
from incrnet.growth import GrowthConfig

# Four noisy blobs, scaled to [-5, 5] and split 70/30.
ds, scaling = datapipe.normalize_range(synthetic.xor_dataset(2000, noise=0.1, seed=0), -5, 5)
parts = datapipe.stratified_split(ds, SplitSpec([("train", 0.7), ("valid", 0.3)], seed=0))

cfg = GrowthConfig()
net, trace = growth.grow_until_no_convergence(
    growth.fresh_subnet(2, cfg), parts["train"], parts["valid"], cfg
)

# %%
# Each step trained the newest unit plus the output; the last step was
# rejected and rolled back.
for step in trace.steps:
    print(f"units={step.units_total:2d}  acc={step.metric_after:.4f}  "
          f"epochs={step.epochs:3d}  {'kept' if step.accepted else 'rolled back'}")
print("stopped by", trace.stop_reason, "with", trace.final_units, "hidden units")

# %%
# A coarse look at the learned decision function, one character per cell.
xs = np.linspace(-1.5, 1.5, 25)
for y in xs[::-1]:
    row = scaling.transform(np.column_stack([xs, np.full_like(xs, y)]))
    print("".join("#" if p >= 0.5 else "." for p in traincore.predict(net, row)))
