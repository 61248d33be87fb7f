# Hidden-layer activation variance of a small CNN under different optimizers.
#
# There is no image corpus bundled, so this writes procedurally drawn glyphs
# to IDX files and trains a LeNet-style network on them. The diagnostic is the
# centered variance of each hidden layer's inputs, averaged over steps.

# %%
import tempfile
from pathlib import Path

import numpy as np

from adaact.config import parse_config
from adaact.data import synthetic_glyphs, write_idx
from adaact.experiment import run_train, variance_report
from adaact.training import accuracy

root = Path(tempfile.mkdtemp())
images, labels = synthetic_glyphs(4000, seed=0)
write_idx(root / "images.idx", root / "labels.idx", images, labels)
print("glyph counts per class:", np.bincount(labels))

CONFIG = """
[dataset]
kind = "idx"
images = "images.idx"
labels = "labels.idx"
standardize = true

[model]
layers = ["conv:6:6:2:2", "relu", "conv:16:6:2:0", "relu", "flatten",
          "dense:120", "relu", "dense:84", "relu", "dense:10"]

[optim]
kind = "{kind}"

[run]
epochs = 3
batch_size = 128
eval_fraction = 0.2
seed = 0
"""

# %%
for kind in ("adaact", "adam", "sgd"):
    result = run_train(parse_config(CONFIG.format(kind=kind), base_dir=root))
    report = variance_report(result.records)
    run = result.runs[0]
    layers = " ".join(f"{v:.3f}" for v in report["layers"])
    print(f"{kind:7s} per-layer {layers}  mean {report['mean']:.3f}  "
          f"acc {accuracy(run.net, run.eval_set):.3f}")
