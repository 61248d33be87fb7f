# Training a small MLP on Gaussian blobs with each optimizer.
#
# Four well-separated clusters in 20 dimensions. Each optimizer runs with its
# default hyperparameters and a cosine learning-rate schedule.

# %%
import time

import numpy as np

from adaact import init_network, make_optimizer, synthetic_blobs
from adaact.data import train_eval_split
from adaact.training import TrainingRun, accuracy

data = synthetic_blobs(classes=4, per_class=500, dims=20, spread=0.5, seed=7)
train, held = train_eval_split(data, 0.2, seed=0)
print(len(train), "training rows,", len(held), "held out")

# %%
epochs, batch = 30, 128
steps = epochs * int(np.ceil(len(train) / batch))

for kind in ("adaact", "sgd", "adam", "adamw"):
    net = init_network(["dense:64", "relu", "dense:64", "relu", "dense:4"], 0, (20,))
    opt = make_optimizer(kind, net.thetas, total_steps=steps)
    run = TrainingRun(net, opt, train, batch, seed=0, eval_set=held)
    start = time.perf_counter()
    records = run.run(epochs)
    print(f"{kind:7s} loss {records[-1].loss:.4f}  held-out acc {accuracy(net, held):.3f}  "
          f"({time.perf_counter() - start:.2f} s)")
