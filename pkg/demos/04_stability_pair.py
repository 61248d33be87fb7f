# Two training runs that differ in a single example.
#
# Run B trains on a copy of run A's data with one row redrawn. Both runs start
# from the same weights and see batches in the same order. delta_t is the
# distance between their parameters. term_a is the distance between their
# per-column inverse preconditioners.

# %%
import numpy as np

from adaact.config import DEFAULT_STABILITY_CONFIG, parse_config
from adaact.experiment import run_stability_pair

cfg = parse_config(DEFAULT_STABILITY_CONFIG)
records = run_stability_pair(cfg).records

for r in records[::50]:
    print(f"step {r.step:4d}  delta_t {r.delta_t:.5f}  term_a {r.term_a:.5f}")

# %%
# With identical datasets both series stay at exactly zero.
same = parse_config(DEFAULT_STABILITY_CONFIG, {"run.replace_index": None, "run.steps": 50})
twin = run_stability_pair(same).records
print("identical data, max delta_t:", max(r.delta_t for r in twin))

# %%
first = np.mean([r.term_a for r in records[:100]])
last = np.mean([r.term_a for r in records[-100:]])
print(f"term_a mean over the first 100 steps {first:.4f}, last 100 steps {last:.4f}")
