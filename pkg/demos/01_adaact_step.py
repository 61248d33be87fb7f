# A single AdaAct update, by hand and through the library.
#
# AdaAct keeps one scale per *input feature* of a layer. For a dense layer
# with parameters theta (out x in+1, bias last), the scale of column j comes
# from the running mean of the squared j-th input activation.

# %%
import numpy as np

from adaact import AdaActState, Hyperparams, adaact_step
from adaact.optim import activation_second_moment

rng = np.random.default_rng(0)

# a batch of 8 inputs with 3 features, plus the constant 1 for the bias
a = rng.standard_normal((8, 3)) * np.array([0.1, 1.0, 5.0])
a_tilde = np.hstack([a, np.ones((8, 1))])
stats = activation_second_moment(a_tilde)
print("second moment per column:", stats)

# %%
# Take one step with a gradient of all ones. Columns fed by large activations
# get a small step and columns fed by small activations a large one. The bias
# column has second moment exactly 1, so its step equals the learning rate.

theta = np.zeros((2, 4))
grad = np.ones_like(theta)
hp = Hyperparams(eta_max=0.1, weight_decay=0.0)
state = AdaActState.zeros_like([theta])
(theta,) = adaact_step(state, [theta], [grad], [stats], hp, eta=0.1)
print(theta)

# %%
# Both rows moved by the same amount in each column: every output neuron that
# reads feature j shares that feature's step size.
assert np.array_equal(theta[0], theta[1])
print("step per column:", -theta[0])
# the tiny gap in the first column is eps in the divisor
print("0.1 / sqrt(stats):", 0.1 / np.sqrt(stats))
