import numpy as np
import pytest

from passage_as2 import ndcore as nd

GRAD_RTOL = 1e-4
# true zeros (e.g. attention key biases, which softmax ignores) only show FD noise ~1e-11
GRAD_FLOOR = 1e-6


def rel_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), GRAD_FLOOR)


def check_gradients(loss_fn, params, n_per_tensor=20, seed=0, h=1e-5):
    """Compare backprop against central differences on random entries of each tensor.

    Returns the worst relative error and the number of entries checked.
    """
    for p in params:
        p.grad = None
    loss_fn().backward()
    analytic = {id(p): (np.zeros_like(p.data) if p.grad is None else p.grad.copy()) for p in params}
    rng = np.random.default_rng(seed)
    worst, checked = 0.0, 0
    for p in params:
        flat = rng.choice(p.data.size, size=min(n_per_tensor, p.data.size), replace=False)
        for f in flat:
            idx = np.unravel_index(f, p.shape)
            num = nd.numerical_gradient(lambda: loss_fn().item(), p.data, idx, h)
            worst = max(worst, rel_error(float(analytic[id(p)][idx]), num))
            checked += 1
    for p in params:
        p.grad = None
    return worst, checked


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
