"""Pure numpy training backend: reference implementation of the epoch
kernel and the analytic gradients.

Works for any layer sizes.  The compiled backend in _kernel.pyx is a
specialization of exactly this arithmetic to the default 4-10-10-4 net;
both update the flat parameter vector in place with identical batch
semantics (mean-squared-error over batch elements, one Adam step per
mini-batch).
"""

from __future__ import annotations

import numpy as np

from .model import param_count, param_slices


def loss_and_grads(
    params: np.ndarray, layer_sizes, x: np.ndarray, y: np.ndarray
) -> tuple[float, np.ndarray]:
    """MSE loss and its gradient w.r.t. every parameter, on standardized
    data.  Loss is the mean over batch x output elements."""
    slices = param_slices(layer_sizes)
    layers = [
        (params[ws].reshape(n_in, n_out), params[bs])
        for (ws, bs), (n_in, n_out) in zip(slices, zip(layer_sizes, layer_sizes[1:]))
    ]
    # forward, keeping pre-activations
    acts = [x]
    pre = []
    z = x
    for w, b in layers[:-1]:
        zl = z @ w + b
        pre.append(zl)
        z = np.maximum(zl, 0.0)
        acts.append(z)
    w, b = layers[-1]
    out = z @ w + b

    r = out - y
    n_el = r.size
    loss = float((r * r).sum() / n_el)

    grads = np.zeros(param_count(layer_sizes))
    g = 2.0 * r / n_el
    for idx in range(len(layers) - 1, -1, -1):
        w, _ = layers[idx]
        ws, bs = slices[idx]
        grads[ws] = (acts[idx].T @ g).ravel()
        grads[bs] = g.sum(axis=0)
        if idx > 0:
            g = (g @ w.T) * (pre[idx - 1] > 0.0)
    return loss, grads


def run_epoch(
    params: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    x: np.ndarray,
    y: np.ndarray,
    order: np.ndarray,
    batch_size: int,
    layer_sizes,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
) -> tuple[float, int]:
    """One pass over the shuffled data with per-batch Adam updates.

    Returns the summed squared error of the epoch (pre-update forward
    passes) and the new Adam step count.
    """
    n = x.shape[0]
    sse = 0.0
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        loss, grads = loss_and_grads(params, layer_sizes, x[idx], y[idx])
        sse += loss * idx.size * layer_sizes[-1]
        t += 1
        m *= beta1
        m += (1.0 - beta1) * grads
        v *= beta2
        v += (1.0 - beta2) * grads * grads
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        params -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return sse, t
