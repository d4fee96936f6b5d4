"""Shared test oracles.

The finite-difference checker lives here, outside the package, so the
gradient oracle can never share code with the tape it is checking.
"""

import numpy as np

from hierlabel import tensor as T


def central_differences(f, params, h=1e-5):
    """Central finite differences of a scalar-valued ``f()`` with respect to
    the ``data`` of each leaf tensor in ``params``.

    ``f`` must rebuild its graph from the current parameter values on every
    call; parameters are perturbed in place.
    """
    grads = []
    for p in params:
        flat = p.data.ravel()
        g = np.zeros(flat.size, dtype=np.float64)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = f()
            flat[i] = orig - h
            f_minus = f()
            flat[i] = orig
            g[i] = (f_plus - f_minus) / (2.0 * h)
        grads.append(g.reshape(p.data.shape))
    return grads


def rel_err(analytic, numeric):
    """Worst-case mixed relative/absolute error between gradient arrays."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    denom = np.maximum(np.abs(analytic), np.abs(numeric)) + 1e-4
    return float(np.max(np.abs(analytic - numeric) / denom))


def check_gradients(build_loss, params, h=1e-5, tol=1e-5):
    """Run the tape and the finite-difference oracle over ``params``.

    ``build_loss`` constructs the graph and returns the scalar loss tensor.
    Returns the worst relative error; asserts it is within ``tol``.
    """
    for p in params:
        p.zero_grad()
    loss = build_loss()
    T.backward(loss)
    analytic = [p.grad.copy() for p in params]

    numeric = central_differences(lambda: build_loss().item(), params, h=h)
    worst = max(rel_err(a, n) for a, n in zip(analytic, numeric))
    assert worst <= tol, f"gradient mismatch: worst rel err {worst:.3e} > {tol:g}"
    return worst
