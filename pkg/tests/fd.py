"""Finite-difference gradient oracle used across the test suite.

Central differences on the raw numpy buffers, kept deliberately independent
of the autodiff implementation it checks.
"""

import numpy as np


def numerical_gradient(loss_fn, arr: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of ``loss_fn()`` w.r.t. ``arr`` in place."""
    grad = np.zeros_like(arr)
    flat = arr.reshape(-1)
    gflat = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        lp = loss_fn()
        flat[i] = orig - step
        lm = loss_fn()
        flat[i] = orig
        gflat[i] = (lp - lm) / (2.0 * step)
    return grad


def max_rel_err(got: np.ndarray, want: np.ndarray, floor: float = 1e-12) -> float:
    """Norm-wise relative error: max|got - want| / max(max|want|, floor)."""
    got = np.asarray(got, dtype=np.float64)
    want = np.asarray(want, dtype=np.float64)
    return float(np.abs(got - want).max() / max(np.abs(want).max(), floor))


def assert_grads_close(loss_fn, tensors, rel_tol: float = 1e-4, step: float = 1e-4):
    """Check every tensor's reverse-mode grad against central differences.

    ``loss_fn()`` must rebuild the graph from the tensors' current ``.data``
    and return a scalar Tensor. Gradients are taken on a fresh backward pass.
    """
    for t in tensors:
        t.grad = None
    loss = loss_fn()
    loss.backward()
    for i, t in enumerate(tensors):
        assert t.grad is not None, f"tensor {i} got no gradient"
        num = numerical_gradient(lambda: loss_fn().item(), t.data, step=step)
        rel = max_rel_err(t.grad, num)
        assert rel < rel_tol, f"tensor {i}: rel err {rel:.3e} >= {rel_tol:.1e}"
