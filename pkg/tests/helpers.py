"""Shared test utilities: finite-difference gradient verification."""

import numpy as np
import torch


def fd_gradcheck(func, params, h=1e-4, rtol=1e-4, max_coords=12, seed=0):
    """Compare autograd gradients of func() against central differences.

    `func` must recompute the scalar loss from scratch using `params`
    (float64 leaf tensors with requires_grad). For each parameter a random
    subset of coordinates is perturbed by +/-h and the finite-difference
    slope is compared to autograd via a norm-ratio metric.
    """
    loss = func()
    grads = torch.autograd.grad(loss, params)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p, g in zip(params, grads):
        flat = p.data.reshape(-1)
        n = flat.numel()
        coords = np.arange(n) if n <= max_coords else rng.choice(n, size=max_coords, replace=False)
        fd = np.zeros(len(coords))
        ad = np.zeros(len(coords))
        for j, i in enumerate(coords):
            i = int(i)
            orig = flat[i].item()
            flat[i] = orig + h
            f_plus = func().detach().item()
            flat[i] = orig - h
            f_minus = func().detach().item()
            flat[i] = orig
            fd[j] = (f_plus - f_minus) / (2 * h)
            ad[j] = float(g.reshape(-1)[i])
        denom = max(np.linalg.norm(fd), np.linalg.norm(ad), 1e-12)
        err = np.linalg.norm(fd - ad) / denom
        worst = max(worst, err)
        assert err < rtol, (
            f"gradient mismatch on tensor of shape {tuple(p.shape)}: "
            f"rel err {err:.3e} >= {rtol:.1e}"
        )
    return worst
