"""Shared fixtures and oracles for the test suite."""

import struct

import numpy as np

from adaer import nn


def write_idx_images(path, images):
    """Write a (n, rows, cols) uint8 array in IDX image format."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels, magic=0x00000801):
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", magic, len(labels)))
        f.write(labels.tobytes())


def central_diff_grads(params, X, y, h=1e-5):
    """Finite-difference oracle for the mean-batch-loss gradient."""
    grads = params.copy()
    for arr, out in zip(params.arrays(), grads.arrays()):
        flat_in = arr.ravel()
        flat_out = out.ravel()
        for i in range(flat_in.size):
            orig = flat_in[i]
            flat_in[i] = orig + h
            plus = nn.forward_loss(params, X, y).mean_loss
            flat_in[i] = orig - h
            minus = nn.forward_loss(params, X, y).mean_loss
            flat_in[i] = orig
            flat_out[i] = (plus - minus) / (2.0 * h)
    return grads


def max_relative_grad_error(analytic, numeric):
    """max over coordinates of |a - n| / max(1, |a|, |n|)."""
    worst = 0.0
    for a, n in zip(analytic.arrays(), numeric.arrays()):
        denom = np.maximum(1.0, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def random_small_net(rng, kink_margin=1e-3):
    """Random small network and batch, kept away from ReLU kinks.

    Finite differences are invalid within h of a kink, so batches whose
    hidden pre-activations sit closer than kink_margin are resampled.
    """
    d_in = int(rng.integers(2, 9))
    d_hid = int(rng.integers(2, 9))
    d_out = int(rng.integers(2, 9))
    batch = int(rng.integers(1, 9))
    params = nn.init_network(d_in, d_hid, d_out, seed=int(rng.integers(0, 2**31)))
    for arr in params.arrays():
        arr += rng.normal(0.0, 0.2, size=arr.shape)
    while True:
        X = rng.normal(0.0, 1.0, size=(batch, d_in))
        z1 = X @ params.w1 + params.b1
        if np.min(np.abs(z1)) > kink_margin:
            break
    y = rng.integers(0, d_out, size=batch)
    return params, X, y
