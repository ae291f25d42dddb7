"""Gram-matrix style statistics and normalized style distances.

The Gram matrix of an (H, W, C) activation tensor is the C x C matrix of
summed cross-channel co-activations. It discards spatial arrangement, which
makes it invariant to circular shifts and pixel permutations; the normalized
squared Frobenius distance between two Gram matrices is the style mismatch
used by the candidate-scoring regularizers.
"""

from __future__ import annotations

import numpy as np

from tacitdcf.features import LayerSpec


def gram(tensor: np.ndarray) -> np.ndarray:
    """Cross-channel co-activation sums: G[k, k'] = sum_ij x[i,j,k] x[i,j,k'].

    Symmetry is enforced exactly by computing the upper triangle once and
    mirroring it.
    """
    t = np.asarray(tensor, dtype=float)
    if t.ndim == 2:
        t = t[:, :, None]
    if t.ndim != 3:
        raise ValueError(f"tensor must be (H, W, C), got {t.shape}")
    if not np.all(np.isfinite(t)):
        raise ValueError("tensor contains non-finite values")
    flat = t.reshape(-1, t.shape[2])
    g = flat.T @ flat
    iu = np.triu_indices(g.shape[0], k=1)
    g[iu[1], iu[0]] = g[iu]
    return g


def style_distance(g_a: np.ndarray, g_b: np.ndarray, dims: LayerSpec) -> float:
    """Squared Frobenius distance between Gram matrices, scaled per layer
    by (2 * height * width * channels)^-2.
    """
    g_a = np.asarray(g_a, dtype=float)
    g_b = np.asarray(g_b, dtype=float)
    if g_a.shape != g_b.shape or g_a.ndim != 2 or g_a.shape[0] != g_a.shape[1]:
        raise ValueError(f"Gram shape mismatch: {g_a.shape} vs {g_b.shape}")
    if g_a.shape[0] != dims.channels:
        raise ValueError(
            f"Gram has {g_a.shape[0]} channels but layer spec says {dims.channels}"
        )
    norm = (2.0 * dims.height * dims.width * dims.channels) ** -2
    diff = g_a - g_b
    return float(np.sum(diff * diff)) * norm


def st_style_distance(g_t: np.ndarray, g_prev: np.ndarray, dims: LayerSpec) -> float:
    """Style distance between consecutive-frame Gram matrices.

    Same metric as `style_distance`; kept separate because it feeds a
    different regularizer (frame-to-frame style change rather than
    candidate-to-template mismatch).
    """
    return style_distance(g_t, g_prev, dims)


def gram_reference(tensor: np.ndarray) -> np.ndarray:
    """Naive triple-loop Gram computation (test oracle)."""
    t = np.asarray(tensor, dtype=float)
    h, w, c = t.shape
    g = np.zeros((c, c))
    for k in range(c):
        for k2 in range(c):
            acc = 0.0
            for i in range(h):
                for j in range(w):
                    acc += t[i, j, k] * t[i, j, k2]
            g[k, k2] = acc
    return g
