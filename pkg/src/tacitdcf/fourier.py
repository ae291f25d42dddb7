"""Real 2D tensors, per-channel 2D DFT, multichannel circular correlation,
and periodic Gaussian label synthesis.

Conventions (all downstream formulas assume them):
  * forward DFT is unnormalized, the inverse carries the 1/(width*height)
    factor (numpy's default);
  * tensors are (height, width) or (height, width, channels) arrays in
    row-major (y, x, k) order;
  * labels use wrapped (periodic) distance so that translating the label
    equals translating the correlation response exactly.
"""

from __future__ import annotations

import numpy as np

from tacitdcf.errors import NumericError

# relative imaginary residue tolerated when inverting a spectrum that is
# supposed to come from a real tensor
IMAG_RESIDUE_TOL = 1e-9


def _check_tensor(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim not in (2, 3):
        raise ValueError(f"{name} must be 2D or 3D, got shape {x.shape}")
    if x.size == 0:
        raise ValueError(f"{name} has a zero-sized dimension: {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite values")
    return x


def dft2(tensor: np.ndarray) -> np.ndarray:
    """Per-channel 2D DFT of a real (H, W[, C]) tensor."""
    tensor = _check_tensor(tensor, "tensor")
    return np.fft.fft2(tensor, axes=(0, 1))


def idft2(spectrum: np.ndarray, imag_tol: float = IMAG_RESIDUE_TOL) -> np.ndarray:
    """Inverse per-channel 2D DFT; the result must be real.

    Raises NumericError when the imaginary residue exceeds `imag_tol`
    relative to the real part, which means the spectrum was not (close to)
    Hermitian-symmetric.
    """
    spectrum = np.asarray(spectrum)
    if spectrum.ndim not in (2, 3) or spectrum.size == 0:
        raise ValueError(f"spectrum must be non-empty 2D or 3D, got {spectrum.shape}")
    out = np.fft.ifft2(spectrum, axes=(0, 1))
    scale = max(float(np.max(np.abs(out.real))), 1e-300)
    residue = float(np.max(np.abs(out.imag))) / scale
    if residue > imag_tol:
        raise NumericError(
            f"inverse transform has imaginary residue {residue:.3e} "
            f"(tolerance {imag_tol:.1e}); spectrum is not Hermitian"
        )
    return out.real


def circular_correlate(filter_spec: np.ndarray, feature_spec: np.ndarray) -> np.ndarray:
    """Multichannel circular correlation evaluated in the Fourier domain.

    Both arguments are (H, W, C) spectra; returns the real (H, W) response
    map  idft2( sum_k conj(filter^k) * feature^k ).
    """
    f = np.asarray(filter_spec)
    x = np.asarray(feature_spec)
    if f.ndim == 2:
        f = f[:, :, None]
    if x.ndim == 2:
        x = x[:, :, None]
    if f.shape != x.shape:
        raise ValueError(f"shape mismatch: filter {f.shape} vs features {x.shape}")
    acc = np.sum(np.conj(f) * x, axis=2)
    # product of two generic spectra has no Hermitian guarantee at fp level;
    # both inputs being spectra of real signals makes the residue negligible
    return np.fft.ifft2(acc).real


def gaussian_label(
    width: int, height: int, sigma: float, peak: tuple[float, float]
) -> np.ndarray:
    """Periodic Gaussian label, value exactly 1.0 at `peak` = (x, y).

    Distance is wrapped per axis, so the label is consistent with circular
    correlation: shifting the peak circularly shifts the whole map.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    px, py = peak
    if not (0 <= px < width and 0 <= py < height):
        raise ValueError(f"peak {peak} outside {width}x{height} grid")
    xs = np.arange(width, dtype=float)
    ys = np.arange(height, dtype=float)
    dx = np.abs(xs - px)
    dx = np.minimum(dx, width - dx)
    dy = np.abs(ys - py)
    dy = np.minimum(dy, height - dy)
    label = np.exp(-(dy[:, None] ** 2 + dx[None, :] ** 2) / (2.0 * sigma * sigma))
    return label[:, :, None]


def spatial_circular_correlate(filt: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Brute-force O(n^2) spatial-domain circular correlation (test oracle).

    response(p) = sum_k sum_q filt^k(q) * features^k((p + q) mod N)
    """
    filt = np.asarray(filt, dtype=float)
    features = np.asarray(features, dtype=float)
    if filt.ndim == 2:
        filt = filt[:, :, None]
    if features.ndim == 2:
        features = features[:, :, None]
    if filt.shape != features.shape:
        raise ValueError("shape mismatch")
    h, w, c = filt.shape
    out = np.zeros((h, w))
    for dy in range(h):
        for dx in range(w):
            shifted = np.roll(features, shift=(-dy, -dx), axis=(0, 1))
            out[dy, dx] = float(np.sum(filt * shifted))
    return out
