"""Per-layer correlation-filter learning.

Two learning paths share one filter representation:

  * `closed_form_update`: the online numerator/denominator running average
    with point-wise division (exact ridge solution for a single sample, the
    usual exponential-forgetting approximation for a stream);
  * `gauss_seidel_solve`: the mask-regularized batch problem
        min_f  sum_t alpha_t ||corr(f, x_t) - y||^2
               + lam_msk * sum_k ||w . f^k||^2
    solved in the Fourier domain. The pointwise spatial weighting w becomes
    a convolution over frequency bins; its DFT is truncated to a small
    symmetric support so the normal equations stay sparse, and the system is
    relaxed with Gauss-Seidel sweeps.

Also here: the spatial penalty constructor, the temporal response-change
penalty, and the full multi-layer objective breakdown that feeds the
adaptive weight cascade.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from pyamg.relaxation.relaxation import block_gauss_seidel as _block_gs_sweep
from pyamg.relaxation.relaxation import gauss_seidel as _gs_sweep

if TYPE_CHECKING:
    from tacitdcf.weights import LayerWeights

from tacitdcf.errors import NumericError
from tacitdcf.features import FeatureStack, LayerSpec
from tacitdcf.fourier import circular_correlate, dft2, idft2
from tacitdcf.style import gram, st_style_distance, style_distance


@dataclass
class SpatialPenalty:
    """Per-pixel filter penalty: minimal at the target center, growing
    quadratically with (wrapped) distance, saturating at w_max."""

    data: np.ndarray  # (height, width), values in [w_min, w_max]
    w_min: float
    w_max: float

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class RegularizationWeights:
    """Global regularizer strengths (the mask/style/temporal/st-style lambdas).

    Defaults are calibrated to the terms' natural magnitudes: style
    distances carry a (2*H*W*C)^-2 normalization that leaves them around
    1e-6..1e-4 on desk-scale feature grids, so their lambdas sit orders of
    magnitude above the temporal lambda, which scales a plain squared
    response difference of order 1.
    """

    mask: float = 0.1
    style: float = 500.0
    temporal: float = 0.05
    st_style: float = 200.0

    def __post_init__(self):
        for name in ("mask", "style", "temporal", "st_style"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"regularization weight {name} must be finite >= 0")


@dataclass
class FilterLayerState:
    """Fourier-domain filter for one layer plus its update accumulators."""

    spec: LayerSpec
    numerator: np.ndarray    # (H, W, C) complex, conj(label) * sample average
    denominator: np.ndarray  # (H, W) complex, channel-summed sample energy + lam
    filter: np.ndarray       # (H, W, C) complex
    label: np.ndarray        # (H, W) complex label spectrum

    @classmethod
    def empty(cls, spec: LayerSpec, label_spectrum: np.ndarray) -> "FilterLayerState":
        shape = (spec.height, spec.width, spec.channels)
        return cls(
            spec=spec,
            numerator=np.zeros(shape, dtype=complex),
            denominator=np.zeros(shape[:2], dtype=complex),
            filter=np.zeros(shape, dtype=complex),
            label=np.asarray(label_spectrum, dtype=complex),
        )


@dataclass
class FilterBank:
    """All per-layer filter states plus the shared learning constants."""

    layers: dict[int, FilterLayerState]
    learning_rate: float
    lam: float

    def layer_ids(self) -> tuple[int, ...]:
        return tuple(self.layers.keys())


def make_spatial_penalty(
    width: int,
    height: int,
    target_size: tuple[float, float],
    w_min: float,
    w_max: float,
    saturation_scale: float = 3.0,
) -> SpatialPenalty:
    """Quadratic penalty bowl over the (wrapped) grid.

    Distance is measured elliptically in units of the target half-extent;
    the penalty reaches w_max at `saturation_scale` half-extents from the
    center and stays there.
    """
    if not (0 < w_min <= w_max):
        raise ValueError(f"need 0 < w_min <= w_max, got {w_min}, {w_max}")
    tw, th = target_size
    if tw <= 0 or th <= 0:
        raise ValueError(f"target size must be positive, got {target_size}")
    if saturation_scale <= 0:
        raise ValueError("saturation_scale must be positive")
    cx, cy = width // 2, height // 2
    xs = np.abs(np.arange(width, dtype=float) - cx)
    xs = np.minimum(xs, width - xs)
    ys = np.abs(np.arange(height, dtype=float) - cy)
    ys = np.minimum(ys, height - ys)
    nd2 = (xs[None, :] / (tw / 2.0)) ** 2 + (ys[:, None] / (th / 2.0)) ** 2
    profile = np.minimum(1.0, nd2 / (saturation_scale ** 2))
    data = w_min + (w_max - w_min) * profile
    return SpatialPenalty(data=data, w_min=w_min, w_max=w_max)


def closed_form_update(
    state: FilterLayerState,
    sample: np.ndarray,
    label: np.ndarray,
    gamma: float,
    lam: float,
) -> FilterLayerState:
    """One exponential-forgetting step of the numerator/denominator update.

    numerator^k   <- (1-g) numerator^k   + g * conj(label) * sample^k
    denominator   <- (1-g) denominator   + g * (sum_k |sample^k|^2 + lam)
    filter^k      <- numerator^k / denominator   (point-wise)
    """
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"learning rate must be in [0, 1], got {gamma}")
    sample = np.asarray(sample, dtype=complex)
    label = np.asarray(label, dtype=complex)
    if label.ndim == 3:
        label = label[:, :, 0]
    expected = (state.spec.height, state.spec.width, state.spec.channels)
    if sample.shape != expected:
        raise ValueError(f"sample shape {sample.shape} != layer shape {expected}")
    if label.shape != expected[:2]:
        raise ValueError(f"label shape {label.shape} != layer grid {expected[:2]}")
    if gamma == 0.0:
        return state
    num = (1 - gamma) * state.numerator + gamma * (np.conj(label)[:, :, None] * sample)
    den = (1 - gamma) * state.denominator + gamma * (
        np.sum(np.conj(sample) * sample, axis=2) + lam
    )
    filt = num / den[:, :, None]
    return replace(state, numerator=num, denominator=den, filter=filt, label=label)


def apply_filter(state: FilterLayerState, sample: np.ndarray) -> np.ndarray:
    """Correlation response of the layer's filter with a sample spectrum."""
    return circular_correlate(state.filter, sample)


def temporal_penalty_value(
    state: FilterLayerState, x_t: np.ndarray, x_prev: np.ndarray
) -> float:
    """||corr(f, x_t) - corr(f, x_prev)||^2 over the layer grid."""
    if np.asarray(x_t).shape != np.asarray(x_prev).shape:
        raise ValueError("sample spectra shapes differ")
    r_t = apply_filter(state, x_t)
    r_p = apply_filter(state, x_prev)
    diff = r_t - r_p
    return float(np.sum(diff * diff))


def truncate_penalty_spectrum(penalty: SpatialPenalty, max_coeffs: int) -> np.ndarray:
    """DFT of the penalty with all but the `max_coeffs` largest-magnitude
    coefficients zeroed. Selection is closed under the Hermitian mirror so
    the truncated operator still maps real-signal spectra to real-signal
    spectra."""
    what = np.fft.fft2(penalty.data)
    h, w = what.shape
    if max_coeffs >= what.size:
        return what
    order = np.argsort(np.abs(what).ravel())[::-1]
    keep = np.zeros(what.size, dtype=bool)
    for idx in order:
        if keep[idx]:
            continue
        qi, qj = divmod(int(idx), w)
        mirror = ((-qi) % h) * w + ((-qj) % w)
        keep[idx] = True
        keep[mirror] = True
        if int(keep.sum()) >= max_coeffs:
            break
    return np.where(keep.reshape(h, w), what, 0.0)


@dataclass
class GaussSeidelResult:
    state: FilterLayerState
    residuals: list[float]  # relative residual after each sweep
    converged: bool
    sweeps: int


def assemble_normal_system(
    samples: Sequence[tuple[np.ndarray, float]],
    label: np.ndarray,
    penalty_spectrum: np.ndarray,
    lam_msk: float,
) -> tuple[sp.csr_matrix, np.ndarray, tuple[int, int, int]]:
    """Build the Fourier-domain normal equations A u = b for the
    mask-regularized least squares, with unknowns u^k = conj(filter^k)
    ordered bin-major (index = bin * channels + k).

    The data term couples channels within a bin; the mask term couples each
    channel across bins through convolution with conj(penalty_spectrum),
    scaled by lam_msk / (H*W)^2.
    """
    first = np.asarray(samples[0][0])
    h, w, c = first.shape
    mn = h * w
    n = mn * c
    label = np.asarray(label, dtype=complex)
    if label.ndim == 3:
        label = label[:, :, 0]

    # per-bin channel blocks D[b] = sum_t alpha_t conj(x_t[b]) x_t[b]^T
    dblocks = np.zeros((mn, c, c), dtype=complex)
    bvec = np.zeros(n, dtype=complex)
    yflat = label.reshape(mn)
    for xhat, alpha in samples:
        xf = np.asarray(xhat, dtype=complex).reshape(mn, c)
        dblocks += alpha * (np.conj(xf)[:, :, None] * xf[:, None, :])
        bvec += (alpha * np.conj(xf) * yflat[:, None]).ravel()

    bins = np.arange(mn)
    rows, cols, vals = [], [], []
    for k in range(c):
        for k2 in range(c):
            rows.append(bins * c + k)
            cols.append(bins * c + k2)
            vals.append(dblocks[:, k, k2])
    data_mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )

    a_mat = data_mat
    if lam_msk > 0:
        kern = np.conj(penalty_spectrum)
        qi, qj = np.nonzero(kern)
        bi, bj = divmod(bins, w)
        rws, cls, vls = [], [], []
        for a, b in zip(qi, qj):
            src = ((bi - a) % h) * w + ((bj - b) % w)
            rws.append(bins)
            cls.append(src)
            vls.append(np.full(mn, kern[a, b]))
        conv = sp.csr_matrix(
            (np.concatenate(vls), (np.concatenate(rws), np.concatenate(cls))),
            shape=(mn, mn),
        )
        reg = (conv.conj().T @ conv) * (lam_msk / mn ** 2)
        a_mat = (data_mat + sp.kron(reg, sp.eye(c), format="csr")).tocsr()
    return a_mat, bvec, (h, w, c)


def gauss_seidel_solve(
    samples: Sequence[tuple[np.ndarray, float]],
    label: np.ndarray,
    penalty: SpatialPenalty,
    lam_msk: float,
    max_iters: int = 50,
    tol: float = 1e-5,
    init: FilterLayerState | None = None,
    kernel_coeffs: int = 21,
) -> GaussSeidelResult:
    """Gauss-Seidel relaxation of the mask-regularized normal equations.

    Sweeps are block Gauss-Seidel over the per-bin channel blocks (plain
    point sweeps for single-channel layers): the data term makes those
    blocks nearly rank-one, which point relaxation resolves very slowly
    while a block solve handles them exactly.

    `samples` are (spectrum, weight) pairs with non-negative weights summing
    to 1. Returns the best iterate seen; `converged` is False when the
    relative residual never reached `tol` within `max_iters` sweeps.
    """
    if not samples:
        raise ValueError("need at least one sample")
    weights = np.array([a for _, a in samples], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("sample weights must be >= 0 and sum to 1")
    if lam_msk < 0:
        raise ValueError("lam_msk must be >= 0")

    pen_hat = truncate_penalty_spectrum(penalty, kernel_coeffs)
    a_mat, bvec, (h, w, c) = assemble_normal_system(samples, label, pen_hat, lam_msk)

    diag = a_mat.diagonal()
    if np.min(np.abs(diag)) < 1e-300:
        raise NumericError("singular system: zero diagonal in normal equations")

    label_arr = np.asarray(label, dtype=complex)
    if label_arr.ndim == 3:
        label_arr = label_arr[:, :, 0]
    if init is not None:
        u = np.conj(init.filter).reshape(-1).astype(complex)
        spec = init.spec
    else:
        u = np.zeros(h * w * c, dtype=complex)
        spec = LayerSpec(0, "solved", width=w, height=h, channels=c, stride=1)

    b_norm = float(np.linalg.norm(bvec))
    if b_norm == 0.0:
        raise NumericError("zero right-hand side: all samples or label are zero")

    def rel_residual(x: np.ndarray) -> float:
        return float(np.linalg.norm(bvec - a_mat @ x)) / b_norm

    if c > 1:
        a_sweep = a_mat.tobsr(blocksize=(c, c))
        run_sweep = lambda: _block_gs_sweep(
            a_sweep, u, bvec, iterations=1, sweep="forward", blocksize=c
        )
    else:
        run_sweep = lambda: _gs_sweep(a_mat, u, bvec, iterations=1, sweep="forward")

    residuals: list[float] = []
    best = u.copy()
    best_res = rel_residual(u)
    converged = best_res <= tol
    sweeps = 0
    while not converged and sweeps < max_iters:
        run_sweep()
        sweeps += 1
        res = rel_residual(u)
        residuals.append(res)
        if res <= best_res:
            best_res = res
            best = u.copy()
        if res <= tol:
            converged = True

    u_grid = best.reshape(h, w, c)
    fhat = np.conj(u_grid)
    # project back onto spectra of real filters (exact up to fp noise)
    fhat = 0.5 * (fhat + np.conj(fhat[(-np.arange(h)) % h][:, (-np.arange(w)) % w]))
    out_state = FilterLayerState(
        spec=spec,
        numerator=init.numerator.copy() if init is not None else np.zeros_like(fhat),
        denominator=init.denominator.copy() if init is not None
        else np.zeros((h, w), dtype=complex),
        filter=fhat,
        label=label_arr,
    )
    return GaussSeidelResult(
        state=out_state, residuals=residuals, converged=converged, sweeps=sweeps
    )


@dataclass
class ObjectiveBreakdown:
    """Per-layer values of every objective term, plus the weighted total.

    Raw (un-weighted) terms per layer: `data`, `mask`, `style`, `temporal`,
    `st_style`; the weighted total applies the per-layer importance weights
    and the global regularizer strengths.
    """

    layer_ids: tuple[int, ...]
    data: np.ndarray
    mask: np.ndarray
    style: np.ndarray
    temporal: np.ndarray
    st_style: np.ndarray
    total: float = field(default=0.0)

    def term(self, name: str) -> np.ndarray:
        return getattr(self, name)


def objective_value(
    bank: FilterBank,
    stack_t: FeatureStack,
    stack_prev: FeatureStack,
    template_grams: Mapping[int, np.ndarray],
    weights: "LayerWeights",
    reg: RegularizationWeights,
    penalties: Mapping[int, SpatialPenalty],
) -> ObjectiveBreakdown:
    """Evaluate every objective term on the current/previous feature stacks.

    Returns the per-layer raw terms and the weighted total
        sum_l a_l * data_l
        + lam_msk * sum_l b_l * mask_l + lam_sty * sum_l c_l * style_l
        + lam_tmp * sum_l d_l * temporal_l + lam_sts * sum_l e_l * st_style_l
    """
    ids = bank.layer_ids()
    if stack_t.layer_ids() != ids or stack_prev.layer_ids() != ids:
        raise ValueError(
            f"layer sets differ: bank {ids}, stacks {stack_t.layer_ids()} "
            f"/ {stack_prev.layer_ids()}"
        )
    n = len(ids)
    data = np.zeros(n)
    mask = np.zeros(n)
    sty = np.zeros(n)
    tmp = np.zeros(n)
    sts = np.zeros(n)
    for i, lid in enumerate(ids):
        state = bank.layers[lid]
        layer_t = stack_t.layer(lid)
        layer_p = stack_prev.layer(lid)
        x_t = dft2(layer_t.data)
        x_p = dft2(layer_p.data)

        resp = apply_filter(state, x_t)
        y = idft2(state.label)
        diff = resp - y
        data[i] = float(np.sum(diff * diff))

        f_spatial = idft2(state.filter, imag_tol=1e-6)
        wgrid = penalties[lid].data[:, :, None]
        mask[i] = float(np.sum((wgrid * f_spatial) ** 2))

        g_t = gram(layer_t.data)
        sty[i] = style_distance(g_t, template_grams[lid], layer_t.spec)
        tmp[i] = temporal_penalty_value(state, x_t, x_p)
        sts[i] = st_style_distance(g_t, gram(layer_p.data), layer_t.spec)

    total = float(
        np.dot(weights.data, data)
        + reg.mask * np.dot(weights.mask, mask)
        + reg.style * np.dot(weights.style, sty)
        + reg.temporal * np.dot(weights.temporal, tmp)
        + reg.st_style * np.dot(weights.st_style, sts)
    )
    return ObjectiveBreakdown(
        layer_ids=ids, data=data, mask=mask, style=sty,
        temporal=tmp, st_style=sts, total=total,
    )
