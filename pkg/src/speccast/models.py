"""Desk-scale autoregressive forecasters with Gaussian heads.

Targets and drafts share one model type. A draft is a reduced-capacity
ridge refit of the same data: ``scale`` < 1 truncates the lookback window,
which keeps the essential draft property (cheaper per pass, approximately
aligned mean) without any separate training pipeline.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .prob import GaussianHead
from .series import NormStats, PatchSeries

KIND_LINEAR = "linear_ar"
KIND_PERSISTENCE = "persistence"
KIND_ORACLE = "synthetic_oracle"

MODEL_FORMAT_VERSION = 1


class History:
    """Ring of the most recent ``lookback`` patches for one channel.

    Shorter histories are left-padded with the pad patch (train mean patch),
    so predictions stay finite from the first step.
    """

    def __init__(self, lookback: int, pad_patch: np.ndarray):
        if lookback < 1:
            raise ValueError("lookback must be >= 1")
        pad_patch = np.asarray(pad_patch, dtype=np.float64)
        self.lookback = lookback
        self.patch_len = pad_patch.shape[0]
        self._buf = np.tile(pad_patch, (lookback, 1))
        self.total_appended = 0

    @classmethod
    def from_patches(cls, patches: np.ndarray, lookback: int, pad_patch: np.ndarray | None = None) -> "History":
        patches = np.atleast_2d(np.asarray(patches, dtype=np.float64))
        pad = pad_patch if pad_patch is not None else np.zeros(patches.shape[1])
        h = cls(lookback, pad)
        m = min(lookback, patches.shape[0])
        if m:
            h._buf[lookback - m :] = patches[-m:]
        h.total_appended = patches.shape[0]
        return h

    def append(self, patch: np.ndarray) -> None:
        self._buf[:-1] = self._buf[1:]
        self._buf[-1] = patch
        self.total_appended += 1

    def extend(self, patches: np.ndarray, final: np.ndarray) -> None:
        """Append a block of patches plus one final patch in a single shift."""
        n = patches.shape[0] + 1
        if n >= self.lookback:
            stacked = np.vstack([patches, final[None]])
            self._buf[:] = stacked[-self.lookback :]
        else:
            self._buf[:-n] = self._buf[n:]
            self._buf[-n:-1] = patches
            self._buf[-1] = final
        self.total_appended += n

    def window(self, k: int | None = None) -> np.ndarray:
        """Most recent k patches, oldest first, shape (k, d)."""
        k = self.lookback if k is None else k
        if k > self.lookback:
            raise ValueError(f"requested window {k} exceeds history capacity {self.lookback}")
        return self._buf[self.lookback - k :].copy()

    def fill_window(self, out: np.ndarray) -> None:
        """Write the most recent len(out) patches into a caller buffer."""
        out[:] = self._buf[self.lookback - out.shape[0] :]

    def copy(self) -> "History":
        h = History.__new__(History)
        h.lookback = self.lookback
        h.patch_len = self.patch_len
        h._buf = self._buf.copy()
        h.total_appended = self.total_appended
        return h


@dataclass(frozen=True)
class ForecastModel:
    """Point forecaster plus isotropic Gaussian head of width sigma.

    mean_bias > 0 shifts the predicted mean by a fixed vector of that norm
    along the first patch coordinate (after standardization). It is a
    reproducible knob for degrading a draft's alignment with the target.
    """

    kind: str
    patch_len: int
    lookback: int
    sigma: float
    weights: np.ndarray | None = None     # (d, lookback*d), linear_ar only
    intercept: np.ndarray | None = None   # (d,)
    mean_bias: float = 0.0
    mean_patch: np.ndarray | None = None  # pad patch for short histories
    norm_stats: NormStats | None = None
    oracle_phi: float | None = None       # AR(1) coefficient, synthetic_oracle only
    seed: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_LINEAR, KIND_PERSISTENCE, KIND_ORACLE):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.kind == KIND_LINEAR:
            if self.weights is None or self.intercept is None:
                raise ValueError("linear_ar model requires weights and intercept")
            expected = (self.patch_len, self.lookback * self.patch_len)
            if self.weights.shape != expected:
                raise ValueError(f"weights shape {self.weights.shape} != {expected}")
        if self.kind == KIND_ORACLE and self.oracle_phi is None:
            raise ValueError("synthetic_oracle requires oracle_phi")

    @property
    def d(self) -> int:
        return self.patch_len

    @property
    def param_count(self) -> int:
        if self.kind == KIND_LINEAR:
            return self.weights.size + self.intercept.size
        return 0

    def with_knobs(self, sigma: float | None = None, mean_bias: float | None = None) -> "ForecastModel":
        changes = {}
        if sigma is not None:
            changes["sigma"] = float(sigma)
        if mean_bias is not None:
            changes["mean_bias"] = float(mean_bias)
        return dataclasses.replace(self, **changes) if changes else self

    def pad_patch(self) -> np.ndarray:
        return self.mean_patch if self.mean_patch is not None else np.zeros(self.d)

    def predict_means(self, windows: np.ndarray) -> np.ndarray:
        """Point forecasts for a batch of histories, shape (B, k, d) -> (B, d).

        Windows may carry more than ``lookback`` patches; only the most
        recent ones are consumed. This is the single batched evaluation the
        engine uses to validate all block prefixes in one pass.
        """
        windows = np.asarray(windows, dtype=np.float64)
        if windows.ndim != 3 or windows.shape[2] != self.d:
            raise ValueError(f"windows must have shape (B, k, {self.d})")
        if windows.shape[1] < self.lookback:
            raise ValueError(
                f"windows carry {windows.shape[1]} patches, model needs {self.lookback}"
            )
        recent = windows[:, windows.shape[1] - self.lookback :, :]
        if self.kind == KIND_PERSISTENCE:
            means = recent[:, -1, :].copy()
        elif self.kind == KIND_LINEAR:
            # Overlapping prefix views reshape to a strided matrix that BLAS
            # cannot consume; force a contiguous copy before the product.
            flat = np.ascontiguousarray(recent).reshape(windows.shape[0], self.lookback * self.d)
            means = flat @ self.weights.T + self.intercept
        else:  # synthetic_oracle: exact AR(1) conditional mean per step
            last = recent[:, -1, -1]
            powers = self.oracle_phi ** np.arange(1, self.d + 1)
            means = last[:, None] * powers[None, :]
        if self.mean_bias > 0.0:
            means = means.copy()
            means[:, 0] += self.mean_bias
        return means

    def mean_batch(self, windows: np.ndarray) -> np.ndarray:
        """predict_means without validation; engine hot path."""
        recent = windows if windows.shape[1] == self.lookback else windows[:, -self.lookback :, :]
        if self.kind == KIND_PERSISTENCE:
            means = recent[:, -1, :].copy()
        elif self.kind == KIND_LINEAR:
            flat = np.ascontiguousarray(recent).reshape(windows.shape[0], self.lookback * self.d)
            means = flat @ self.weights.T + self.intercept
        else:
            last = recent[:, -1, -1]
            means = last[:, None] * (self.oracle_phi ** np.arange(1, self.d + 1))[None, :]
        if self.mean_bias > 0.0:
            means[:, 0] += self.mean_bias
        return means

    def mean_one(self, window: np.ndarray) -> np.ndarray:
        """Point forecast for one (k, d) window; no validation (hot path)."""
        recent = window if window.shape[0] == self.lookback else window[-self.lookback :]
        if self.kind == KIND_PERSISTENCE:
            mean = recent[-1].copy()
        elif self.kind == KIND_LINEAR:
            mean = self.weights @ recent.reshape(-1) + self.intercept
        else:
            mean = recent[-1, -1] * self.oracle_phi ** np.arange(1, self.d + 1)
        if self.mean_bias > 0.0:
            mean[0] += self.mean_bias
        return mean

    def predict(self, history: History, sigma_override: float | None = None) -> GaussianHead:
        """Gaussian head for the next patch given a history."""
        mean = self.predict_means(history.window(self.lookback)[None, :, :])[0]
        sigma = self.sigma if sigma_override is None else float(sigma_override)
        return GaussianHead.isotropic(mean, sigma)


def effective_lookback(lookback: int, scale: float) -> int:
    """Capacity truncation rule: scale < 1 keeps the most recent patches."""
    if not 0.0 < scale <= 1.0:
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    return max(1, round(scale * lookback))


def fit_linear_ar(
    train: PatchSeries,
    lookback: int,
    ridge: float = 1e-3,
    scale: float = 1.0,
    seed: int | None = None,
    sample_stride: int = 1,
) -> ForecastModel:
    """Ridge-fit a linear next-patch predictor on pooled channel patches.

    Features are the concatenated ``k`` lookback patches (oldest first);
    the fit residual standard deviation becomes the default head sigma.
    Intercept is not regularized, so ridge -> inf drives the prediction to
    the train mean patch.
    """
    if not np.isfinite(ridge) or ridge < 0:
        raise ValueError("ridge must be finite and >= 0")
    k_eff = effective_lookback(lookback, scale)
    d = train.patch_len
    if train.n_patches < k_eff + 1:
        raise ValueError(
            f"need at least {k_eff + 1} patches per channel to fit, have {train.n_patches}"
        )

    windows = np.lib.stride_tricks.sliding_window_view(
        train.patches, (k_eff, d), axis=(1, 2)
    )  # (C, n-k_eff+1, 1, k_eff, d)
    features = windows[:, :-1, 0].reshape(-1, k_eff * d)[::sample_stride]
    targets = train.patches[:, k_eff:].reshape(-1, d)[::sample_stride]

    x_mean = features.mean(axis=0)
    y_mean = targets.mean(axis=0)
    xc = features - x_mean
    yc = targets - y_mean
    gram = xc.T @ xc
    gram[np.diag_indices_from(gram)] += ridge
    try:
        w = cho_solve(cho_factor(gram), xc.T @ yc).T  # (d, k_eff*d)
    except LinAlgError:
        if ridge == 0:
            raise ValueError(
                "singular normal equations with ridge = 0; refit with ridge > 0"
            ) from None
        raise
    intercept = y_mean - w @ x_mean
    resid = targets - (features @ w.T + intercept)
    sigma = float(np.sqrt(np.mean(resid ** 2)))
    w = np.ascontiguousarray(w)
    w.flags.writeable = False
    intercept.flags.writeable = False
    return ForecastModel(
        kind=KIND_LINEAR,
        patch_len=d,
        lookback=k_eff,
        sigma=max(sigma, 1e-6),
        weights=w,
        intercept=intercept,
        mean_patch=train.mean_patch(),
        norm_stats=train.norm_stats,
        seed=seed,
    )


def persistence_model(
    patch_len: int,
    sigma: float = 1.0,
    mean_bias: float = 0.0,
    norm_stats: NormStats | None = None,
) -> ForecastModel:
    """Mean = last observed patch; the simplest possible draft."""
    return ForecastModel(
        kind=KIND_PERSISTENCE,
        patch_len=patch_len,
        lookback=1,
        sigma=sigma,
        mean_bias=mean_bias,
        norm_stats=norm_stats,
    )


def oracle_ar1(patch_len: int, phi: float, sigma: float = 1.0) -> ForecastModel:
    """Exact conditional mean of a step-level AR(1) process (test fixture)."""
    return ForecastModel(
        kind=KIND_ORACLE,
        patch_len=patch_len,
        lookback=1,
        sigma=sigma,
        oracle_phi=float(phi),
    )


def save_model(model: ForecastModel, path) -> None:
    """Write a model as a single self-describing JSON document."""
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "patch_len": model.patch_len,
        "lookback": model.lookback,
        "sigma": model.sigma,
        "mean_bias": model.mean_bias,
        "param_count": model.param_count,
        "weights": None if model.weights is None else model.weights.reshape(-1).tolist(),
        "weights_shape": None if model.weights is None else list(model.weights.shape),
        "intercept": None if model.intercept is None else model.intercept.tolist(),
        "mean_patch": None if model.mean_patch is None else model.mean_patch.tolist(),
        "norm_stats": None if model.norm_stats is None else model.norm_stats.to_dict(),
        "oracle_phi": model.oracle_phi,
        "seed": model.seed,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ForecastModel:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported model format {doc.get('format_version')!r}")
    weights = None
    if doc["weights"] is not None:
        weights = np.asarray(doc["weights"], dtype=np.float64).reshape(doc["weights_shape"])
    return ForecastModel(
        kind=doc["kind"],
        patch_len=doc["patch_len"],
        lookback=doc["lookback"],
        sigma=doc["sigma"],
        weights=weights,
        intercept=None if doc["intercept"] is None else np.asarray(doc["intercept"]),
        mean_bias=doc["mean_bias"],
        mean_patch=None if doc["mean_patch"] is None else np.asarray(doc["mean_patch"]),
        norm_stats=None if doc["norm_stats"] is None else NormStats.from_dict(doc["norm_stats"]),
        oracle_phi=doc["oracle_phi"],
        seed=doc["seed"],
    )
