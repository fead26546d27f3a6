"""Gaussian probability kernel: densities, acceptance rule, overlap, residuals.

All density arithmetic is done in the log domain so that acceptance ratios
never underflow, even for far-out proposals. Heads are immutable value
objects; every operation is pure given an explicit RNG handle.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import ndtr, ndtri

VARIANCE_FLOOR = 1e-12

# Overlap evaluation methods.
CLOSED_FORM = "closed_form_equal_cov"
QUADRATURE_1D = "numeric_quadrature_1d"
MONTE_CARLO = "monte_carlo"

_LOG_2PI = math.log(2.0 * math.pi)


class VarianceFloorWarning(UserWarning):
    """A head was constructed with variance below the numerical floor."""


@dataclass(frozen=True)
class GaussianHead:
    """Per-step predictive density: independent Gaussian in each patch dim.

    ``variance`` holds one value per dimension; the isotropic case stores the
    same value broadcast to all dimensions. Entries are validated finite and
    strictly positive, and clamped (with a warning) at VARIANCE_FLOOR.
    """

    mean: np.ndarray
    variance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.atleast_1d(np.asarray(self.mean, dtype=np.float64))
        var = np.atleast_1d(np.asarray(self.variance, dtype=np.float64))
        if mean.ndim != 1 or var.ndim != 1:
            raise ValueError("mean and variance must be 1-d vectors")
        if var.shape == (1,) and mean.shape != (1,):
            var = np.full(mean.shape, var[0])
        if var.shape != mean.shape:
            raise ValueError(f"variance shape {var.shape} != mean shape {mean.shape}")
        if not np.all(np.isfinite(mean)):
            raise ValueError("head mean has non-finite entries")
        if not np.all(np.isfinite(var)):
            raise ValueError("head variance has non-finite entries")
        if np.any(var <= 0.0):
            raise ValueError("head variance entries must be strictly positive")
        if np.any(var < VARIANCE_FLOOR):
            warnings.warn(
                f"variance below {VARIANCE_FLOOR:g} clamped to the floor",
                VarianceFloorWarning,
                stacklevel=2,
            )
            var = np.maximum(var, VARIANCE_FLOOR)
        mean = mean.copy()
        var = var.copy()
        mean.flags.writeable = False
        var.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", var)
        # Cached pieces of the log normalizer.
        object.__setattr__(self, "_log_norm", float(np.sum(np.log(2.0 * np.pi * var))))

    @classmethod
    def isotropic(cls, mean, sigma: float) -> "GaussianHead":
        mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
        return cls(mean, np.full(mean.shape, float(sigma) ** 2))

    @property
    def d(self) -> int:
        return self.mean.shape[0]

    @property
    def is_isotropic(self) -> bool:
        return bool(np.all(self.variance == self.variance[0]))

    def sample(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        """Draw one sample (d,) or a batch (size, d)."""
        std = np.sqrt(self.variance)
        if size is None:
            return self.mean + std * rng.standard_normal(self.d)
        return self.mean + std * rng.standard_normal((size, self.d))

    def pdf(self) -> Callable[[np.ndarray], np.ndarray]:
        """Density callable for quadrature helpers (1-d heads)."""
        if self.d != 1:
            raise ValueError("pdf() callable is only provided for 1-d heads")
        mu = float(self.mean[0])
        var = float(self.variance[0])
        norm = 1.0 / math.sqrt(2.0 * math.pi * var)
        return lambda x: norm * np.exp(-((np.asarray(x) - mu) ** 2) / (2.0 * var))


def log_density(head: GaussianHead, x) -> float | np.ndarray:
    """Gaussian log-density of ``x`` (shape (..., d)) under ``head``.

    Never returns -inf for finite inputs because variances are strictly
    positive by construction.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (head.d,):
        raise ValueError(f"x has dimension {x.shape[-1:]}, head has d={head.d}")
    z2 = np.sum((x - head.mean) ** 2 / head.variance, axis=-1)
    out = -0.5 * (z2 + head._log_norm)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class AcceptanceDecision:
    """Outcome of the log-domain acceptance rule at one position."""

    log_ratio: float       # log p(x) - log q(x), nats
    alpha: float           # min(1, lambda * p/q)
    accepted: bool
    uniform_draw: float


def acceptance(
    p: GaussianHead,
    q: GaussianHead,
    x,
    tolerance_lambda: float = 1.0,
    *,
    uniform_draw: float,
) -> AcceptanceDecision:
    """Accept/reject a proposal ``x ~ q`` against target density ``p``.

    The ratio is computed as a difference of log densities, which reduces to
    the negative scaled squared-norm difference when the heads share a
    variance and otherwise automatically includes the log-variance term for
    unequal diagonal variances. ``tolerance_lambda`` multiplies the ratio
    (adds log lambda); lambda > 1 relaxes acceptance.
    """
    if not tolerance_lambda > 0.0:
        raise ValueError(f"tolerance_lambda must be > 0, got {tolerance_lambda}")
    if p.d != q.d:
        raise ValueError(f"head dimensions differ: p.d={p.d}, q.d={q.d}")
    if not 0.0 <= uniform_draw < 1.0:
        raise ValueError(f"uniform_draw must lie in [0, 1), got {uniform_draw}")
    log_ratio = log_density(p, x) - log_density(q, x)
    log_alpha = min(0.0, log_ratio + math.log(tolerance_lambda))
    alpha = math.exp(log_alpha)
    return AcceptanceDecision(
        log_ratio=float(log_ratio),
        alpha=alpha,
        accepted=bool(uniform_draw < alpha),
        uniform_draw=float(uniform_draw),
    )


@dataclass(frozen=True)
class OverlapResult:
    """Overlap mass beta = integral of min(p, q), with evaluation metadata."""

    beta: float
    method: str
    std_error: float = 0.0


def _require_equal_variance(p: GaussianHead, q: GaussianHead, what: str) -> None:
    if not np.allclose(p.variance, q.variance, rtol=1e-12, atol=0.0):
        raise ValueError(f"{what} requires equal variances")


def mahalanobis_gap(p: GaussianHead, q: GaussianHead) -> float:
    """Delta with Delta^2 = (mu_p - mu_q)^T Sigma^{-1} (mu_p - mu_q)."""
    _require_equal_variance(p, q, "mahalanobis gap")
    return float(np.sqrt(np.sum((p.mean - q.mean) ** 2 / p.variance)))


def overlap_closed_form(p: GaussianHead, q: GaussianHead) -> float:
    """Equal-covariance overlap 2*Phi(-Delta/2)."""
    delta = mahalanobis_gap(p, q)
    return float(2.0 * ndtr(-delta / 2.0))


def gap_for_overlap(beta: float) -> float:
    """Invert beta = 2*Phi(-Delta/2) for test fixtures."""
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie strictly in (0, 1)")
    return float(-2.0 * ndtri(beta / 2.0))


@dataclass(frozen=True)
class GridSpec:
    """1-d quadrature grid covering all relevant mass.

    Defaults to means +/- 8 max(sigma) with 2^14 base points; Gaussian tail
    mass beyond 8 sigma is below 1e-15.
    """

    lo: float
    hi: float
    points: int = 2 ** 14

    def __post_init__(self) -> None:
        if not self.hi > self.lo:
            raise ValueError("grid upper bound must exceed lower bound")
        if self.points < 16:
            raise ValueError("grid needs at least 16 points")

    @classmethod
    def for_heads(cls, *heads: GaussianHead, span: float = 8.0, points: int = 2 ** 14) -> "GridSpec":
        for h in heads:
            if h.d != 1:
                raise ValueError("GridSpec.for_heads expects 1-d heads")
        mus = [float(h.mean[0]) for h in heads]
        sig = max(float(np.sqrt(h.variance[0])) for h in heads)
        return cls(lo=min(mus) - span * sig, hi=max(mus) + span * sig, points=points)


def refined_trapezoid(
    fn: Callable[[np.ndarray], np.ndarray],
    grid: GridSpec,
    abs_tol: float,
    max_points: int = 2 ** 21,
) -> float:
    """Trapezoid rule with doubling refinement to the requested tolerance."""
    n = grid.points
    xs = np.linspace(grid.lo, grid.hi, n)
    prev = float(np.trapezoid(np.asarray(fn(xs), dtype=np.float64), xs))
    while n < max_points:
        n = 2 * n - 1
        xs = np.linspace(grid.lo, grid.hi, n)
        cur = float(np.trapezoid(np.asarray(fn(xs), dtype=np.float64), xs))
        if abs(cur - prev) <= abs_tol:
            return cur
        prev = cur
    return prev


def _check_grid_coverage(fn, grid: GridSpec, name: str) -> None:
    xs = np.linspace(grid.lo, grid.hi, grid.points)
    mass = float(np.trapezoid(np.asarray(fn(xs), dtype=np.float64), xs))
    if mass < 0.999:
        raise ValueError(
            f"grid [{grid.lo:g}, {grid.hi:g}] covers only {mass:.6f} of {name}; widen the grid"
        )


def overlap(
    p: GaussianHead,
    q: GaussianHead,
    method: str = CLOSED_FORM,
    mc_samples: int | None = None,
    rng: np.random.Generator | None = None,
) -> OverlapResult:
    """Overlap beta between two heads by the requested method.

    closed_form_equal_cov: 2*Phi(-Delta/2), exact for equal covariances.
    numeric_quadrature_1d: integral of min(p, q) to abs error <= 1e-8 (d=1).
    monte_carlo: X ~ q, average of min(1, p/q); unbiased, reports std error.
    """
    if p.d != q.d:
        raise ValueError("head dimensions differ")
    if method == CLOSED_FORM:
        return OverlapResult(beta=overlap_closed_form(p, q), method=method)
    if method == QUADRATURE_1D:
        if p.d != 1:
            raise ValueError("numeric_quadrature_1d requires d = 1")
        fp, fq = p.pdf(), q.pdf()
        grid = GridSpec.for_heads(p, q)
        beta = refined_trapezoid(lambda x: np.minimum(fp(x), fq(x)), grid, abs_tol=1e-8)
        return OverlapResult(beta=min(1.0, max(0.0, beta)), method=method)
    if method == MONTE_CARLO:
        if mc_samples is None or mc_samples < 2:
            raise ValueError("monte_carlo requires mc_samples >= 2")
        if rng is None:
            raise ValueError("monte_carlo requires an rng")
        xs = q.sample(rng, mc_samples)
        w = np.exp(np.minimum(0.0, log_density(p, xs) - log_density(q, xs)))
        beta = float(np.mean(w))
        se = float(np.std(w, ddof=1) / math.sqrt(mc_samples))
        return OverlapResult(beta=beta, method=method, std_error=se)
    raise ValueError(f"unknown overlap method {method!r}")


def _heads_numerically_identical(p: GaussianHead, q: GaussianHead) -> bool:
    if np.allclose(p.variance, q.variance, rtol=1e-12, atol=0.0):
        # Equal variances: use the closed-form overlap directly.
        return overlap_closed_form(p, q) >= 1.0 - 1e-12
    return False


def residual_sample(
    p: GaussianHead,
    q: GaussianHead,
    rng: np.random.Generator,
    max_draws: int = 10_000_000,
) -> tuple[np.ndarray, int]:
    """Sample the residual density r = (p - q)_+ / (1 - beta) by thinning.

    Draw Z ~ p and accept with probability (1 - q(Z)/p(Z))_+. The expected
    number of target draws per returned sample is 1/(1 - beta), which
    deteriorates as q approaches p; numerically identical heads are rejected
    up front because the residual is undefined and the cost unbounded.
    """
    if p.d != q.d:
        raise ValueError("head dimensions differ")
    if _heads_numerically_identical(p, q):
        raise ValueError("residual undefined / cost unbounded: heads are numerically identical")
    draws = 0
    chunk = 16
    while draws < max_draws:
        zs = p.sample(rng, chunk)
        t = log_density(q, zs) - log_density(p, zs)
        pi = np.where(t < 0.0, -np.expm1(np.minimum(t, 0.0)), 0.0)
        u = rng.random(chunk)
        hits = u < pi
        if hits.any():
            idx = int(np.argmax(hits))
            return zs[idx].copy(), draws + idx + 1
        draws += chunk
        chunk = min(2 * chunk, 1024)
    raise RuntimeError(f"residual sampler exhausted {max_draws} target draws; overlap too close to 1")


def tv_between_1d(
    density_a: Callable[[np.ndarray], np.ndarray],
    density_b: Callable[[np.ndarray], np.ndarray],
    grid: GridSpec,
) -> float:
    """Total variation (1/2) * integral |a - b| on a refined 1-d grid.

    Both densities must put at least 0.999 of their mass on the grid span,
    otherwise the result would silently undercount the distance.
    """
    _check_grid_coverage(density_a, grid, "density_a")
    _check_grid_coverage(density_b, grid, "density_b")
    val = refined_trapezoid(
        lambda x: np.abs(np.asarray(density_a(x)) - np.asarray(density_b(x))),
        grid,
        abs_tol=2e-6,
    )
    return 0.5 * val
