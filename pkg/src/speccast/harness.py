"""Experiment orchestration: splits, sweeps, cost measurement, calibration.

A sweep point is (variant, gamma, sigma, draft scale, bias, seed). For every
(sigma, seed) the harness also runs the target-only baseline on the same test
windows with the same per-window seeds, so measured speedups and accuracy
deltas compare like against like.

Wall-clock numbers are recorded but excluded from determinism digests: on a
fixed machine everything except timing must replay exactly.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .analysis import (
    COST_CONFIGURED,
    COST_MEASURED,
    AcceptanceEstimate,
    CostModel,
    PredictorReport,
    estimate_alpha,
)
from .engine import (
    VARIANT_DRAFT_ONLY,
    VARIANT_TARGET_ONLY,
    VARIANTS,
    DecodeConfig,
    decode,
)
from .models import ForecastModel, History, fit_linear_ar
from .series import CsvSchema, NormStats, PatchSeries, chronological_split, load_csv, metrics
from .synth import SyntheticSpec

TIMING_KEYS = {
    "cost",
    "s_wall_measured",
    "s_wall_meas",
    "s_wall_pred",
    "ops_factor_meas",
    "wall_seconds",
    "c",
    "c_hat",
    "target_pass_seconds",
    "draft_pass_seconds",
    "deltas",
}


@dataclass(frozen=True)
class DataSpec:
    """Either a CSV on disk or a synthetic generator."""

    csv_path: str | None = None
    channel_cols: tuple[str, ...] | None = None
    timestamp_col: str | None = None
    synthetic: SyntheticSpec | None = None

    def __post_init__(self) -> None:
        if (self.csv_path is None) == (self.synthetic is None):
            raise ValueError("DataSpec needs exactly one of csv_path or synthetic")

    @property
    def name(self) -> str:
        if self.csv_path is not None:
            stem = str(self.csv_path).rsplit("/", 1)[-1]
            return stem.rsplit(".", 1)[0]
        return f"synthetic-{self.synthetic.seed}"

    def load(self) -> np.ndarray:
        if self.csv_path is not None:
            return load_csv(self.csv_path, CsvSchema(self.channel_cols, self.timestamp_col))
        return self.synthetic.generate()

    def to_dict(self) -> dict:
        return {
            "csv_path": self.csv_path,
            "channel_cols": None if self.channel_cols is None else list(self.channel_cols),
            "timestamp_col": self.timestamp_col,
            "synthetic": None if self.synthetic is None else self.synthetic.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DataSpec":
        return cls(
            csv_path=d.get("csv_path"),
            channel_cols=None if d.get("channel_cols") is None else tuple(d["channel_cols"]),
            timestamp_col=d.get("timestamp_col"),
            synthetic=None if d.get("synthetic") is None else SyntheticSpec.from_dict(d["synthetic"]),
        )


@dataclass(frozen=True)
class ExperimentSpec:
    data: DataSpec
    patch_len: int
    lookback: int
    horizon_steps: int
    split: tuple[float, float, float] = (0.6, 0.2, 0.2)
    sigmas: tuple[float, ...] = (0.5,)
    gammas: tuple[int, ...] = (3,)
    variants: tuple[str, ...] = ("practical",)
    scales: tuple[float, ...] = (0.25,)
    biases: tuple[float, ...] = (0.0,)
    seeds: tuple[int, ...] = (0,)
    ridge: float = 1e-3
    tolerance_lambda: float = 1.0
    cost_c: float | None = None
    cost_c_hat: float | None = None
    n_alpha_histories: int = 512
    max_test_windows: int = 8
    timing_passes: int = 200
    fit_sample_stride: int = 1

    def __post_init__(self) -> None:
        if self.horizon_steps % self.patch_len != 0:
            raise ValueError(
                f"horizon_steps {self.horizon_steps} not divisible by patch_len {self.patch_len}"
            )
        for v in self.variants:
            if v not in VARIANTS:
                raise ValueError(f"unknown variant {v!r}")
        if not math.isclose(sum(self.split), 1.0):
            raise ValueError("split fractions must sum to 1")

    @property
    def horizon_patches(self) -> int:
        return self.horizon_steps // self.patch_len

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["data"] = self.data.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        d = dict(d)
        d["data"] = DataSpec.from_dict(d["data"])
        for key in ("split", "sigmas", "gammas", "variants", "scales", "biases", "seeds"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)


@dataclass
class RunResult:
    """One sweep point: accuracy, acceptance, run-length, and cost figures."""

    dataset: str
    variant: str
    gamma: int
    sigma: float
    scale: float
    bias: float
    seed: int
    mse: float
    mae: float
    n_windows: int
    horizon_patches: int
    alpha_hat_estimate: float | None = None    # held-out overlap estimate
    alpha_hat_empirical: float | None = None   # accepted / proposed, from traces
    mean_n: float | None = None
    mean_l: float | None = None
    s_wall_measured: float = 1.0
    wall_seconds: float = 0.0
    cost: CostModel | None = None
    alpha_estimate: AcceptanceEstimate | None = None
    report: PredictorReport | None = None

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "variant": self.variant,
            "gamma": self.gamma,
            "sigma": self.sigma,
            "scale": self.scale,
            "bias": self.bias,
            "seed": self.seed,
            "mse": self.mse,
            "mae": self.mae,
            "n_windows": self.n_windows,
            "horizon_patches": self.horizon_patches,
            "alpha_hat_estimate": self.alpha_hat_estimate,
            "alpha_hat_empirical": self.alpha_hat_empirical,
            "mean_n": self.mean_n,
            "mean_l": self.mean_l,
            "s_wall_measured": self.s_wall_measured,
            "wall_seconds": self.wall_seconds,
            "cost": None if self.cost is None else self.cost.to_dict(),
            "alpha_estimate": None if self.alpha_estimate is None else self.alpha_estimate.to_dict(),
            "report": None if self.report is None else self.report.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        d = dict(d)
        d["cost"] = None if d.get("cost") is None else CostModel.from_dict(d["cost"])
        d["alpha_estimate"] = (
            None if d.get("alpha_estimate") is None else AcceptanceEstimate(**d["alpha_estimate"])
        )
        d["report"] = None if d.get("report") is None else PredictorReport.from_dict(d["report"])
        return cls(**d)

    def determinism_digest(self) -> str:
        """Digest of all non-timing fields; identical across replays."""
        payload = _strip_timing(self.to_dict())
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


def _strip_timing(obj):
    if isinstance(obj, dict):
        return {k: _strip_timing(v) for k, v in sorted(obj.items()) if k not in TIMING_KEYS}
    if isinstance(obj, list):
        return [_strip_timing(v) for v in obj]
    return obj


def measure_cost_ratio(
    target: ForecastModel,
    draft: ForecastModel,
    window: np.ndarray,
    passes: int = 200,
    configured_c: float | None = None,
    configured_c_hat: float | None = None,
) -> CostModel:
    """Median per-forward wall-clock ratio on a fixed batch shape.

    Falls back to the configured c with a warning when the target pass is
    too fast for the timer (< 1 microsecond median).
    """
    if passes < 10:
        raise ValueError("need at least 10 timed passes")
    window = np.ascontiguousarray(np.asarray(window, dtype=np.float64))
    if window.ndim == 3:
        window = window[0]

    def _median_pass(model: ForecastModel) -> float:
        # Times the engine's per-forward primitive on the same batch shape
        # for both models.
        for _ in range(20):
            model.mean_one(window)
        samples = np.empty(passes)
        for i in range(passes):
            t0 = time.perf_counter_ns()
            model.mean_one(window)
            samples[i] = time.perf_counter_ns() - t0
        return float(np.median(samples)) * 1e-9

    target_s = _median_pass(target)
    draft_s = _median_pass(draft)
    if target.param_count > 0 and draft.param_count > 0:
        c_hat = draft.param_count / target.param_count
    else:
        c_hat = configured_c_hat if configured_c_hat is not None else max(draft_s / target_s, 1e-9)
    if target_s < 1e-6:
        warnings.warn(
            f"target pass medians {target_s * 1e9:.0f} ns; timer resolution inadequate, "
            "falling back to the configured cost ratio",
            stacklevel=2,
        )
        if configured_c is not None:
            return CostModel(
                c=configured_c,
                c_hat=configured_c_hat if configured_c_hat is not None else c_hat,
                source=COST_CONFIGURED,
                n_timed_passes=passes,
                target_pass_seconds=target_s,
                draft_pass_seconds=draft_s,
            )
    return CostModel(
        c=draft_s / target_s,
        c_hat=c_hat,
        source=COST_MEASURED,
        n_timed_passes=passes,
        target_pass_seconds=target_s,
        draft_pass_seconds=draft_s,
    )


@dataclass(frozen=True)
class TestWindow:
    channel: int
    context: np.ndarray  # (k_ctx, d)
    truth: np.ndarray    # (horizon_patches, d)


def build_test_windows(
    test: PatchSeries, k_ctx: int, horizon_patches: int, max_windows: int
) -> list[TestWindow]:
    """Disjoint context+horizon windows, evenly subsampled across channels."""
    windows: list[TestWindow] = []
    span = k_ctx + horizon_patches
    for ch in range(test.n_channels):
        patches = test.channel_patches(ch)
        start = 0
        while start + span <= patches.shape[0]:
            windows.append(
                TestWindow(
                    channel=ch,
                    context=patches[start : start + k_ctx],
                    truth=patches[start + k_ctx : start + span],
                )
            )
            start += horizon_patches
    if not windows:
        raise ValueError(
            f"test split too short: need {span} patches per channel, have {test.n_patches}"
        )
    if len(windows) > max_windows:
        idx = np.linspace(0, len(windows) - 1, max_windows).round().astype(int)
        windows = [windows[i] for i in sorted(set(idx.tolist()))]
    return windows


def _alpha_pairs(
    target: ForecastModel,
    draft: ForecastModel,
    val: PatchSeries,
    k_ctx: int,
    sigma: float,
    bias: float,
    n_histories: int,
):
    """(p, q) heads at held-out histories, for the overlap estimator."""
    from .prob import GaussianHead

    contexts = []
    for ch in range(val.n_channels):
        patches = val.channel_patches(ch)
        for start in range(0, patches.shape[0] - k_ctx, max(1, k_ctx // 4)):
            contexts.append(patches[start : start + k_ctx])
    if not contexts:
        raise ValueError("validation split too short for acceptance estimation")
    if len(contexts) > n_histories:
        idx = np.linspace(0, len(contexts) - 1, n_histories).round().astype(int)
        contexts = [contexts[i] for i in sorted(set(idx.tolist()))]
    stack = np.stack(contexts)
    biased_draft = draft.with_knobs(mean_bias=bias)
    mu_p = target.predict_means(stack)
    mu_q = biased_draft.predict_means(stack)
    var = np.full(target.d, sigma * sigma)
    return [(GaussianHead(mp, var), GaussianHead(mq, var)) for mp, mq in zip(mu_p, mu_q)]


def _decode_windows(
    target: ForecastModel,
    draft: ForecastModel | None,
    windows: list[TestWindow],
    cfg: DecodeConfig,
    run_seed: int,
    k_ctx: int,
):
    pad = target.pad_patch()
    forecasts = []
    traces = []
    # Untimed warmup: JIT compilation and allocator effects stay out of the
    # measured wall.
    warm = History.from_patches(windows[0].context, k_ctx, pad)
    decode(target, draft, warm, dataclasses.replace(cfg, seed=0))
    t0 = time.perf_counter()
    for w_idx, win in enumerate(windows):
        h0 = History.from_patches(win.context, k_ctx, pad)
        wcfg = dataclasses.replace(cfg, seed=rngmod.derive_seed(run_seed, w_idx))
        forecast, trace = decode(target, draft, h0, wcfg)
        forecasts.append(forecast)
        traces.append(trace)
    wall = time.perf_counter() - t0
    return np.stack(forecasts), traces, wall


def run_experiment(spec: ExperimentSpec) -> list[RunResult]:
    """Fit models, measure costs, estimate acceptance, decode the sweep.

    Returns one RunResult per sweep point, plus a target-only baseline row
    per (sigma, seed); rows are ordered by spec coordinates.
    """
    values = spec.data.load()
    train_vals, val_vals, test_vals = chronological_split(values, spec.split)
    stats = NormStats.from_values(train_vals)
    train = PatchSeries.from_values(train_vals, spec.patch_len, stats)
    val = PatchSeries.from_values(val_vals, spec.patch_len, stats)
    test = PatchSeries.from_values(test_vals, spec.patch_len, stats)

    target = fit_linear_ar(
        train, spec.lookback, spec.ridge, scale=1.0, sample_stride=spec.fit_sample_stride
    )
    drafts = {
        scale: fit_linear_ar(
            train, spec.lookback, spec.ridge, scale=scale, sample_stride=spec.fit_sample_stride
        )
        for scale in spec.scales
    }
    k_ctx = target.lookback
    windows = build_test_windows(test, k_ctx, spec.horizon_patches, spec.max_test_windows)
    timing_window = windows[0].context[None, :, :]

    costs = {
        scale: measure_cost_ratio(
            target,
            drafts[scale],
            timing_window,
            spec.timing_passes,
            spec.cost_c,
            spec.cost_c_hat,
        )
        for scale in spec.scales
    }
    alpha_estimates: dict[tuple[float, float, float], AcceptanceEstimate] = {}
    for scale in spec.scales:
        for sigma in spec.sigmas:
            for bias in spec.biases:
                pairs = _alpha_pairs(
                    target, drafts[scale], val, k_ctx, sigma, bias, spec.n_alpha_histories
                )
                alpha_estimates[(scale, sigma, bias)] = estimate_alpha(pairs)

    dataset = spec.data.name
    truth = np.stack([w.truth for w in windows])

    baselines: dict[tuple[float, int], tuple[float, dict]] = {}
    results: list[RunResult] = []
    for sigma in spec.sigmas:
        for seed in spec.seeds:
            cfg = DecodeConfig(
                variant=VARIANT_TARGET_ONLY,
                horizon_patches=spec.horizon_patches,
                seed=0,
                sigma_target=sigma,
            )
            forecasts, traces, wall = _decode_windows(target, None, windows, cfg, seed, k_ctx)
            m = metrics(forecasts, truth)
            baselines[(sigma, seed)] = (wall, m)
            results.append(
                RunResult(
                    dataset=dataset,
                    variant=VARIANT_TARGET_ONLY,
                    gamma=0,
                    sigma=sigma,
                    scale=1.0,
                    bias=0.0,
                    seed=seed,
                    mse=m["mse"],
                    mae=m["mae"],
                    n_windows=len(windows),
                    horizon_patches=spec.horizon_patches,
                    s_wall_measured=1.0,
                    wall_seconds=wall,
                )
            )

    for variant in spec.variants:
        if variant == VARIANT_TARGET_ONLY:
            continue  # baseline rows are always emitted above
        for gamma in spec.gammas:
            for sigma in spec.sigmas:
                for scale in spec.scales:
                    for bias in spec.biases:
                        for seed in spec.seeds:
                            results.append(
                                _run_point(
                                    spec, dataset, target, drafts[scale], windows, truth,
                                    costs[scale], alpha_estimates[(scale, sigma, bias)],
                                    variant, gamma, sigma, scale, bias, seed,
                                    baselines[(sigma, seed)], k_ctx,
                                )
                            )
    return results


def _run_point(
    spec, dataset, target, draft, windows, truth, cost, alpha_est,
    variant, gamma, sigma, scale, bias, seed, baseline, k_ctx,
) -> RunResult:
    cfg = DecodeConfig(
        variant=variant,
        horizon_patches=spec.horizon_patches,
        seed=0,
        gamma=max(1, gamma),
        tolerance_lambda=spec.tolerance_lambda,
        sigma_target=sigma,
        sigma_draft=sigma,
        draft_bias=bias,
    )
    forecasts, traces, wall = _decode_windows(target, draft, windows, cfg, seed, k_ctx)
    m = metrics(forecasts, truth)
    base_wall, _ = baseline
    s_meas = base_wall / wall if wall > 0 else float("nan")

    if variant == VARIANT_DRAFT_ONLY:
        return RunResult(
            dataset=dataset, variant=variant, gamma=0, sigma=sigma, scale=scale,
            bias=bias, seed=seed, mse=m["mse"], mae=m["mae"], n_windows=len(windows),
            horizon_patches=spec.horizon_patches, s_wall_measured=s_meas,
            wall_seconds=wall, cost=cost,
        )

    lengths = np.concatenate([t.round_lengths() for t in traces])
    accepted = np.concatenate([t.accepted_counts() for t in traces])
    proposals = sum(len(r.proposals) for t in traces for r in t.rounds)
    n_accepted = int(accepted.sum())
    report = PredictorReport.predict(alpha_est.alpha_bar_hat, gamma, cost)
    report.e_l_meas = float(lengths.mean())
    report.n_mean_meas = float(accepted.mean())
    report.s_wall_meas = s_meas
    total_target = sum(t.totals.target_passes for t in traces)
    total_draft = sum(t.totals.draft_passes for t in traces)
    total_patches = sum(t.totals.patches_emitted for t in traces)
    report.ops_factor_meas = (cost.c_hat * total_draft + total_target) / total_patches
    return RunResult(
        dataset=dataset,
        variant=variant,
        gamma=gamma,
        sigma=sigma,
        scale=scale,
        bias=bias,
        seed=seed,
        mse=m["mse"],
        mae=m["mae"],
        n_windows=len(windows),
        horizon_patches=spec.horizon_patches,
        alpha_hat_estimate=alpha_est.alpha_bar_hat,
        alpha_hat_empirical=n_accepted / proposals if proposals else None,
        mean_n=float(accepted.mean()),
        mean_l=float(lengths.mean()),
        s_wall_measured=s_meas,
        wall_seconds=wall,
        cost=cost,
        alpha_estimate=alpha_est,
        report=report,
    )


# ---------------------------------------------------------------------------
# Calibration and trade-off tables.
# ---------------------------------------------------------------------------


@dataclass
class CalibrationRow:
    dataset: str
    variant: str
    gamma: int
    sigma: float
    scale: float
    bias: float
    seed: int
    alpha_hat: float
    e_l_pred: float
    n_mean_meas: float
    l_mean_meas: float
    s_wall_pred: float
    s_wall_meas: float
    e_l_rel_gap: float
    s_wall_rel_gap: float
    flagged: bool

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationRow":
        return cls(**d)


@dataclass
class CalibrationTable:
    rows: list[CalibrationRow]
    flag_threshold: float

    @property
    def any_flagged(self) -> bool:
        return any(r.flagged for r in self.rows)

    def to_json(self) -> str:
        return json.dumps(
            {"flag_threshold": self.flag_threshold, "rows": [r.to_dict() for r in self.rows]},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "CalibrationTable":
        d = json.loads(text)
        return cls(
            rows=[CalibrationRow.from_dict(r) for r in d["rows"]],
            flag_threshold=d["flag_threshold"],
        )

    def render_text(self) -> str:
        header = (
            f"{'dataset':<18} {'variant':<10} {'g':>2} {'sigma':>6} {'scale':>5} {'bias':>5} "
            f"{'alpha^':>7} {'E[L]pred':>8} {'n-meas':>7} {'L-meas':>7} "
            f"{'S pred':>7} {'S meas':>7} {'flag':>5}"
        )
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.dataset:<18} {r.variant:<10} {r.gamma:>2d} {r.sigma:>6.3f} {r.scale:>5.2f} "
                f"{r.bias:>5.2f} {r.alpha_hat:>7.4f} {r.e_l_pred:>8.3f} {r.n_mean_meas:>7.3f} "
                f"{r.l_mean_meas:>7.3f} {r.s_wall_pred:>7.3f} {r.s_wall_meas:>7.3f} "
                f"{'YES' if r.flagged else '':>5}"
            )
        return "\n".join(lines)


def calibrate(results: list[RunResult], flag_threshold: float = 0.25) -> CalibrationTable:
    """Predicted-vs-measured table; flags rows with a large relative gap.

    Both the accepted-run mean (n) and the output-length mean (L) appear,
    since measured block statistics are reported under either convention.
    """
    rows = []
    for res in results:
        if res.report is None:
            continue
        r = res.report
        e_gap = abs(r.e_l_pred - r.e_l_meas) / r.e_l_pred if r.e_l_meas is not None else 0.0
        s_gap = (
            abs(r.s_wall_pred - r.s_wall_meas) / r.s_wall_pred
            if r.s_wall_meas is not None
            else 0.0
        )
        rows.append(
            CalibrationRow(
                dataset=res.dataset,
                variant=res.variant,
                gamma=res.gamma,
                sigma=res.sigma,
                scale=res.scale,
                bias=res.bias,
                seed=res.seed,
                alpha_hat=res.alpha_hat_estimate,
                e_l_pred=r.e_l_pred,
                n_mean_meas=r.n_mean_meas,
                l_mean_meas=r.e_l_meas,
                s_wall_pred=r.s_wall_pred,
                s_wall_meas=r.s_wall_meas,
                e_l_rel_gap=e_gap,
                s_wall_rel_gap=s_gap,
                flagged=bool(e_gap > flag_threshold or s_gap > flag_threshold),
            )
        )
    return CalibrationTable(rows=rows, flag_threshold=flag_threshold)


@dataclass
class TradeoffRow:
    dataset: str
    variant: str
    gamma: int
    sigma: float
    scale: float
    bias: float
    seed: int
    mse: float
    baseline_mse: float
    delta_mse_pct: float
    s_wall_measured: float

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def tradeoff_table(results: list[RunResult]) -> list[TradeoffRow]:
    """Accuracy-vs-speed rows relative to the matching target-only baseline."""
    baselines = {
        (r.dataset, r.sigma, r.seed): r
        for r in results
        if r.variant == VARIANT_TARGET_ONLY
    }
    rows = []
    for res in results:
        if res.variant == VARIANT_TARGET_ONLY:
            continue
        key = (res.dataset, res.sigma, res.seed)
        if key not in baselines:
            raise ValueError(f"missing target_only baseline for {key}")
        base = baselines[key]
        rows.append(
            TradeoffRow(
                dataset=res.dataset,
                variant=res.variant,
                gamma=res.gamma,
                sigma=res.sigma,
                scale=res.scale,
                bias=res.bias,
                seed=res.seed,
                mse=res.mse,
                baseline_mse=base.mse,
                delta_mse_pct=100.0 * (res.mse - base.mse) / base.mse,
                s_wall_measured=res.s_wall_measured,
            )
        )
    rows.sort(key=lambda r: r.s_wall_measured)
    return rows


def render_tradeoff(rows: list[TradeoffRow]) -> str:
    header = (
        f"{'dataset':<18} {'variant':<10} {'g':>2} {'sigma':>6} {'scale':>5} "
        f"{'MSE':>9} {'dMSE%':>7} {'S meas':>7}"
    )
    lines = [header, "-" * len(header)]
    for r in rows:
        lines.append(
            f"{r.dataset:<18} {r.variant:<10} {r.gamma:>2d} {r.sigma:>6.3f} {r.scale:>5.2f} "
            f"{r.mse:>9.4f} {r.delta_mse_pct:>7.2f} {r.s_wall_measured:>7.3f}"
        )
    return "\n".join(lines)


def render_results(results: list[RunResult]) -> str:
    header = (
        f"{'dataset':<18} {'variant':<11} {'g':>2} {'sigma':>6} {'scale':>5} {'bias':>5} "
        f"{'MSE':>9} {'MAE':>9} {'alpha^':>7} {'emp':>7} {'L-meas':>7} "
        f"{'c':>6} {'S pred':>7} {'S meas':>7}"
    )
    lines = [header, "-" * len(header)]
    for r in results:
        alpha = f"{r.alpha_hat_estimate:.4f}" if r.alpha_hat_estimate is not None else "--"
        emp = f"{r.alpha_hat_empirical:.4f}" if r.alpha_hat_empirical is not None else "--"
        mean_l = f"{r.mean_l:.3f}" if r.mean_l is not None else "--"
        c = f"{r.cost.c:.3f}" if r.cost is not None else "--"
        s_pred = f"{r.report.s_wall_pred:.3f}" if r.report is not None else "--"
        lines.append(
            f"{r.dataset:<18} {r.variant:<11} {r.gamma:>2d} {r.sigma:>6.3f} {r.scale:>5.2f} "
            f"{r.bias:>5.2f} {r.mse:>9.4f} {r.mae:>9.4f} {alpha:>7} {emp:>7} {mean_l:>7} "
            f"{c:>6} {s_pred:>7} {r.s_wall_measured:>7.3f}"
        )
    return "\n".join(lines)


def pick_saturation_sigma(
    results: list[RunResult],
    variant: str = "practical",
    threshold: float = 0.97,
) -> float:
    """Smallest sigma whose held-out acceptance estimate reaches saturation."""
    candidates = [
        (r.sigma, r.alpha_hat_estimate)
        for r in results
        if r.variant == variant and r.alpha_hat_estimate is not None
    ]
    if not candidates:
        raise ValueError("no rows with acceptance estimates")
    saturated = sorted(s for s, a in candidates if a >= threshold)
    if saturated:
        return saturated[0]
    return max(candidates, key=lambda t: t[1])[0]
