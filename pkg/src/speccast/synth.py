"""Synthetic series generators and the bundled benchmark dataset.

The bundled dataset is a seasonal-plus-AR(1) mix: the seasonal component is
exactly learnable by a linear patch model whose lookback covers the period,
so a truncated-lookback draft stays closely aligned with the full target.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the seasonal + AR(1) generator.

    The defaults give a strongly predictable series: both a full-lookback
    target and a truncated-lookback draft can fit it well, so their mean
    predictions stay aligned and the acceptance sweep actually saturates.
    """

    n_steps: int = 360_000
    n_channels: int = 2
    season_len: int = 256
    season_amp: float = 1.0
    ar_coeff: float = 0.9
    ar_std: float = 0.01
    obs_noise: float = 0.0
    seed: int = 2024
    n_harmonics: int = 3

    def generate(self) -> np.ndarray:
        return seasonal_ar(
            n_steps=self.n_steps,
            n_channels=self.n_channels,
            season_len=self.season_len,
            season_amp=self.season_amp,
            ar_coeff=self.ar_coeff,
            ar_std=self.ar_std,
            obs_noise=self.obs_noise,
            seed=self.seed,
            n_harmonics=self.n_harmonics,
        )

    def to_dict(self) -> dict:
        return {
            "n_steps": self.n_steps,
            "n_channels": self.n_channels,
            "season_len": self.season_len,
            "season_amp": self.season_amp,
            "ar_coeff": self.ar_coeff,
            "ar_std": self.ar_std,
            "obs_noise": self.obs_noise,
            "seed": self.seed,
            "n_harmonics": self.n_harmonics,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SyntheticSpec":
        return cls(**d)


DEFAULT_SPEC = SyntheticSpec()


def seasonal_profile(season_len: int, amp: float, n_harmonics: int, rng: np.random.Generator) -> np.ndarray:
    phase = rng.uniform(0, 2 * np.pi, n_harmonics)
    weights = rng.uniform(0.4, 1.0, n_harmonics)
    weights *= amp / np.sum(weights)
    t = np.arange(season_len)
    prof = np.zeros(season_len)
    for h in range(n_harmonics):
        prof += weights[h] * np.sin(2 * np.pi * (h + 1) * t / season_len + phase[h])
    return prof


def seasonal_ar(
    n_steps: int,
    n_channels: int = 2,
    season_len: int = 256,
    season_amp: float = 1.0,
    ar_coeff: float = 0.9,
    ar_std: float = 0.25,
    obs_noise: float = 0.0,
    seed: int = 0,
    n_harmonics: int = 3,
) -> np.ndarray:
    """Seasonal + AR(1) series, one independent profile per channel."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = np.empty((n_channels, n_steps))
    for ch in range(n_channels):
        prof = seasonal_profile(season_len, season_amp, n_harmonics, rng)
        season = np.tile(prof, n_steps // season_len + 1)[:n_steps]
        innov = rng.standard_normal(n_steps) * ar_std
        z = np.empty(n_steps)
        z[0] = innov[0] / np.sqrt(max(1.0 - ar_coeff ** 2, 1e-9))
        for t in range(1, n_steps):
            z[t] = ar_coeff * z[t - 1] + innov[t]
        x = season + z
        if obs_noise > 0:
            x = x + rng.standard_normal(n_steps) * obs_noise
        out[ch] = x
    return out


def pure_seasonal(n_steps: int, n_channels: int = 1, season_len: int = 64, seed: int = 0) -> np.ndarray:
    """Exactly periodic series: x_t = x_{t-season_len} with no noise."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = np.empty((n_channels, n_steps))
    for ch in range(n_channels):
        prof = seasonal_profile(season_len, 1.0, 3, rng)
        out[ch] = np.tile(prof, n_steps // season_len + 1)[:n_steps]
    return out


def ar1(n_steps: int, n_channels: int = 1, phi: float = 0.8, noise_std: float = 1.0, seed: int = 0) -> np.ndarray:
    """Plain AR(1) series per channel."""
    rng = np.random.Generator(np.random.Philox(key=seed))
    out = np.empty((n_channels, n_steps))
    for ch in range(n_channels):
        innov = rng.standard_normal(n_steps) * noise_std
        z = np.empty(n_steps)
        z[0] = innov[0] / np.sqrt(max(1.0 - phi ** 2, 1e-9))
        for t in range(1, n_steps):
            z[t] = phi * z[t - 1] + innov[t]
        out[ch] = z
    return out


def write_csv(path, values: np.ndarray, channel_names: list[str] | None = None, timestamps: bool = True) -> None:
    """Write a (C, L) matrix as a headered CSV, one row per timestep."""
    values = np.atleast_2d(np.asarray(values, dtype=np.float64))
    n_channels, n_steps = values.shape
    names = channel_names or [f"ch{i}" for i in range(n_channels)]
    if len(names) != n_channels:
        raise ValueError("channel_names length mismatch")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow((["t"] if timestamps else []) + names)
        for t in range(n_steps):
            row = ([str(t)] if timestamps else []) + [repr(float(v)) for v in values[:, t]]
            writer.writerow(row)
