"""Non-parametric bootstrap of sensitivity indices.

Base rows are resampled jointly: one index vector per replicate is applied
to every block, so each replicate is itself a valid design.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .distributions import standard_normal_quantile
from .errors import ConfigError, InsufficientReplicatesError

CI_TYPES = {"normal": "normal", "norm": "normal", "percentile": "percentile", "percent": "percentile"}


@dataclass(frozen=True)
class BootConfig:
    """Bootstrap settings.

    Parameters
    ----------
    R : int
        Number of replicates (>= 2).
    ci_type : {"normal", "percentile"}
    conf : float
        Confidence level in (0, 1).
    seed : int, optional
        Replicate ``r`` draws from the ``r``-th child of ``SeedSequence(seed)``,
        so results do not depend on how replicates are scheduled.
    """

    R: int = 1000
    ci_type: str = "normal"
    conf: float = 0.95
    seed: int | None = None

    def __post_init__(self):
        if int(self.R) < 2:
            raise InsufficientReplicatesError(f"bootstrap needs R >= 2, got {self.R}")
        if self.ci_type not in CI_TYPES:
            raise ConfigError(f"ci_type must be one of {sorted(CI_TYPES)}")
        if not 0 < self.conf < 1:
            raise ConfigError(f"conf must lie in (0, 1), got {self.conf}")
        object.__setattr__(self, "R", int(self.R))
        object.__setattr__(self, "ci_type", CI_TYPES[self.ci_type])


def resample_rows(n: int, boot: BootConfig):
    """Yield one array of ``n`` base-row indices per replicate."""
    for child in np.random.SeedSequence(boot.seed).spawn(boot.R):
        yield np.random.default_rng(child).integers(0, n, size=n)


def confidence_interval(original, replicates, boot: BootConfig):
    """Return ``(bias, std_error, low, high)`` arrays."""
    original = np.asarray(original, dtype=float)
    replicates = np.asarray(replicates, dtype=float)
    # identical replicates give exactly zero spread, free of rounding in the mean
    flat = np.ptp(replicates, axis=0) == 0
    mean = np.where(flat, replicates[0], replicates.mean(axis=0))
    bias = mean - original
    std_error = np.where(flat, 0.0, replicates.std(axis=0, ddof=1))
    if boot.ci_type == "normal":
        z = standard_normal_quantile((1 + boot.conf) / 2)
        centre = original - bias
        return bias, std_error, centre - z * std_error, centre + z * std_error
    alpha = (1 - boot.conf) / 2
    low, high = np.quantile(replicates, [alpha, 1 - alpha], axis=0)
    return bias, std_error, low, high


def bootstrap_statistics(blocks, statistic: Callable, boot: BootConfig, original=None,
                         observer: Callable | None = None) -> dict:
    """Bootstrap ``statistic`` over the base rows of ``blocks``.

    Parameters
    ----------
    blocks : BlockOutputs
        Outputs laid out one column per block.
    statistic : callable
        Maps a ``BlockOutputs`` to a vector of indices.
    boot : BootConfig
    original : array_like, optional
        Statistic on the full sample; computed if omitted.
    observer : callable, optional
        Called as ``observer(r, rows)`` with each replicate's row indices.

    Returns
    -------
    dict
        ``bias``, ``std.error``, ``low.ci``, ``high.ci`` and ``replicates``.
    """
    n = blocks.values.shape[0]
    if original is None:
        original = statistic(blocks)
    reps = np.empty((boot.R, len(original)))
    with np.errstate(divide="ignore", invalid="ignore"):
        for r, rows in enumerate(resample_rows(n, boot)):
            if observer is not None:
                observer(r, rows)
            try:
                reps[r] = statistic(blocks.resample(rows))
            except ArithmeticError:
                reps[r] = np.nan
            except ValueError:
                # a replicate with zero output variance has no defined index
                reps[r] = np.nan
    bias, se, low, high = confidence_interval(original, reps, boot)
    return {"bias": bias, "std.error": se, "low.ci": low, "high.ci": high, "replicates": reps}
