"""Inverse-CDF transforms from the unit interval to parameter marginals."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DomainError, InfiniteQuantileError

# Wichura (1988), algorithm AS 241 (PPND16): |error| ~ 1e-16 on (0, 1).
_A = (3.3871328727963666080e0, 1.3314166789178437745e2, 1.9715909503065514427e3,
      1.3731693765509461125e4, 4.5921953931549871457e4, 6.7265770927008700853e4,
      3.3430575583588128105e4, 2.5090809287301226727e3)
_B = (1.0, 4.2313330701600911252e1, 6.8718700749205790830e2, 5.3941960214247511077e3,
      2.1213794301586595867e4, 3.9307895800092710610e4, 2.8729085735721942674e4,
      5.2264952788528545610e3)
_C = (1.42343711074968357734e0, 4.63033784615654529590e0, 5.76949722146069140550e0,
      3.64784832476320460504e0, 1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4)
_D = (1.0, 2.05319162663775882187e0, 1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2, 5.47593808499534494600e-4,
      1.05075007164441684324e-9)
_E = (6.65790464350110377720e0, 5.46378491116411436990e0, 1.78482653991729133580e0,
      2.96560571828504891230e-1, 2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7)
_F = (1.0, 5.99832206555887937690e-1, 1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5, 1.42151175831644588870e-7,
      2.04426310338993978564e-15)


def _ratio(num, den, x):
    # coefficients are stored lowest degree first
    return np.polyval(num[::-1], x) / np.polyval(den[::-1], x)


def standard_normal_quantile(p):
    """Standard normal quantile (inverse CDF), element-wise."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0) | (p >= 1)) or np.any(np.isnan(p)):
        raise InfiniteQuantileError("normal quantile requires 0 < p < 1")
    q = p - 0.5
    out = np.empty_like(p)
    central = np.abs(q) <= 0.425
    if np.any(central):
        qc = q[central]
        out[central] = qc * _ratio(_A, _B, 0.180625 - qc * qc)
    tail = ~central
    if np.any(tail):
        qt = q[tail]
        r = np.sqrt(-np.log(np.where(qt < 0, p[tail], 1.0 - p[tail])))
        val = np.where(r <= 5.0, _ratio(_C, _D, r - 1.6), _ratio(_E, _F, r - 5.0))
        out[tail] = np.where(qt < 0, -val, val)
    return out if out.ndim else float(out)


def quantile_uniform(p, a: float, b: float):
    if not a < b:
        raise DomainError(f"uniform bounds need a < b, got ({a}, {b})")
    return a + np.asarray(p, dtype=float) * (b - a)


def quantile_normal(p, mean: float, sd: float):
    if not sd > 0:
        raise DomainError(f"normal sd must be positive, got {sd}")
    return mean + sd * standard_normal_quantile(p)


def quantile_discrete_uniform(p, lo: int, hi: int):
    if lo > hi:
        raise DomainError(f"discrete uniform bounds need lo <= hi, got ({lo}, {hi})")
    raw = np.floor(lo + np.asarray(p, dtype=float) * (hi - lo + 1))
    return np.minimum(raw, hi).astype(np.int64)


@dataclass(frozen=True)
class MarginalSpec:
    """Marginal distribution of one named parameter.

    ``kind`` is ``"uniform"`` (params ``a, b``), ``"normal"`` (``mean, sd``) or
    ``"discrete_uniform"`` (``lo, hi``).
    """

    name: str
    kind: str
    params: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if self.kind == "uniform":
            a, b = self.params
            if not a < b:
                raise ConfigError(f"{self.name}: uniform needs a < b")
        elif self.kind == "normal":
            _, sd = self.params
            if not sd > 0:
                raise ConfigError(f"{self.name}: normal needs sd > 0")
        elif self.kind == "discrete_uniform":
            lo, hi = self.params
            if int(lo) != lo or int(hi) != hi or lo > hi:
                raise ConfigError(f"{self.name}: discrete_uniform needs integers lo <= hi")
        else:
            raise ConfigError(f"{self.name}: unknown distribution {self.kind!r}")

    def ppf(self, p):
        if self.kind == "uniform":
            return quantile_uniform(p, *self.params)
        if self.kind == "normal":
            return quantile_normal(p, *self.params)
        lo, hi = self.params
        return quantile_discrete_uniform(p, int(lo), int(hi))

    @classmethod
    def from_dict(cls, spec: Mapping) -> "MarginalSpec":
        """Parse ``{"name": "r", "dist": "normal", "mean": 1.7, "sd": 0.3}``."""
        try:
            name, dist = spec["name"], spec.get("dist", "uniform")
            if dist == "uniform":
                params = (spec.get("min", spec.get("a", 0.0)), spec.get("max", spec.get("b", 1.0)))
            elif dist == "normal":
                params = (spec["mean"], spec["sd"])
            elif dist in ("discrete_uniform", "du"):
                dist = "discrete_uniform"
                params = (spec["lo"], spec["hi"])
            else:
                raise ConfigError(f"{name}: unknown distribution {dist!r}")
        except KeyError as exc:
            raise ConfigError(f"marginal spec {dict(spec)!r} is missing {exc}") from None
        return cls(name, dist, tuple(float(x) for x in params))

    def to_dict(self) -> dict:
        keys = {"uniform": ("min", "max"), "normal": ("mean", "sd"),
                "discrete_uniform": ("lo", "hi")}[self.kind]
        return {"name": self.name, "dist": self.kind, **dict(zip(keys, self.params))}


def transform(values: np.ndarray, marginals: Sequence[MarginalSpec]) -> np.ndarray:
    """Apply one marginal per column; rows are never reordered."""
    values = np.asarray(values, dtype=float)
    if values.shape[1] != len(marginals):
        raise ConfigError(f"{len(marginals)} marginals for {values.shape[1]} columns")
    out = np.empty_like(values)
    for j, marginal in enumerate(marginals):
        out[:, j] = marginal.ppf(values[:, j])
    return out
