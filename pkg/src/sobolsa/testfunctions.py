"""Benchmark models with known sensitivity structure.

All functions take an ``(N, k)`` array (a single row is also accepted) and
return an ``N``-vector.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .distributions import standard_normal_quantile
from .errors import ConfigError, DesignError, NoOracleError

SOBOL_G_A = (0.0, 1.0, 4.5, 9.0, 99.0, 99.0, 99.0, 99.0)
ISHIGAMI_A = 2.0
ISHIGAMI_B = 1.0


def _rows(x, k: int | None = None, name: str = "function") -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if k is not None and x.shape[1] != k:
        raise DesignError(f"{name} takes {k} inputs, got {x.shape[1]}")
    return x


def ishigami(x, a: float = ISHIGAMI_A, b: float = ISHIGAMI_B, rescale: bool = False) -> np.ndarray:
    """sin(x1) + a sin(x2)^2 + b x3^4 sin(x1) on (-pi, pi)^3.

    With ``rescale=True`` the inputs are unit-cube values mapped to (-pi, pi).
    """
    x = _rows(x, 3, "ishigami")
    if rescale:
        x = -np.pi + 2 * np.pi * x
    return np.sin(x[:, 0]) + a * np.sin(x[:, 1]) ** 2 + b * x[:, 2] ** 4 * np.sin(x[:, 0])


def sobol_g(x, a=SOBOL_G_A) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    x = _rows(x, a.size, "sobol_g")
    return np.prod((np.abs(4 * x - 2) + a) / (1 + a), axis=1)


def bratley1992(x) -> np.ndarray:
    """Alternating sum of leading products, sum_i (-1)^i prod_{j<=i} x_j."""
    x = _rows(x)
    signs = (-1.0) ** np.arange(1, x.shape[1] + 1)
    return np.cumprod(x, axis=1) @ signs


def bratley1988(x) -> np.ndarray:
    x = _rows(x)
    return np.prod(np.abs(4 * x - 2), axis=1)


@lru_cache(maxsize=1)
def oakley_coefficients() -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Bundled ``(a1, a2, a3, M)`` of the 15-input Oakley-O'Hagan function."""
    try:
        text = resources.files("sobolsa").joinpath("data/oakley2004.csv").read_text()
    except (FileNotFoundError, OSError) as exc:
        raise ConfigError(f"Oakley coefficient file is missing: {exc}") from None
    table = np.loadtxt(io.StringIO(text), delimiter=",", comments="#")
    if table.shape != (18, 15):
        raise ConfigError(f"Oakley coefficient file has shape {table.shape}, expected (18, 15)")
    return table[0], table[1], table[2], table[3:]


def oakley(x, rescale: bool = False) -> np.ndarray:
    """a1'x + a2'sin(x) + a3'cos(x) + x'Mx for standard normal inputs.

    With ``rescale=True`` unit-cube inputs are mapped through the normal
    quantile first.
    """
    x = _rows(x, 15, "oakley")
    if rescale:
        x = standard_normal_quantile(x)
    a1, a2, a3, m = oakley_coefficients()
    return x @ a1 + np.sin(x) @ a2 + np.cos(x) @ a3 + np.einsum("ni,ij,nj->n", x, m, x)


def polynomial_demo(x) -> np.ndarray:
    """3 x1^2 + 2 x1 x2 - 2 x3."""
    x = _rows(x, 3, "polynomial_demo")
    return 3 * x[:, 0] ** 2 + 2 * x[:, 0] * x[:, 1] - 2 * x[:, 2]


# --------------------------------------------------------------------------- #
# Metafunction                                                                #
# --------------------------------------------------------------------------- #

_E = np.e

# univariate family on [0, 1]
UNIVARIATE = {
    "linear": lambda x: x,
    "quadratic": lambda x: x**2,
    "cubic": lambda x: x**3,
    "exponential": lambda x: np.exp(x) / (_E - 1),
    "periodic": lambda x: np.sin(2 * np.pi * x) / 2,
    "discontinuous": lambda x: (x > 0.5).astype(float),
    "non-monotonic": lambda x: 4 * (x - 0.5) ** 2,
    "inverse": lambda x: 1 / ((10 - 1 / 1.1) * (x + 0.1)),
    "no-effect": lambda x: np.zeros_like(x),
    "trigonometric": lambda x: np.cos(x),
}
UNIVARIATE_NAMES = tuple(sorted(UNIVARIATE))


@dataclass(frozen=True)
class MetafunctionSpec:
    """One draw of the random metafunction.

    ``assignments[i]`` names the univariate function applied to input ``i``;
    ``pairs`` and ``triples`` are 0-based index tuples with coefficient
    vectors ``beta`` and ``gamma``.
    """

    k: int
    assignments: tuple[str, ...]
    pairs: tuple[tuple[int, int], ...]
    triples: tuple[tuple[int, int, int], ...]
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: tuple[float, ...]
    seed: int | None = None

    def __post_init__(self):
        if len(self.assignments) != self.k or len(self.alpha) != self.k:
            raise ConfigError("assignments and alpha need one entry per input")
        if len(self.beta) != len(self.pairs) or len(self.gamma) != len(self.triples):
            raise ConfigError("beta/gamma need one coefficient per pair/triple")
        unknown = set(self.assignments) - set(UNIVARIATE)
        if unknown:
            raise ConfigError(f"unknown univariate functions {sorted(unknown)}")
        for group in (*self.pairs, *self.triples):
            if len(set(group)) != len(group) or min(group) < 0 or max(group) >= self.k:
                raise ConfigError(f"interaction {group} must hold distinct indices in 0..{self.k - 1}")

    @classmethod
    def draw(cls, k: int, seed: int | None = None, pair_fraction: float = 0.5,
             triple_fraction: float = 0.2) -> "MetafunctionSpec":
        if k < 3:
            raise DesignError("the metafunction needs k >= 3 inputs")
        rng = np.random.default_rng(seed)
        assignments = tuple(UNIVARIATE_NAMES[i] for i in rng.integers(0, len(UNIVARIATE_NAMES), k))
        pairs = _distinct_groups(rng, k, 2, int(np.floor(pair_fraction * k)))
        triples = _distinct_groups(rng, k, 3, int(np.floor(triple_fraction * k)))
        return cls(k=k, assignments=assignments, pairs=pairs, triples=triples,
                   alpha=tuple(rng.standard_normal(k)), beta=tuple(rng.standard_normal(len(pairs))),
                   gamma=tuple(rng.standard_normal(len(triples))), seed=seed)

    def evaluate(self, x) -> np.ndarray:
        x = _rows(x, self.k, "metafunction")
        u = np.column_stack([UNIVARIATE[name](x[:, i]) for i, name in enumerate(self.assignments)])
        y = u @ np.asarray(self.alpha)
        for coef, (i, j) in zip(self.beta, self.pairs):
            y += coef * u[:, i] * u[:, j]
        for coef, (i, j, l) in zip(self.gamma, self.triples):
            y += coef * u[:, i] * u[:, j] * u[:, l]
        return y

    def to_json(self) -> str:
        return json.dumps({"k": self.k, "assignments": list(self.assignments),
                           "pairs": [list(p) for p in self.pairs],
                           "triples": [list(t) for t in self.triples],
                           "alpha": list(self.alpha), "beta": list(self.beta),
                           "gamma": list(self.gamma), "seed": self.seed}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "MetafunctionSpec":
        raw = json.loads(text)
        return cls(k=raw["k"], assignments=tuple(raw["assignments"]),
                   pairs=tuple(tuple(p) for p in raw["pairs"]),
                   triples=tuple(tuple(t) for t in raw["triples"]),
                   alpha=tuple(raw["alpha"]), beta=tuple(raw["beta"]), gamma=tuple(raw["gamma"]),
                   seed=raw.get("seed"))


def _distinct_groups(rng, k: int, size: int, count: int):
    # draw without replacement from all C(k, size) index groups
    groups: list[tuple[int, ...]] = []
    seen = set()
    limit = int(np.prod(range(k - size + 1, k + 1)) // np.prod(range(1, size + 1)))
    count = min(count, limit)
    while len(groups) < count:
        g = tuple(sorted(int(i) for i in rng.choice(k, size, replace=False)))
        if g not in seen:
            seen.add(g)
            groups.append(g)
    return tuple(groups)


def metafunction(x, seed: int | None = None, spec: MetafunctionSpec | None = None) -> np.ndarray:
    """Random metafunction drawn from ``(k, seed)`` unless ``spec`` is given."""
    x = _rows(x)
    if spec is None:
        spec = MetafunctionSpec.draw(x.shape[1], seed)
    return spec.evaluate(x)


# --------------------------------------------------------------------------- #
# Analytic indices                                                            #
# --------------------------------------------------------------------------- #

@dataclass(frozen=True)
class AnalyticIndices:
    first: np.ndarray
    total: np.ndarray
    variance: float
    extra: dict = field(default_factory=dict)


def analytic_indices(function_id: str, **kwargs) -> AnalyticIndices:
    """Exact first- and total-order indices for ``sobol_g`` or ``ishigami``."""
    if function_id == "sobol_g":
        a = np.asarray(kwargs.get("a", SOBOL_G_A), dtype=float)
        vi = (1 / 3) / (1 + a) ** 2
        prod = np.prod(1 + vi)
        v = prod - 1
        return AnalyticIndices(first=vi / v, total=vi * (prod / (1 + vi)) / v, variance=float(v))
    if function_id == "ishigami":
        a = kwargs.get("a", ISHIGAMI_A)
        b = kwargs.get("b", ISHIGAMI_B)
        v1 = 0.5 * (1 + b * np.pi**4 / 5) ** 2
        v2 = a**2 / 8
        v13 = 8 * b**2 * np.pi**8 / 225
        v = v1 + v2 + v13
        first = np.array([v1, v2, 0.0]) / v
        total = np.array([v1 + v13, v2, v13]) / v
        return AnalyticIndices(first=first, total=total, variance=float(v), extra={"S13": v13 / v})
    raise NoOracleError(f"no analytic indices for {function_id!r}")


BUILTIN_MODELS = {
    "ishigami": (lambda x: ishigami(x, rescale=True), 3),
    "sobol_g": (sobol_g, 8),
    "bratley1992": (bratley1992, None),
    "bratley1988": (bratley1988, None),
    "oakley": (lambda x: oakley(x, rescale=True), 15),
    "polynomial_demo": (polynomial_demo, 3),
    "metafunction": (metafunction, None),
}
