"""First-, second-, third- and total-order Sobol' index estimators.

The ``estimate_*`` functions apply each estimator's formula to the outputs
as given. :func:`sobol_indices` by default centres the outputs on the pooled
A/B mean first, which makes every index invariant to ``y -> a*y + b`` and
lowers the variance of the product-form estimators. Estimators work on
column stacks: ``y_ab`` has one column per swapped parameter set.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import AlignmentError, CombinationError, ConstantOutputError, DesignError, InvalidOutputError
from .sampling import SampleDesign, SampleMatrix, block_label, total_rows

FIRST_ESTIMATORS = ("sobol", "saltelli", "jansen", "azzini")
TOTAL_ESTIMATORS = ("jansen", "sobol", "homma", "saltelli", "janon", "glen", "azzini")

_AB_DESIGN = frozenset({"A", "B", "AB"})
_BA_DESIGN = frozenset({"A", "B", "BA"})
_FULL_DESIGN = frozenset({"A", "B", "AB", "BA"})

# blocks each estimator reads
_FIRST_NEEDS = {"sobol": _BA_DESIGN, "saltelli": _AB_DESIGN, "jansen": _AB_DESIGN, "azzini": _FULL_DESIGN}
_TOTAL_NEEDS = {"jansen": _AB_DESIGN, "sobol": _AB_DESIGN, "homma": _AB_DESIGN, "janon": _AB_DESIGN,
                "glen": _AB_DESIGN, "saltelli": _BA_DESIGN, "azzini": _FULL_DESIGN}

RESULT_COLUMNS = ["original", "bias", "std.error", "low.ci", "high.ci", "sensitivity", "parameters"]


def required_blocks(first: str, total: str) -> frozenset[str]:
    """Block set a supported (first, total) pair needs; raises for other pairs."""
    if first not in FIRST_ESTIMATORS:
        raise CombinationError(f"unknown first-order estimator {first!r}")
    if total not in TOTAL_ESTIMATORS:
        raise CombinationError(f"unknown total-order estimator {total!r}")
    if first == "azzini" or total == "azzini":
        return _FULL_DESIGN
    if first in ("saltelli", "jansen") and total in ("jansen", "sobol", "homma", "janon", "glen"):
        return _AB_DESIGN
    if first == "sobol" and total == "saltelli":
        return _BA_DESIGN
    raise CombinationError(
        f"first={first!r} cannot be combined with total={total!r}; supported pairs: "
        "saltelli/jansen with jansen/sobol/homma/janon/glen (A,B,AB), sobol with saltelli "
        "(A,B,BA), or azzini on either side (A,B,AB,BA)"
    )


def validate_combination(first: str, total: str, blocks) -> None:
    need = required_blocks(first, total)
    missing = need - frozenset(blocks)
    if missing:
        raise CombinationError(
            f"first={first!r}, total={total!r} needs blocks {sorted(need)}; "
            f"missing {sorted(missing)}"
        )


@dataclass(frozen=True)
class EstimatorConfig:
    first: str = "saltelli"
    total: str = "jansen"
    order: str | None = None  # None: use the design's order
    # subtract the pooled A/B mean first, making every index shift-invariant
    center: bool = True

    def __post_init__(self):
        required_blocks(self.first, self.total)
        if self.order is not None and self.order not in ORDER_LEVEL:
            raise DesignError(f"order must be one of {sorted(ORDER_LEVEL)} or None")


@dataclass(frozen=True)
class VarianceSummary:
    f0: float
    vy: float


def estimate_variance_summary(y_a, y_b) -> VarianceSummary:
    """Pooled mean and variance of the A and B outputs."""
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    n = y_a.shape[0]
    if n < 2 or y_b.shape[0] != n:
        raise AlignmentError("y_a and y_b must have the same length >= 2")
    f0 = np.sum(y_a + y_b) / (2 * n)
    vy = np.sum((y_a - f0) ** 2 + (y_b - f0) ** 2) / (2 * n - 1)
    if not vy > 0:
        raise ConstantOutputError("model output is constant; Sobol' indices are undefined")
    return VarianceSummary(float(f0), float(vy))


def _col(y):
    y = np.asarray(y, dtype=float)
    return y[:, None] if y.ndim == 1 else y


def _need(name, **arrays):
    for key, value in arrays.items():
        if value is None:
            raise DesignError(f"{name} estimator needs the {key} outputs")


def estimate_first(estimator: str, y_a, y_b, y_ab=None, y_ba=None, summary: VarianceSummary | None = None):
    """First-order (or closed) indices, one per column of ``y_ab``/``y_ba``.

    ``y_ab[:, i]`` holds f(A with the i-th swap set taken from B); ``y_ba``
    is the mirror image.
    """
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    if estimator == "azzini":
        _need("azzini", y_ab=y_ab, y_ba=y_ba)
        ab, ba = _col(y_ab), _col(y_ba)
        a, b = y_a[:, None], y_b[:, None]
        num = 2 * np.sum((ba - b) * (a - ab), axis=0)
        den = np.sum((a - b) ** 2 + (ba - ab) ** 2, axis=0)
        return num / den
    s = summary or estimate_variance_summary(y_a, y_b)
    n = y_a.shape[0]
    if estimator == "sobol":
        _need("sobol", y_ba=y_ba)
        vi = np.sum(y_a[:, None] * _col(y_ba), axis=0) / n - s.f0**2
    elif estimator == "saltelli":
        _need("saltelli", y_ab=y_ab)
        vi = np.sum(y_b[:, None] * (_col(y_ab) - y_a[:, None]), axis=0) / n
    elif estimator == "jansen":
        _need("jansen", y_ab=y_ab)
        vi = s.vy - np.sum((y_b[:, None] - _col(y_ab)) ** 2, axis=0) / (2 * n)
    else:
        raise CombinationError(f"unknown first-order estimator {estimator!r}")
    return vi / s.vy


def estimate_total(estimator: str, y_a, y_b, y_ab=None, y_ba=None, summary: VarianceSummary | None = None):
    """Total-order indices, one per column of ``y_ab``/``y_ba``."""
    y_a = np.asarray(y_a, dtype=float)
    y_b = np.asarray(y_b, dtype=float)
    n = y_a.shape[0]
    a, b = y_a[:, None], y_b[:, None]
    if estimator == "azzini":
        _need("azzini", y_ab=y_ab, y_ba=y_ba)
        ab, ba = _col(y_ab), _col(y_ba)
        num = np.sum((b - ba) ** 2 + (a - ab) ** 2, axis=0)
        den = np.sum((a - b) ** 2 + (ba - ab) ** 2, axis=0)
        return num / den
    if estimator == "janon":
        _need("janon", y_ab=y_ab)
        ab = _col(y_ab)
        f0 = np.sum((a + ab) / 2, axis=0) / n
        num = np.sum(a * ab, axis=0) / n - f0**2
        den = np.sum((a**2 + ab**2) / 2, axis=0) / n - f0**2
        return 1 - num / den
    if estimator == "glen":
        _need("glen", y_ab=y_ab)
        ab = _col(y_ab)
        da = a - a.mean(axis=0)
        dab = ab - ab.mean(axis=0)
        var_a = np.sum(da**2, axis=0) / (n - 1)
        var_ab = np.sum(dab**2, axis=0) / (n - 1)
        return 1 - np.sum(da * dab / np.sqrt(var_a * var_ab), axis=0) / (n - 1)
    s = summary or estimate_variance_summary(y_a, y_b)
    if estimator == "saltelli":
        _need("saltelli", y_ba=y_ba)
        num = np.sum(b * _col(y_ba), axis=0) / n - s.f0**2
        den = np.sum(y_a**2) / n - s.f0**2
        return 1 - num / den
    _need(estimator, y_ab=y_ab)
    ab = _col(y_ab)
    if estimator == "jansen":
        return np.sum((a - ab) ** 2, axis=0) / (2 * n) / s.vy
    if estimator == "sobol":
        return np.sum(a * (a - ab), axis=0) / n / s.vy
    if estimator == "homma":
        return (s.vy - np.sum(a * ab, axis=0) / n + s.f0**2) / s.vy
    raise CombinationError(f"unknown total-order estimator {estimator!r}")


def estimate_higher(first_estimator: str, y_a, y_b, closed_ab, closed_ba, subsets, lower: dict,
                    summary: VarianceSummary | None = None):
    """Interaction indices from closed indices by inclusion-exclusion.

    ``closed_ab[:, m]`` / ``closed_ba[:, m]`` hold the outputs with every
    column of ``subsets[m]`` swapped. ``lower`` maps each proper sub-tuple
    (singletons, pairs...) to its already computed index.
    """
    closed = estimate_first(first_estimator, y_a, y_b, closed_ab, closed_ba, summary)
    out = np.empty(len(subsets))
    for m, subset in enumerate(subsets):
        value = closed[m]
        for size in range(1, len(subset)):
            for sub in itertools.combinations(subset, size):
                value -= lower[sub]
        out[m] = value
    return out


# --------------------------------------------------------------------------- #
# Block bookkeeping                                                           #
# --------------------------------------------------------------------------- #

@dataclass
class BlockOutputs:
    """Outputs arranged as an ``(N, n_blocks)`` table, one column per block."""

    values: np.ndarray
    columns: dict[str, int]

    def get(self, label: str):
        j = self.columns.get(label)
        return None if j is None else self.values[:, j]

    def stack(self, kind: str, subsets):
        if not subsets:
            return None
        idx = [self.columns.get(block_label(kind, s)) for s in subsets]
        if any(j is None for j in idx):
            return None
        return self.values[:, idx]

    def resample(self, rows: np.ndarray) -> "BlockOutputs":
        return BlockOutputs(self.values[rows], self.columns)


def check_outputs(y, design: SampleDesign) -> np.ndarray:
    y = np.asarray(y, dtype=float).ravel()
    expected = total_rows(design)
    if y.shape[0] != expected:
        raise AlignmentError(
            f"design needs {expected} outputs, got {y.shape[0]} "
            f"({'short by ' + str(expected - y.shape[0]) if y.shape[0] < expected else 'excess ' + str(y.shape[0] - expected)})"
        )
    bad = np.flatnonzero(~np.isfinite(y))
    if bad.size:
        shown = ", ".join(str(i) for i in bad[:10])
        raise InvalidOutputError(
            f"{bad.size} non-finite model outputs (rows {shown}{', ...' if bad.size > 10 else ''})",
            rows=bad,
        )
    return y


def deconstruct(y, design: SampleDesign, tags: SampleMatrix | None = None) -> BlockOutputs:
    """Split the output vector into per-block columns.

    Without ``tags`` the fixed emission order of :func:`sobol_matrices` is
    assumed; with them, rows may come in any order.
    """
    y = check_outputs(y, design)
    labels = design.labels()
    n = design.n_base
    columns = {label: j for j, label in enumerate(labels)}
    if tags is None:
        values = y.reshape(len(labels), n).T.copy()
    else:
        if len(tags) != y.shape[0]:
            raise AlignmentError(f"{len(tags)} tagged rows for {y.shape[0]} outputs")
        values = np.full((n, len(labels)), np.nan)
        try:
            col = np.array([columns[str(lab)] for lab in tags.labels])
        except KeyError as exc:
            raise AlignmentError(f"row tagged with block {exc} not in design") from None
        values[tags.base_row, col] = y
        if np.isnan(values).any():
            raise AlignmentError("tags do not cover every (block, base row) slot exactly once")
    return BlockOutputs(values, columns)


# --------------------------------------------------------------------------- #
# Index table                                                                 #
# --------------------------------------------------------------------------- #

@dataclass
class IndexTable:
    """Sensitivity indices plus the run summary.

    ``results`` has the columns ``original, [bias, std.error, low.ci,
    high.ci,] sensitivity, parameters``; bootstrap columns appear only when
    the indices were bootstrapped.
    """

    results: pd.DataFrame
    first_estimator: str
    total_estimator: str
    total_runs: int
    sum_first_order: float
    extra: dict = field(default_factory=dict)

    def value(self, sensitivity: str, parameters: str, column: str = "original") -> float:
        sel = self.results[(self.results["sensitivity"] == sensitivity)
                           & (self.results["parameters"] == parameters)]
        if len(sel) != 1:
            raise KeyError((sensitivity, parameters))
        return float(sel[column].iloc[0])

    def select(self, sensitivity: str) -> pd.DataFrame:
        return self.results[self.results["sensitivity"] == sensitivity]

    @property
    def bootstrapped(self) -> bool:
        return "std.error" in self.results.columns

    def summary(self) -> dict:
        return {"first_estimator": self.first_estimator, "total_estimator": self.total_estimator,
                "total_runs": int(self.total_runs), "sum_first_order": float(self.sum_first_order),
                **self.extra}

    def to_csv(self, fh) -> None:
        self.results.to_csv(fh, index=False, float_format="%.17g", lineterminator="\n")

    def to_json(self) -> str:
        records = json.loads(self.results.to_json(orient="records", double_precision=15))
        return json.dumps({**self.summary(), "results": records}, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "IndexTable":
        raw = json.loads(text)
        frame = pd.DataFrame(raw.pop("results"))
        cols = [c for c in RESULT_COLUMNS if c in frame.columns]
        return cls(results=frame[cols], first_estimator=raw.pop("first_estimator"),
                   total_estimator=raw.pop("total_estimator"), total_runs=raw.pop("total_runs"),
                   sum_first_order=raw.pop("sum_first_order"), extra=raw)

    def __str__(self):
        head = (f"First-order estimator: {self.first_estimator} | "
                f"Total-order estimator: {self.total_estimator}\n\n"
                f"Total number of model runs: {self.total_runs}\n\n"
                f"Sum of first order indices: {self.sum_first_order:.7g}\n")
        with pd.option_context("display.float_format", "{:.3f}".format,
                               "display.max_rows", None, "display.width", 120):
            return head + self.results.to_string()


def parameter_label(params: Sequence[str], subset: Sequence[int]) -> str:
    return ".".join(params[i] for i in subset)


class _Plan:
    """Pre-computed layout that maps block outputs to the index vector."""

    def __init__(self, design: SampleDesign, config: EstimatorConfig):
        validate_combination(config.first, config.total, design.blocks)
        level = design.order_level if config.order is None else ORDER_LEVEL[config.order]
        if level > design.order_level:
            raise DesignError(f"order={config.order!r} needs a design built with that order")
        k = design.k
        self.config = config
        self.k = k
        self.singles = [(i,) for i in range(k)]
        self.higher = [list(itertools.combinations(range(k), size)) for size in range(2, level + 1)]
        kinds = {"sobol": ("BA",), "saltelli": ("AB",), "jansen": ("AB",), "azzini": ("AB", "BA")}
        for subsets in self.higher:
            for kind in kinds[config.first]:
                if kind not in design.blocks:
                    raise DesignError(f"higher-order indices with {config.first!r} need {kind} blocks")
        self.labels = [("Si", parameter_label(design.params, s)) for s in self.singles]
        self.labels += [("Ti", parameter_label(design.params, s)) for s in self.singles]
        for size, subsets in enumerate(self.higher, start=2):
            tag = "Sij" if size == 2 else "Sijk"
            self.labels += [(tag, parameter_label(design.params, s)) for s in subsets]

    def evaluate(self, blocks: BlockOutputs) -> np.ndarray:
        cfg = self.config
        if cfg.center:
            f0 = (np.sum(blocks.get("A")) + np.sum(blocks.get("B"))) / (2 * blocks.values.shape[0])
            centred = BlockOutputs(blocks.values - f0, blocks.columns)
        else:
            centred = blocks
        y_a, y_b = centred.get("A"), centred.get("B")
        summary = estimate_variance_summary(y_a, y_b)
        ab, ba = centred.stack("AB", self.singles), centred.stack("BA", self.singles)
        si = estimate_first(cfg.first, y_a, y_b, ab, ba, summary)
        ti = estimate_total(cfg.total, y_a, y_b, ab, ba, summary)
        parts = [si, ti]
        lower = {s: v for s, v in zip(self.singles, si)}
        for subsets in self.higher:
            vals = estimate_higher(cfg.first, y_a, y_b, centred.stack("AB", subsets),
                                   centred.stack("BA", subsets), subsets, lower, summary)
            lower.update(zip(subsets, vals))
            parts.append(vals)
        return np.concatenate(parts)


ORDER_LEVEL = {"first": 1, "second": 2, "third": 3}


def _table(estimates, labels, config: EstimatorConfig, total_runs: int, k: int, stats=None) -> IndexTable:
    frame = pd.DataFrame({"original": np.asarray(estimates, dtype=float)})
    if stats is not None:
        for col in ("bias", "std.error", "low.ci", "high.ci"):
            frame[col] = stats[col]
    frame["sensitivity"] = [lab[0] for lab in labels]
    frame["parameters"] = [lab[1] for lab in labels]
    return IndexTable(results=frame, first_estimator=config.first, total_estimator=config.total,
                      total_runs=total_runs, sum_first_order=float(np.sum(estimates[:k])))


def sobol_indices(y, design: SampleDesign, estimators: EstimatorConfig | None = None, boot=None,
                  tags: SampleMatrix | None = None) -> IndexTable:
    """Sobol' indices for outputs ``y`` evaluated on ``sobol_matrices(design)``.

    Parameters
    ----------
    y : array_like
        One output per design row, in emission order unless ``tags`` is given.
    design : SampleDesign
    estimators : EstimatorConfig, optional
        Defaults to saltelli (first) / jansen (total).
    boot : BootConfig, optional
        Attach bootstrap bias, standard error and confidence intervals.
    tags : SampleMatrix, optional
        Block labels and base rows matching ``y`` row by row.
    """
    config = estimators or EstimatorConfig()
    plan = _Plan(design, config)
    blocks = deconstruct(y, design, tags)
    estimates = plan.evaluate(blocks)
    stats = None
    if boot is not None:
        from .bootstrap import bootstrap_statistics

        stats = bootstrap_statistics(blocks, plan.evaluate, boot, original=estimates)
    return _table(estimates, plan.labels, config, total_rows(design), design.k, stats)


def _dummy_statistic(blocks: BlockOutputs) -> np.ndarray:
    y_a, y_b = blocks.get("A"), blocks.get("B")
    n = y_a.shape[0]
    f0 = (np.sum(y_a) + np.sum(y_b)) / (2 * n)
    y_a, y_b = y_a - f0, y_b - f0
    s = estimate_variance_summary(y_a, y_b)
    # an inert column leaves f(AB_d) == f(A) and f(BA_d) == f(B)
    si = (np.sum(y_a * y_b) / n - s.f0**2) / s.vy
    ti = (s.vy - np.sum(y_a * y_a) / n + s.f0**2) / s.vy
    return np.array([si, ti])


def sobol_dummy(y, design: SampleDesign, boot=None, tags: SampleMatrix | None = None,
                name: str = "dummy") -> IndexTable:
    """Si and Ti of an inert parameter: the Monte Carlo error floor at this N.

    The dummy costs no model runs. Because the model ignores it, its swapped
    blocks reproduce the A and B outputs, so both indices are computed from
    those two blocks with the product (non-cancelling) estimator forms.
    """
    if not {"A", "B"} <= design.blocks:
        raise DesignError("the dummy parameter needs the A and B blocks")
    blocks = deconstruct(y, design, tags)
    estimates = _dummy_statistic(blocks)
    stats = None
    if boot is not None:
        from .bootstrap import bootstrap_statistics

        stats = bootstrap_statistics(blocks, _dummy_statistic, boot, original=estimates)
    config = EstimatorConfig()
    table = _table(estimates, [("Si", name), ("Ti", name)], config, total_rows(design), 1, stats)
    table.first_estimator = table.total_estimator = "dummy"
    return table


__all__ = [
    "FIRST_ESTIMATORS", "TOTAL_ESTIMATORS", "EstimatorConfig", "VarianceSummary", "IndexTable",
    "BlockOutputs", "validate_combination", "required_blocks", "estimate_variance_summary",
    "estimate_first", "estimate_total", "estimate_higher", "deconstruct", "sobol_indices",
    "sobol_dummy",
]
