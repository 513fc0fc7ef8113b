"""Unit-hypercube sampling designs.

Base matrices come from one of three generators:

* ``"QRN"`` -- Sobol' low-discrepancy points (Gray-code construction, the
  all-zeros first point skipped so the sequence starts at 0.5),
* ``"LHS"`` -- Latin hypercube with a random point inside each stratum,
* ``"R"`` -- i.i.d. pseudo-random uniforms.

A base matrix ``Q`` of shape ``(N, 2k)`` is split into ``A`` (left ``k``
columns) and ``B`` (right ``k`` columns). ``AB_i`` copies ``A`` but takes
column ``i`` from ``B``; ``BA_i`` is the mirror image. Pair and triple blocks
(``AB_i_j``, ``AB_i_j_l``...) swap all listed columns jointly.
"""
from __future__ import annotations

import csv
import functools
import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, Sequence

import numpy as np

from .errors import DesignError, EmptyDesignError, ResolutionError, UnsupportedDimensionError

GENERATORS = ("QRN", "LHS", "R")
BLOCK_KINDS = ("A", "B", "AB", "BA")
ORDERS = ("first", "second", "third")

_SOBOL_BITS = 32


# --------------------------------------------------------------------------- #
# Sobol' sequence                                                             #
# --------------------------------------------------------------------------- #

@functools.lru_cache(maxsize=1)
def _direction_table() -> tuple[tuple[int, int, tuple[int, ...]], ...]:
    text = resources.files("sobolsa").joinpath("data/sobol_directions.txt").read_text()
    rows = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        degree, a, *m = (int(tok) for tok in line.split())
        rows.append((degree, a, tuple(m)))
    return tuple(rows)


def max_sobol_dimension() -> int:
    return len(_direction_table())


def _direction_numbers(dims: int) -> np.ndarray:
    """Integer direction numbers ``V[d, j] = m_j << (BITS - j)``."""
    table = _direction_table()
    v = np.zeros((dims, _SOBOL_BITS), dtype=np.uint64)
    for d in range(dims):
        degree, a, init = table[d]
        if degree == 0:
            m = [1] * _SOBOL_BITS
        else:
            m = list(init[:degree])
            for j in range(degree, _SOBOL_BITS):
                new = m[j - degree] ^ (m[j - degree] << degree)
                for k in range(1, degree):
                    if (a >> (degree - 1 - k)) & 1:
                        new ^= m[j - k] << k
                m.append(new)
        for j in range(_SOBOL_BITS):
            v[d, j] = m[j] << (_SOBOL_BITS - 1 - j)
    return v


def sobol_points(n: int, dims: int) -> np.ndarray:
    """First ``n`` points of the unscrambled Sobol' sequence, zero point excluded."""
    if dims > max_sobol_dimension():
        raise UnsupportedDimensionError(
            f"Sobol' direction table covers {max_sobol_dimension()} dimensions, "
            f"{dims} requested"
        )
    if n >= 2**_SOBOL_BITS:
        raise DesignError(f"at most {2**_SOBOL_BITS - 1} Sobol' points are available")
    v = _direction_numbers(dims)
    index = np.arange(1, n + 1, dtype=np.uint64)
    gray = index ^ (index >> np.uint64(1))
    x = np.zeros((n, dims), dtype=np.uint64)
    for j in range(_SOBOL_BITS):
        hit = ((gray >> np.uint64(j)) & np.uint64(1)).astype(bool)
        if not hit.any():
            break
        x[hit] ^= v[:, j]
    return x.astype(np.float64) / float(2**_SOBOL_BITS)


def _latin_hypercube(n: int, dims: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((n, dims))
    for d in range(dims):
        strata = rng.permutation(n)
        out[:, d] = (strata + rng.random(n)) / n
    return out


def generate_base(n: int, dims: int, generator: str = "QRN", seed: int | None = None) -> np.ndarray:
    """Return an ``(n, dims)`` matrix of points in ``[0, 1)``.

    Parameters
    ----------
    n : int
        Number of points.
    dims : int
        Number of columns.
    generator : {"QRN", "LHS", "R"}
        Sobol' quasi-random, Latin hypercube or pseudo-random points.
    seed : int, optional
        Seed for ``"LHS"`` and ``"R"``. Sobol' points ignore it.
    """
    if n <= 0:
        raise EmptyDesignError("a design needs at least one point")
    if dims < 1:
        raise DesignError("dims must be >= 1")
    if generator == "QRN":
        return sobol_points(n, dims)
    rng = np.random.default_rng(seed)
    if generator == "LHS":
        return _latin_hypercube(n, dims, rng)
    if generator == "R":
        return rng.random((n, dims))
    raise DesignError(f"unknown generator {generator!r}; expected one of {GENERATORS}")


# --------------------------------------------------------------------------- #
# A / B / AB / BA designs                                                     #
# --------------------------------------------------------------------------- #

def block_label(kind: str, columns: Sequence[int] = ()) -> str:
    """``("AB", (0, 2))`` -> ``"AB_1_3"`` (labels use 1-based columns)."""
    return "_".join([kind, *(str(c + 1) for c in columns)])


def parse_block_label(label: str) -> tuple[str, tuple[int, ...]]:
    kind, *cols = label.split("_")
    if kind not in BLOCK_KINDS:
        raise DesignError(f"unknown block label {label!r}")
    return kind, tuple(int(c) - 1 for c in cols)


@dataclass(frozen=True)
class SampleDesign:
    """Declarative description of an A/B/AB/BA sampling layout."""

    n_base: int
    params: tuple[str, ...]
    blocks: frozenset[str] = frozenset({"A", "B", "AB"})
    order: str = "first"
    generator: str = "QRN"
    seed: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        object.__setattr__(self, "blocks", frozenset(self.blocks))
        k = len(self.params)
        if k < 1:
            raise DesignError("at least one parameter is required")
        if len(set(self.params)) != k:
            raise DesignError("parameter names must be unique")
        if self.n_base < 2:
            raise DesignError("n_base must be >= 2")
        unknown = self.blocks - set(BLOCK_KINDS)
        if unknown:
            raise DesignError(f"unknown blocks {sorted(unknown)}")
        if "A" not in self.blocks:
            raise DesignError("blocks must contain 'A'")
        if self.order not in ORDERS:
            raise DesignError(f"order must be one of {ORDERS}")
        if self.order == "second" and k < 2:
            raise DesignError("second-order indices need at least 2 parameters")
        if self.order == "third" and k < 3:
            raise DesignError("third-order indices need at least 3 parameters")
        if self.generator not in GENERATORS:
            raise DesignError(f"generator must be one of {GENERATORS}")

    @property
    def k(self) -> int:
        return len(self.params)

    @property
    def order_level(self) -> int:
        return ORDERS.index(self.order) + 1

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        """Blocks in emission order as ``(kind, swapped_columns)`` pairs."""
        k = self.k
        out: list[tuple[str, tuple[int, ...]]] = []
        for kind in ("A", "B"):
            if kind in self.blocks:
                out.append((kind, ()))
        for size in range(1, self.order_level + 1):
            for kind in ("AB", "BA"):
                if kind in self.blocks:
                    out.extend((kind, cols) for cols in itertools.combinations(range(k), size))
        return out

    def labels(self) -> list[str]:
        return [block_label(kind, cols) for kind, cols in self.layout()]


def total_rows(design: SampleDesign) -> int:
    """Number of model runs the design requires."""
    n, k = design.n_base, design.k
    per_family = sum(math.comb(k, size) for size in range(1, design.order_level + 1))
    count = sum(kind in design.blocks for kind in ("A", "B"))
    count += per_family * sum(kind in design.blocks for kind in ("AB", "BA"))
    return n * count


@dataclass
class SampleMatrix:
    """A realized design: one row per model run, each row tagged with its block."""

    values: np.ndarray
    labels: np.ndarray
    base_row: np.ndarray
    params: tuple[str, ...]

    def __len__(self):
        return self.values.shape[0]

    def block(self, label: str) -> np.ndarray:
        """Rows of one block, ordered by base-row index."""
        mask = self.labels == label
        if not mask.any():
            raise DesignError(f"block {label!r} not present")
        rows = np.flatnonzero(mask)
        return self.values[rows[np.argsort(self.base_row[rows], kind="stable")]]

    def to_frame(self):
        import pandas as pd

        frame = pd.DataFrame(self.values, columns=list(self.params))
        frame.insert(0, "block", self.labels)
        return frame

    def to_csv(self, fh) -> None:
        write_matrix_csv(fh, self.params, self.values, self.labels, self.base_row)


def write_matrix_csv(fh, params: Sequence[str], values: np.ndarray, labels: Iterable[str] | None = None,
                     base_row: Iterable[int] | None = None) -> None:
    """Write a design as CSV.

    Leading ``block`` and ``base_row`` columns are added when labels (and
    base rows) are given.
    """
    writer = csv.writer(fh, lineterminator="\n")
    tags = []
    if labels is not None:
        tags.append(("block", list(labels)))
        if base_row is not None:
            tags.append(("base_row", [int(b) for b in base_row]))
    writer.writerow([name for name, _ in tags] + list(params))
    for i, row in enumerate(values):
        writer.writerow([col[i] for _, col in tags] + [format(float(x), ".17g") for x in row])


def read_matrix_csv(fh) -> SampleMatrix:
    """Inverse of :meth:`SampleMatrix.to_csv`.

    Without a ``base_row`` column, rows of each block are numbered in file
    order.
    """
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DesignError("matrix CSV is empty") from None
    if not header or header[0] != "block":
        raise DesignError("matrix CSV needs a leading 'block' column")
    has_base = len(header) > 1 and header[1] == "base_row"
    start = 2 if has_base else 1
    labels, base, values = [], [], []
    counters: dict[str, int] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DesignError(f"matrix CSV line {line_no} has {len(row)} fields, expected {len(header)}")
        labels.append(row[0])
        if has_base:
            base.append(int(row[1]))
        else:
            base.append(counters.get(row[0], 0))
            counters[row[0]] = base[-1] + 1
        values.append([float(x) for x in row[start:]])
    return SampleMatrix(values=np.array(values, dtype=float).reshape(len(values), len(header) - start),
                        labels=np.array(labels, dtype=object), base_row=np.array(base, dtype=np.int64),
                        params=tuple(header[start:]))


def sobol_matrices(design: SampleDesign) -> SampleMatrix:
    """Build every block of ``design`` in its fixed emission order."""
    n, k = design.n_base, design.k
    q = generate_base(n, 2 * k, design.generator, design.seed)
    a, b = q[:, :k], q[:, k:]
    layout = design.layout()
    values = np.empty((n * len(layout), k))
    labels = np.empty(n * len(layout), dtype=object)
    for pos, (kind, cols) in enumerate(layout):
        if kind in ("A", "AB"):
            block = a.copy()
            donor = b
        else:
            block = b.copy()
            donor = a
        if cols:
            block[:, cols] = donor[:, cols]
        values[pos * n:(pos + 1) * n] = block
        labels[pos * n:(pos + 1) * n] = block_label(kind, cols)
    base_row = np.tile(np.arange(n), len(layout))
    return SampleMatrix(values=values, labels=labels, base_row=base_row, params=design.params)


# --------------------------------------------------------------------------- #
# VARS star design                                                            #
# --------------------------------------------------------------------------- #

def grid_size(h: float) -> int:
    steps = 1.0 / h
    n_grid = int(round(steps))
    if not 0 < h < 1 or abs(steps - n_grid) > 1e-9 * n_grid or n_grid < 2:
        raise ResolutionError(f"1/h must be an integer >= 2, got h={h!r}")
    return n_grid


@dataclass
class StarSample:
    """Star centres plus axis-aligned cross-sections of step ``h``.

    ``points`` holds every evaluation point (each centre stored once).
    ``sections[v, i]`` lists, in increasing coordinate order, the row of
    ``points`` for each grid node along dimension ``i`` through centre ``v``;
    ``coords[v, i]`` holds the matching coordinates.
    """

    centers: np.ndarray
    h: float
    params: tuple[str, ...]
    points: np.ndarray
    star_id: np.ndarray
    dim: np.ndarray
    grid_index: np.ndarray
    sections: np.ndarray
    coords: np.ndarray
    center_slot: np.ndarray = field(repr=False)

    @property
    def n_star(self) -> int:
        return self.centers.shape[0]

    @property
    def total_runs(self) -> int:
        return self.points.shape[0]

    def to_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["star_id", "dim", "grid_index", *self.params])
        for s, d, g, row in zip(self.star_id, self.dim, self.grid_index, self.points):
            writer.writerow([int(s), int(d), int(g), *(format(float(x), ".17g") for x in row)])


def vars_matrices(n_star: int, h: float, params: Sequence[str], generator: str = "QRN",
                  seed: int | None = None) -> StarSample:
    """Star design: ``n_star * (k * (1/h - 1) + 1)`` evaluation points.

    Rows are grouped by star: the centre first (``dim == 0``), then for each
    dimension the off-centre grid nodes in increasing order (``dim`` is
    1-based there).
    """
    params = tuple(params)
    k = len(params)
    if n_star < 1:
        raise EmptyDesignError("n_star must be >= 1")
    if k < 1:
        raise DesignError("at least one parameter is required")
    n_grid = grid_size(h)
    centers = generate_base(n_star, k, generator, seed)

    per_star = k * (n_grid - 1) + 1
    total = n_star * per_star
    points = np.empty((total, k))
    star_id = np.empty(total, dtype=np.int64)
    dim = np.empty(total, dtype=np.int64)
    grid_index = np.empty(total, dtype=np.int64)
    sections = np.empty((n_star, k, n_grid), dtype=np.int64)
    coords = np.empty((n_star, k, n_grid))
    center_slot = np.empty((n_star, k), dtype=np.int64)

    offsets = np.arange(n_grid)
    row = 0
    for v, c in enumerate(centers):
        centre_row = row
        points[row] = c
        star_id[row], dim[row], grid_index[row] = v, 0, 0
        row += 1
        for i in range(k):
            jc = min(int(math.floor(c[i] * n_grid)), n_grid - 1)
            # keep c - jc*h inside [0, h) despite rounding in c*n_grid
            while jc > 0 and c[i] - jc * h < 0:
                jc -= 1
            while jc < n_grid - 1 and c[i] - jc * h >= h:
                jc += 1
            line = c[i] + (offsets - jc) * h
            line[jc] = c[i]
            coords[v, i] = line
            center_slot[v, i] = jc
            for j in range(n_grid):
                if j == jc:
                    sections[v, i, j] = centre_row
                    continue
                points[row] = c
                points[row, i] = line[j]
                star_id[row], dim[row], grid_index[row] = v, i + 1, j
                sections[v, i, j] = row
                row += 1
    return StarSample(centers=centers, h=h, params=params, points=points, star_id=star_id,
                      dim=dim, grid_index=grid_index, sections=sections, coords=coords,
                      center_slot=center_slot)
