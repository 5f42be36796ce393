"""Bayesian search grid and the entropy quantities computed over it."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

# Beliefs are kept away from 0 and 1 so later updates can still move them.
PROB_EPS = 1e-6


class DegenerateUpdateWarning(RuntimeWarning):
    """Raised (as a warning) when a Bayes update has a zero denominator."""


class CellIndex(NamedTuple):
    col: int
    row: int


class OutOfBoundsError(IndexError):
    pass


def _check_prob(p, name="p"):
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise ValueError(f"{name} must lie in [0, 1], got {p!r}")
    return arr


def _scalar_or_array(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def cell_entropy(p):
    """Binary Shannon entropy in bits, with 0*log2(0) taken as 0.

    Accepts a scalar or an array of probabilities.
    """
    p = _check_prob(p)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
        h -= np.where(q > 0, q * np.log2(np.where(q > 0, q, 1.0)), 0.0)
    return _scalar_or_array(h)


def bayes_update(p_prior, likelihood_pos, likelihood_neg, measurement=True):
    """Posterior P(X|Z) from the prior and the two likelihoods of the observed Z.

    ``likelihood_pos`` is P(Z|X) and ``likelihood_neg`` is P(Z|not X) for
    whichever polarity was observed; ``measurement`` only documents that
    polarity. Where the denominator vanishes the prior is returned unchanged
    and a :class:`DegenerateUpdateWarning` is emitted.
    """
    p = _check_prob(p_prior, "p_prior")
    lp = _check_prob(likelihood_pos, "likelihood_pos")
    ln = _check_prob(likelihood_neg, "likelihood_neg")
    num = lp * p
    den = num + ln * (1.0 - p)
    bad = den <= 0.0
    if np.any(bad):
        warnings.warn(
            f"degenerate Bayes update ({'positive' if measurement else 'negative'} "
            "measurement): zero denominator, prior kept",
            DegenerateUpdateWarning,
            stacklevel=2,
        )
    post = np.where(bad, p, num / np.where(bad, 1.0, den))
    return _scalar_or_array(np.clip(post, 0.0, 1.0))


def assumed_posterior(p_old, tpr, fpr, tnr, fnr, confidence_threshold=0.5):
    """New belief under the confidence-threshold rule.

    At or above the threshold a positive detection is assumed (likelihoods
    tpr / fpr); below it a negative one (likelihoods fnr / tnr).
    """
    p = np.asarray(p_old, dtype=float)
    positive = p >= confidence_threshold
    lik_x = np.where(positive, tpr, fnr)
    lik_not_x = np.where(positive, fpr, tnr)
    if np.ndim(p) == 0:
        return bayes_update(p, float(lik_x), float(lik_not_x), bool(positive))
    return bayes_update(p, lik_x, lik_not_x)


def expected_entropy_reduction(p_old, tpr, fpr, tnr, fnr, confidence_threshold=0.5):
    """Entropy drop (bits) of the assumed measurement; may be negative."""
    _check_prob(tpr, "tpr"), _check_prob(fpr, "fpr")
    _check_prob(tnr, "tnr"), _check_prob(fnr, "fnr")
    _check_prob(confidence_threshold, "confidence_threshold")
    p_new = assumed_posterior(p_old, tpr, fpr, tnr, fnr, confidence_threshold)
    return _scalar_or_array(np.asarray(cell_entropy(p_old)) - np.asarray(cell_entropy(p_new)))


def percent_entropy_reduction(h0: float, ht: float) -> float:
    if not h0 > 0:
        raise ValueError(f"initial entropy must be positive, got {h0!r}")
    return 100.0 * (h0 - ht) / h0


@dataclass(eq=False)
class BeliefGrid:
    """Row-major grid of target-presence probabilities.

    Cell ``(col, row)`` covers ``[origin_x + col*cell_size, +cell_size)`` by
    ``[origin_y + row*cell_size, +cell_size)``; ``cells[row, col]`` holds P(X).
    """

    n_cols: int
    n_rows: int
    cell_size: float
    origin_x: float = 0.0
    origin_y: float = 0.0
    cells: np.ndarray | None = None

    def __post_init__(self):
        if int(self.n_cols) <= 0 or int(self.n_rows) <= 0:
            raise ValueError("grid dimensions must be positive")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        object.__setattr__(self, "_shape_locked", False)
        self.n_cols, self.n_rows = int(self.n_cols), int(self.n_rows)
        self.cell_size = float(self.cell_size)
        if self.cells is None:
            self.cells = np.full((self.n_rows, self.n_cols), 0.5)
        else:
            cells = np.array(self.cells, dtype=float)
            if cells.shape != (self.n_rows, self.n_cols):
                raise ValueError(
                    f"cells shape {cells.shape} != ({self.n_rows}, {self.n_cols})"
                )
            _check_prob(cells, "cells")
            self.cells = cells
        self._shape_locked = True

    def __setattr__(self, name, value):
        if name in ("n_cols", "n_rows", "cell_size") and getattr(self, "_shape_locked", False):
            raise AttributeError(f"{name} is immutable after construction")
        object.__setattr__(self, name, value)

    @classmethod
    def uniform(cls, width, height, cell_size, p=0.5, origin=(0.0, 0.0)):
        n_cols = int(round(width / cell_size))
        n_rows = int(round(height / cell_size))
        return cls(n_cols, n_rows, cell_size, origin[0], origin[1],
                   np.full((n_rows, n_cols), float(p)))

    @property
    def width(self) -> float:
        return self.n_cols * self.cell_size

    @property
    def height(self) -> float:
        return self.n_rows * self.cell_size

    @property
    def bounds(self):
        """(x_min, y_min, x_max, y_max) in world meters."""
        return (self.origin_x, self.origin_y,
                self.origin_x + self.width, self.origin_y + self.height)

    def copy(self) -> BeliefGrid:
        return BeliefGrid(self.n_cols, self.n_rows, self.cell_size,
                          self.origin_x, self.origin_y, self.cells.copy())

    def in_bounds(self, col, row) -> bool:
        return 0 <= col < self.n_cols and 0 <= row < self.n_rows

    def _require(self, cell):
        col, row = cell
        if not self.in_bounds(col, row):
            raise OutOfBoundsError(f"cell {tuple(cell)} outside {self.n_cols}x{self.n_rows} grid")
        return int(col), int(row)

    def __getitem__(self, cell) -> float:
        col, row = self._require(cell)
        return float(self.cells[row, col])

    def __setitem__(self, cell, value):
        col, row = self._require(cell)
        self.cells[row, col] = float(_check_prob(value))

    def cell_at(self, x, y) -> CellIndex | None:
        col = math.floor((x - self.origin_x) / self.cell_size)
        row = math.floor((y - self.origin_y) / self.cell_size)
        if self.in_bounds(col, row):
            return CellIndex(col, row)
        return None

    def cell_center(self, cell):
        col, row = cell
        return (self.origin_x + (col + 0.5) * self.cell_size,
                self.origin_y + (row + 0.5) * self.cell_size)

    def centers(self):
        """Arrays (xs, ys) of cell-center coordinates, each shaped like ``cells``."""
        xs = self.origin_x + (np.arange(self.n_cols) + 0.5) * self.cell_size
        ys = self.origin_y + (np.arange(self.n_rows) + 0.5) * self.cell_size
        return np.meshgrid(xs, ys)

    def entropy_map(self) -> np.ndarray:
        return cell_entropy(self.cells)

    def total_entropy(self) -> float:
        return total_entropy(self)


def total_entropy(grid: BeliefGrid) -> float:
    return float(np.sum(cell_entropy(grid.cells)))


def clamp_belief(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def apply_measurement(grid: BeliefGrid, cell, range_m: float, model, measurement: bool) -> float:
    """Bayes-update one cell with the model's rates at ``range_m``.

    A positive detection uses (tpr, fpr) as likelihoods, a negative one
    (fnr, tnr). Beyond the uninformative range the grid is left untouched.
    """
    col, row = grid._require(cell)
    if range_m < 0:
        raise ValueError("range must be non-negative")
    tpr, fpr, tnr, fnr = model.rates_at_range(range_m)
    p_old = float(grid.cells[row, col])
    if tpr == fpr and fnr == tnr:
        return p_old
    if measurement:
        p_new = bayes_update(p_old, tpr, fpr, True)
    else:
        p_new = bayes_update(p_old, fnr, tnr, False)
    grid.cells[row, col] = float(clamp_belief(p_new))
    return float(grid.cells[row, col])


def expected_update(cells: np.ndarray, rows, cols, ranges, model,
                    confidence_threshold=0.5, clamp_nonnegative=True) -> None:
    """In-place assumed-measurement update of ``cells[rows, cols]``.

    With ``clamp_nonnegative`` an update that would raise a cell's entropy is
    skipped, so the total reward is never negative.
    """
    if len(rows) == 0:
        return
    tpr, fpr, tnr, fnr = model.rates_at_range(ranges)
    p_old = cells[rows, cols]
    p_new = clamp_belief(assumed_posterior(p_old, tpr, fpr, tnr, fnr, confidence_threshold))
    if clamp_nonnegative:
        p_new = np.where(cell_entropy(p_new) <= cell_entropy(p_old), p_new, p_old)
    cells[rows, cols] = p_new


def sampled_update(cells: np.ndarray, rows, cols, ranges, model, detections) -> None:
    """In-place Bayes update from observed detections (bool array per cell)."""
    if len(rows) == 0:
        return
    tpr, fpr, tnr, fnr = model.rates_at_range(ranges)
    det = np.asarray(detections, dtype=bool)
    lik_x = np.where(det, tpr, fnr)
    lik_not_x = np.where(det, fpr, tnr)
    cells[rows, cols] = clamp_belief(bayes_update(cells[rows, cols], lik_x, lik_not_x))


# -- prior-map files ---------------------------------------------------------

_HEADER_KEYS = ("n_cols", "n_rows", "cell_size", "origin_x", "origin_y")


def save_prior_map(grid: BeliefGrid, path) -> None:
    """Header line of key=value pairs, then one line of probabilities per row."""
    header = " ".join(f"{k}={getattr(grid, k)!r}" for k in _HEADER_KEYS)
    lines = [header]
    for row in grid.cells:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_prior_map(path) -> BeliefGrid:
    text = Path(path).read_text().splitlines()
    lines = [ln for ln in text if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty prior map")
    fields = dict(tok.split("=", 1) for tok in lines[0].split())
    missing = [k for k in _HEADER_KEYS if k not in fields]
    if missing:
        raise ValueError(f"{path}: header missing {', '.join(missing)}")
    n_cols, n_rows = int(fields["n_cols"]), int(fields["n_rows"])
    rows = [[float(v) for v in ln.split()] for ln in lines[1:]]
    if len(rows) != n_rows or any(len(r) != n_cols for r in rows):
        raise ValueError(f"{path}: expected {n_rows} rows of {n_cols} values")
    return BeliefGrid(n_cols, n_rows, float(fields["cell_size"]),
                      float(fields["origin_x"]), float(fields["origin_y"]),
                      np.array(rows, dtype=float))


def random_patch_grid(width, height, cell_size, rng, n_patches=4,
                      background=0.001, p_range=(0.8, 0.95),
                      patch_size=(0.08, 0.2), origin=(0.0, 0.0)) -> BeliefGrid:
    """Background grid with rectangular high-prior patches at random spots.

    ``patch_size`` gives the patch edge as a fraction of the map edge.
    """
    grid = BeliefGrid.uniform(width, height, cell_size, background, origin)
    for patch in random_patches(grid.n_cols, grid.n_rows, rng, n_patches, p_range, patch_size):
        c0, r0, c1, r1, p = patch
        grid.cells[r0:r1, c0:c1] = p
    return grid


def random_patches(n_cols, n_rows, rng, n_patches, p_range=(0.8, 0.95), patch_size=(0.08, 0.2)):
    """List of (col0, row0, col1, row1, p) rectangles in cell units, half-open."""
    out = []
    for _ in range(n_patches):
        w = max(1, int(round(rng.uniform(*patch_size) * n_cols)))
        h = max(1, int(round(rng.uniform(*patch_size) * n_rows)))
        c0 = int(rng.integers(0, n_cols - w + 1))
        r0 = int(rng.integers(0, n_rows - h + 1))
        out.append((c0, r0, c0 + w, r0 + h, float(rng.uniform(*p_range))))
    return out
