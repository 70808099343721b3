"""Weighted Haar analysis on a dyadic grid.

A function in L2(mu) is represented by its values on the atoms of mu.  The
splitting intervals of a measure (grid intervals whose two halves both carry
mass) index the weighted Haar basis; an atomic measure has at most
``n_atoms - 1`` of them, so expansions stay sparse.

Martingale differences are stored in the three-averages form, which is zero
whenever a child is uncharged; on splitting intervals it agrees with the
coefficient-times-Haar form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import math

import numpy as np

from .errors import PreconditionViolation, ZeroMass
from .grid import DyadicGrid, GridInterval, is_good
from .measure import AtomicMeasure, _as_interval

__all__ = [
    "WeightedFunction",
    "HaarCoefficients",
    "expectation",
    "haar_function",
    "martingale_difference",
    "expand",
    "reconstruct",
    "good_projection",
    "corona_projection",
    "absolute_haar_multiplier",
    "inner",
    "splitting_nodes",
    "charged_nodes",
    "occupied_nodes",
]


@dataclass(frozen=True)
class WeightedFunction:
    """Values on the atoms of a base measure; an element of L2(base)."""

    base: AtomicMeasure
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.base.n_atoms,):
            raise ValueError("values must align with the atoms of the base measure")
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, base: AtomicMeasure, c: float = 1.0) -> "WeightedFunction":
        return cls(base, np.full(base.n_atoms, float(c)))

    @classmethod
    def identity(cls, base: AtomicMeasure) -> "WeightedFunction":
        """The coordinate function x restricted to the atoms."""
        return cls(base, base.positions_f.copy())

    def norm_sq(self) -> float:
        return float(np.sum(self.values**2 * self.base.masses_f))

    def norm(self) -> float:
        return math.sqrt(self.norm_sq())

    def _check_same_base(self, other: "WeightedFunction"):
        if self.base != other.base:
            raise ValueError("functions live over different base measures")

    def __add__(self, other: "WeightedFunction") -> "WeightedFunction":
        self._check_same_base(other)
        return WeightedFunction(self.base, self.values + other.values)

    def __sub__(self, other: "WeightedFunction") -> "WeightedFunction":
        self._check_same_base(other)
        return WeightedFunction(self.base, self.values - other.values)

    def __mul__(self, c: float) -> "WeightedFunction":
        return WeightedFunction(self.base, self.values * float(c))

    __rmul__ = __mul__

    def __neg__(self) -> "WeightedFunction":
        return WeightedFunction(self.base, -self.values)

    def abs(self) -> "WeightedFunction":
        return WeightedFunction(self.base, np.abs(self.values))

    def restrict(self, i) -> "WeightedFunction":
        """Multiply by the indicator of the interval."""
        lo, hi = self.base.index_range(_as_interval(i))
        v = np.zeros_like(self.values)
        v[lo:hi] = self.values[lo:hi]
        return WeightedFunction(self.base, v)


def inner(f: WeightedFunction, g: WeightedFunction) -> float:
    f._check_same_base(g)
    return float(np.sum(f.values * g.values * f.base.masses_f))


def expectation(f: WeightedFunction, i) -> float:
    """The normalized average of f over the interval; ZeroMass if uncharged."""
    iv = _as_interval(i)
    lo, hi = f.base.index_range(iv)
    mass = float(np.sum(f.base.masses_f[lo:hi]))
    if mass <= 0.0:
        raise ZeroMass(f"interval {iv} carries no mass")
    return float(np.sum(f.values[lo:hi] * f.base.masses_f[lo:hi])) / mass


# ---------------------------------------------------------------------------
# split/charge structure of a measure relative to a grid


@dataclass(frozen=True)
class _Node:
    level: int
    index: int
    lo: int  # atom index range [lo, hi)
    hi: int
    cut: int  # first atom index in the right half (== lo or hi when one-sided)


def _descend(mu: AtomicMeasure, grid: DyadicGrid, keep: Callable[[int, int], bool]):
    """Nodes (level, index, lo, hi, cut) visited while ``keep(lo, hi)`` holds."""
    if mu.n_atoms == 0:
        return []
    root = grid.root_interval
    lo, hi = mu.index_range(root.interval)
    if hi - lo != mu.n_atoms:
        raise PreconditionViolation("measure is not supported inside the grid root")
    out: list[_Node] = []
    stack = [(0, 0, lo, hi)]
    pos = mu.positions_f
    while stack:
        level, index, a, b = stack.pop()
        if not keep(a, b):
            continue
        if level >= grid.depth:
            out.append(_Node(level, index, a, b, b))
            continue
        mid = grid.left0_f + (2 * index + 1) * grid.cell_f(level + 1)
        c = int(np.searchsorted(pos, mid, side="left"))
        c = min(max(c, a), b)
        out.append(_Node(level, index, a, b, c))
        stack.append((level + 1, 2 * index + 1, c, b))
        stack.append((level + 1, 2 * index, a, c))
    return out


@lru_cache(maxsize=1024)
def splitting_nodes(mu: AtomicMeasure, grid: DyadicGrid) -> tuple[_Node, ...]:
    """All grid intervals whose two halves both carry mass, with atom ranges."""
    nodes = _descend(mu, grid, lambda a, b: b - a >= 2)
    return tuple(n for n in nodes if n.lo < n.cut < n.hi)


@lru_cache(maxsize=1024)
def charged_nodes(mu: AtomicMeasure, grid: DyadicGrid) -> tuple[_Node, ...]:
    """All grid intervals holding at least two atoms (the dispersion trunk)."""
    return tuple(_descend(mu, grid, lambda a, b: b - a >= 2))


@lru_cache(maxsize=1024)
def occupied_nodes(mu: AtomicMeasure, grid: DyadicGrid) -> tuple[_Node, ...]:
    """All grid intervals holding at least one atom."""
    return tuple(_descend(mu, grid, lambda a, b: b - a >= 1))


def _interval_of(node: _Node, grid: DyadicGrid) -> GridInterval:
    return GridInterval(grid, node.level, node.index)


# ---------------------------------------------------------------------------
# Haar functions and expansions


def haar_function(i: GridInterval, mu: AtomicMeasure) -> WeightedFunction | None:
    """The L2(mu)-normalized Haar function on i, or None if a half is uncharged."""
    iv = i.interval
    lo, hi = mu.index_range(iv)
    mid = i.center_f
    cut = int(np.searchsorted(mu.positions_f, mid, side="left"))
    m = mu.masses_f
    m_left = float(np.sum(m[lo:cut]))
    m_right = float(np.sum(m[cut:hi]))
    if m_left <= 0.0 or m_right <= 0.0:
        return None
    amp = math.sqrt(m_left * m_right / (m_left + m_right))
    values = np.zeros(mu.n_atoms)
    values[lo:cut] = -amp / m_left
    values[cut:hi] = amp / m_right
    return WeightedFunction(mu, values)


def martingale_difference(f: WeightedFunction, i: GridInterval) -> WeightedFunction:
    """Averages form: 1_{I+} E_{I+} f + 1_{I-} E_{I-} f - 1_I E_I f.

    Zero when either half (or all of I) is uncharged, which keeps the
    telescoping identity exact without special cases.
    """
    mu = f.base
    lo, hi = mu.index_range(i.interval)
    cut = int(np.searchsorted(mu.positions_f, i.center_f, side="left"))
    m = mu.masses_f
    values = np.zeros(mu.n_atoms)
    m_left = float(np.sum(m[lo:cut]))
    m_right = float(np.sum(m[cut:hi]))
    if m_left > 0.0 and m_right > 0.0:
        e_left = float(np.sum(f.values[lo:cut] * m[lo:cut])) / m_left
        e_right = float(np.sum(f.values[cut:hi] * m[cut:hi])) / m_right
        e_full = (m_left * e_left + m_right * e_right) / (m_left + m_right)
        values[lo:cut] = e_left - e_full
        values[cut:hi] = e_right - e_full
    return WeightedFunction(mu, values)


@dataclass(frozen=True)
class HaarCoefficients:
    """Sparse Haar data: root mean plus one coefficient per splitting interval."""

    grid: DyadicGrid
    base: AtomicMeasure
    root_mean: float
    coeffs: dict[tuple[int, int], float]
    _nodes: dict[tuple[int, int], _Node] = field(repr=False, default_factory=dict)

    def coefficient(self, i: GridInterval) -> float:
        return self.coeffs.get(i.key, 0.0)

    def norm_sq(self) -> float:
        """Parseval: squared norm from the coefficients and the root mean."""
        total = self.root_mean**2 * self.base.total_mass
        return total + sum(c * c for c in self.coeffs.values())


def expand(f: WeightedFunction, grid: DyadicGrid) -> HaarCoefficients:
    """Haar coefficients over all splitting intervals, plus the root mean."""
    mu = f.base
    if mu.n_atoms == 0:
        raise ZeroMass("cannot expand over an empty measure")
    nodes = splitting_nodes(mu, grid)
    m = mu.masses_f
    fm = np.concatenate(([0.0], np.cumsum(f.values * m)))
    mm = np.concatenate(([0.0], np.cumsum(m)))
    coeffs: dict[tuple[int, int], float] = {}
    node_map: dict[tuple[int, int], _Node] = {}
    for n in nodes:
        m_left = mm[n.cut] - mm[n.lo]
        m_right = mm[n.hi] - mm[n.cut]
        e_left = (fm[n.cut] - fm[n.lo]) / m_left
        e_right = (fm[n.hi] - fm[n.cut]) / m_right
        amp = math.sqrt(m_left * m_right / (m_left + m_right))
        key = (n.level, n.index)
        coeffs[key] = amp * (e_right - e_left)
        node_map[key] = n
    root_mean = fm[-1] / mm[-1]
    return HaarCoefficients(grid, mu, float(root_mean), coeffs, node_map)


def reconstruct(hc: HaarCoefficients) -> WeightedFunction:
    """Sum the root mean and all coefficient * Haar terms back to atom values."""
    mu = hc.base
    m = mu.masses_f
    mm = np.concatenate(([0.0], np.cumsum(m)))
    values = np.full(mu.n_atoms, hc.root_mean)
    for key, c in hc.coeffs.items():
        n = hc._nodes[key]
        m_left = mm[n.cut] - mm[n.lo]
        m_right = mm[n.hi] - mm[n.cut]
        amp = math.sqrt(m_left * m_right / (m_left + m_right))
        values[n.lo : n.cut] += c * (-amp / m_left)
        values[n.cut : n.hi] += c * (amp / m_right)
    return WeightedFunction(mu, values)


def _accumulate_differences(f: WeightedFunction, nodes) -> np.ndarray:
    """Sum of martingale differences over the given splitting nodes."""
    mu = f.base
    m = mu.masses_f
    fm = np.concatenate(([0.0], np.cumsum(f.values * m)))
    mm = np.concatenate(([0.0], np.cumsum(m)))
    values = np.zeros(mu.n_atoms)
    for n in nodes:
        m_left = mm[n.cut] - mm[n.lo]
        m_right = mm[n.hi] - mm[n.cut]
        e_left = (fm[n.cut] - fm[n.lo]) / m_left
        e_right = (fm[n.hi] - fm[n.cut]) / m_right
        e_full = (fm[n.hi] - fm[n.lo]) / (m_left + m_right)
        values[n.lo : n.cut] += e_left - e_full
        values[n.cut : n.hi] += e_right - e_full
    return values


def good_projection(f: WeightedFunction, grid: DyadicGrid, eps: float, r: int) -> WeightedFunction:
    """Sum of martingale differences over the good splitting intervals only."""
    nodes = [
        n
        for n in splitting_nodes(f.base, grid)
        if is_good(GridInterval(grid, n.level, n.index), eps, r)
    ]
    return WeightedFunction(f.base, _accumulate_differences(f, nodes))


def corona_projection(f: WeightedFunction, stopping, F: GridInterval) -> WeightedFunction:
    """Projection onto the corona of F: differences at intervals whose
    minimal containing stopping interval is F."""
    if F.key not in stopping.member_keys:
        raise PreconditionViolation(f"{F} is not a member of the stopping family")
    grid = F.grid
    member_keys = stopping.member_keys

    def pi_key(level: int, index: int) -> tuple[int, int] | None:
        lev, idx = level, index
        while True:
            if (lev, idx) in member_keys:
                return (lev, idx)
            if lev == 0:
                return None
            lev, idx = lev - 1, idx // 2

    nodes = [
        n for n in splitting_nodes(f.base, grid) if pi_key(n.level, n.index) == F.key
    ]
    return WeightedFunction(f.base, _accumulate_differences(f, nodes))


def absolute_haar_multiplier(g: WeightedFunction, grid: DyadicGrid) -> WeightedFunction:
    """Flip every Haar coefficient positive; the root mean is dropped.

    For mean-zero input this is an isometry on L2(base).
    """
    hc = expand(g, grid)
    flipped = HaarCoefficients(
        hc.grid,
        hc.base,
        0.0,
        {k: abs(c) for k, c in hc.coeffs.items()},
        hc._nodes,
    )
    return reconstruct(flipped)
