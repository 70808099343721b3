"""Stationary Poisson quantities, the half-plane extension and its dual.

The stationary quantity P(mu, I) integrates |I| / (|I|^2 + dist(x, I)^2)
with distance taken to the closed hull of I, so it agrees with the upper
half-plane extension evaluated at (center, |I|) up to a factor in [1, 2]:
dist(x, I) <= |x - center| <= dist(x, I) + |I|/2 squeezes the two kernels
within that band.  No 1/pi normalization anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import DyadicGrid, GridInterval, f_parent, is_good
from .haar import WeightedFunction, expand, splitting_nodes
from .measure import AtomicMeasure, _as_interval

__all__ = [
    "HalfPlaneMeasure",
    "poisson_stationary",
    "poisson_extension",
    "dual_poisson",
    "default_j_families",
    "maximal_intervals",
    "mu_measure",
    "poisson_testing",
    "PoissonTestResult",
    "poisson_local_comparison",
]


def poisson_stationary(mu: AtomicMeasure, i) -> float:
    """P(mu, I): exact atom sum of |I| / (|I|^2 + dist(x, I)^2)."""
    iv = _as_interval(i)
    if mu.n_atoms == 0:
        return 0.0
    length = iv.length_f
    dist = np.maximum(0.0, np.maximum(iv.left_f - mu.positions_f, mu.positions_f - iv.right_f))
    return float(np.sum(mu.masses_f * length / (length**2 + dist**2)))


def poisson_extension(mu: AtomicMeasure, x: float, t: float) -> float:
    """The upper half-plane extension: atom sum of t / (t^2 + (x - y)^2)."""
    if t <= 0:
        raise ValueError("t must be positive")
    if mu.n_atoms == 0:
        return 0.0
    return float(np.sum(mu.masses_f * t / (t**2 + (x - mu.positions_f) ** 2)))


@dataclass(frozen=True)
class HalfPlaneMeasure:
    """Point masses in the open upper half plane, tagged by origin.

    Tags record the (stopping interval, maximal interval) keys each atom was
    built from; purely for traceability.
    """

    xs: tuple[float, ...]
    ts: tuple[float, ...]
    masses: tuple[float, ...]
    tags: tuple[tuple[tuple[int, int], tuple[int, int]], ...] = ()

    def __post_init__(self):
        if not (len(self.xs) == len(self.ts) == len(self.masses)):
            raise ValueError("xs, ts, masses must have equal length")
        if any(t <= 0 for t in self.ts):
            raise ValueError("heights must be positive")
        if any(m < 0 for m in self.masses):
            raise ValueError("masses must be non-negative")

    @property
    def n_atoms(self) -> int:
        return len(self.xs)

    @cached_property
    def xs_f(self) -> np.ndarray:
        return np.array(self.xs, dtype=float)

    @cached_property
    def ts_f(self) -> np.ndarray:
        return np.array(self.ts, dtype=float)

    @cached_property
    def masses_f(self) -> np.ndarray:
        return np.array(self.masses, dtype=float)

    def box_mask(self, box) -> np.ndarray:
        """Atoms inside box x [0, |box|] (half-open in x, closed in t)."""
        iv = _as_interval(box)
        return (
            (self.xs_f >= iv.left_f)
            & (self.xs_f < iv.right_f)
            & (self.ts_f <= iv.length_f)
        )


def dual_poisson(hp: HalfPlaneMeasure, box, x: float) -> float:
    """Dual operator: sum over atoms in the box of t^2/(t^2 + |x - xq|^2) mass."""
    if hp.n_atoms == 0:
        return 0.0
    mask = hp.box_mask(box)
    t = hp.ts_f[mask]
    xq = hp.xs_f[mask]
    m = hp.masses_f[mask]
    return float(np.sum(m * t**2 / (t**2 + (x - xq) ** 2)))


# ---------------------------------------------------------------------------
# the discrete half-plane weight built from a stopping family


def default_j_families(
    family,
    w: AtomicMeasure,
    grid: DyadicGrid,
    eps: float,
    r: int,
    below_gap: int,
) -> dict[tuple[int, int], list[GridInterval]]:
    """For each stopping interval F, the good w-splitting J strictly below it.

    J qualifies when it is (eps, r)-good, J is at least ``below_gap`` levels
    below F inside F, and F is the minimal family member containing J.  Only
    intervals where the w-Haar function exists are kept, since nothing else
    contributes to the projections.
    """
    members = list(family)
    out: dict[tuple[int, int], list[GridInterval]] = {m.key: [] for m in members}
    for n in splitting_nodes(w, grid):
        J = GridInterval(grid, n.level, n.index)
        parent = f_parent(J, members, s=1)
        if parent is None:
            continue
        if J.level - parent.level < below_gap:
            continue
        if not is_good(J, eps, r):
            continue
        out[parent.key].append(J)
    return out


def maximal_intervals(intervals) -> list[GridInterval]:
    """The members not contained in any other member."""
    items = sorted(intervals, key=lambda j: (j.level, j.index))
    out: list[GridInterval] = []
    for j in items:
        if not any(k.contains(j) for k in out):
            out.append(j)
    return out


def mu_measure(
    family,
    w: AtomicMeasure,
    grid: DyadicGrid,
    j_families: dict[tuple[int, int], list[GridInterval]],
) -> HalfPlaneMeasure:
    """One half-plane atom per (F, maximal J): location (center, |J|), mass
    the squared norm of the projection of x/|J| onto the Haar span of the
    family members inside J."""
    ident = WeightedFunction.identity(w) if w.n_atoms else None
    coeffs = expand(ident, grid).coeffs if ident is not None else {}
    xs: list[float] = []
    ts: list[float] = []
    masses: list[float] = []
    tags: list[tuple[tuple[int, int], tuple[int, int]]] = []
    for F in family:
        js = j_families.get(F.key, [])
        if not js:
            continue
        for jstar in maximal_intervals(js):
            mass = sum(
                coeffs.get(j.key, 0.0) ** 2
                for j in js
                if jstar.contains(j)
            ) / jstar.length_f**2
            xs.append(jstar.center_f)
            ts.append(jstar.length_f)
            masses.append(mass)
            tags.append((F.key, jstar.key))
    return HalfPlaneMeasure(tuple(xs), tuple(ts), tuple(masses), tuple(tags))


@dataclass(frozen=True)
class PoissonTestResult:
    forward_lhs: float
    forward_rhs: float
    forward_ratio: float
    dual_lhs: float
    dual_rhs: float
    dual_ratio: float
    zero_denominator: bool


def poisson_testing(
    i: GridInterval,
    sigma: AtomicMeasure,
    hp: HalfPlaneMeasure,
    h_const: float,
    a2_const: float,
) -> PoissonTestResult:
    """Both sides of the two Poisson testing inequalities on one interval.

    Forward: the extension of sigma restricted to I, squared, integrated
    against the half-plane weight, versus h_const^2 sigma(I).  Dual: the
    squared dual operator of the boxed weight integrated in sigma, versus
    a2_const times the boxed second moment.  Ratios are 0 when both sides
    vanish; a zero denominator with sides reported sets the flag.
    """
    iv = i.interval
    sig_i = sigma.restrict(iv)
    fwd_lhs = 0.0
    if hp.n_atoms and sig_i.n_atoms:
        ext = np.array(
            [poisson_extension(sig_i, x, t) for x, t in zip(hp.xs_f, hp.ts_f)]
        )
        fwd_lhs = float(np.sum(ext**2 * hp.masses_f))
    fwd_rhs = h_const**2 * sig_i.total_mass
    mask = hp.box_mask(iv) if hp.n_atoms else np.zeros(0, dtype=bool)
    dual_rhs_raw = (
        float(np.sum(hp.ts_f[mask] ** 2 * hp.masses_f[mask])) if hp.n_atoms else 0.0
    )
    dual_lhs = 0.0
    if sigma.n_atoms and hp.n_atoms:
        dp = np.array([dual_poisson(hp, iv, x) for x in sigma.positions_f])
        dual_lhs = float(np.sum(sigma.masses_f * dp**2))
    dual_rhs = a2_const * dual_rhs_raw
    zero_den = fwd_rhs == 0.0 or dual_rhs == 0.0

    def _ratio(lhs, rhs):
        if rhs > 0.0:
            return lhs / rhs
        return 0.0 if lhs == 0.0 else math.inf

    return PoissonTestResult(
        fwd_lhs,
        fwd_rhs,
        _ratio(fwd_lhs, fwd_rhs),
        dual_lhs,
        dual_rhs,
        _ratio(dual_lhs, dual_rhs),
        zero_den,
    )


def poisson_local_comparison(
    j: GridInterval,
    i: GridInterval,
    i0: GridInterval,
    sigma: AtomicMeasure,
    eps: float,
) -> tuple[float, float]:
    """Both sides of |J|^(2 eps - 1) P(sigma (I0 - I), J) <~ |I|^(2 eps - 1) P(..., I).

    The caller guarantees j is good and strictly below i; containment is
    checked here.
    """
    from .errors import PreconditionViolation

    if not (i.contains(j) and j.level > i.level):
        raise PreconditionViolation("j must be strictly inside i")
    if not i0.contains(i):
        raise PreconditionViolation("i must lie inside i0")
    holes = sigma.restrict(i0.interval).restrict_complement(i.interval)
    lhs = j.length_f ** (2 * eps - 1) * poisson_stationary(holes, j)
    rhs = i.length_f ** (2 * eps - 1) * poisson_stationary(holes, i)
    return lhs, rhs
