"""Stopping intervals, coronas, and the above/below bilinear forms.

The stopping construction starts from the top interval with the average of
|f| as its control value and descends: a maximal subinterval stops when its
Poisson-energy product passes the threshold 10 c0 h^2 sigma(I), or when the
average of |f| grows tenfold; control values refresh only when the average
at least doubles.  The resulting family packs with Carleson constant 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import energy
from .errors import PreconditionViolation
from .grid import DyadicGrid, GridInterval
from .haar import (
    WeightedFunction,
    corona_projection,
    splitting_nodes,
)
from .measure import AtomicMeasure
from .params import DEFAULT_BELOW_GAP, DEFAULT_C0
from .poisson import poisson_stationary

__all__ = [
    "StoppingData",
    "UniformitySpec",
    "energy_stopping_intervals",
    "calibrate_c0",
    "build_stopping_data",
    "carleson_check",
    "quasi_norm",
    "uniformity_check",
    "b_above",
    "corona_split",
    "reduction_residual",
    "ReductionResidual",
    "local_estimate_ratios",
]


@dataclass(frozen=True)
class StoppingData:
    """The stopping family with control values and trigger tags."""

    root: GridInterval
    members: tuple[GridInterval, ...]
    alpha: dict
    reason: dict
    children: dict

    @property
    def member_keys(self) -> frozenset:
        return frozenset(m.key for m in self.members)

    def pi(self, i: GridInterval) -> GridInterval | None:
        """Minimal member containing i (i itself when i is a member)."""
        lev, idx = i.level, i.index
        keys = self.member_keys
        grid = self.root.grid
        while True:
            if (lev, idx) in keys:
                return GridInterval(grid, lev, idx)
            if lev == 0:
                return None
            lev, idx = lev - 1, idx // 2

    def family_children(self, F: GridInterval) -> tuple[GridInterval, ...]:
        return self.children.get(F.key, ())


@dataclass(frozen=True)
class UniformitySpec:
    """Top interval, a disjoint exceptional family inside it, and the
    energy-threshold scale."""

    i0: GridInterval
    s_family: tuple[GridInterval, ...]
    c0: float = DEFAULT_C0

    def __post_init__(self):
        for s in self.s_family:
            if not self.i0.contains(s):
                raise ValueError(f"{s} is not inside {self.i0}")
        items = sorted(self.s_family, key=lambda g: (g.level, g.index))
        for a in range(len(items)):
            for b in range(a + 1, len(items)):
                if items[a].contains(items[b]) or items[b].contains(items[a]):
                    raise ValueError("s_family must be pairwise disjoint")


# ---------------------------------------------------------------------------
# energy stopping


def _trunk_children(w: AtomicMeasure, grid: DyadicGrid):
    """Map from trunk keys to child keys that still hold >= 2 w atoms,
    together with every trunk key's atom range."""
    from .haar import charged_nodes

    nodes = charged_nodes(w, grid)
    keys = {(n.level, n.index): n for n in nodes}
    return keys


def _energy_condition(
    parent_sigma: AtomicMeasure,
    candidate: GridInterval,
    w: AtomicMeasure,
    h_const: float,
    c0: float,
) -> bool:
    e2w = energy(w, candidate) * w.mass_on(candidate.interval)
    if e2w == 0.0:
        return False
    p = poisson_stationary(parent_sigma, candidate)
    return p * p * e2w > 10.0 * c0 * h_const**2 * parent_sigma.mass_on(
        candidate.interval
    )


def energy_stopping_intervals(
    i0: GridInterval,
    sigma: AtomicMeasure,
    w: AtomicMeasure,
    h_const: float,
    c0: float,
    grid: DyadicGrid,
) -> list[GridInterval]:
    """Maximal grid intervals strictly inside i0 whose Poisson-energy
    product strictly exceeds 10 c0 h^2 sigma(I); children of selected
    intervals are not descended into."""
    if h_const <= 0:
        raise PreconditionViolation("h_const must be positive")
    sig0 = sigma.restrict(i0.interval)
    trunk = _trunk_children(w, grid)
    out: list[GridInterval] = []
    if i0.level >= grid.depth:
        return out

    def descend(gi: GridInterval):
        if (gi.level, gi.index) not in trunk:
            return
        if gi.key != i0.key and _energy_condition(sig0, gi, w, h_const, c0):
            out.append(gi)
            return
        if gi.level < grid.depth:
            for child in gi.children():
                descend(child)

    for child in i0.children():
        descend(child)
    return out


def calibrate_c0(
    i0: GridInterval,
    sigma: AtomicMeasure,
    w: AtomicMeasure,
    h_const: float,
    grid: DyadicGrid,
    start: float = DEFAULT_C0,
) -> float:
    """Smallest doubling of ``start`` at which the selected mass drops to
    sigma(i0)/10.  The selected union shrinks as c0 grows, so this ends."""
    budget = sigma.mass_on(i0.interval) / 10.0
    c0 = start
    for _ in range(200):
        chosen = energy_stopping_intervals(i0, sigma, w, h_const, c0, grid)
        mass = sum(sigma.mass_on(F.interval) for F in chosen)
        if mass <= budget:
            return c0
        c0 *= 2.0
    raise RuntimeError("energy-stopping calibration did not settle")


# ---------------------------------------------------------------------------
# stopping data


def build_stopping_data(
    f: WeightedFunction,
    i0: GridInterval,
    sigma: AtomicMeasure,
    w: AtomicMeasure,
    h_const: float,
    c0: float,
    grid: DyadicGrid,
) -> StoppingData:
    """Stopping family for f: start at i0 with the average of |f|; stop at
    maximal descendants that energy-stop or whose average of |f| reaches ten
    times the control value; refresh the control value only when the average
    at least doubles."""
    if f.base != sigma:
        raise PreconditionViolation("f must live over sigma")
    if f.norm() == 0.0:
        raise PreconditionViolation("f must be nonzero")
    lo0, hi0 = sigma.index_range(i0.interval)
    if hi0 - lo0 == 0:
        raise PreconditionViolation("f must be supported on i0")
    absf = np.abs(f.values)
    mpref = np.concatenate(([0.0], np.cumsum(sigma.masses_f)))
    fpref = np.concatenate(([0.0], np.cumsum(absf * sigma.masses_f)))

    def avg_abs(gi: GridInterval) -> float:
        lo, hi = sigma.index_range(gi.interval)
        mass = mpref[hi] - mpref[lo]
        if mass <= 0.0:
            return 0.0
        return (fpref[hi] - fpref[lo]) / mass

    trunk = _trunk_children(w, grid)
    members: list[GridInterval] = [i0]
    alpha: dict = {i0.key: avg_abs(i0)}
    reason: dict = {i0.key: "root"}
    children: dict = {}

    def sigma_count(gi: GridInterval) -> int:
        lo, hi = sigma.index_range(gi.interval)
        return hi - lo

    def w_count(gi: GridInterval) -> int:
        lo, hi = w.index_range(gi.interval)
        return hi - lo

    def find_children(F: GridInterval, aF: float) -> list[GridInterval]:
        sigF = sigma.restrict(F.interval)
        found: list[GridInterval] = []

        def descend(gi: GridInterval):
            ns = sigma_count(gi)
            nw = w_count(gi)
            if ns == 0 and nw < 2:
                return
            energy_hit = (gi.level, gi.index) in trunk and _energy_condition(
                sigF, gi, w, h_const, c0
            )
            avg_hit = ns > 0 and aF > 0 and avg_abs(gi) >= 10.0 * aF
            if energy_hit or avg_hit:
                found.append(gi)
                reason_tag[gi.key] = "energy" if energy_hit else "average"
                return
            if gi.level < grid.depth and (ns >= 2 or nw >= 2 or (ns >= 1 and nw >= 1)):
                for child in gi.children():
                    descend(child)

        reason_tag: dict = {}
        if F.level < grid.depth:
            for child in F.children():
                descend(child)
        for g in found:
            reason[g.key] = reason_tag[g.key]
        return found

    stack = [i0]
    while stack:
        F = stack.pop()
        aF = alpha[F.key]
        kids = find_children(F, aF)
        children[F.key] = tuple(kids)
        for child in kids:
            a_child = avg_abs(child)
            alpha[child.key] = aF if a_child < 2.0 * aF else a_child
            members.append(child)
            stack.append(child)
    members_sorted = tuple(
        sorted(members, key=lambda g: (g.level, g.index))
    )
    return StoppingData(i0, members_sorted, alpha, reason, children)


def carleson_check(stopping: StoppingData, sigma: AtomicMeasure) -> float:
    """Max over members S of (sum of sigma(F) over members F inside S) / sigma(S)."""
    worst = 0.0
    members = stopping.members
    for S in members:
        s_mass = sigma.mass_on(S.interval)
        total = sum(sigma.mass_on(F.interval) for F in members if S.contains(F))
        if s_mass > 0.0:
            worst = max(worst, total / s_mass)
        elif total > 0.0:
            return math.inf
    return worst


def quasi_norm(stopping: StoppingData, sigma: AtomicMeasure) -> float:
    """Exact sigma-norm of the overlapping sum of alpha(F) indicators."""
    acc = np.zeros(sigma.n_atoms)
    for F in stopping.members:
        lo, hi = sigma.index_range(F.interval)
        acc[lo:hi] += stopping.alpha[F.key]
    return math.sqrt(float(np.sum(acc**2 * sigma.masses_f)))


def uniformity_check(
    f: WeightedFunction,
    spec: UniformitySpec,
    sigma: AtomicMeasure,
    w: AtomicMeasure,
    h_const: float,
    grid: DyadicGrid,
    tol: float = 1e-12,
) -> tuple[bool, list[str]]:
    """The three uniformity clauses, quantified over grid intervals in i0.

    (1) every energy-stopping interval of i0 sits inside some member of the
    exceptional family; (2) f is constant on each member; (3) the average of
    |f| is at most one on every charged grid interval not inside a member.
    """
    violations: list[str] = []
    s_keys = [s.key for s in spec.s_family]

    def inside_some_s(gi: GridInterval) -> bool:
        return any(s.contains(gi) for s in spec.s_family)

    for F in energy_stopping_intervals(spec.i0, sigma, w, h_const, spec.c0, grid):
        if not inside_some_s(F):
            violations.append(f"energy stop {F} escapes the exceptional family")
    scale = max(1.0, float(np.max(np.abs(f.values))) if f.base.n_atoms else 1.0)
    for s in spec.s_family:
        lo, hi = sigma.index_range(s.interval)
        if hi - lo >= 2:
            vals = f.values[lo:hi]
            if float(np.max(vals) - np.min(vals)) > tol * scale:
                violations.append(f"f is not constant on {s}")
    absf = np.abs(f.values)
    mpref = np.concatenate(([0.0], np.cumsum(sigma.masses_f)))
    fpref = np.concatenate(([0.0], np.cumsum(absf * sigma.masses_f)))

    def descend(gi: GridInterval):
        if inside_some_s(gi):
            return
        lo, hi = sigma.index_range(gi.interval)
        if hi - lo == 0:
            return
        mass = mpref[hi] - mpref[lo]
        avg = (fpref[hi] - fpref[lo]) / mass
        if avg > 1.0 + tol:
            violations.append(f"average of |f| on {gi} is {avg:.6g} > 1")
        if gi.level < grid.depth and hi - lo >= 1:
            for child in gi.children():
                descend(child)

    descend(spec.i0)
    return (not violations), violations


# ---------------------------------------------------------------------------
# bilinear forms


def _kernel_prefix(sigma: AtomicMeasure, w: AtomicMeasure) -> np.ndarray:
    """C[a, k] = sum over the first a sigma atoms of sigma_i / (y_i - x_k)."""
    diffs = sigma.positions_f[:, None] - w.positions_f[None, :]
    if np.any(diffs == 0.0):
        from .errors import AtomCollision

        raise AtomCollision("the measures share a position")
    M = (1.0 / diffs) * sigma.masses_f[:, None]
    return np.concatenate([np.zeros((1, w.n_atoms)), np.cumsum(M, axis=0)], axis=0)


def _b_form(f: WeightedFunction, g: WeightedFunction, grid: DyadicGrid, gap: int) -> float:
    """sum over source-splitting I and target-splitting J at least ``gap``
    levels below, of the value of the I-difference of f on the child
    containing J, times the raw-kernel pairing of that child against the
    J-difference of g."""
    sigma, w = f.base, g.base
    if sigma.n_atoms == 0 or w.n_atoms == 0:
        return 0.0
    s_nodes = splitting_nodes(sigma, grid)
    w_nodes = splitting_nodes(w, grid)
    if not s_nodes or not w_nodes:
        return 0.0
    C = _kernel_prefix(sigma, w)
    m = sigma.masses_f
    fm = np.concatenate(([0.0], np.cumsum(f.values * m)))
    mm = np.concatenate(([0.0], np.cumsum(m)))
    wmass = w.masses_f
    gm = np.concatenate(([0.0], np.cumsum(g.values * wmass)))
    wm = np.concatenate(([0.0], np.cumsum(wmass)))
    total = 0.0
    for ni in s_nodes:
        m_left = mm[ni.cut] - mm[ni.lo]
        m_right = mm[ni.hi] - mm[ni.cut]
        e_left = (fm[ni.cut] - fm[ni.lo]) / m_left
        e_right = (fm[ni.hi] - fm[ni.cut]) / m_right
        e_full = (fm[ni.hi] - fm[ni.lo]) / (m_left + m_right)
        for nj in w_nodes:
            dl = nj.level - ni.level
            if dl < gap:
                continue
            if (nj.index >> dl) != ni.index:
                continue
            child_bit = (nj.index >> (dl - 1)) & 1
            if child_bit == 0:
                slo, shi = ni.lo, ni.cut
                dval = e_left - e_full
            else:
                slo, shi = ni.cut, ni.hi
                dval = e_right - e_full
            if dval == 0.0 or shi == slo:
                continue
            mjl = wm[nj.cut] - wm[nj.lo]
            mjr = wm[nj.hi] - wm[nj.cut]
            gl = (gm[nj.cut] - gm[nj.lo]) / mjl
            gr = (gm[nj.hi] - gm[nj.cut]) / mjr
            gf = (gm[nj.hi] - gm[nj.lo]) / (mjl + mjr)
            row = C[shi, nj.lo : nj.hi] - C[slo, nj.lo : nj.hi]
            dg = np.empty(nj.hi - nj.lo)
            dg[: nj.cut - nj.lo] = gl - gf
            dg[nj.cut - nj.lo :] = gr - gf
            inner = float(np.sum(wmass[nj.lo : nj.hi] * dg * row))
            total += dval * inner
    return total


def b_above(
    f: WeightedFunction,
    g: WeightedFunction,
    grid: DyadicGrid,
    below_gap: int = DEFAULT_BELOW_GAP,
    side: str = "above",
) -> float:
    """The above-diagonal bilinear form; ``side='below'`` swaps the roles.

    Exact double sum with the raw kernel; the caller supplies mean-zero
    functions with good Haar supports when the classical bounds are being
    instrumented.
    """
    if side == "above":
        return _b_form(f, g, grid, below_gap)
    if side == "below":
        return _b_form(g, f, grid, below_gap)
    raise ValueError("side must be 'above' or 'below'")


def corona_split(
    f: WeightedFunction,
    g: WeightedFunction,
    stopping: StoppingData,
    grid: DyadicGrid,
    below_gap: int = DEFAULT_BELOW_GAP,
) -> tuple[float, float]:
    """Diagonal corona part of the above form, and the cross-corona rest.

    split_value sums the form over matching corona projections of f and g;
    residual is b_above(f, g) minus that, so the two add back exactly.
    """
    total = b_above(f, g, grid, below_gap)
    split_value = 0.0
    for F in stopping.members:
        pf = corona_projection(f, stopping, F)
        qg = corona_projection(g, stopping, F)
        if np.any(pf.values != 0.0) and np.any(qg.values != 0.0):
            split_value += b_above(pf, qg, grid, below_gap)
    return split_value, total - split_value


@dataclass(frozen=True)
class ReductionResidual:
    inner_product: float
    b_above: float
    b_below: float
    residual_ratio: float


def reduction_residual(
    f: WeightedFunction,
    g: WeightedFunction,
    grid: DyadicGrid,
    h_const: float,
    below_gap: int = DEFAULT_BELOW_GAP,
) -> ReductionResidual:
    """The raw pairing, both diagonal forms, and the normalized residual
    |pairing - above - below| / (h ||f|| ||g||)."""
    from .hilbert import hilbert_pairing

    inner = hilbert_pairing(f, g)
    ba = b_above(f, g, grid, below_gap)
    bb = b_above(f, g, grid, below_gap, side="below")
    denom = h_const * f.norm() * g.norm()
    ratio = abs(inner - ba - bb) / denom if denom > 0 else 0.0
    return ReductionResidual(inner, ba, bb, ratio)


def local_estimate_ratios(
    f: WeightedFunction,
    g: WeightedFunction,
    stopping: StoppingData,
    grid: DyadicGrid,
    below_gap: int = DEFAULT_BELOW_GAP,
) -> list[float]:
    """Per-corona ratios |B(f_u, g_a)| / ((sigma(F)^(1/2) + ||f_u||) ||g_a||).

    f_u is the corona piece of f rescaled by its own bounded-averages
    constant times the control value, so it is uniform with constant one
    w.r.t. the family children of F; g_a is the matching corona piece of g.
    """
    sigma = f.base
    out: list[float] = []
    for F in stopping.members:
        aF = stopping.alpha[F.key]
        if aF <= 0:
            continue
        pf = corona_projection(f, stopping, F)
        qg = corona_projection(g, stopping, F)
        if not np.any(pf.values != 0.0) or not np.any(qg.values != 0.0):
            continue
        cF = _bounded_average_constant(pf, F, stopping, sigma, grid) / aF
        if cF <= 0:
            continue
        scale = 1.0 / (cF * aF)
        fu = pf * scale
        denom = (math.sqrt(sigma.mass_on(F.interval)) + fu.norm()) * qg.norm()
        if denom == 0.0:
            continue
        out.append(abs(b_above(fu, qg, grid, below_gap)) / denom)
    return out


def _bounded_average_constant(
    pf: WeightedFunction,
    F: GridInterval,
    stopping: StoppingData,
    sigma: AtomicMeasure,
    grid: DyadicGrid,
) -> float:
    """max over charged grid intervals inside F, not inside a family child,
    of the average of |pf|."""
    s_children = stopping.family_children(F)
    absf = np.abs(pf.values)
    mpref = np.concatenate(([0.0], np.cumsum(sigma.masses_f)))
    fpref = np.concatenate(([0.0], np.cumsum(absf * sigma.masses_f)))
    worst = 0.0

    def descend(gi: GridInterval):
        nonlocal worst
        if any(s.contains(gi) for s in s_children):
            return
        lo, hi = sigma.index_range(gi.interval)
        if hi == lo:
            return
        mass = mpref[hi] - mpref[lo]
        avg = (fpref[hi] - fpref[lo]) / mass
        worst = max(worst, avg)
        if gi.level < grid.depth:
            for child in gi.children():
                descend(child)

    descend(F)
    return worst
