"""
Discrete measures, stacks of carpets and the mass-concentration machinery:
thickness fractions, the exact constant budgets q and Q, thick-center mass,
boundary-ratio scans and coarse-dimension witnesses.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from besicover.covering import Carpet
from besicover.geometry import LatticeBall, annulus_offsets, ball_offsets
from utils.config import get_setting
from utils.error_handlers import (
    DimensionMismatchError,
    HypothesisViolationError,
    ResourceCapError,
    UndefinedFractionError,
    require,
)
from utils.rationals import ceil_sqrt, to_fraction
from utils.trials import parallel_map

logger = logging.getLogger(__name__)

ADJACENT = 'adjacent'
SQUARED = 'squared'
GROWTH_MODES = (ADJACENT, SQUARED)


class DiscreteMeasure:
    """
    A finitely supported measure on Z^d with positive rational atom masses.
    The support is kept in lexicographic order.
    """

    def __init__(self, masses, d=None):
        cleaned = {}
        for point, mass in dict(masses).items():
            point = tuple(int(x) for x in point)
            mass = to_fraction(mass)
            require(mass > 0, f"Atom mass at {point} must be positive, got {mass}")
            cleaned[point] = cleaned.get(point, Fraction(0)) + mass
        dims = {len(p) for p in cleaned}
        require(len(dims) <= 1, "All atoms must lie in the same Z^d", DimensionMismatchError)
        if d is None:
            require(len(dims) == 1, "An empty measure needs an explicit dimension")
            d = dims.pop()
        else:
            require(not dims or dims == {d}, f"Atoms do not lie in Z^{d}", DimensionMismatchError)
        self.d = d
        self.support = tuple(sorted(cleaned))
        self._masses = cleaned
        self.total = sum(cleaned.values(), Fraction(0))

    @classmethod
    def counting(cls, points, d=None):
        return cls({tuple(p): 1 for p in points}, d)

    @classmethod
    def uniform(cls, points, d=None):
        points = {tuple(p) for p in points}
        require(points, "A uniform measure needs at least one point")
        return cls({p: Fraction(1, len(points)) for p in points}, d)

    def __len__(self):
        return len(self.support)

    def __eq__(self, other):
        return isinstance(other, DiscreteMeasure) and self._masses == other._masses

    def __repr__(self):
        return f"DiscreteMeasure(atoms={len(self.support)}, total={self.total})"

    @property
    def support_size(self):
        return len(self.support)

    def support_point(self, index):
        return self.support[index]

    def items(self):
        return ((p, self._masses[p]) for p in self.support)

    def mass_at(self, point):
        return self._masses.get(tuple(point), Fraction(0))

    def mass(self, points):
        """mu(S); repeated points are counted once."""
        return sum((self.mass_at(p) for p in {tuple(p) for p in points}), Fraction(0))

    def mass_where(self, predicate):
        return sum((m for p, m in self.items() if predicate(p)), Fraction(0))

    def restrict(self, points):
        keep = {tuple(p) for p in points}
        return DiscreteMeasure({p: m for p, m in self.items() if p in keep}, self.d)

    @cached_property
    def _support_array(self):
        return np.array(self.support, dtype=np.int64).reshape(-1, self.d)

    @cached_property
    def _mass_list(self):
        return [self._masses[p] for p in self.support]

    def _masked_mass(self, mask):
        return sum((self._mass_list[i] for i in np.flatnonzero(mask)), Fraction(0))

    def _offsets_from(self, center):
        require(len(center) == self.d, f"Center {tuple(center)} does not lie in Z^{self.d}", DimensionMismatchError)
        return self._support_array - np.array(center, dtype=np.int64)

    def ball_mass(self, ball):
        """mu(B) for a lattice ball or any ball-like set."""
        if not self.support:
            return Fraction(0)
        if hasattr(ball, 'contains_array'):
            return self._masked_mass(ball.contains_array(self._support_array))
        return self.mass_where(ball.contains)

    def annulus_mass(self, center, norm, outer, inner):
        """mu of {u : ||u - x|| <= outer and not ||u - x|| <= inner}."""
        if not self.support:
            return Fraction(0)
        offsets = self._offsets_from(center)
        mask = norm.within_array(offsets, outer)
        if to_fraction(inner) >= 0:
            mask &= ~norm.within_array(offsets, inner)
        return self._masked_mass(mask)

    def thick_boundary_mass(self, ball, thickness=1):
        """mu(d_t B) = mu(B_{r+t} minus B_{r-t})."""
        return self.annulus_mass(ball.center, ball.norm, ball.radius + thickness, ball.radius - thickness)

    def boundary_mass(self, center, r, norm):
        """Mass of the lattice sphere r - 1 < ||u - x|| <= r."""
        return self.annulus_mass(center, norm, r, to_fraction(r) - 1)

    def scan_masses(self, center, r, norm):
        """(boundary mass, ball mass) at radius r in lattice units."""
        return self.boundary_mass(center, r, norm), self.annulus_mass(center, norm, r, -1)


class DyadicMeasure:
    """
    The uniform probability measure on the dyadic grid 2^-m Z^d in [0,1]^d,
    optionally restricted to a subset of grid points.

    Points are stored as integer grid coordinates in [0, 2^m]^d; radii are
    given in [0,1] units and boundaries are exact spheres ||u - x|| = r.
    """

    def __init__(self, m, d, points=None):
        require(isinstance(m, int) and m >= 0, f"Grid exponent must be a nonnegative integer, got {m!r}")
        require(isinstance(d, int) and d >= 1, f"Dimension must be a positive integer, got {d!r}")
        self.m = m
        self.d = d
        self.side = 2 ** m
        self._restricted = None
        if points is not None:
            points = {tuple(int(x) for x in p) for p in points}
            require(points, "A restricted dyadic measure needs at least one grid point")
            for p in points:
                require(len(p) == d, f"Grid point {p} does not lie in Z^{d}", DimensionMismatchError)
                require(all(0 <= x <= self.side for x in p), f"Grid point {p} lies outside [0, 2^{m}]^{d}")
            self._restricted = DiscreteMeasure.uniform(points, d)
        self.total = Fraction(1)

    @property
    def support_size(self):
        if self._restricted is not None:
            return self._restricted.support_size
        return (self.side + 1) ** self.d

    def support_point(self, index):
        if self._restricted is not None:
            return self._restricted.support_point(index)
        return tuple(int(x) for x in np.unravel_index(index, (self.side + 1,) * self.d))

    def mass_at(self, point):
        if self._restricted is not None:
            return self._restricted.mass_at(point)
        if len(point) == self.d and all(0 <= x <= self.side for x in point):
            return Fraction(1, self.support_size)
        return Fraction(0)

    def lattice_radius(self, r):
        return to_fraction(r) * self.side

    def _count_in_grid(self, offsets, center):
        shifted = offsets + np.array(center, dtype=np.int64)
        return int(np.all((shifted >= 0) & (shifted <= self.side), axis=1).sum())

    def scan_masses(self, center, r, norm):
        """(mass of the exact sphere, mass of the closed ball) at radius r in [0,1] units."""
        R = self.lattice_radius(r)
        threshold = norm.threshold(R)
        if self._restricted is not None:
            offsets = self._restricted._offsets_from(center)
            gauges = norm.gauge_array(offsets) * threshold.denominator
            sphere = self._restricted._masked_mass(gauges == threshold.numerator)
            ball = self._restricted._masked_mass(gauges <= threshold.numerator)
            return sphere, ball
        # Full grid: count the clipped offsets of the origin-centred ball.
        offsets = ball_offsets(norm, R)
        gauges = norm.gauge_array(offsets) * threshold.denominator
        total = self.support_size
        sphere = self._count_in_grid(offsets[gauges == threshold.numerator], center)
        ball = self._count_in_grid(offsets, center)
        return Fraction(sphere, total), Fraction(ball, total)


def circle_measure(m, radius, center=(Fraction(1, 2), Fraction(1, 2))):
    """
    Uniform measure on the grid points of [0,1]^2 at rounded Euclidean
    distance ``radius`` from ``center`` (both in [0,1] units).
    """
    side = 2 ** m
    R = to_fraction(radius) * side
    cx, cy = (to_fraction(c) * side for c in center)
    grid = np.indices((side + 1, side + 1), dtype=np.int64).reshape(2, -1).T
    # (2R - 1)^2 <= 4|u - c|^2 < (2R + 1)^2, scaled to integers.
    den = math.lcm(R.denominator, cx.denominator, cy.denominator)
    dx = grid[:, 0] * den - int(cx * den)
    dy = grid[:, 1] * den - int(cy * den)
    dist4 = 4 * (dx * dx + dy * dy)
    low = int((2 * R - 1) * den) ** 2 if R >= Fraction(1, 2) else 0
    high = int((2 * R + 1) * den) ** 2
    points = grid[(dist4 >= low) & (dist4 < high)]
    require(len(points) > 0, "The discretised circle contains no grid points")
    return DyadicMeasure(m, 2, [tuple(p) for p in points])


def onion_measure(norm, radii):
    """Unit mass spread uniformly over each shell d_1 B_r(0)."""
    masses = {}
    for r in radii:
        shell = annulus_offsets(norm, to_fraction(r) + 1, to_fraction(r) - 1)
        for row in shell:
            point = tuple(int(x) for x in row)
            masses[point] = masses.get(point, Fraction(0)) + Fraction(1, len(shell))
    return DiscreteMeasure(masses, norm.d)


@dataclass(frozen=True)
class Stack:
    """
    Carpets U_1, ..., U_p over a common center set F with radius growth
    between adjacent levels.
    """
    levels: tuple
    centers: tuple
    growth_mode: str = ADJACENT
    base_minrad: Fraction = Fraction(0)

    def __post_init__(self):
        require(self.growth_mode in GROWTH_MODES, f"growth_mode must be one of {GROWTH_MODES}")
        levels = tuple(self.levels)
        centers = tuple(sorted({tuple(int(x) for x in c) for c in self.centers}))
        object.__setattr__(self, 'levels', levels)
        object.__setattr__(self, 'centers', centers)
        object.__setattr__(self, 'base_minrad', to_fraction(self.base_minrad))
        for index, level in enumerate(levels, start=1):
            require(tuple(level.centers) == centers, f"Level {index} is not a carpet over the stack's center set")
        for i in range(2, len(levels) + 1):
            prev = self.maxrad(i - 1)
            needed = prev if self.growth_mode == ADJACENT else prev * prev
            require(self.minrad(i) >= needed,
                    f"Level {i} has minrad {self.minrad(i)} below the required {needed} ({self.growth_mode} growth)")
        if levels and self.growth_mode == SQUARED:
            floor = max(Fraction(2), self.base_minrad)
            require(self.minrad(1) >= floor, f"Level 1 has minrad {self.minrad(1)} below max(2, R0) = {floor}")

    @property
    def height(self):
        return len(self.levels)

    def minrad(self, i):
        return self.levels[i - 1].minrad

    def maxrad(self, i):
        return self.levels[i - 1].maxrad

    def prefix(self, height):
        return Stack(self.levels[:height], self.centers, self.growth_mode, self.base_minrad)

    def balls_at(self, center):
        return [b for level in self.levels for b in level.balls if b.center == center]


def build_stack(F, level_radii, norm, growth_mode=ADJACENT, base_minrad=0):
    """
    Build a stack over F. Each entry of ``level_radii`` is either one radius for
    every center or a mapping center -> radius.
    """
    F = sorted({tuple(int(x) for x in p) for p in F})
    require(F, "A stack needs a nonempty center set")
    levels = []
    for radii in level_radii:
        if isinstance(radii, dict):
            lookup = {tuple(k): v for k, v in radii.items()}
            levels.append(Carpet(tuple(LatticeBall(x, lookup[x], norm) for x in F)))
        else:
            levels.append(Carpet(tuple(LatticeBall(x, radii, norm) for x in F)))
    return Stack(tuple(levels), tuple(F), growth_mode, base_minrad)


def squared_radii_schedule(R0, height):
    """
    Radii r_1 = max(2, ceil(R0)) and r_i = max(2, r_{i-1})^2, the schedule of a
    squared-growth stack with one radius per level.
    """
    require(height >= 0, "Stack height must be nonnegative")
    radii = []
    r = max(2, math.ceil(to_fraction(R0)))
    for _ in range(height):
        radii.append(r)
        r = max(2, r) ** 2
    return radii


def thickness_fraction(mu, ball):
    """
    mu(d_1 B) / mu(B).

    Raises:
        UndefinedFractionError: If mu(B) = 0
    """
    ball_mass = mu.ball_mass(ball)
    if ball_mass == 0:
        raise UndefinedFractionError(f"Thickness fraction undefined: {ball} carries no mass")
    return mu.thick_boundary_mass(ball, 1) / ball_mass


def thick_center_mass(mu, stack, eps):
    """
    Centers all of whose stack balls are eps-thick (zero-mass balls count as
    thick), and their mass as a fraction of the total.
    """
    eps = to_fraction(eps)
    require(stack.growth_mode == SQUARED, "thick_center_mass needs a squared-growth stack")
    require(mu.total > 0, "thick_center_mass needs a measure with positive total mass")
    thick = []
    for x in stack.centers:
        ok = True
        for ball in stack.balls_at(x):
            if mu.ball_mass(ball) > 0 and thickness_fraction(mu, ball) < eps:
                ok = False
                break
        if ok:
            thick.append(x)
    fraction = mu.mass(thick) / mu.total
    logger.debug(f"thick_center_mass: height {stack.height}, {len(thick)} of {len(stack.centers)} centers thick")
    return tuple(thick), fraction


def thick_center_curve(mu, stack, eps):
    """(height, fraction) for every prefix of the stack, height 0 included."""
    return [(h, thick_center_mass(mu, stack.prefix(h), eps)[1]) for h in range(stack.height + 1)]


@dataclass(frozen=True)
class BudgetParams:
    k: int
    chi: int
    eps: Fraction
    delta: Fraction

    def __post_init__(self):
        require(isinstance(self.k, int) and self.k >= 0, f"k must be a nonnegative integer, got {self.k!r}")
        require(isinstance(self.chi, int) and self.chi >= 1, f"chi must be a positive integer, got {self.chi!r}")
        eps, delta = to_fraction(self.eps), to_fraction(self.delta)
        require(0 < eps < 1 and 0 < delta < 1, "eps and delta must lie in (0, 1)")
        object.__setattr__(self, 'eps', eps)
        object.__setattr__(self, 'delta', delta)

    @property
    def q(self):
        return budget_q(self)

    @property
    def Q(self):
        return budget_Q(self)


def budget_q(params):
    """ceil(200 chi^2 / (eps^2 delta^3))^k * 1000^(k^2)."""
    base = math.ceil(Fraction(200 * params.chi ** 2) / (params.eps ** 2 * params.delta ** 3))
    return base ** params.k * 1000 ** (params.k * params.k)


@lru_cache(maxsize=None)
def _budget_Q(k, chi, eps, delta):
    if k == 0:
        return 1
    height = math.ceil(Fraction(2 * chi) / (eps * delta))
    width = 1 + math.ceil(Fraction(64 * chi) / (eps * delta * delta))
    return height * width * (1 + _budget_Q(k - 1, chi, eps / 2, delta / 8))


def budget_Q(params):
    """Q(0) = 1; Q(k) = ceil(2chi/(eps delta)) (1 + ceil(64chi/(eps delta^2))) (1 + Q(k-1, chi, eps/2, delta/8))."""
    return _budget_Q(params.k, params.chi, params.eps, params.delta)


DEFAULT_BUDGET_GRID = {
    'k': (0, 1, 2, 3),
    'chi': (1, 5, 10, 100),
    'eps': (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)),
    'delta': (Fraction(1, 2), Fraction(1, 4), Fraction(1, 10)),
}


def budget_dominance_report(grid=None):
    """
    Evaluate q >= Q over a parameter grid. Counterexamples are findings: they
    are logged and listed, never raised.
    """
    grid = DEFAULT_BUDGET_GRID if grid is None else grid
    rows, counterexamples = [], []
    for k in grid['k']:
        for chi in grid['chi']:
            for eps in grid['eps']:
                for delta in grid['delta']:
                    params = BudgetParams(k, chi, eps, delta)
                    q, Q = budget_q(params), budget_Q(params)
                    row = {'params': params, 'q': q, 'Q': Q, 'dominates': q >= Q}
                    rows.append(row)
                    if q < Q:
                        counterexamples.append(row)
                        logger.warning(f"Budget finding: q < Q at k={k}, chi={chi}, eps={eps}, delta={delta}")
    return {'rows': rows, 'counterexamples': counterexamples, 'holds': not counterexamples}


@dataclass
class ScanRow:
    point: tuple
    r: Fraction
    boundary_mass: Fraction
    ball_mass: Fraction
    ratio: Fraction
    flagged: bool


@dataclass
class ScanResult:
    rows: list
    exceedance: Fraction
    exceeding_points: list = field(default_factory=list)


def sample_support(measure, count, rng):
    """Up to ``count`` distinct support points, returned in lexicographic order."""
    size = measure.support_size
    require(count >= 1, "Sample size must be positive")
    if count >= size:
        indices = range(size)
    else:
        indices = rng.choice(size, size=count, replace=False)
    return sorted(measure.support_point(int(i)) for i in indices)


def boundary_ratio_scan(mu, points, radii, eps, norm, threads=1):
    """
    Series mu(dB_r(x)) / mu(B_r(x)) over a strictly decreasing radius schedule
    and the mass fraction of sampled points whose whole series stays >= eps.
    """
    radii = [to_fraction(r) for r in radii]
    eps = to_fraction(eps)
    require(radii, "The radius schedule is empty")
    require(all(a > b for a, b in zip(radii, radii[1:])), "The radius schedule must be strictly decreasing")
    points = sorted({tuple(int(x) for x in p) for p in points})
    require(points, "boundary_ratio_scan needs at least one point")

    def scan_point(x):
        series = []
        for r in radii:
            boundary, ball = mu.scan_masses(x, r, norm)
            if ball == 0:
                raise UndefinedFractionError(f"Ball of radius {r} at {x} carries no mass")
            ratio = boundary / ball
            series.append(ScanRow(x, r, boundary, ball, ratio, ratio >= eps))
        return series

    rows, exceeding = [], []
    for series in parallel_map(scan_point, points, threads):
        rows.extend(series)
        if all(row.flagged for row in series):
            exceeding.append(series[0].point)
    sampled = sum((mu.mass_at(x) for x in points), Fraction(0))
    exceedance = sum((mu.mass_at(x) for x in exceeding), Fraction(0)) / sampled if sampled else Fraction(0)
    logger.info(f"boundary_ratio_scan: {len(points)} points, {len(radii)} radii, exceedance {exceedance}")
    return ScanResult(rows, exceedance, exceeding)


def thick_sphere_intersection(balls):
    """The lattice points of the intersection of the spheres d_1 B_{r(i)}(x_i)."""
    balls = list(balls)
    require(balls, "thick_sphere_intersection needs at least one ball")
    smallest = min(balls, key=lambda b: b.radius)
    candidates = (annulus_offsets(smallest.norm, smallest.radius + 1, smallest.radius - 1)
                  + np.array(smallest.center, dtype=np.int64))
    for ball in balls:
        if len(candidates) == 0:
            break
        offsets = candidates - np.array(ball.center, dtype=np.int64)
        mask = ball.norm.within_array(offsets, ball.radius + 1)
        if ball.radius - 1 >= 0:
            mask &= ~ball.norm.within_array(offsets, ball.radius - 1)
        candidates = candidates[mask]
    return tuple(tuple(int(x) for x in row) for row in candidates)


@dataclass(frozen=True)
class CoarseWitness:
    empty: bool
    intersection: tuple
    k: int


def _witness_hypothesis(balls, R0):
    """Name of the first violated chain hypothesis, or None."""
    for i, ball in enumerate(balls):
        if ball.radius < R0:
            return f"radius of ball {i + 1} is below R0"
        if i and ball.radius > balls[i - 1].radius:
            return f"radius of ball {i + 1} exceeds the previous radius"
        for j in range(i):
            shrunk = balls[j].radius - 1
            if shrunk >= 0 and LatticeBall(balls[j].center, shrunk, balls[j].norm).contains(ball.center):
                return f"center of ball {i + 1} lies in the shrunk ball {j + 1}"
    return None


def coarse_dim_witness_check(balls, R0):
    """
    Check whether the thick spheres of a chain of balls have empty intersection.

    The chain must have non-increasing radii >= R0, each center outside the
    earlier balls shrunk by 1.

    Raises:
        HypothesisViolationError: If the chain does not satisfy the hypothesis
    """
    balls = list(balls)
    R0 = to_fraction(R0)
    require(balls, "coarse_dim_witness_check needs at least one ball")
    violated = _witness_hypothesis(balls, R0)
    if violated:
        raise HypothesisViolationError(f"Chain hypothesis violated: {violated}", hypothesis=violated)
    intersection = thick_sphere_intersection(balls)
    return CoarseWitness(empty=not intersection, intersection=intersection, k=len(balls))


@dataclass
class ThresholdSearch:
    R0: Fraction
    k_star: int
    longest: int
    chains: list
    capped: bool = False


def coarse_dim_threshold_search(norm, R0, k_max, trials, rng, radius_spread=2):
    """
    Randomised greedy search for chains whose thick spheres still meet.

    Each step picks a point p of the current intersection, a radius
    r <= previous radius with r >= R0, and a new center on d_1 B_r(p) outside
    the shrunk earlier balls. k* is one more than the longest chain found.

    A chain stopped by k_max still has a non-empty intersection; the search
    is then capped and k* is only a lower bound.
    """
    R0 = to_fraction(R0)
    r_low = math.ceil(R0)
    r_high = max(r_low, math.floor(R0 * radius_spread))
    longest, chains, capped = 0, [], False
    origin = (0,) * norm.d
    for _ in range(trials):
        chain = [LatticeBall(origin, int(rng.integers(r_low, r_high + 1)), norm)]
        intersection = thick_sphere_intersection(chain)
        while len(chain) < k_max:
            p = intersection[int(rng.integers(len(intersection)))]
            r = int(rng.integers(r_low, int(chain[-1].radius) + 1))
            # p lies on d_1 B_r(c) exactly when c lies on d_1 B_r(p).
            ring = annulus_offsets(norm, r + 1, r - 1) + np.array(p, dtype=np.int64)
            candidates = [c for c in (tuple(int(x) for x in row) for row in ring)
                          if _witness_hypothesis(chain + [LatticeBall(c, r, norm)], R0) is None]
            if not candidates:
                break
            center = candidates[int(rng.integers(len(candidates)))]
            extended = chain + [LatticeBall(center, r, norm)]
            new_intersection = thick_sphere_intersection(extended)
            if not new_intersection:
                break
            chain, intersection = extended, new_intersection
        if len(chain) >= k_max:
            capped = True
        chains.append(tuple(chain))
        longest = max(longest, len(chain))
    logger.info(f"Coarse-dimension search for {norm.label}, R0={R0}: longest chain {longest}")
    if capped:
        logger.warning(f"Chains reached k_max={k_max} with non-empty intersections; k*={longest + 1} is a lower bound")
    return ThresholdSearch(R0, longest + 1, longest, chains, capped)


@dataclass(frozen=True)
class PackingResult:
    greedy: int
    exhaustive: int
    exact: bool
    nodes: int
    grid_step: Fraction
    points: tuple


def packing_number(norm, separation, radius=2, grid_step=Fraction(1, 4), node_cap=None):
    """
    Largest set of points of the grid_step-grid inside B_radius(0) with pairwise
    distance >= separation: greedy in lexicographic order, and exhaustive
    branch and bound (inexact when the node cap is hit).
    """
    separation = to_fraction(separation)
    grid_step = to_fraction(grid_step)
    require(grid_step > 0 and (1 / grid_step).denominator == 1, "grid_step must be 1/s for a positive integer s")
    require(separation > 0, "Separation must be positive")
    node_cap = get_setting('BESICOVER_PACKING_NODE_CAP') if node_cap is None else node_cap
    scale = int(1 / grid_step)
    points = ball_offsets(norm, to_fraction(radius) * scale)
    count = len(points)
    if count > 4096:
        raise ResourceCapError(f"Packing grid has {count} points; use a coarser grid step", count=count)
    threshold = norm.threshold(separation * scale)
    gauges = norm.gauge_array((points[:, None, :] - points[None, :, :]).reshape(-1, norm.d)).reshape(count, count)
    conflict = gauges * threshold.denominator < threshold.numerator
    np.fill_diagonal(conflict, False)

    greedy = []
    for i in range(count):
        if not any(conflict[i, j] for j in greedy):
            greedy.append(i)

    neighbours = [sum(1 << int(j) for j in np.flatnonzero(conflict[i])) for i in range(count)]
    best, best_set = len(greedy), list(greedy)
    nodes = 0
    exact = True
    work = [((1 << count) - 1, [])]
    while work:
        candidates, chosen = work.pop()
        nodes += 1
        if nodes > node_cap:
            exact = False
            break
        if len(chosen) + bin(candidates).count('1') <= best:
            continue
        if candidates == 0:
            best, best_set = len(chosen), chosen
            continue
        v = (candidates & -candidates).bit_length() - 1
        rest = candidates & ~(1 << v)
        work.append((rest, chosen))
        work.append((rest & ~neighbours[v], chosen + [v]))
    if not exact:
        logger.warning(f"Packing search hit the node cap of {node_cap}; exhaustive value {best} is a lower bound")
    return PackingResult(
        greedy=len(greedy),
        exhaustive=best,
        exact=exact,
        nodes=nodes,
        grid_step=grid_step,
        points=tuple(tuple(Fraction(int(x), scale) for x in points[i]) for i in sorted(best_set)),
    )


@dataclass
class CoarseDimBound:
    k: int
    k_prime: int
    k_double_prime: int
    provenance: dict


def coarse_dim_bound(norm, R0, grid_step=Fraction(1, 4), trials=20, k_max=8, rng=None, k_prime=None,
                     node_cap=None):
    """
    k = k' k'': k' from the empirical chain threshold, k'' the packing number
    of B_2(0) by (1 - 1/R0)-separated points at the given grid step.
    """
    R0 = to_fraction(R0)
    require(R0 > 2, "coarse_dim_bound needs R0 > 2")
    packing = packing_number(norm, 1 - 1 / R0, 2, grid_step, node_cap)
    if packing.greedy != packing.exhaustive:
        logger.warning(f"Greedy packing {packing.greedy} and exhaustive packing {packing.exhaustive} disagree "
                       f"at grid step {grid_step}; the discretisation may be too coarse")
    provenance = {
        'k_double_prime': 'exhaustive packing' if packing.exact else 'packing lower bound (node cap hit)',
        'grid_step': grid_step,
        'greedy_packing': packing.greedy,
        'packing_exact': packing.exact,
        'discretisation_warning': packing.greedy != packing.exhaustive,
    }
    if k_prime is None:
        require(rng is not None, "An rng is needed to search for k'")
        search = coarse_dim_threshold_search(norm, R0, k_max, trials, rng)
        k_prime = search.k_star
        provenance['k_prime_capped'] = search.capped
        if search.capped:
            provenance['k_prime'] = f"lower bound: chains reached k_max={k_max} over {trials} trials"
        else:
            provenance['k_prime'] = f"empirical chain threshold over {trials} trials"
    else:
        provenance['k_prime'] = 'supplied'
    return CoarseDimBound(k_prime * packing.exhaustive, k_prime, packing.exhaustive, provenance)


def ceil_norm(norm, v):
    """ceil(||v||) for an integer vector."""
    value = norm.value(v)
    return ceil_sqrt(value) if norm.squared else math.ceil(value)
