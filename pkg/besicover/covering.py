"""
Carpets, incremental sequences and the covering algorithms built on them:
Besicovitch selection, well-separated colorings, mass-capturing subfamilies
and the exhaustion of stacks by thick spheres.
"""

import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from besicover.geometry import (
    LatticeBall,
    LatticeSphere,
    NormSpec,
    doubling_certificate,
    sets_separated,
    thickened_contains,
)
from utils.error_handlers import (
    CertificateViolationError,
    DimensionMismatchError,
    ExhaustionOverrunError,
    HypothesisViolationError,
    InvalidParameterError,
    InvariantViolationError,
    require,
)
from utils.rationals import to_fraction
from utils.trials import run_trials

logger = logging.getLogger(__name__)

ONE_SIDED_CUBE = 'one_sided_cube'


@dataclass(frozen=True)
class OneSidedCube:
    """The translate x + Q_n of the one-sided cube Q_n = {0, ..., n}^d."""
    center: tuple
    radius: int
    d: int

    def __post_init__(self):
        object.__setattr__(self, 'center', tuple(int(x) for x in self.center))
        require(len(self.center) == self.d, f"Cube corner {self.center} does not lie in Z^{self.d}",
                DimensionMismatchError)
        require(int(self.radius) == self.radius and self.radius >= 0, "Cube size must be a nonnegative integer")
        object.__setattr__(self, 'radius', int(self.radius))

    family_key = ONE_SIDED_CUBE

    @property
    def outer_radius(self):
        return self.radius

    def contains(self, u):
        return all(0 <= a - b <= self.radius for a, b in zip(u, self.center))

    def contains_array(self, points):
        shifted = np.asarray(points, dtype=np.int64) - np.array(self.center)
        return np.all((shifted >= 0) & (shifted <= self.radius), axis=1)

    def point_array(self, cap=None):
        shape = (self.radius + 1,) * self.d
        grid = np.indices(shape, dtype=np.int64).reshape(self.d, -1).T
        return grid + np.array(self.center, dtype=np.int64)

    def points(self, cap=None):
        return tuple(tuple(int(x) for x in row) for row in self.point_array(cap))

    def __str__(self):
        return f"Q_{self.radius}+({','.join(map(str, self.center))})"


@dataclass(frozen=True)
class BallFamilySpec:
    """
    An increasing family B_0 ⊆ B_1 ⊆ ... of finite sets containing 0: either
    norm balls (symmetric) or one-sided cubes Q_n (not symmetric).
    """
    kind: str
    d: int
    norm: NormSpec = None

    def __post_init__(self):
        if self.kind == 'norm':
            require(self.norm is not None, "A norm-ball family needs a norm")
            require(self.norm.d == self.d, "Family and norm dimensions differ", DimensionMismatchError)
        else:
            require(self.kind == ONE_SIDED_CUBE, f"Unknown ball family: {self.kind!r}")

    @classmethod
    def norm_balls(cls, norm):
        return cls('norm', norm.d, norm)

    @classmethod
    def one_sided_cubes(cls, d=2):
        return cls(ONE_SIDED_CUBE, d)

    @property
    def symmetric(self):
        return self.kind == 'norm'

    @property
    def label(self):
        return self.norm.label if self.kind == 'norm' else ONE_SIDED_CUBE

    def ball(self, center, n):
        if self.kind == 'norm':
            return LatticeBall(center, n, self.norm)
        return OneSidedCube(center, n, self.d)

    def offsets(self, n):
        """B_n as an array of offsets (lexicographic order)."""
        return self.ball((0,) * self.d, n).point_array()

    def contains_offset(self, u, n):
        return self.ball((0,) * self.d, n).contains(u)


def as_family(shape):
    """Accept either a NormSpec or a BallFamilySpec."""
    if isinstance(shape, NormSpec):
        return BallFamilySpec.norm_balls(shape)
    return shape


def _family_key(balls):
    keys = {b.family_key for b in balls}
    if len(keys) > 1:
        raise InvalidParameterError("Balls built from different norms or families cannot be mixed")
    return keys.pop() if keys else None


@dataclass(frozen=True)
class Carpet:
    """
    A finite family of balls over a center set E: every point of E is the
    center of some ball and every center lies in E.
    """
    balls: tuple
    centers: tuple = field(default=None)

    def __post_init__(self):
        balls = tuple(self.balls)
        _family_key(balls)
        ball_centers = {b.center for b in balls}
        centers = ball_centers if self.centers is None else {tuple(int(x) for x in c) for c in self.centers}
        missing = centers - ball_centers
        require(not missing, f"Points {sorted(missing)[:5]} are not centers of any ball of the carpet")
        stray = ball_centers - centers
        require(not stray, f"Ball centers {sorted(stray)[:5]} lie outside the carpet's center set")
        object.__setattr__(self, 'balls', balls)
        object.__setattr__(self, 'centers', tuple(sorted(centers)))

    def __len__(self):
        return len(self.balls)

    @property
    def family_key(self):
        return _family_key(self.balls)

    @property
    def minrad(self):
        return min(b.radius for b in self.balls)

    @property
    def maxrad(self):
        return max(b.radius for b in self.balls)

    def restrict(self, points):
        """The sub-carpet of balls centered in ``points``."""
        keep = set(points)
        return Carpet(tuple(b for b in self.balls if b.center in keep))


def covers(family, points):
    return all(any(b.contains(x) for b in family) for x in points)


def is_incremental(seq):
    """
    True iff radii are non-increasing and each center lies outside the union
    of the earlier balls.
    """
    seq = list(seq)
    require(len(seq) > 0, "is_incremental needs a nonempty sequence")
    _family_key(seq)
    for i, ball in enumerate(seq):
        if i and ball.radius > seq[i - 1].radius:
            return False
        if any(prev.contains(ball.center) for prev in seq[:i]):
            return False
    return True


def incremental_select(carpet):
    """
    Select an incremental subsequence covering the carpet's centers.

    Balls are scanned by non-increasing radius (ties in input order) and kept
    when their center is not yet covered.
    """
    order = sorted(range(len(carpet.balls)), key=lambda i: (-carpet.balls[i].radius, i))
    selected = []
    for i in order:
        ball = carpet.balls[i]
        if not any(b.contains(ball.center) for b in selected):
            selected.append(ball)
    logger.debug(f"incremental_select kept {len(selected)} of {len(carpet.balls)} balls")
    return selected


def multiplicity(family, probe=None):
    """
    Maximum number of balls containing a single point, over ``probe`` or (by
    default) over every lattice point of the union's bounding box.
    """
    family = list(family)
    if not family:
        return 0
    if probe is not None:
        return max((sum(1 for b in family if b.contains(x)) for x in probe), default=0)
    # Points outside every ball count zero, so counting ball points covers the box.
    points = np.concatenate([b.point_array() for b in family])
    if len(points) == 0:
        return 0
    _, counts = np.unique(points, axis=0, return_counts=True)
    return int(counts.max())


def _pair_separated(a, b, r, arrays):
    """Exact check that two ball-like sets are at distance >= r, pruned by centers."""
    norm = a.family_key
    diff = tuple(x - y for x, y in zip(a.center, b.center))
    if norm.gauge(diff) >= norm.threshold(a.outer_radius + b.outer_radius + r):
        return True
    for item in (a, b):
        if id(item) not in arrays:
            arrays[id(item)] = item.point_array()
    return sets_separated(arrays[id(a)], arrays[id(b)], norm, r)


def is_well_separated(family, R=None):
    """
    True iff every two members are at distance >= R (default: minrad of the family).
    Distances are exact distances between lattice point sets.
    """
    family = list(family)
    require(len(family) > 0, "is_well_separated needs a nonempty family")
    key = _family_key(family)
    require(isinstance(key, NormSpec), "Well-separation is measured with a norm")
    R = min(b.radius for b in family) if R is None else to_fraction(R)
    arrays = {}
    for i in range(len(family)):
        for j in range(i + 1, len(family)):
            if not _pair_separated(family[i], family[j], R, arrays):
                return False
    return True


def color_classes(balls, chi):
    """
    Greedy first-fit coloring with at most ``chi`` colors: a ball joins the first
    class it stays well-separated from.

    Raises:
        CertificateViolationError: If no color is legal for some ball
    """
    classes = []
    arrays = {}
    for ball in balls:
        placed = False
        for members in classes:
            r = min(ball.radius, min(m.radius for m in members))
            if all(_pair_separated(ball, m, r, arrays) for m in members):
                members.append(ball)
                placed = True
                break
        if placed:
            continue
        if len(classes) >= chi:
            raise CertificateViolationError(
                f"No legal color among {chi} for ball {ball}; the supplied constants are not valid",
                ball=ball, chi=chi,
            )
        classes.append([ball])
    return classes


def color_disjointify(carpet, C, D):
    """
    Partition an incremental cover of the carpet's centers into at most
    chi = C*D^2 + 1 well-separated classes.
    """
    require(C >= 1 and D >= 1, "C and D must be at least 1")
    chi = C * D * D + 1
    classes = color_classes(incremental_select(carpet), chi)

    # Post-conditions, re-checked independently
    if not covers([b for members in classes for b in members], carpet.centers):
        raise InvariantViolationError("Color classes do not cover the carpet's centers")
    if len(classes) > chi:
        raise InvariantViolationError(f"{len(classes)} color classes exceed chi={chi}")
    for index, members in enumerate(classes):
        if not is_well_separated(members):
            raise InvariantViolationError(f"Color class {index} is not well-separated")
    logger.debug(f"color_disjointify: {len(classes)} classes (chi={chi})")
    return classes


@dataclass(frozen=True)
class MassCapture:
    balls: tuple
    captured: Fraction
    total: Fraction
    class_index: int
    class_count: int


def captured_mass(family, mu, points):
    """mu(points ∩ union of family)."""
    return sum((mu.mass_at(x) for x in points if any(b.contains(x) for b in family)), Fraction(0))


def measure_disjointify(carpet, mu, chi):
    """
    The well-separated color class capturing the most mu-mass of the centers;
    its captured mass is at least mu(E)/chi.
    """
    classes = color_classes(incremental_select(carpet), chi)
    total = mu.mass(carpet.centers)
    best_index, best_mass = 0, Fraction(-1)
    for index, members in enumerate(classes):
        mass = captured_mass(members, mu, carpet.centers)
        if mass > best_mass:
            best_index, best_mass = index, mass
    if not classes:
        return MassCapture((), Fraction(0), total, 0, 0)
    if best_mass * chi < total:
        raise InvariantViolationError(f"Captured mass {best_mass} is below mu(E)/chi = {total / chi}")
    if not is_well_separated(classes[best_index]):
        raise InvariantViolationError("Selected color class is not well-separated")
    return MassCapture(tuple(classes[best_index]), best_mass, total, best_index, len(classes))


@dataclass
class FrequencyReport:
    direction: str
    t: Fraction
    C: Fraction
    hypothesis_holds: bool
    conclusion_holds: object
    ratio: Fraction
    bound: Fraction
    counts: list

    @property
    def passed(self):
        return not self.hypothesis_holds or bool(self.conclusion_holds)


def frequency_bound_check(carpet, A, B, t, C, direction):
    """
    Check the frequency form of the Besicovitch property on one carpet.

    low:  |A∩F|/|B∩F| < t for every F  ==>  |A|/|B| < C t
    high: |A∩F|/|B∩F| > t for every F  ==>  |A|/|B| > t / C
    An empty B∩F fails the "low" hypothesis and counts as +inf for "high".
    """
    require(direction in ('low', 'high'), f"direction must be 'low' or 'high', got {direction!r}")
    A = sorted({tuple(a) for a in A})
    B = sorted({tuple(b) for b in B})
    require(len(B) > 0, "B must be nonempty")
    centers = set(carpet.centers)
    require(set(A) <= centers and set(B) <= centers, "A and B must be subsets of the carpet's centers")
    t = to_fraction(t)
    C = to_fraction(C)

    counts = []
    hypothesis = True
    for ball in carpet.balls:
        a = sum(1 for x in A if ball.contains(x))
        b = sum(1 for x in B if ball.contains(x))
        if direction == 'low':
            holds = b > 0 and Fraction(a, b) < t
        else:
            holds = b == 0 or Fraction(a, b) > t
        hypothesis = hypothesis and holds
        counts.append((ball, a, b))

    ratio = Fraction(len(A), len(B))
    if direction == 'low':
        bound = C * t
        conclusion = ratio < bound
    else:
        bound = t / C
        conclusion = ratio > bound
    return FrequencyReport(direction, t, C, hypothesis, conclusion if hypothesis else None, ratio, bound, counts)


@dataclass(frozen=True)
class ExhaustionResult:
    k: int
    balls: tuple
    rounds: int
    r: Fraction
    captured: Fraction
    mass_F: Fraction
    disjoint_thickened: bool


def _exhaustion_preconditions(stack, mu, F, eps, delta, height):
    from besicover.concentration import thickness_fraction

    mass_F = mu.mass(F)
    thick = True
    for level in stack.levels:
        for ball in level.balls:
            ball_mass = mu.ball_mass(ball)
            if ball_mass == 0 or thickness_fraction(mu, ball) <= eps:
                thick = False
                break
        if not thick:
            break
    return {
        'stack_height': stack.height >= height,
        'mass_of_F': mass_F > delta * mu.total,
        'stack_over_F': set(stack.centers) == set(F),
        'radius_growth': all(stack.minrad(i) >= stack.maxrad(i - 1) for i in range(2, stack.height + 1)),
        'thick_balls': thick,
    }


def sphere_exhaustion(stack, mu, F, eps, delta, chi, strict=True):
    """
    Exhaust a stack by well-separated spheres until their 2r-thickenings hold
    more than half of the mass of F.

    Levels are used from the top down; the returned k is the lowest level
    used, so V ⊆ ∪_{i>=k} U_i and r = maxrad U_{k-1} (maxrad U_0 is 1).

    Raises:
        HypothesisViolationError: If ``strict`` and a precondition fails
        ExhaustionOverrunError: If every level is used without success
    """
    eps, delta = to_fraction(eps), to_fraction(delta)
    F = tuple(sorted({tuple(x) for x in F}))
    height = math.ceil(Fraction(2 * chi) / (eps * delta))
    preconditions = _exhaustion_preconditions(stack, mu, F, eps, delta, height)
    failed = [name for name, ok in preconditions.items() if not ok]
    if strict and failed:
        raise HypothesisViolationError(f"sphere_exhaustion precondition failed: {failed[0]}", hypothesis=failed[0])

    def maxrad_below(k):
        return stack.maxrad(k - 1) if k >= 2 else Fraction(1)

    mass_F = mu.mass(F)
    V = []
    k = stack.height + 1
    rounds = 0
    while True:
        r = maxrad_below(k)
        if V:
            captured = mu.mass(x for x in F if any(thickened_contains(b, 2 * r, x) for b in V))
            if 2 * captured > mass_F:
                break
        if k == 1:
            raise ExhaustionOverrunError(
                f"Exhausted all {stack.height} levels without capturing half of F",
                failed_preconditions=failed,
            )
        # Two extra lattice units keep the new spheres separated from the old ones.
        G = [x for x in F if not any(thickened_contains(b, 2 * r + 2, x) for b in V)]
        level = stack.levels[k - 2].restrict(G)
        if level.balls:
            capture = measure_disjointify(level, mu, chi)
            V.extend(capture.balls)
        rounds += 1
        k -= 1
        logger.debug(f"sphere_exhaustion round {rounds}: level {k}, |V|={len(V)}")

    result = ExhaustionResult(
        k=k,
        balls=tuple(V),
        rounds=rounds,
        r=r,
        captured=captured,
        mass_F=mass_F,
        disjoint_thickened=k >= 2 and stack.minrad(k) > 4 * stack.maxrad(k - 1),
    )
    _verify_exhaustion(result, mu, F)
    logger.info(f"sphere_exhaustion succeeded at k={k} after {rounds} rounds with {len(V)} spheres")
    return result


def _verify_exhaustion(result, mu, F):
    """Independent re-check of both conclusions by point-set enumeration."""
    if not is_well_separated([LatticeSphere(b) for b in result.balls]):
        raise InvariantViolationError("Spheres of the exhaustion family are not well-separated")
    thickened = set()
    for b in result.balls:
        inner = b.radius - 2 * result.r
        outer = LatticeBall(b.center, b.radius + 2 * result.r, b.norm).point_array()
        if inner >= 0:
            outer = outer[~LatticeBall(b.center, inner, b.norm).contains_array(outer)]
        thickened.update(tuple(int(x) for x in row) for row in outer)
    mass = mu.mass(x for x in F if x in thickened)
    if mass != result.captured or 2 * mass <= result.mass_F:
        raise InvariantViolationError(f"Thickened spheres capture {mass}, not more than half of {result.mass_F}")


def staircase_carpet(K):
    """
    The staircase g_i = (-i, -(K-i)), i = 0..K, of one-sided cubes of size K,
    plus the size-0 cube at the origin; every cube of the staircase contains the origin.
    """
    require(K >= 1, "Staircase needs K >= 1")
    family = BallFamilySpec.one_sided_cubes(2)
    balls = [family.ball((-i, -(K - i)), K) for i in range(K + 1)]
    balls.append(family.ball((0, 0), 0))
    return Carpet(tuple(balls))


def random_carpet(shape, count, window, radius_min, radius_max, rng):
    """
    A carpet of ``count`` balls with distinct random centers in [-window, window]^d
    and integer radii in [radius_min, radius_max].
    """
    family = as_family(shape)
    side = 2 * window + 1
    require(count <= side ** family.d, "More centers requested than the window holds")
    flat = rng.choice(side ** family.d, size=count, replace=False)
    coords = np.stack(np.unravel_index(flat, (side,) * family.d), axis=1) - window
    radii = rng.integers(radius_min, radius_max + 1, size=count)
    return Carpet(tuple(family.ball(tuple(int(x) for x in c), int(r)) for c, r in zip(coords, radii)))


@dataclass(frozen=True)
class BesicovitchCertificate:
    """Empirical constants for a norm: C from calibration, D from exact counts."""
    label: str
    d: int
    C: int
    D: int
    chi: int
    trials: int
    max_doubling_ratio: Fraction


def calibrate_besicovitch(shape, trials, carpet_size, window, radius_min, radius_max, seed, threads=1):
    """
    Largest multiplicity of incremental_select outputs over random carpets,
    recorded as the certified Besicovitch constant C.
    """
    family = as_family(shape)
    require(trials > 0, "Calibration needs at least one trial")

    def trial(rng):
        carpet = random_carpet(family, carpet_size, window, radius_min, radius_max, rng)
        selected = incremental_select(carpet)
        if not is_incremental(selected) or not covers(selected, carpet.centers):
            raise InvariantViolationError("incremental_select output is not an incremental cover")
        return multiplicity(selected)

    counts = Counter(run_trials(trial, seed, trials, threads))
    C = max(counts)
    if family.symmetric:
        doubling = doubling_certificate(family.norm)
        D, ratio = doubling.D, doubling.max_ratio
    else:
        D, ratio = 2 ** family.d, Fraction(2 ** family.d)
    certificate = BesicovitchCertificate(family.label, family.d, C, D, C * D * D + 1, trials, ratio)
    logger.info(f"Calibrated {family.label} d={family.d}: C={C}, D={D}, chi={certificate.chi} over {trials} trials")
    return certificate
