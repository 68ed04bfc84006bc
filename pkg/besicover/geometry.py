"""
Exact norms, lattice balls and thick spheres on Z^d.

Every membership test is exact: rational data is scaled to a common denominator
(and squared for the Euclidean norm) so that comparisons are integer comparisons.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from utils.config import ball_cap, get_setting
from utils.error_handlers import DimensionMismatchError, InvalidParameterError, ResourceCapError, require
from utils.rationals import lcm_of_denominators, to_fraction

logger = logging.getLogger(__name__)

P_VALUES = (1, 2, 'inf')

# Rows of differences processed at once by set_distance.
_DISTANCE_CHUNK = 1 << 16


@dataclass(frozen=True)
class NormSpec:
    """
    A norm on R^d: an l^p norm (p in {1, 2, inf}), a weighted sup norm with
    positive rational weights, or a polyhedral norm max_j |<a_j, v>|.
    """
    kind: str
    d: int
    p: object = None
    weights: tuple = ()
    functionals: tuple = ()

    def __post_init__(self):
        require(isinstance(self.d, int) and self.d >= 1, f"Dimension must be a positive integer, got {self.d!r}")
        if self.kind == 'p':
            require(self.p in P_VALUES, f"p must be one of {P_VALUES}, got {self.p!r}")
        elif self.kind == 'wsup':
            weights = tuple(to_fraction(w) for w in self.weights)
            require(len(weights) == self.d, "wsup needs one weight per axis", DimensionMismatchError)
            require(all(w > 0 for w in weights), "wsup weights must be positive")
            object.__setattr__(self, 'weights', weights)
        elif self.kind == 'poly':
            functionals = tuple(tuple(to_fraction(a) for a in row) for row in self.functionals)
            require(len(functionals) > 0, "poly norm needs at least one functional")
            require(all(len(row) == self.d for row in functionals),
                    "every functional must have d coefficients", DimensionMismatchError)
            rank = np.linalg.matrix_rank(np.array([[float(a) for a in row] for row in functionals]))
            require(rank == self.d, "poly functionals must span R^d (otherwise it is only a seminorm)")
            object.__setattr__(self, 'functionals', functionals)
        else:
            raise InvalidParameterError(f"Unknown norm kind: {self.kind!r}")

    @classmethod
    def l1(cls, d):
        return cls('p', d, p=1)

    @classmethod
    def l2(cls, d):
        return cls('p', d, p=2)

    @classmethod
    def linf(cls, d):
        return cls('p', d, p='inf')

    @classmethod
    def weighted_sup(cls, weights):
        return cls('wsup', len(weights), weights=tuple(weights))

    @classmethod
    def polyhedral(cls, functionals):
        functionals = tuple(tuple(row) for row in functionals)
        return cls('poly', len(functionals[0]), functionals=functionals)

    @property
    def squared(self):
        """True when gauges are squared norms (Euclidean case)."""
        return self.kind == 'p' and self.p == 2

    @property
    def label(self):
        if self.kind == 'p':
            return f"l{self.p}"
        if self.kind == 'wsup':
            return "wsup[" + ",".join(str(w) for w in self.weights) + "]"
        return f"poly[{len(self.functionals)}]"

    def to_dict(self):
        if self.kind == 'p':
            return {'kind': 'p', 'p': self.p, 'd': self.d}
        if self.kind == 'wsup':
            return {'kind': 'wsup', 'weights': [str(w) for w in self.weights]}
        return {'kind': 'poly', 'functionals': [[str(a) for a in row] for row in self.functionals]}

    @cached_property
    def scale(self):
        """Common denominator L: gauge = L * norm (or norm squared for l2)."""
        if self.kind == 'wsup':
            return lcm_of_denominators(self.weights)
        if self.kind == 'poly':
            return lcm_of_denominators(a for row in self.functionals for a in row)
        return 1

    @cached_property
    def _int_weights(self):
        return np.array([int(w * self.scale) for w in self.weights], dtype=np.int64)

    @cached_property
    def _int_functionals(self):
        return np.array([[int(a * self.scale) for a in row] for row in self.functionals], dtype=np.int64)

    def check_dimension(self, v):
        if len(v) != self.d:
            raise DimensionMismatchError(f"Vector of dimension {len(v)} used with a norm on R^{self.d}")

    def gauge(self, v):
        """Exact integer gauge of an integer vector (Python ints, no overflow)."""
        self.check_dimension(v)
        v = [int(x) for x in v]
        if self.kind == 'p':
            if self.p == 1:
                return sum(abs(x) for x in v)
            if self.p == 2:
                return sum(x * x for x in v)
            return max((abs(x) for x in v), default=0)
        if self.kind == 'wsup':
            return max(int(w) * abs(x) for w, x in zip(self._int_weights, v))
        return max(abs(sum(int(a) * x for a, x in zip(row, v))) for row in self._int_functionals)

    def gauge_array(self, vectors):
        """Vectorised gauge of the rows of an integer array."""
        vectors = np.asarray(vectors, dtype=np.int64)
        if vectors.ndim == 1:
            vectors = vectors.reshape(1, -1)
        if vectors.shape[1] != self.d:
            raise DimensionMismatchError(f"Array of dimension {vectors.shape[1]} used with a norm on R^{self.d}")
        if vectors.shape[0] == 0:
            return np.zeros(0, dtype=np.int64)
        if self.kind == 'p':
            if self.p == 1:
                return np.abs(vectors).sum(axis=1)
            if self.p == 2:
                return (vectors * vectors).sum(axis=1)
            return np.abs(vectors).max(axis=1)
        if self.kind == 'wsup':
            return (np.abs(vectors) * self._int_weights).max(axis=1)
        return np.abs(vectors @ self._int_functionals.T).max(axis=1)

    def threshold(self, r):
        """Gauge threshold equivalent to norm <= r."""
        r = to_fraction(r)
        if self.squared:
            return r * r if r >= 0 else Fraction(-1)
        return r * self.scale

    def value(self, v):
        """norm_eval: the exact norm (its square for l2)."""
        return Fraction(self.gauge(v), 1 if self.squared else self.scale)

    def within(self, v, r):
        return self.gauge(v) <= self.threshold(r)

    def within_array(self, vectors, r):
        t = self.threshold(r)
        if t < 0:
            return np.zeros(len(vectors), dtype=bool)
        return self.gauge_array(vectors) * t.denominator <= t.numerator

    def gauge_to_value(self, g):
        return Fraction(int(g), 1 if self.squared else self.scale)

    def axis_extent(self, r):
        """Per-axis bound on |v_i| over the closed ball of radius r."""
        r = to_fraction(r)
        if r < 0:
            return (-1,) * self.d
        if self.kind == 'p':
            return (math.floor(r),) * self.d
        if self.kind == 'wsup':
            return tuple(math.floor(r / w) for w in self.weights)
        # |v_i| <= ||A^+||_inf * max_j |<a_j, v>|; float only sizes the box, membership stays exact.
        pinv = np.linalg.pinv(np.array([[float(a) for a in row] for row in self.functionals]))
        bound = float(r) * float(np.abs(pinv).sum(axis=1).max()) * (1 + 1e-9)
        return (math.floor(bound) + 1,) * self.d


def norm_eval(norm, v):
    """Exact norm of an integer vector; the squared norm for l2."""
    return norm.value(v)


def _as_point(point, d=None):
    point = tuple(int(x) for x in point)
    if d is not None and len(point) != d:
        raise DimensionMismatchError(f"Point {point} does not lie in Z^{d}")
    return point


def box_offsets(extent, cap=None):
    """
    All integer vectors v with |v_i| <= extent[i], in lexicographic order.
    """
    cap = ball_cap() if cap is None else cap
    if any(e < 0 for e in extent):
        return np.zeros((0, len(extent)), dtype=np.int64)
    shape = tuple(2 * e + 1 for e in extent)
    count = math.prod(shape)
    if count > cap:
        raise ResourceCapError(
            f"Enumeration box of {count} lattice points exceeds the cap of {cap}",
            count=count, cap=cap,
        )
    grid = np.indices(shape, dtype=np.int64).reshape(len(extent), -1).T
    return grid - np.array(extent, dtype=np.int64)


def ball_offsets(norm, r, cap=None):
    """Offsets of the closed ball B_r(0), lexicographically ordered."""
    offsets = box_offsets(norm.axis_extent(r), cap)
    return offsets[norm.within_array(offsets, r)]


def annulus_offsets(norm, outer, inner, cap=None):
    """Offsets u with ||u|| <= outer and not ||u|| <= inner (inner < 0 means nothing is removed)."""
    offsets = ball_offsets(norm, outer, cap)
    inner = to_fraction(inner)
    if inner < 0:
        return offsets
    return offsets[~norm.within_array(offsets, inner)]


def _to_points(array, center):
    shifted = array + np.array(center, dtype=np.int64)
    return tuple(tuple(int(x) for x in row) for row in shifted)


@dataclass(frozen=True)
class LatticeBall:
    """The closed lattice ball B_r(x) = {u in Z^d : ||u - x|| <= r}."""
    center: tuple
    radius: Fraction
    norm: NormSpec

    def __post_init__(self):
        object.__setattr__(self, 'center', _as_point(self.center, self.norm.d))
        radius = to_fraction(self.radius)
        require(radius >= 0, f"Ball radius must be nonnegative, got {radius}")
        object.__setattr__(self, 'radius', radius)

    @property
    def family_key(self):
        return self.norm

    @property
    def outer_radius(self):
        return self.radius

    def contains(self, u):
        u = _as_point(u, self.norm.d)
        return self.norm.within(tuple(a - b for a, b in zip(u, self.center)), self.radius)

    def contains_array(self, points):
        return self.norm.within_array(np.asarray(points, dtype=np.int64) - np.array(self.center), self.radius)

    def point_array(self, cap=None):
        return ball_offsets(self.norm, self.radius, cap) + np.array(self.center, dtype=np.int64)

    def points(self, cap=None):
        return lattice_ball_points(self, cap)

    def sphere_array(self, cap=None):
        """Lattice sphere: points with r - 1 < ||u - x|| <= r."""
        return annulus_offsets(self.norm, self.radius, self.radius - 1, cap) + np.array(self.center, dtype=np.int64)

    def __str__(self):
        return f"B_{self.radius}({','.join(map(str, self.center))})"


@dataclass(frozen=True)
class ThickSphere:
    """
    The thick sphere d_t B_r(x) = B_{r+t}(x) minus B_{r-t}(x).
    The radius and thickness are part of the value even when the point set
    does not determine them.
    """
    center: tuple
    radius: Fraction
    thickness: Fraction
    norm: NormSpec

    def __post_init__(self):
        object.__setattr__(self, 'center', _as_point(self.center, self.norm.d))
        radius = to_fraction(self.radius)
        thickness = to_fraction(self.thickness)
        require(thickness > 0, f"Sphere thickness must be positive, got {thickness}")
        require(thickness <= radius, f"Sphere thickness {thickness} exceeds its radius {radius}")
        object.__setattr__(self, 'radius', radius)
        object.__setattr__(self, 'thickness', thickness)

    @property
    def family_key(self):
        return self.norm

    @property
    def outer_radius(self):
        return self.radius + self.thickness

    def contains(self, u):
        offset = tuple(a - b for a, b in zip(_as_point(u, self.norm.d), self.center))
        return (self.norm.within(offset, self.radius + self.thickness)
                and not self.norm.within(offset, self.radius - self.thickness))

    def point_array(self, cap=None):
        return (annulus_offsets(self.norm, self.radius + self.thickness, self.radius - self.thickness, cap)
                + np.array(self.center, dtype=np.int64))

    def points(self, cap=None):
        return thick_boundary_points(self, cap)


def lattice_ball_points(ball, cap=None):
    """
    The lattice points of a closed ball in lexicographic order.

    Raises:
        ResourceCapError: If the enumeration box exceeds the cap
    """
    return _to_points(ball_offsets(ball.norm, ball.radius, cap), ball.center)


def thick_boundary_points(sphere, cap=None):
    """The lattice points of d_t B_r(x), lexicographically ordered."""
    return _to_points(
        annulus_offsets(sphere.norm, sphere.radius + sphere.thickness, sphere.radius - sphere.thickness, cap),
        sphere.center,
    )


def thickened_contains(ball, thickness, u):
    """
    Membership in d_t B for any t > 0; for t > rad B the inner ball is empty.
    """
    offset = tuple(a - b for a, b in zip(_as_point(u, ball.norm.d), ball.center))
    if not ball.norm.within(offset, ball.radius + thickness):
        return False
    inner = ball.radius - thickness
    return inner < 0 or not ball.norm.within(offset, inner)


@lru_cache(maxsize=4096)
def ball_size(norm, r):
    """|B_r(0)| by exact enumeration."""
    return int(len(ball_offsets(norm, to_fraction(r))))


def doubling_ratio(norm, r, d=None):
    """
    Exact |B_{2r}(0)| / |B_r(0)|.
    """
    if d is not None and d != norm.d:
        raise DimensionMismatchError(f"Dimension {d} does not match the norm's dimension {norm.d}")
    r = to_fraction(r)
    require(r >= 1, f"doubling_ratio needs r >= 1, got {r}")
    return Fraction(ball_size(norm, 2 * r), ball_size(norm, r))


@dataclass(frozen=True)
class DoublingCertificate:
    norm: NormSpec
    D: int
    max_ratio: Fraction
    attained_at: int
    radii: int


def doubling_certificate(norm, radii=None):
    """
    Certify an integer doubling constant D = ceil(max ratio) over r = 1..radii.
    """
    radii = get_setting('BESICOVER_DOUBLING_RADII') if radii is None else radii
    best, best_r = Fraction(0), 1
    for r in range(1, radii + 1):
        ratio = doubling_ratio(norm, r)
        if ratio > best:
            best, best_r = ratio, r
    certificate = DoublingCertificate(norm=norm, D=math.ceil(best), max_ratio=best, attained_at=best_r, radii=radii)
    logger.info(f"Doubling certificate for {norm.label}, d={norm.d}: D={certificate.D} "
                f"(max ratio {best} at r={best_r})")
    return certificate


def _min_gauge(a, b, norm, stop_below=None):
    """Minimum gauge of a - b over all pairs; stops early once below ``stop_below``."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if len(a) == 0 or len(b) == 0:
        return None
    if len(a) > len(b):
        a, b = b, a
    rows = max(1, _DISTANCE_CHUNK // len(b))
    best = None
    for start in range(0, len(a), rows):
        block = a[start:start + rows]
        diffs = (block[:, None, :] - b[None, :, :]).reshape(-1, norm.d)
        low = int(norm.gauge_array(diffs).min())
        best = low if best is None else min(best, low)
        if stop_below is not None and best < stop_below:
            break
    return best


def set_distance(a, b, norm):
    """
    Exact distance between two finite lattice point sets (squared for l2);
    None when either set is empty.
    """
    g = _min_gauge(a, b, norm)
    return None if g is None else norm.gauge_to_value(g)


def sets_separated(a, b, norm, r):
    """True iff every pair of points is at norm distance >= r."""
    t = norm.threshold(r)
    # gauge >= t  <=>  not (gauge < t); integer gauges so gauge < t <=> gauge < ceil(t)
    limit = math.ceil(t)
    g = _min_gauge(a, b, norm, stop_below=limit)
    return g is None or g >= t


@dataclass(frozen=True)
class LatticeSphere:
    """The lattice sphere of a ball, used when separation of spheres is measured."""
    ball: LatticeBall

    @property
    def center(self):
        return self.ball.center

    @property
    def radius(self):
        return self.ball.radius

    @property
    def norm(self):
        return self.ball.norm

    @property
    def family_key(self):
        return self.ball.norm

    @property
    def outer_radius(self):
        return self.ball.radius

    def point_array(self, cap=None):
        return self.ball.sphere_array(cap)
