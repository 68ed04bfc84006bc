"""
Ratio maximal functions, violation scores and witness packages showing that
the ratio maximal inequality fails for ball families without the Besicovitch
property.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from besicover.covering import BallFamilySpec, as_family, multiplicity, staircase_carpet
from besicover.dynamics import CountingTranslation, Observable, ball_sum
from utils.config import get_setting
from utils.error_handlers import (
    InvalidParameterError,
    ResourceCapError,
    UndefinedFractionError,
    WitnessPreconditionError,
    require,
)
from utils.rationals import to_fraction
from utils.trials import run_trials

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WitnessPackage:
    """
    Point sets U, V with a radius n(g) per point such that every window
    B_{n(g)} g holds more than t times as many U-points as V-points, while
    |U| / |V| stays below t / M.
    """
    U: tuple
    V: tuple
    t: Fraction
    radii: dict
    family: BallFamilySpec

    def __post_init__(self):
        U = tuple(sorted({tuple(int(x) for x in g) for g in self.U}))
        V = tuple(sorted({tuple(int(x) for x in g) for g in self.V}))
        require(U and V, "A witness package needs nonempty U and V")
        t = to_fraction(self.t)
        require(t > 0, "t must be positive")
        radii = {tuple(int(x) for x in g): int(n) for g, n in dict(self.radii).items()}
        missing = [g for g in U + V if g not in radii]
        require(not missing, f"No radius assigned to {missing[:3]}")
        object.__setattr__(self, 'U', U)
        object.__setattr__(self, 'V', V)
        object.__setattr__(self, 't', t)
        object.__setattr__(self, 'radii', radii)

    @property
    def points(self):
        return tuple(sorted(set(self.U) | set(self.V)))

    def window(self, g):
        return self.family.ball(g, self.radii[g])


def _window_counts(U, V, ball):
    return sum(1 for x in U if ball.contains(x)), sum(1 for x in V if ball.contains(x))


def _exceeds(u_count, v_count, t):
    # An empty V-count reads as an infinite ratio.
    return v_count == 0 and u_count > 0 or v_count > 0 and Fraction(u_count, v_count) > t


def translation_action(family):
    """The translation action whose orbit windows are g + B_n."""
    family = as_family(family)
    return CountingTranslation(family.d, reverse=not family.symmetric)


def maximal_ratio(action, f, g, family, n_max, omega):
    """
    sup over 0 <= n <= n_max of R_n(f, g)(w), with the first n attaining it.
    Radii with a vanishing denominator are skipped.

    Raises:
        UndefinedFractionError: If every denominator vanishes
    """
    best, best_n = None, None
    for n in range(n_max + 1):
        denominator = ball_sum(action, g, family, n, omega)
        if denominator == 0:
            continue
        ratio = ball_sum(action, f, family, n, omega) / denominator
        if best is None or ratio > best:
            best, best_n = ratio, n
    if best is None:
        raise UndefinedFractionError(f"Every ratio up to n={n_max} is undefined at {omega}")
    return best, best_n


def exceedance_mass(action, f, h, family, eps, n_max):
    """mu_h{w : sup_n R_n(f, h)(w) > eps}, over the support of h."""
    require(h.default == 0 and h.is_nonnegative, "h must be finitely supported and nonnegative")
    eps = to_fraction(eps)
    total = Fraction(0)
    for omega, weight in sorted(h.values.items()):
        try:
            sup, _ = maximal_ratio(action, f, h, family, n_max, omega)
        except UndefinedFractionError:
            continue
        if sup > eps:
            total += weight * action.mass(omega)
    return total


def violation_score(action, f, h, eps, n_max, family):
    """
    C(f, h) = mu_h{sup_n R_n(f, h) > eps} / int f.

    Raises:
        UndefinedFractionError: If int f = 0
    """
    require(f.is_nonnegative, "f must be nonnegative")
    integral = f.integral(action)
    if integral == 0:
        raise UndefinedFractionError("The violation score is undefined when int f = 0")
    return exceedance_mass(action, f, h, family, eps, n_max) / integral


def staircase_witness(K, M, t=Fraction(1, 2)):
    """
    U = {(0,0)}, V = {(-i, -(K-i))}, radius K on V and 0 at the origin,
    for one-sided cubes in Z^2.

    Raises:
        WitnessPreconditionError: If 1/(K+1) < t/M fails
    """
    M, t = to_fraction(M), to_fraction(t)
    require(isinstance(K, int) and K >= 1, f"K must be a positive integer, got {K!r}")
    if not Fraction(1, K + 1) < t / M:
        raise WitnessPreconditionError(f"K={K} is too small for M={M}: 1/{K + 1} is not below {t / M}",
                                       K=K, M=M)
    V = [(-i, -(K - i)) for i in range(K + 1)]
    radii = {g: K for g in V}
    radii[(0, 0)] = 0
    return WitnessPackage(((0, 0),), tuple(V), t, radii, BallFamilySpec.one_sided_cubes(2))


@dataclass
class WitnessCheck:
    name: str
    holds: bool
    lhs: Fraction = None
    rhs: Fraction = None
    detail: str = ''


@dataclass
class ValidationReport:
    M: Fraction
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(check.holds for check in self.checks)

    @property
    def first_failure(self):
        return next((check for check in self.checks if not check.holds), None)


def witness_validate(w, M):
    """
    Check a witness package exactly, stopping at the first failing inequality:
    the window ratios, |U|/|V| < t/M, and the translation consequence
    mu_h{sup_n R_n(1_U, 1_V) > t} >= |V| > (M/t) int 1_U.
    """
    M = to_fraction(M)
    report = ValidationReport(M)

    for g in w.points:
        u_count, v_count = _window_counts(w.U, w.V, w.window(g))
        if not _exceeds(u_count, v_count, w.t):
            report.checks.append(WitnessCheck(
                'window_ratio', False, Fraction(u_count), Fraction(v_count) * w.t,
                f"window {w.window(g)} holds {u_count} U-points and {v_count} V-points",
            ))
            return report
    report.checks.append(WitnessCheck('window_ratio', True, detail=f"{len(w.points)} windows"))

    ratio = Fraction(len(w.U), len(w.V))
    report.checks.append(WitnessCheck('set_ratio', ratio < w.t / M, ratio, w.t / M))
    if not report.passed:
        return report

    action = translation_action(w.family)
    f, h = Observable.indicator(w.U), Observable.indicator(w.V)
    exceed = exceedance_mass(action, f, h, w.family, w.t, max(w.radii.values()))
    report.checks.append(WitnessCheck('exceedance_covers_V', exceed >= len(w.V), exceed, Fraction(len(w.V))))
    bound = M / w.t * f.integral(action)
    report.checks.append(WitnessCheck('maximal_inequality_fails', exceed > bound, exceed, bound))
    if report.passed:
        logger.info(f"Witness validated: |U|={len(w.U)}, |V|={len(w.V)}, t={w.t}, M={M}")
    else:
        logger.warning(f"Witness failed at {report.first_failure.name}")
    return report


@dataclass
class RadiusAssignment:
    radii: dict
    missing: tuple = None

    @property
    def found(self):
        return self.missing is None


def find_radius_assignment(U, V, t, family, n_max):
    """
    Smallest n(g) <= n_max per point with |U ∩ B_n g| / |V ∩ B_n g| > t;
    stops at the first point (in lexicographic order) without one.
    """
    family = as_family(family)
    t = to_fraction(t)
    U = sorted({tuple(g) for g in U})
    V = sorted({tuple(g) for g in V})
    radii = {}
    for g in sorted(set(U) | set(V)):
        for n in range(n_max + 1):
            if _exceeds(*_window_counts(U, V, family.ball(g, n)), t):
                radii[g] = n
                break
        else:
            return RadiusAssignment(radii, g)
    return RadiusAssignment(radii)


def search_witness(window, family, t, M, max_u, max_v, cap=None):
    """
    Brute-force search over disjoint U, V in [-window, window]^d with
    |U| <= max_u, |V| <= max_v for a valid witness package.

    Raises:
        ResourceCapError: If the number of candidate pairs exceeds the cap
    """
    family = as_family(family)
    t, M = to_fraction(t), to_fraction(M)
    cap = get_setting('BESICOVER_WITNESS_SEARCH_CAP') if cap is None else cap
    side = 2 * window + 1
    grid = np.indices((side,) * family.d).reshape(family.d, -1).T - window
    points = [tuple(int(x) for x in row) for row in grid]
    count = sum(math.comb(len(points), a) * math.comb(len(points) - a, b)
                for a in range(1, max_u + 1) for b in range(1, max_v + 1)
                if Fraction(a, b) < t / M)
    if count > cap:
        raise ResourceCapError(f"Witness search over {count} candidate pairs exceeds the cap of {cap}",
                               count=count, cap=cap)
    n_max = 2 * window * family.d
    for a in range(1, max_u + 1):
        for b in range(1, max_v + 1):
            if not Fraction(a, b) < t / M:
                continue
            for U in combinations(points, a):
                rest = [p for p in points if p not in U]
                for V in combinations(rest, b):
                    assignment = find_radius_assignment(U, V, t, family, n_max)
                    if assignment.found:
                        logger.info(f"Witness found with |U|={a}, |V|={b} in window {window}")
                        return WitnessPackage(U, V, t, assignment.radii, family)
    logger.info(f"No witness in window {window} with |U| <= {max_u}, |V| <= {max_v}")
    return None


@dataclass
class TrialsReport:
    trials: int
    violations: int
    worst_ratio: Fraction
    M_cert: Fraction
    eps: Fraction


def maximal_inequality_trials(norm, C, eps, trials, seed, n_max, window, support_size=4, threads=1):
    """
    Random (f, h) pairs on counting translation: check
    mu_h{sup_{n <= n_max} R_n(f, h) > eps} <= (C/eps) int f with M_cert = C.
    """
    eps, M_cert = to_fraction(eps), to_fraction(C)
    require(trials > 0, "At least one trial is needed")
    action = CountingTranslation(norm.d)
    side = 2 * window + 1
    require(support_size <= side ** norm.d, "Support size exceeds the window")

    def random_observable(rng):
        flat = rng.choice(side ** norm.d, size=support_size, replace=False)
        coords = np.stack(np.unravel_index(flat, (side,) * norm.d), axis=1) - window
        weights = rng.integers(1, 11, size=support_size)
        return Observable({tuple(int(x) for x in c): int(wt) for c, wt in zip(coords, weights)})

    def trial(rng):
        f, h = random_observable(rng), random_observable(rng)
        lhs = exceedance_mass(action, f, h, norm, eps, n_max)
        rhs = M_cert / eps * f.integral(action)
        return lhs / rhs

    ratios = run_trials(trial, seed, trials, threads)
    violations = sum(1 for r in ratios if r > 1)
    if violations:
        logger.warning(f"Maximal inequality violated in {violations} of {trials} trials with M_cert={M_cert}")
    return TrialsReport(trials, violations, max(ratios), M_cert, eps)


def violation_curve(K_values, M, t=Fraction(1, 2)):
    """Violation score of the staircase witness per K, with the multiplicity at the origin."""
    rows = []
    for K in K_values:
        w = staircase_witness(K, M, t)
        report = witness_validate(w, M)
        if not report.passed:
            raise InvalidParameterError(f"Staircase witness K={K} failed {report.first_failure.name}")
        action = translation_action(w.family)
        score = violation_score(action, Observable.indicator(w.U), Observable.indicator(w.V), t, K, w.family)
        cubes = staircase_carpet(K).balls[:K + 1]
        rows.append({
            'K': K,
            'score': score,
            'score_per_K': score / K,
            'multiplicity_at_origin': multiplicity(cubes, probe=[(0, 0)]),
        })
    return rows
