"""
Test cases for measures, stacks, budgets, boundary scans and coarse-dimension witnesses.
"""

import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from besicover.concentration import (
    SQUARED,
    BudgetParams,
    DiscreteMeasure,
    DyadicMeasure,
    boundary_ratio_scan,
    budget_dominance_report,
    budget_Q,
    budget_q,
    build_stack,
    circle_measure,
    coarse_dim_bound,
    coarse_dim_threshold_search,
    coarse_dim_witness_check,
    onion_measure,
    packing_number,
    sample_support,
    squared_radii_schedule,
    thick_center_curve,
    thick_center_mass,
    thickness_fraction,
)
from besicover.geometry import LatticeBall, NormSpec, lattice_ball_points
from utils.error_handlers import HypothesisViolationError, InvalidParameterError, UndefinedFractionError


def reference_Q(k, chi, eps, delta):
    if k == 0:
        return 1
    return (math.ceil(2 * chi / (eps * delta))
            * (1 + math.ceil(64 * chi / (eps * delta * delta)))
            * (1 + reference_Q(k - 1, chi, eps / 2, delta / 8)))


class DiscreteMeasureTestCase(SimpleTestCase):
    """Test cases for finitely supported measures."""

    def test_duplicates_accumulate(self):
        """Test that repeated points are counted once in mu(S)."""
        mu = DiscreteMeasure({(0, 0): Fraction(1, 3), (1, 0): Fraction(2, 3)})
        self.assertEqual(mu.total, 1)
        self.assertEqual(mu.mass([(0, 0), (0, 0)]), Fraction(1, 3))

    def test_nonpositive_mass_rejected(self):
        """Test that atoms must carry positive mass."""
        with self.assertRaises(InvalidParameterError):
            DiscreteMeasure({(0, 0): 0})

    def test_support_is_sorted(self):
        """Test lexicographic support order."""
        mu = DiscreteMeasure.counting([(2, 0), (0, 1), (0, 0)])
        self.assertEqual(mu.support, ((0, 0), (0, 1), (2, 0)))


class ThicknessTestCase(SimpleTestCase):
    """Test cases for thickness fractions."""

    def setUp(self):
        """Set up the l-infinity norm on Z^2."""
        self.norm = NormSpec.linf(2)

    def test_counting_on_larger_ball(self):
        """Test 24/49 for counting measure on B_3 and the ball B_3."""
        mu = DiscreteMeasure.counting(lattice_ball_points(LatticeBall((0, 0), 3, self.norm)))
        self.assertEqual(thickness_fraction(mu, LatticeBall((0, 0), 3, self.norm)), Fraction(24, 49))

    def test_counting_on_same_ball(self):
        """Test 16/25 for counting measure on B_2 and the ball B_2."""
        mu = DiscreteMeasure.counting(lattice_ball_points(LatticeBall((0, 0), 2, self.norm)))
        self.assertEqual(thickness_fraction(mu, LatticeBall((0, 0), 2, self.norm)), Fraction(16, 25))

    def test_atom_at_center(self):
        """Test that an atom at the center is never thick."""
        mu = DiscreteMeasure.counting([(0, 0)])
        self.assertEqual(thickness_fraction(mu, LatticeBall((0, 0), 2, self.norm)), 0)

    def test_all_mass_on_boundary(self):
        """Test a fraction of exactly one."""
        mu = DiscreteMeasure.counting([(2, 0)])
        self.assertEqual(thickness_fraction(mu, LatticeBall((0, 0), 2, self.norm)), 1)

    def test_empty_ball(self):
        """Test that a massless ball leaves the fraction undefined."""
        mu = DiscreteMeasure.counting([(10, 10)])
        with self.assertRaises(UndefinedFractionError):
            thickness_fraction(mu, LatticeBall((0, 0), 2, self.norm))


class StackTestCase(SimpleTestCase):
    """Test cases for stacks and thick-center mass."""

    def setUp(self):
        """Set up the l-infinity norm on Z^2."""
        self.norm = NormSpec.linf(2)

    def test_squared_schedule(self):
        """Test r_i = r_{i-1}^2 from max(2, R0)."""
        self.assertEqual(squared_radii_schedule(2, 4), [2, 4, 16, 256])
        self.assertEqual(squared_radii_schedule(5, 3), [5, 25, 625])

    def test_adjacent_growth_enforced(self):
        """Test that shrinking radii are rejected."""
        with self.assertRaises(InvalidParameterError):
            build_stack([(0, 0)], [4, 3], self.norm)

    def test_squared_growth_enforced(self):
        """Test that squared growth needs minrad >= maxrad^2."""
        with self.assertRaises(InvalidParameterError):
            build_stack([(0, 0)], [3, 8], self.norm, SQUARED, 2)

    def test_height_zero(self):
        """Test that an empty stack keeps all of F."""
        mu = DiscreteMeasure.counting([(0, 0), (5, 5)])
        stack = build_stack([(0, 0)], [], self.norm, SQUARED, 2)
        _, fraction = thick_center_mass(mu, stack, Fraction(1, 10))
        self.assertEqual(fraction, Fraction(1, 2))

    def test_single_atom_not_thick(self):
        """Test that a lone atom at its center is never thick."""
        mu = DiscreteMeasure.counting([(0, 0)])
        stack = build_stack([(0, 0)], [2], self.norm, SQUARED, 2)
        thick, fraction = thick_center_mass(mu, stack, Fraction(1, 10))
        self.assertEqual(thick, ())
        self.assertEqual(fraction, 0)

    def test_onion_curve_is_antitone(self):
        """Test that thick-center mass never grows with the height."""
        mu = onion_measure(self.norm, [2, 4, 16])
        self.assertEqual(mu.total, 3)
        F = mu.support[::7]
        stack = build_stack(F, squared_radii_schedule(2, 3), self.norm, SQUARED, 2)
        fractions = [fraction for _, fraction in thick_center_curve(mu, stack, Fraction(1, 10))]
        self.assertEqual(len(fractions), 4)
        for a, b in zip(fractions, fractions[1:]):
            self.assertGreaterEqual(a, b)


class BudgetTestCase(SimpleTestCase):
    """Test cases for the exact constant budgets."""

    def test_k_zero(self):
        """Test that both budgets are 1 at k = 0."""
        params = BudgetParams(0, 5, Fraction(1, 2), Fraction(1, 2))
        self.assertEqual(budget_q(params), 1)
        self.assertEqual(budget_Q(params), 1)

    def test_k_one(self):
        """Test the exact values at k = 1, chi = 5, eps = delta = 1/2."""
        params = BudgetParams(1, 5, Fraction(1, 2), Fraction(1, 2))
        self.assertEqual(budget_q(params), 160000000)
        self.assertEqual(budget_Q(params), 204880)

    def test_k_two(self):
        """Test q(2) and Q(2) against direct evaluation."""
        params = BudgetParams(2, 5, Fraction(1, 2), Fraction(1, 2))
        self.assertEqual(budget_q(params), 160000 ** 2 * 1000 ** 4)
        self.assertEqual(budget_Q(params), reference_Q(2, 5, Fraction(1, 2), Fraction(1, 2)))

    def test_invalid_parameters(self):
        """Test that eps outside (0, 1) is rejected."""
        with self.assertRaises(InvalidParameterError):
            BudgetParams(1, 1, Fraction(3, 2), Fraction(1, 2))

    def test_dominance_on_default_grid(self):
        """Test q >= Q over the default grid."""
        report = budget_dominance_report()
        self.assertTrue(report['holds'])
        self.assertEqual(len(report['rows']), 4 * 4 * 3 * 3)


class BoundaryScanTestCase(SimpleTestCase):
    """Test cases for boundary-ratio scans."""

    def test_dyadic_interior_point(self):
        """Test exact ratios at the center of the dyadic grid."""
        mu = DyadicMeasure(4, 2)
        result = boundary_ratio_scan(mu, [(8, 8)], [Fraction(1, 4), Fraction(1, 8)], Fraction(1, 2),
                                     NormSpec.linf(2))
        self.assertEqual([row.ratio for row in result.rows], [Fraction(32, 81), Fraction(16, 25)])
        self.assertEqual(result.rows[0].ball_mass, Fraction(81, 289))
        self.assertEqual(result.exceedance, 0)

    def test_dyadic_sample_below_threshold(self):
        """Test that the uniform grid has vanishing exceedance."""
        mu = DyadicMeasure(6, 2)
        points = sample_support(mu, 50, np.random.default_rng(0))
        result = boundary_ratio_scan(mu, points, [Fraction(1, 2), Fraction(1, 4), Fraction(1, 8)],
                                     Fraction(1, 10), NormSpec.linf(2))
        self.assertEqual(len(result.rows), 150)
        self.assertLess(result.exceedance, Fraction(1, 20))

    def test_single_atom(self):
        """Test that a single atom has zero boundary ratio."""
        mu = DiscreteMeasure.counting([(0, 0)])
        result = boundary_ratio_scan(mu, [(0, 0)], [3, 2, 1], Fraction(1, 10), NormSpec.linf(2))
        self.assertTrue(all(row.ratio == 0 for row in result.rows))
        self.assertEqual(result.exceedance, 0)

    def test_schedule_must_decrease(self):
        """Test that a non-decreasing radius schedule is rejected."""
        mu = DiscreteMeasure.counting([(0, 0)])
        with self.assertRaises(InvalidParameterError):
            boundary_ratio_scan(mu, [(0, 0)], [1, 2], Fraction(1, 10), NormSpec.linf(2))

    def test_sampling_is_deterministic(self):
        """Test that equal seeds give equal sorted samples."""
        mu = DyadicMeasure(5, 2)
        a = sample_support(mu, 20, np.random.default_rng(42))
        b = sample_support(mu, 20, np.random.default_rng(42))
        self.assertEqual(a, b)
        self.assertEqual(a, sorted(a))

    def test_circle_measure(self):
        """Test that the discretised circle is a uniform probability measure."""
        mu = circle_measure(6, Fraction(1, 4))
        self.assertGreater(mu.support_size, 0)
        self.assertEqual(mu.total, 1)
        point = mu.support_point(0)
        self.assertEqual(mu.mass_at(point), Fraction(1, mu.support_size))


class CoarseDimensionTestCase(SimpleTestCase):
    """Test cases for thick-sphere chains and packing numbers."""

    def test_single_ball_nonempty(self):
        """Test that one thick sphere is never empty."""
        witness = coarse_dim_witness_check([LatticeBall((0, 0), 4, NormSpec.linf(2))], 4)
        self.assertFalse(witness.empty)
        self.assertEqual(witness.k, 1)

    def test_two_balls_share_a_point(self):
        """Test that the l2 spheres of radius 8 at (0,0) and (8,0) meet at (4,7)."""
        norm = NormSpec.l2(2)
        witness = coarse_dim_witness_check([LatticeBall((0, 0), 8, norm), LatticeBall((8, 0), 8, norm)], 4)
        self.assertFalse(witness.empty)
        self.assertIn((4, 7), witness.intersection)

    def test_far_balls_empty(self):
        """Test that distant spheres do not meet."""
        norm = NormSpec.linf(2)
        witness = coarse_dim_witness_check([LatticeBall((0, 0), 4, norm), LatticeBall((20, 0), 4, norm)], 4)
        self.assertTrue(witness.empty)

    def test_center_inside_shrunk_ball(self):
        """Test that the chain hypothesis is enforced."""
        norm = NormSpec.l2(2)
        with self.assertRaises(HypothesisViolationError):
            coarse_dim_witness_check([LatticeBall((0, 0), 8, norm), LatticeBall((1, 0), 8, norm)], 4)

    def test_threshold_search(self):
        """Test that k* is one more than the longest chain found."""
        search = coarse_dim_threshold_search(NormSpec.l2(2), 4, 3, 2, np.random.default_rng(1))
        self.assertGreaterEqual(search.longest, 1)
        self.assertEqual(search.k_star, search.longest + 1)
        self.assertEqual(len(search.chains), 2)

    def test_threshold_search_capped(self):
        """Test that chains cut off by k_max mark k* as a lower bound."""
        search = coarse_dim_threshold_search(NormSpec.l2(2), 4, 2, 5, np.random.default_rng(0))
        self.assertEqual(search.longest, 2)
        self.assertEqual(search.k_star, 3)
        self.assertTrue(search.capped)
        for chain in search.chains:
            self.assertFalse(coarse_dim_witness_check(chain, 4).empty)

    def test_threshold_in_one_dimension(self):
        """Test k* = 3 on Z and that every valid extension of a found pair is empty."""
        norm = NormSpec.linf(1)
        for R0 in (4, 8, 16):
            search = coarse_dim_threshold_search(norm, R0, 5, 4, np.random.default_rng(R0))
            self.assertEqual(search.k_star, 3)
            self.assertFalse(search.capped)
            checked = 0
            for chain in search.chains:
                self.assertEqual(len(chain), 2)
                for p in coarse_dim_witness_check(chain, R0).intersection:
                    for r in range(R0, int(chain[-1].radius) + 1):
                        for c in (p[0] - r - 1, p[0] - r, p[0] + r, p[0] + r + 1):
                            try:
                                witness = coarse_dim_witness_check(list(chain) + [LatticeBall((c,), r, norm)], R0)
                            except HypothesisViolationError:
                                continue
                            checked += 1
                            self.assertTrue(witness.empty)
            # Extensions through a common point always hit a shrunk earlier ball.
            self.assertEqual(checked, 0)

    def test_random_chains_beyond_threshold(self):
        """Test that random valid chains of length k* on Z have empty intersection."""
        norm = NormSpec.linf(1)
        rng = np.random.default_rng(5)
        for R0 in (4, 8, 16):
            for _ in range(200):
                radii = sorted((int(r) for r in rng.integers(R0, 2 * R0 + 1, size=3)), reverse=True)
                centers = rng.integers(-4 * R0, 4 * R0 + 1, size=3)
                balls = [LatticeBall((int(c),), r, norm) for c, r in zip(centers, radii)]
                try:
                    witness = coarse_dim_witness_check(balls, R0)
                except HypothesisViolationError:
                    continue
                self.assertTrue(witness.empty)

    def test_packing_in_one_dimension(self):
        """Test six 3/4-separated points of the quarter grid in [-2, 2]."""
        packing = packing_number(NormSpec.linf(1), Fraction(3, 4), 2, Fraction(1, 4))
        self.assertEqual(packing.greedy, 6)
        self.assertEqual(packing.exhaustive, 6)
        self.assertTrue(packing.exact)

    def test_coarse_dim_bound(self):
        """Test k = k' k'' with a supplied k'."""
        bound = coarse_dim_bound(NormSpec.linf(1), 4, k_prime=2)
        self.assertEqual(bound.k_double_prime, 6)
        self.assertEqual(bound.k, 12)
        self.assertEqual(bound.provenance['k_prime'], 'supplied')

    def test_coarse_dim_bound_capped_search(self):
        """Test that a capped chain search is recorded as a lower bound."""
        bound = coarse_dim_bound(NormSpec.linf(1), 4, trials=3, k_max=2, rng=np.random.default_rng(2))
        self.assertEqual(bound.k_prime, 3)
        self.assertTrue(bound.provenance['k_prime_capped'])
        self.assertTrue(bound.provenance['k_prime'].startswith('lower bound'))
        self.assertEqual(bound.k, 18)
