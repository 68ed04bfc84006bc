"""
Test cases for config serializers.
"""

from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase
from rest_framework import serializers

from besicover.concentration import DiscreteMeasure, DyadicMeasure
from besicover.covering import random_carpet, staircase_carpet
from besicover.dynamics import Observable, Odometer, WeightedTranslation
from besicover.geometry import NormSpec
from besicover.maximal import staircase_witness
from besicover.serializers import (
    ActionSerializer,
    CarpetSerializer,
    CoverConfigSerializer,
    MeasureSerializer,
    NormSpecSerializer,
    ObservableSerializer,
    RationalField,
    WitnessPackageSerializer,
    build_object,
)


class RationalFieldTestCase(SimpleTestCase):
    """Test cases for exact rational parsing."""

    def setUp(self):
        """Set up the field."""
        self.field = RationalField()

    def test_parses_fractions_and_integers(self):
        """Test "p/q", integer and decimal inputs."""
        self.assertEqual(self.field.run_validation('3/4'), Fraction(3, 4))
        self.assertEqual(self.field.run_validation(2), 2)
        self.assertEqual(self.field.run_validation('0.25'), Fraction(1, 4))

    def test_json_float(self):
        """Test that a JSON float goes through its decimal form."""
        self.assertEqual(self.field.run_validation(0.1), Fraction(1, 10))

    def test_rejects_garbage(self):
        """Test that non-numeric strings are rejected."""
        with self.assertRaises(serializers.ValidationError):
            self.field.run_validation('abc')

    def test_renders_exactly(self):
        """Test "p/q" and integer rendering."""
        self.assertEqual(self.field.to_representation(Fraction(3, 4)), '3/4')
        self.assertEqual(self.field.to_representation(Fraction(2)), '2')


class NormSpecSerializerTestCase(SimpleTestCase):
    """Test cases for norm specifications."""

    def test_lp_norm(self):
        """Test a valid l2 norm."""
        self.assertEqual(build_object(NormSpecSerializer, {'kind': 'p', 'p': 2, 'd': 3}), NormSpec.l2(3))

    def test_inf_norm(self):
        """Test the "inf" spelling."""
        self.assertEqual(build_object(NormSpecSerializer, {'p': 'inf', 'd': 2}), NormSpec.linf(2))

    def test_invalid_p(self):
        """Test that p = 3 is rejected."""
        serializer = NormSpecSerializer(data={'kind': 'p', 'p': 3, 'd': 2})
        self.assertFalse(serializer.is_valid())
        self.assertIn('p', serializer.errors)

    def test_degenerate_polyhedral(self):
        """Test that a seminorm is rejected."""
        serializer = NormSpecSerializer(data={'kind': 'poly', 'functionals': [[1, 1], [2, 2]]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('norm', serializer.errors)


class MeasureSerializerTestCase(SimpleTestCase):
    """Test cases for measure inputs."""

    def test_bare_atom_list(self):
        """Test that a JSON array is read as atoms."""
        measure = build_object(MeasureSerializer, [
            {'point': [0, 0], 'mass': '1/2'},
            {'point': [1, 0], 'mass': 1},
        ])
        self.assertIsInstance(measure, DiscreteMeasure)
        self.assertEqual(measure.total, Fraction(3, 2))

    def test_dyadic(self):
        """Test a dyadic grid measure."""
        measure = build_object(MeasureSerializer, {'kind': 'dyadic', 'm': 3, 'd': 2})
        self.assertIsInstance(measure, DyadicMeasure)
        self.assertEqual(measure.support_size, 81)

    def test_negative_mass(self):
        """Test that nonpositive masses are rejected."""
        serializer = MeasureSerializer(data=[{'point': [0, 0], 'mass': '-1'}])
        self.assertFalse(serializer.is_valid())

    def test_circle_needs_radius(self):
        """Test that a circle measure needs a radius."""
        serializer = MeasureSerializer(data={'kind': 'circle', 'm': 4})
        self.assertFalse(serializer.is_valid())
        self.assertIn('radius', serializer.errors)


class ActionSerializerTestCase(SimpleTestCase):
    """Test cases for action models."""

    def test_weighted(self):
        """Test the lambda field."""
        action = build_object(ActionSerializer, {'model': 'weighted', 'd': 2, 'lambda': '1/2'})
        self.assertIsInstance(action, WeightedTranslation)
        self.assertEqual(action.lam, Fraction(1, 2))

    def test_weighted_needs_lambda(self):
        """Test that weighted translation without lambda is rejected."""
        serializer = ActionSerializer(data={'model': 'weighted', 'd': 2})
        self.assertFalse(serializer.is_valid())
        self.assertIn('lambda', serializer.errors)

    def test_odometer(self):
        """Test the odometer with one bias per axis."""
        action = build_object(ActionSerializer, {'model': 'odometer', 'd': 1, 'N': 3, 'biases': ['1/3']})
        self.assertIsInstance(action, Odometer)
        self.assertEqual(action.horizon, 8)

    def test_odometer_bias_count(self):
        """Test that a missing bias is a validation error."""
        serializer = ActionSerializer(data={'model': 'odometer', 'd': 2, 'N': 3, 'biases': ['1/3']})
        self.assertFalse(serializer.is_valid())


class ObservableSerializerTestCase(SimpleTestCase):
    """Test cases for observables."""

    def test_values_and_default(self):
        """Test point values with a default."""
        f = build_object(ObservableSerializer, {
            'values': [{'point': [0, 0], 'value': '3/2'}],
            'default': 1,
        })
        self.assertEqual(f, Observable({(0, 0): Fraction(3, 2)}, 1))

    def test_missing_value(self):
        """Test that entries need both point and value."""
        serializer = ObservableSerializer(data={'values': [{'point': [0, 0]}]})
        self.assertFalse(serializer.is_valid())


class CarpetSerializerTestCase(SimpleTestCase):
    """Test cases for carpet input and rendering."""

    def test_random_carpet_round_trip(self):
        """Test that rendered l2 carpets read back to the same carpet."""
        rng = np.random.default_rng(11)
        for _ in range(5):
            carpet = random_carpet(NormSpec.l2(2), 8, 6, 0, 4, rng)
            data = CarpetSerializer().to_representation(carpet)
            self.assertEqual(data['family'], {'kind': 'norm', 'norm': {'kind': 'p', 'p': 2, 'd': 2}})
            self.assertEqual(build_object(CarpetSerializer, data), carpet)

    def test_staircase_round_trip(self):
        """Test the one-sided staircase and its rational radius strings."""
        carpet = staircase_carpet(3)
        data = CarpetSerializer().to_representation(carpet)
        self.assertEqual(data['balls'][0], {'center': [0, -3], 'radius': '3'})
        self.assertEqual(build_object(CarpetSerializer, data), carpet)

    def test_fractional_radius(self):
        """Test that "p/q" radii are kept exactly."""
        carpet = build_object(CarpetSerializer, {
            'family': {'kind': 'norm', 'norm': {'p': 1, 'd': 2}},
            'balls': [{'center': [0, 0], 'radius': '5/2'}, {'center': [4, 1], 'radius': 1}],
        })
        self.assertEqual(carpet.balls[0].radius, Fraction(5, 2))
        self.assertEqual(CarpetSerializer().to_representation(carpet)['balls'][0]['radius'], '5/2')

    def test_dimension_mismatch(self):
        """Test that a center outside Z^d is rejected."""
        serializer = CarpetSerializer(data={
            'family': {'kind': 'norm', 'norm': {'p': 1, 'd': 2}},
            'balls': [{'center': [0, 0, 0], 'radius': 1}],
        })
        self.assertFalse(serializer.is_valid())
        self.assertIn('balls', serializer.errors)

    def test_negative_radius(self):
        """Test that negative radii are rejected."""
        serializer = CarpetSerializer(data={
            'family': {'kind': 'one_sided_cube', 'd': 2},
            'balls': [{'center': [0, 0], 'radius': -1}],
        })
        self.assertFalse(serializer.is_valid())


class WitnessPackageSerializerTestCase(SimpleTestCase):
    """Test cases for witness package input and rendering."""

    def test_staircase_round_trip(self):
        """Test that a rendered staircase reads back to the same package."""
        package = staircase_witness(3, 1)
        data = WitnessPackageSerializer().to_representation(package)
        self.assertEqual(data['t'], '1/2')
        self.assertEqual(build_object(WitnessPackageSerializer, data), package)

    def test_missing_radius(self):
        """Test that every point needs a radius."""
        serializer = WitnessPackageSerializer(data={
            'U': [[0, 0]], 'V': [[1, 1]], 't': '1/2',
            'radii': [{'point': [0, 0], 'n': 0}],
            'family': {'kind': 'one_sided_cube', 'd': 2},
        })
        self.assertFalse(serializer.is_valid())
        self.assertIn('package', serializer.errors)


class CoverConfigSerializerTestCase(SimpleTestCase):
    """Test cases for the cover config."""

    def test_symmetric_needs_norms(self):
        """Test that symmetric mode needs at least one norm."""
        serializer = CoverConfigSerializer(data={'trials': 3})
        self.assertFalse(serializer.is_valid())
        self.assertIn('norms', serializer.errors)

    def test_trials_must_be_positive(self):
        """Test that trials = 0 is rejected."""
        serializer = CoverConfigSerializer(data={'trials': 0, 'norms': [{'p': 1, 'd': 2}]})
        self.assertFalse(serializer.is_valid())
        self.assertIn('trials', serializer.errors)

    def test_one_sided_defaults_windows(self):
        """Test that one-sided mode falls back to the single window."""
        serializer = CoverConfigSerializer(data={'trials': 3, 'mode': 'one_sided', 'window': 5})
        self.assertTrue(serializer.is_valid(), serializer.errors)
        self.assertEqual(serializer.validated_data['windows'], [5])
