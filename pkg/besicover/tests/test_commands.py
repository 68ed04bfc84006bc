"""
Test cases for the experiment management commands.
"""

import csv
import io
import json
import os
import tempfile

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from utils.error_handlers import EXIT_USAGE, EXIT_VIOLATION


class CommandTestCase(SimpleTestCase):
    """Shared helpers: configs and outputs live in a temporary directory."""

    def setUp(self):
        """Set up a scratch directory."""
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def path(self, name):
        return os.path.join(self.tmp.name, name)

    def write_config(self, config, name='config.json'):
        with open(self.path(name), 'w', encoding='utf-8') as handle:
            json.dump(config, handle)
        return self.path(name)

    def call(self, command, config, out_name='out', **options):
        config_path = self.write_config(config)
        out = self.path(out_name)
        call_command(command, config=config_path, out=out, stdout=io.StringIO(), stderr=io.StringIO(), **options)
        with open(out, encoding='utf-8') as handle:
            return handle.read()

    def rows(self, text):
        return list(csv.DictReader(io.StringIO(text)))


class CoverCommandTestCase(CommandTestCase):
    """Test cases for the cover command."""

    def setUp(self):
        """Set up a one-dimensional calibration config."""
        super().setUp()
        self.config = {
            'norms': [{'kind': 'p', 'p': 'inf', 'd': 1}],
            'trials': 10,
            'carpet_size': 6,
            'window': 10,
            'radius_min': 1,
            'radius_max': 4,
        }

    def test_symmetric_calibration(self):
        """Test the CSV header and the interval constants."""
        text = self.call('cover', self.config, seed=7)
        self.assertTrue(text.startswith(
            'norm,d,trials,window,max_multiplicity,doubling_D,chi_used,max_classes\n'))
        [row] = self.rows(text)
        C = int(row['max_multiplicity'])
        self.assertLessEqual(C, 2)
        self.assertEqual(row['doubling_D'], '2')
        self.assertEqual(int(row['chi_used']), 4 * C + 1)

    def test_same_seed_same_bytes(self):
        """Test that the output is byte-identical for equal seeds."""
        first = self.call('cover', self.config, out_name='a.csv', seed=3)
        second = self.call('cover', self.config, out_name='b.csv', seed=3, threads=2)
        self.assertEqual(first, second)

    def test_one_sided_staircase(self):
        """Test that one-sided multiplicity reaches window + 1."""
        config = {'mode': 'one_sided', 'windows': [2, 3], 'trials': 3, 'radius_max': 3}
        rows = self.rows(self.call('cover', config))
        self.assertEqual([row['window'] for row in rows], ['2', '3'])
        self.assertGreaterEqual(int(rows[0]['max_multiplicity']), 3)
        self.assertGreaterEqual(int(rows[1]['max_multiplicity']), 4)

    def test_zero_trials(self):
        """Test that an invalid config exits with the usage code."""
        self.config['trials'] = 0
        with self.assertRaises(CommandError) as ctx:
            self.call('cover', self.config)
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_invalid_config_seed(self):
        """Test that a seed that is not a nonnegative integer is a usage error."""
        for seed in ['abc', 1.5, -3, None]:
            self.config['seed'] = seed
            with self.assertRaises(CommandError) as ctx:
                self.call('cover', self.config)
            self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_config_seed_matches_flag(self):
        """Test that a config seed gives the same bytes as --seed."""
        flagged = self.call('cover', self.config, out_name='a.csv', seed=5)
        self.config['seed'] = 5
        configured = self.call('cover', self.config, out_name='b.csv')
        self.assertEqual(flagged, configured)

    def test_missing_config(self):
        """Test that --config is required."""
        with self.assertRaises(CommandError) as ctx:
            call_command('cover', out=self.path('out'), stdout=io.StringIO(), stderr=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_malformed_config(self):
        """Test that a config that is not JSON is a usage error."""
        with open(self.path('bad.json'), 'w', encoding='utf-8') as handle:
            handle.write('{not json')
        with self.assertRaises(CommandError) as ctx:
            call_command('cover', config=self.path('bad.json'), out=self.path('out'),
                         stdout=io.StringIO(), stderr=io.StringIO())
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)

    def test_stdout_output(self):
        """Test that "-" writes the CSV to stdout."""
        stdout = io.StringIO()
        call_command('cover', config=self.write_config(self.config), out='-', seed=1,
                     stdout=stdout, stderr=io.StringIO())
        self.assertIn('max_multiplicity', stdout.getvalue())


class ConcentrationCommandTestCase(CommandTestCase):
    """Test cases for the concentration command."""

    def test_scan_single_atom(self):
        """Test that a single atom has zero boundary ratio at every radius."""
        config = {
            'mode': 'scan',
            'measure': [{'point': [0, 0], 'mass': 1}],
            'norm': {'kind': 'p', 'p': 'inf', 'd': 2},
            'radii': ['3', '2', '1'],
            'samples': 5,
            'epsilon': '1/10',
        }
        rows = self.rows(self.call('concentration', config))
        self.assertEqual(len(rows), 3)
        self.assertEqual({row['ratio'] for row in rows}, {'0'})
        self.assertEqual({row['flagged'] for row in rows}, {'0'})

    def test_thick_center_curve(self):
        """Test one row per height, starting from the full mass."""
        config = {
            'mode': 'thick_center',
            'measure': [{'point': [0, 0], 'mass': 1}, {'point': [3, 0], 'mass': 1}],
            'norm': {'kind': 'p', 'p': 'inf', 'd': 2},
            'epsilon': '1/10',
            'heights': 2,
            'R0': 2,
        }
        rows = self.rows(self.call('concentration', config))
        self.assertEqual([row['height'] for row in rows], ['0', '1', '2'])
        self.assertEqual(rows[0]['fraction'], '1')

    def test_dimension_mismatch(self):
        """Test that a norm and measure of different dimensions are rejected."""
        config = {
            'mode': 'scan',
            'measure': [{'point': [0, 0], 'mass': 1}],
            'norm': {'kind': 'p', 'p': 1, 'd': 3},
            'radii': ['1'],
            'epsilon': '1/10',
        }
        with self.assertRaises(CommandError) as ctx:
            self.call('concentration', config)
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)


class RatioCommandTestCase(CommandTestCase):
    """Test cases for the ratio command."""

    def setUp(self):
        """Set up counting translation with f = g = 1_0."""
        super().setUp()
        indicator = {'values': [{'point': [0, 0], 'value': 1}]}
        self.config = {
            'action': {'model': 'counting', 'd': 2},
            'f': indicator,
            'g': indicator,
            'norm': {'kind': 'p', 'p': 'inf', 'd': 2},
            'n_max': 3,
            'omega': [[0, 0]],
        }

    def test_equal_observables(self):
        """Test that R_n(f, f) = 1 for every n."""
        rows = self.rows(self.call('ratio', self.config))
        values = [row['value'] for row in rows if row['quantity'] == 'R_n']
        self.assertEqual(values, ['1', '1', '1', '1'])

    def test_undefined_ratio(self):
        """Test that a vanishing denominator is written as undefined."""
        self.config['omega'] = [[9, 9]]
        self.config['n_max'] = 1
        rows = self.rows(self.call('ratio', self.config))
        self.assertEqual({row['value'] for row in rows if row['quantity'] == 'R_n'}, {'undefined'})

    def test_coboundary_rows(self):
        """Test that a shift adds the coboundary rows."""
        self.config['v'] = [1, 0]
        rows = self.rows(self.call('ratio', self.config))
        quantities = {row['quantity'] for row in rows}
        self.assertIn('coboundary_cancellation', quantities)
        self.assertIn('coboundary_final_bound', quantities)

    def test_weighted_tail_rows(self):
        """Test that weighted translation reports tail bounds."""
        self.config['action'] = {'model': 'weighted', 'd': 2, 'lambda': '1/2'}
        rows = self.rows(self.call('ratio', self.config))
        self.assertIn('tail_bound', {row['quantity'] for row in rows})


class MaximalCommandTestCase(CommandTestCase):
    """Test cases for the maximal command."""

    def test_staircase_sweep(self):
        """Test the staircase scores in the JSON report."""
        report = json.loads(self.call('maximal', {'staircase': {'K_values': [2, 3]}}))
        self.assertEqual(report['status'], 'success')
        curve = report['data']['staircase']['curve']
        self.assertEqual([row['score'] for row in curve], ['3', '4'])
        self.assertTrue(all(r['passed'] for r in report['data']['staircase']['reports']))

    def test_failing_package(self):
        """Test that a failing package exits 2 after writing the report."""
        config = {
            'packages': [{
                'U': [[0, 0]], 'V': [[0, 0]], 't': '2',
                'radii': [{'point': [0, 0], 'n': 0}],
                'family': {'kind': 'one_sided_cube', 'd': 2},
            }],
        }
        with self.assertRaises(CommandError) as ctx:
            self.call('maximal', config)
        self.assertEqual(ctx.exception.returncode, EXIT_VIOLATION)
        with open(self.path('out'), encoding='utf-8') as handle:
            report = json.load(handle)
        self.assertEqual(report['status'], 'error')
        self.assertEqual(report['data']['packages'][0]['checks'][0]['name'], 'window_ratio')

    def test_staircase_precondition(self):
        """Test that K too small for M is a usage error."""
        with self.assertRaises(CommandError) as ctx:
            self.call('maximal', {'staircase': {'K_values': [1], 'M': 1}})
        self.assertEqual(ctx.exception.returncode, EXIT_USAGE)
