"""
Django management command for carpet calibration.
Usage: python manage.py cover --config cover.json --out cover.csv [--seed N] [--threads N]
"""

import logging

from besicover.covering import (
    BallFamilySpec,
    calibrate_besicovitch,
    color_disjointify,
    incremental_select,
    multiplicity,
    random_carpet,
    staircase_carpet,
)
from besicover.management.base import ExperimentCommand
from besicover.serializers import CoverConfigSerializer
from utils.trials import run_trials

logger = logging.getLogger(__name__)

HEADER = ['norm', 'd', 'trials', 'window', 'max_multiplicity', 'doubling_D', 'chi_used', 'max_classes']


class Command(ExperimentCommand):
    help = 'Calibrates empirical Besicovitch constants and coloring statistics per norm'
    config_serializer = CoverConfigSerializer

    def run(self, config, seed, threads):
        if config['mode'] == 'one_sided':
            return HEADER, [self.one_sided_row(config, window, seed, threads) for window in config['windows']]
        return HEADER, [self.symmetric_row(config, entry['norm'], seed, threads) for entry in config['norms']]

    def symmetric_row(self, config, norm, seed, threads):
        certificate = calibrate_besicovitch(
            norm, config['trials'], config['carpet_size'], config['window'],
            config['radius_min'], config['radius_max'], seed, threads,
        )

        # Same seed, same carpets: color them with the certified constants.
        def classes(rng):
            carpet = random_carpet(norm, config['carpet_size'], config['window'],
                                   config['radius_min'], config['radius_max'], rng)
            return len(color_disjointify(carpet, certificate.C, certificate.D))

        max_classes = max(run_trials(classes, seed, config['trials'], threads))
        self.stderr.write(self.style.SUCCESS(
            f"✓ {norm.label} d={norm.d}: C={certificate.C}, D={certificate.D}, classes <= {max_classes}"
        ))
        return [norm.label, norm.d, config['trials'], config['window'], certificate.C, certificate.D,
                certificate.chi, max_classes]

    def one_sided_row(self, config, window, seed, threads):
        family = BallFamilySpec.one_sided_cubes(config['d'])
        size = min(config['carpet_size'], (2 * window + 1) ** family.d)
        certificate = calibrate_besicovitch(
            family, config['trials'], size, window, config['radius_min'], config['radius_max'], seed, threads,
        )
        C = certificate.C
        if family.d == 2:
            # The staircase of size `window` fits the window and forces multiplicity window + 1.
            C = max(C, multiplicity(incremental_select(staircase_carpet(window)), probe=[(0, 0)]))
        self.stderr.write(f"  one-sided cubes, window {window}: multiplicity {C}")
        return [family.label, family.d, config['trials'], window, C, certificate.D, C * certificate.D ** 2 + 1, '']
