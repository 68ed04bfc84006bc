"""
Django management command for boundary-ratio scans and thick-center curves.
Usage: python manage.py concentration --config concentration.json --out scan.csv [--seed N]
"""

import logging

import numpy as np

from besicover.concentration import (
    SQUARED,
    boundary_ratio_scan,
    build_stack,
    sample_support,
    squared_radii_schedule,
    thick_center_curve,
)
from besicover.management.base import ExperimentCommand, render_point
from besicover.serializers import ConcentrationConfigSerializer, MeasureSerializer
from utils.error_handlers import InvalidParameterError
from utils.rationals import render, render_float

logger = logging.getLogger(__name__)

SCAN_HEADER = ['point', 'r', 'boundary_mass', 'ball_mass', 'ratio', 'ratio_float', 'flagged']
THICK_HEADER = ['height', 'levels', 'thick_mass', 'fraction', 'fraction_float']


class Command(ExperimentCommand):
    help = 'Runs boundary-ratio scans or thick-center mass curves for a measure'
    config_serializer = ConcentrationConfigSerializer

    def run(self, config, seed, threads):
        measure = MeasureSerializer().create(config['measure'])
        norm = config['norm']['norm']
        if norm.d != measure.d:
            raise InvalidParameterError(f"Norm on R^{norm.d} used with a measure on Z^{measure.d}")
        if config['mode'] == 'scan':
            return self.scan(config, measure, norm, seed, threads)
        return self.thick_center(config, measure, norm)

    def scan(self, config, measure, norm, seed, threads):
        points = sample_support(measure, config['samples'], np.random.default_rng(seed))
        result = boundary_ratio_scan(measure, points, config['radii'], config['epsilon'], norm, threads)
        rows = [
            [render_point(row.point), render(row.r), render(row.boundary_mass), render(row.ball_mass),
             render(row.ratio), render_float(row.ratio), int(row.flagged)]
            for row in result.rows
        ]
        self.stderr.write(f"  exceedance fraction at eps={config['epsilon']}: {result.exceedance}")
        return SCAN_HEADER, rows

    def thick_center(self, config, measure, norm):
        centers = config.get('centers') or measure.support
        radii = squared_radii_schedule(config['R0'], config['heights'])
        stack = build_stack(centers, radii, norm, SQUARED, config['R0'])
        rows = []
        for height, fraction in thick_center_curve(measure, stack, config['epsilon']):
            rows.append([height, ' '.join(str(r) for r in radii[:height]), render(fraction * measure.total),
                         render(fraction), render_float(fraction)])
        return THICK_HEADER, rows
