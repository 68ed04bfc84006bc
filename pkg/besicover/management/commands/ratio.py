"""
Django management command for ratio averages of a nonsingular action.
Usage: python manage.py ratio --config ratio.json --out ratio.csv
"""

import logging

from besicover.dynamics import (
    Observable,
    WeightedTranslation,
    coboundary_ratio_bound_check,
    ratio_average,
    ratio_tail_bound,
    shell_ratio,
)
from besicover.management.base import ExperimentCommand, render_point
from besicover.serializers import ObservableSerializer, RatioConfigSerializer
from utils.error_handlers import InvariantViolationError, ZeroDenominatorError
from utils.rationals import render, render_float

logger = logging.getLogger(__name__)

HEADER = ['omega', 'n', 'quantity', 'value', 'value_float']


class Command(ExperimentCommand):
    help = 'Tabulates R_n, shell ratios and coboundary checks against n for an action'
    config_serializer = RatioConfigSerializer

    def run(self, config, seed, threads):
        action = config['action']['action']
        norm = config['norm']['norm']
        f = ObservableSerializer().create(config['f'])
        g = ObservableSerializer().create(config['g']) if 'g' in config else Observable.constant(1)
        h = ObservableSerializer().create(config['h']) if 'h' in config else f
        t = config['t']
        tail = isinstance(action, WeightedTranslation) and g.default == 0 and f.default == 0

        rows = []
        for omega in sorted(config['omega']):
            for n in range(config['n_min'], config['n_max'] + 1):
                rows.append(self.row(omega, n, 'R_n', lambda: ratio_average(action, f, g, norm, n, omega)))
                if tail:
                    rows.append(self.row(omega, n, 'tail_bound',
                                         lambda: ratio_tail_bound(action, f, g, norm, n, omega)))
                if n >= t:
                    rows.append(self.row(omega, n, 'shell_ratio',
                                         lambda: shell_ratio(action, h, norm, n, t, omega)))
                if 'v' in config:
                    rows.extend(self.coboundary_rows(action, f, config['v'], norm, n, omega))
        return HEADER, rows

    @staticmethod
    def row(omega, n, quantity, compute):
        try:
            value = compute()
        except ZeroDenominatorError:
            value = None
        if value is None:
            return [render_point(omega), n, quantity, 'undefined', '']
        return [render_point(omega), n, quantity, render(value), render_float(value)]

    def coboundary_rows(self, action, f, v, norm, n, omega):
        report = coboundary_ratio_bound_check(action, f, v, norm, n, omega)
        if not report.holds:
            raise InvariantViolationError(
                f"Coboundary bound fails at n={n}, omega={omega}: {report.cancellation} > {report.shell_sum}"
            )
        point = render_point(omega)
        return [
            [point, n, 'coboundary_cancellation', render(report.cancellation), render_float(report.cancellation)],
            [point, n, 'coboundary_shell_sum', render(report.shell_sum), render_float(report.shell_sum)],
            [point, n, 'coboundary_final_bound', render(report.final_bound), render_float(report.final_bound)],
        ]
