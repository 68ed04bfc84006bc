"""
Django management command for witness packages and maximal-inequality trials.
Usage: python manage.py maximal --config maximal.json --out maximal.json
"""

import logging

from besicover.geometry import NormSpec
from besicover.management.base import ExperimentCommand
from besicover.maximal import maximal_inequality_trials, staircase_witness, violation_curve, witness_validate
from besicover.serializers import MaximalConfigSerializer, WitnessPackageSerializer
from utils.error_handlers import InvariantViolationError, create_error_report
from utils.rationals import render

logger = logging.getLogger(__name__)


def render_report(package, report):
    return {
        'package': WitnessPackageSerializer().to_representation(package),
        'M': render(report.M),
        'passed': report.passed,
        'checks': [
            {'name': c.name, 'holds': c.holds, 'lhs': render(c.lhs), 'rhs': render(c.rhs), 'detail': c.detail}
            for c in report.checks
        ],
    }


class Command(ExperimentCommand):
    help = 'Validates witness packages, sweeps staircase violation scores and runs symmetric-ball trials'
    config_serializer = MaximalConfigSerializer

    def run(self, config, seed, threads):
        result = {}
        if 'staircase' in config:
            result['staircase'] = self.staircase(config['staircase'])
        if 'symmetric' in config:
            result['symmetric'] = self.symmetric(config['symmetric'], seed, threads)
        if 'packages' in config:
            result['packages'] = self.packages(config['packages'], config['M'])
        return result

    def staircase(self, sweep):
        rows = violation_curve(sweep['K_values'], sweep['M'])
        packages = [staircase_witness(K, sweep['M']) for K in sweep['K_values']]
        return {
            'M': render(sweep['M']),
            'curve': [
                {'K': row['K'], 'score': render(row['score']), 'score_per_K': render(row['score_per_K']),
                 'multiplicity_at_origin': row['multiplicity_at_origin']}
                for row in rows
            ],
            'reports': [render_report(p, witness_validate(p, sweep['M'])) for p in packages],
        }

    def symmetric(self, trials, seed, threads):
        norm = trials['norm']['norm'] if 'norm' in trials else NormSpec.linf(2)
        report = maximal_inequality_trials(
            norm, trials['C'], trials['epsilon'], trials['trials'], seed, trials['n_max'], trials['window'],
            trials['support_size'], threads,
        )
        self.stderr.write(f"  {report.violations} violations in {report.trials} trials")
        return {
            'norm': norm.to_dict(),
            'trials': report.trials,
            'violations': report.violations,
            'worst_ratio': render(report.worst_ratio),
            'M_cert': render(report.M_cert),
            'epsilon': render(report.eps),
        }

    def packages(self, packages, M):
        rendered, failure = [], None
        for data in packages:
            package = WitnessPackageSerializer().create(data)
            report = witness_validate(package, M)
            rendered.append(render_report(package, report))
            if failure is None and not report.passed:
                failure = report.first_failure
        if failure is not None:
            # The report is still written so the failing values can be inspected.
            self.pending_failure = failure
        return rendered

    def pending_error(self):
        failure = getattr(self, 'pending_failure', None)
        if failure is None:
            return None
        return InvariantViolationError(
            f"Witness package fails {failure.name}: {failure.lhs} vs {failure.rhs}. {failure.detail}".strip(),
            check=failure.name,
        )

    def report_envelope(self, result):
        error = self.pending_error()
        if error is None:
            return super().report_envelope(result)
        return create_error_report(error, extra={'data': result})

    def write_output(self, result, out):
        super().write_output(result, out)
        error = self.pending_error()
        if error is not None:
            self.pending_failure = None
            raise error
