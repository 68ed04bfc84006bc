"""
Shared plumbing for the experiment commands: config loading and validation,
seeds, thread counts and deterministic CSV / JSON output.
"""

import csv
import io
import json
import logging
import sys

from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers
from rest_framework.renderers import JSONRenderer

from utils.config import get_setting
from utils.error_handlers import EXIT_USAGE, InvalidParameterError, create_success_report, handle_command_errors

logger = logging.getLogger(__name__)


class ExperimentCommand(BaseCommand):
    """
    Base class for experiment subcommands.

    Subclasses set ``config_serializer`` and implement ``run(config, seed, threads)``,
    returning either ``(header, rows)`` for CSV output or a dict for a JSON report.
    """
    config_serializer = None
    requires_system_checks = []

    def create_parser(self, prog_name, subcommand, **kwargs):
        parser = super().create_parser(prog_name, subcommand, **kwargs)

        # Argument errors are usage errors.
        def error(message):
            if parser.called_from_command_line:
                parser.print_usage(sys.stderr)
                parser.exit(EXIT_USAGE, f"{parser.prog}: error: {message}\n")
            raise CommandError(f"Error: {message}", returncode=EXIT_USAGE)

        parser.error = error
        return parser

    def add_arguments(self, parser):
        parser.add_argument('--config', help='Path to the JSON experiment config')
        parser.add_argument('--out', help='Output path ("-" for stdout)')
        parser.add_argument('--seed', type=int, help='Master seed (overrides the config)')
        parser.add_argument('--threads', type=int, help='Worker threads for independent trials')

    @handle_command_errors
    def handle(self, *args, **options):
        if not options.get('config'):
            raise InvalidParameterError("--config is required")
        if not options.get('out'):
            raise InvalidParameterError("--out is required")
        raw = self.load_config(options['config'])
        config = self.validate_config(raw)
        seed = options.get('seed')
        if seed is None:
            seed = raw.get('seed', get_setting('BESICOVER_DEFAULT_SEED'))
        if int(seed) < 0:
            raise InvalidParameterError(f"--seed must be nonnegative, got {seed}")
        threads = options.get('threads') or get_setting('BESICOVER_THREADS')
        if threads < 1:
            raise InvalidParameterError("--threads must be at least 1")

        logger.info(f"Running {self.__module__.rsplit('.', 1)[-1]} with seed={seed}, threads={threads}")
        result = self.run(config, int(seed), threads)
        self.write_output(result, options['out'])

    def load_config(self, path):
        try:
            with open(path, encoding='utf-8') as handle:
                raw = json.load(handle)
        except OSError as e:
            raise InvalidParameterError(f"Cannot read config {path}: {e}")
        except json.JSONDecodeError as e:
            raise InvalidParameterError(f"Config {path} is not valid JSON: {e}")
        if not isinstance(raw, dict):
            raise InvalidParameterError("The config must be a JSON object")
        return raw

    def validate_config(self, raw):
        if 'seed' in raw:
            try:
                raw['seed'] = serializers.IntegerField(min_value=0).run_validation(raw['seed'])
            except serializers.ValidationError as e:
                raise InvalidParameterError(f"Invalid config: {json.dumps({'seed': e.detail}, default=str)}")
        data = {k: v for k, v in raw.items() if k != 'seed'}
        serializer = self.config_serializer(data=data)
        try:
            serializer.is_valid(raise_exception=True)
        except serializers.ValidationError as e:
            raise InvalidParameterError(f"Invalid config: {json.dumps(e.detail, default=str)}")
        return serializer.validated_data

    def run(self, config, seed, threads):
        raise NotImplementedError

    def report_envelope(self, result):
        return create_success_report(result)

    def write_output(self, result, out):
        if isinstance(result, dict):
            payload = JSONRenderer().render(self.report_envelope(result), renderer_context={'indent': 2})
            text = payload.decode('utf-8') + '\n'
        else:
            header, rows = result
            buffer = io.StringIO()
            writer = csv.writer(buffer, lineterminator='\n')
            writer.writerow(header)
            writer.writerows(rows)
            text = buffer.getvalue()
            logger.info(f"CSV written with {len(rows)} rows")

        if out == '-':
            self.stdout.write(text, ending='')
        else:
            with open(out, 'w', encoding='utf-8', newline='') as handle:
                handle.write(text)
        self.stderr.write(self.style.SUCCESS(f"Wrote {out}"))


def render_point(point):
    return ' '.join(str(x) for x in point)
