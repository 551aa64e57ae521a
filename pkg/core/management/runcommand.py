"""
Shared plumbing for the run commands: config loading, form binding and exit codes.
"""

from contextlib import contextmanager

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.engine import EngineError
from core.forms import RunConfig, format_errors

EXIT_CONFIG = 1
EXIT_NOT_CONVERGED = 2
EXIT_FLAGGED_ORACLE = 3


class RunCommand(BaseCommand):
    """Base for solve, verify, operators, compare and oracle."""

    def add_arguments(self, parser):
        parser.add_argument('--config', dest='config', help='Path of a key = value configuration file')
        parser.add_argument(
            '--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
            help='Override one configuration key (repeatable)',
        )
        parser.add_argument('--out', dest='out', default='.', help='Output directory')
        parser.add_argument('--seed', dest='seed', type=int, help='Random seed')

    def load_config(self, options):
        try:
            return RunConfig.load(
                self.command_name, path=options.get('config'), overrides=options.get('overrides') or (),
                out_dir=options.get('out') or '.', seed=options.get('seed'),
            )
        except ValidationError as exc:
            raise CommandError('; '.join(exc.messages), returncode=EXIT_CONFIG)

    def bind(self, form_class, run):
        form = form_class(data=run.form_data())
        if not form.is_valid():
            raise CommandError(f'Invalid configuration:\n{format_errors(form)}', returncode=EXIT_CONFIG)
        return form

    @contextmanager
    def engine_errors(self):
        try:
            yield
        except EngineError as exc:
            raise CommandError(str(exc), returncode=EXIT_CONFIG)

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))
