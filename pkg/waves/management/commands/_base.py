"""
Shared plumbing of the idewave management commands.

Every command loads a run configuration, builds the model and kernels,
runs one pipeline and emits a JSON report on stdout and, with --out, to
<out>/<command>.json next to any CSV files. Exit codes: 0 success, 1
verification, convergence or domain failure (report still written), 2
invalid input.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from django import forms
from django.core.management.base import BaseCommand, CommandError

from waves.config import RunConfig, load_run_config
from waves.exceptions import ConfigError, IdewaveError, KernelError, ModelError
from waves.forms import OverridesForm
from waves.services.dispersion import system_minimal_speed
from waves.services.kernels import KernelSpec
from waves.services.population import SystemModel
from waves.services.reporting import dump_json

logger = logging.getLogger(__name__)

INVALID_INPUT = (ConfigError, ModelError, KernelError)


class IdewaveCommand(BaseCommand):
    """Base class; subclasses set `name`, `overrides` and implement `run`."""

    name = ''
    requires_system_checks = []
    # OverridesForm fields exposed as --flags by this command.
    overrides: Tuple[str, ...] = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', required=True, help='Run configuration (JSON)')
        parser.add_argument('--out', help='Directory for the JSON report and CSV files')
        parser.add_argument('--seed', type=int, help='Seed for sampling-based checks')
        for field_name in self.overrides:
            form_field = OverridesForm.base_fields[field_name]
            kind = int if (isinstance(form_field, forms.IntegerField)
                           and not isinstance(form_field, forms.FloatField)) else float
            parser.add_argument(f"--{field_name.replace('_', '-')}", dest=field_name,
                                type=kind, help=form_field.help_text or None)
        self.add_command_arguments(parser)

    def add_command_arguments(self, parser):
        pass

    def run(self, config: RunConfig, model: SystemModel, kernels: List[KernelSpec],
            options: Dict[str, Any]) -> Tuple[Dict[str, Any], bool]:
        """Return (report payload, success flag); may write CSVs to self.out_dir."""
        raise NotImplementedError

    def write_report(self, payload: Dict[str, Any]) -> None:
        target = self.out_dir / f'{self.name}.json' if self.out_dir else None
        self.stdout.write(dump_json(payload, target), ending='')

    def handle(self, *args, **options):
        cli_overrides = {name: options.get(name) for name in self.overrides}
        cli_overrides['seed'] = options.get('seed')
        self.out_dir: Optional[Path] = None

        try:
            config = load_run_config(options['config'], cli_overrides)
            out = options.get('out') or config.output.get('dir')
            self.out_dir = Path(out) if out else None
            model = config.build_model()
            kernels = config.build_kernels()
        except INVALID_INPUT as exc:
            raise CommandError(str(exc), returncode=2)

        header = {'command': self.name, 'config': config.to_dict()}
        try:
            payload, ok = self.run(config, model, kernels, options)
        except INVALID_INPUT as exc:
            raise CommandError(str(exc), returncode=2)
        except IdewaveError as exc:
            report = dict(header, error=str(exc), passed=False)
            witness = getattr(exc, 'witness', None)
            if witness is not None:
                report['witness'] = witness
            self.write_report(report)
            raise CommandError(str(exc), returncode=1)

        self.write_report(dict(header, passed=ok, **payload))
        if not ok:
            raise CommandError(f"{self.name}: check failed, see report", returncode=1)
        logger.info("%s finished for %s", self.name, model.name)


def wave_speed(config: RunConfig, model: SystemModel, kernels, margin: float = 0.5) -> float:
    """The configured c, or cmin + margin when none is given."""
    c = config.get('c')
    if c is None:
        cmin, _ = system_minimal_speed(model.growth, kernels)
        c = cmin + margin
    return float(c)
