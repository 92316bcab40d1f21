"""
``python manage.py experiment <pipeline> [--config FILE | --preset ID] [--seed N] [--out DIR] [--threads K]``

Exit status 0 on success, 2 for configuration errors, 3 for numerical
failures. Every run that gets past configuration is recorded in the
:class:`~solver.models.ExperimentRun` registry.
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from solver.exceptions import ConfigError, SolverError
from solver.experiments import PIPELINES, execute, plan_run, read_config_file, validate_config
from solver.models import ExperimentRun
from solver.presets import preset_ids

logger = logging.getLogger("solver.command")

CONFIG_ERROR = 2
NUMERICAL_FAILURE = 3


class Command(BaseCommand):
    help = "Run one experiment pipeline and write its CSV outputs and manifest."

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="pipeline", required=True, title="pipelines")
        for name, pipeline in PIPELINES.items():
            sub = subparsers.add_parser(name, help=(pipeline.__doc__ or "").strip().splitlines()[0])
            sub.add_argument("--config", help="JSON experiment configuration")
            sub.add_argument("--preset", help=f"named parameter block: {', '.join(preset_ids())}")
            sub.add_argument("--seed", type=int, help="master seed (overrides the config)")
            sub.add_argument("--out", help="output directory (default: PB_SOLVER['OUTPUT_DIR']/<preset>-seed<N>)")
            sub.add_argument("--threads", type=int, help="worker threads for independent jobs")

    def _load(self, options):
        if not options["config"] and not options["preset"]:
            raise ConfigError("give --config or --preset")
        data = read_config_file(options["config"]) if options["config"] else {}
        if options["preset"]:
            data["preset"] = options["preset"]
        return validate_config(data)

    def handle(self, *args, **options):
        pipeline = options["pipeline"]
        try:
            config = self._load(options)
            plan = plan_run(config, pipeline, options["seed"], options["out"])
        except ConfigError as error:
            raise CommandError(str(error), returncode=CONFIG_ERROR)

        run = ExperimentRun.objects.create(
            pipeline=pipeline,
            preset=plan.config.get("preset", ""),
            seed=plan.config["seed"],
            manifest_hash=plan.manifest_hash,
        )
        try:
            message = execute(plan, options["threads"])
        except ConfigError as error:
            self._fail(run, error)
            raise CommandError(str(error), returncode=CONFIG_ERROR)
        except (SolverError, ValueError, FloatingPointError) as error:
            self._fail(run, error)
            raise CommandError(f"{type(error).__name__}: {error}", returncode=NUMERICAL_FAILURE)

        run.status = ExperimentRun.SUCCEEDED
        run.output_dir = str(plan.target)
        run.message = message
        run.save()
        self.stdout.write(self.style.SUCCESS(f"{pipeline}: {message} -> {plan.target}"))

    @staticmethod
    def _fail(run, error):
        logger.error("Run %d failed: %s", run.pk, error)
        run.status = ExperimentRun.FAILED
        run.message = f"{type(error).__name__}: {error}"
        run.save()
