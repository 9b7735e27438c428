import argparse
import json
import time
from dataclasses import replace
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from entanglement.criteria import SpinConvention
from entanglement.exceptions import DegenerateCouplingError, SpinwaveError, TruncationOverflowError
from entanglement.presets import PRESETS
from entanglement.serializers import CouplingParamsSerializer, SweepConfigSerializer
from entanglement.sweeps import (
    FORMATS,
    OUTPUT_KINDS,
    min_scan,
    oracle_check,
    period_summary,
    resolve_threads,
    run_sweep,
)

EXIT_USAGE = 1
EXIT_DEGENERATE = 2
EXIT_ORACLE_FAILED = 3

# Command-line flag -> serializer field
CONFIG_FIELDS = (
    'preset', 'k1', 'k2', 'k3', 'c', 't_max', 'steps', 'spin_convention',
    'n_atoms', 'outputs', 'format', 'out',
)


class Command(BaseCommand):
    help = 'Simulate Stokes/anti-Stokes entanglement via an atomic spin wave'

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest='subcommand', required=True)

        sweep = subparsers.add_parser('sweep', help='Write V(t) (or the VLF correlations) over a time grid')
        self._add_coupling_arguments(sweep)
        self._add_grid_arguments(sweep)

        scan = subparsers.add_parser('min-scan', help='Locate the minimum of V over a time grid')
        self._add_coupling_arguments(scan)
        self._add_grid_arguments(scan)
        scan.add_argument('--convention-report', action='store_true',
                          help='Scan both spin conventions and report which gives a near-zero minimum')

        check = subparsers.add_parser('oracle-check', help='Run the self-check suite')
        check.add_argument('--level', choices=['fast', 'full'], default='fast')
        check.add_argument('--corrupt-coefficient', action='store_true', help=argparse.SUPPRESS)

        period = subparsers.add_parser('period', help='Print beta and the oscillation period')
        self._add_coupling_arguments(period)
        period.add_argument('--format', choices=['text', 'json'], default='text')

    def _add_coupling_arguments(self, parser):
        parser.add_argument('--config', help='JSON file with configuration values; flags override it')
        parser.add_argument('--preset', choices=list(PRESETS))
        parser.add_argument('--k1', type=float)
        parser.add_argument('--k2', type=float)
        parser.add_argument('--k3', type=float)
        parser.add_argument('--c', type=float)

    def _add_grid_arguments(self, parser):
        parser.add_argument('--t-max', type=float, help='Final normalized time k1*t (default: two periods)')
        parser.add_argument('--steps', type=int)
        parser.add_argument('--spin-convention', choices=[c.value for c in SpinConvention])
        parser.add_argument('--n-atoms', type=int)
        parser.add_argument('--outputs', nargs='+', choices=sorted(OUTPUT_KINDS))
        parser.add_argument('--format', choices=list(FORMATS))
        parser.add_argument('--out', help='Output file')
        parser.add_argument('--threads', type=int, help='Worker threads (default: SPINWAVE_THREADS)')

    def handle(self, *args, **options):
        handlers = {
            'sweep': self.handle_sweep,
            'min-scan': self.handle_min_scan,
            'oracle-check': self.handle_oracle_check,
            'period': self.handle_period,
        }
        try:
            handlers[options['subcommand']](options)
        except DegenerateCouplingError as e:
            raise CommandError(str(e), returncode=EXIT_DEGENERATE)
        except TruncationOverflowError as e:
            raise CommandError(str(e), returncode=EXIT_ORACLE_FAILED)
        except SpinwaveError as e:
            raise CommandError(str(e), returncode=EXIT_USAGE)
        except OSError as e:
            raise CommandError(f"I/O error: {e}", returncode=EXIT_USAGE)

    def _load_config(self, options, serializer_class):
        data = {}
        if options.get('config'):
            try:
                with open(options['config']) as handle:
                    data = json.load(handle)
            except (OSError, json.JSONDecodeError) as e:
                raise CommandError(f"Could not read config file {options['config']}: {e}", returncode=EXIT_USAGE)
            if not isinstance(data, dict):
                raise CommandError("Config file must contain a JSON object", returncode=EXIT_USAGE)
        for key in CONFIG_FIELDS:
            if options.get(key) is not None:
                data[key] = options[key]
        serializer = serializer_class(data=data)
        if not serializer.is_valid():
            raise CommandError(f"Invalid configuration: {json.dumps(serializer.errors)}", returncode=EXIT_USAGE)
        return serializer

    def _sweep_config(self, options):
        serializer = self._load_config(options, SweepConfigSerializer)
        threads = resolve_threads(options.get('threads'), settings.SPINWAVE_THREADS)
        config = serializer.build_config(threads=threads)
        return serializer, config

    def handle_sweep(self, options):
        serializer, config = self._sweep_config(options)
        if config.output_path is None:
            stem = serializer.validated_data.get('preset') or 'sweep'
            config = replace(config, output_path=Path(settings.SPINWAVE_OUTPUT_DIR) / f"{stem}.{config.format}")

        started = time.perf_counter()
        result = run_sweep(config)
        elapsed = time.perf_counter() - started
        summary = result.summary

        self.stdout.write(self.style.SUCCESS(
            f"✅ Wrote {len(result.rows)} rows to {result.path} ({elapsed:.2f} s)"
        ))
        self.stdout.write(f"📝 Summary: {result.summary_path}")
        self.stdout.write(f"📊 min V = {summary['min_v']:.6g} at t = {summary['argmin_t']:.6g}")
        if summary.get('period_exact') is not None:
            self.stdout.write(
                f"🔁 T = {summary['period_exact']:.6g} (large-c estimate {summary['period_approx']:.6g})"
            )

    def handle_min_scan(self, options):
        _, config = self._sweep_config(options)
        report = min_scan(config, convention_report=options.get('convention_report', False))
        payload = report.as_dict()

        if config.output_path is not None:
            config.output_path.parent.mkdir(parents=True, exist_ok=True)
            with open(config.output_path, 'w') as handle:
                json.dump(payload, handle, indent=2)

        if config.format == 'json' and config.output_path is None:
            self.stdout.write(json.dumps(payload, indent=2))
            return

        self.stdout.write(f"📊 min V = {report.min_v:.6g} at t = {report.argmin_t:.6g}")
        if report.phase_ratio is not None:
            self.stdout.write(f"🔍 t_min / (T/2) = {report.phase_ratio:.4f} (T = {report.period_exact:.6g})")
        if report.empirical_period is not None:
            self.stdout.write(f"🔁 Empirical period = {report.empirical_period:.6g}")
        if report.near_zero_minimum is not None:
            style = self.style.SUCCESS if report.near_zero_minimum else self.style.WARNING
            glyph = '✅' if report.near_zero_minimum else '⚠️'
            self.stdout.write(style(f"{glyph} Near-zero minimum: {report.near_zero_minimum}"))
        for convention, entry in report.conventions.items():
            self.stdout.write(
                f"   {convention}: min V = {entry['min_v']:.6g}, near zero = {entry['near_zero_minimum']}"
            )

    def handle_oracle_check(self, options):
        started = time.perf_counter()
        report = oracle_check(
            options['level'],
            corrupt=options.get('corrupt_coefficient', False),
            fock_quanta=settings.SPINWAVE_FOCK_QUANTA,
            edge_threshold=settings.SPINWAVE_EDGE_THRESHOLD,
        )
        elapsed = time.perf_counter() - started

        for check in report.checks:
            line = f"{check.name}: observed {check.observed:.3e}, expected < {check.threshold:.1e}"
            if check.detail:
                line += f" ({check.detail})"
            if check.passed:
                self.stdout.write(self.style.SUCCESS(f"✅ {line}"))
            else:
                self.stdout.write(self.style.ERROR(f"❌ {line}"))

        if not report.passed:
            failed = '; '.join(
                f"{check.name} observed {check.observed:.3e}, expected < {check.threshold:.1e}"
                for check in report.failures
            )
            raise CommandError(f"Oracle check failed: {failed}", returncode=EXIT_ORACLE_FAILED)
        self.stdout.write(self.style.SUCCESS(
            f"✅ All {len(report.checks)} {report.level} checks passed in {elapsed:.1f} s"
        ))

    def handle_period(self, options):
        serializer = self._load_config(options, CouplingParamsSerializer)
        params = serializer.validated_data['params']
        summary = period_summary(params)

        if options['format'] == 'json':
            self.stdout.write(json.dumps({'params': params.as_dict(), **summary}, indent=2))
            return

        self.stdout.write(f"beta = {summary['beta']:.12g} + {summary['beta_imag']:.12g}i")
        self.stdout.write(f"D = k1^2 + k3^2 - k2^2 = {summary['imbalance']:.12g}")
        if summary['period_exact'] is None:
            self.stdout.write(self.style.WARNING("⚠️ beta is not real: the fields grow without oscillating"))
            return
        self.stdout.write(f"T (exact) = {summary['period_exact']:.12g}")
        self.stdout.write(f"T (4*pi*c/|D|) = {summary['period_approx']:.12g}")
