import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from entanglement.model_core import oscillation_period
from entanglement.presets import preset_params


class SpinwaveCommandTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.dir = Path(self.tmp.name)

    def run_command(self, *args):
        out = StringIO()
        call_command('spinwave', *args, stdout=out)
        return out.getvalue()

    def test_sweep_writes_rows_and_summary(self):
        path = self.dir / 'fig2b.csv'
        output = self.run_command('sweep', '--preset', 'fig2b', '--steps', '50', '--out', str(path),
                                  '--threads', '1')
        self.assertIn('Wrote 50 rows', output)
        self.assertTrue(path.exists())
        self.assertTrue((self.dir / 'fig2b.summary.json').exists())

    def test_sweep_default_output_dir(self):
        with override_settings(SPINWAVE_OUTPUT_DIR=self.dir / 'output'):
            self.run_command('sweep', '--preset', 'fig3a', '--steps', '20', '--format', 'json')
        self.assertTrue((self.dir / 'output' / 'fig3a.json').exists())

    def test_config_file_with_flag_override(self):
        config = self.dir / 'config.json'
        config.write_text(json.dumps({'preset': 'fig2a', 'steps': 40, 'format': 'json'}))
        path = self.dir / 'out.json'
        self.run_command('sweep', '--config', str(config), '--steps', '30', '--out', str(path))
        payload = json.loads(path.read_text())
        self.assertEqual(len(payload['rows']), 30)

    def test_invalid_config_file(self):
        config = self.dir / 'broken.json'
        config.write_text('{not json')
        with self.assertRaises(CommandError) as ctx:
            self.run_command('sweep', '--config', str(config))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_degenerate_couplings(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('sweep', '--k1', '1', '--k2', '1', '--c', '30', '--steps', '10',
                             '--out', str(self.dir / 'never.csv'))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('k2 = k1', str(ctx.exception))
        self.assertFalse((self.dir / 'never.csv').exists())

    def test_unwritable_output(self):
        blocker = self.dir / 'file.txt'
        blocker.write_text('')
        with self.assertRaises(CommandError) as ctx:
            self.run_command('sweep', '--preset', 'fig2b', '--steps', '10', '--out', str(blocker / 'out.csv'))
        self.assertEqual(ctx.exception.returncode, 1)

    def test_missing_couplings(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('period', '--k1', '1')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_min_scan_rejects_zero_t_max(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('min-scan', '--preset', 'fig2b', '--t-max', '0')
        self.assertEqual(ctx.exception.returncode, 1)

    def test_min_scan_json(self):
        output = self.run_command('min-scan', '--preset', 'fig2b', '--steps', '4000', '--format', 'json',
                                  '--convention-report')
        payload = json.loads(output)
        self.assertLess(payload['min_v'], 0.4)
        self.assertEqual(set(payload['conventions']), {'product', 'bosonic'})

    def test_min_scan_text_and_file(self):
        path = self.dir / 'scan.json'
        output = self.run_command('min-scan', '--preset', 'fig2a', '--steps', '2000', '--out', str(path))
        self.assertIn('min V', output)
        self.assertFalse(json.loads(path.read_text())['near_zero_minimum'])

    def test_period_json(self):
        payload = json.loads(self.run_command('period', '--preset', 'fig2a', '--format', 'json'))
        self.assertAlmostEqual(payload['period_exact'], oscillation_period(preset_params('fig2a')).exact)
        self.assertEqual(payload['params']['k2'], 0.3)

    def test_period_text_for_growing_fields(self):
        output = self.run_command('period', '--k1', '1', '--k2', '0.5', '--c', '0')
        self.assertIn('beta', output)
        self.assertIn('grow', output)

    def test_oracle_check_fast(self):
        output = self.run_command('oracle-check', '--level', 'fast')
        self.assertIn('✅ symplectic', output)
        self.assertIn('checks passed', output)

    def test_oracle_check_corrupted(self):
        with self.assertRaises(CommandError) as ctx:
            self.run_command('oracle-check', '--corrupt-coefficient')
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertIn('symplectic', str(ctx.exception))
