import logging
import math

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from entanglement import criteria
from entanglement.criteria import (
    MomentTable,
    ReportKind,
    SpinConvention,
    duan_v,
    empirical_period,
    entanglement_report,
    evolve_moments,
    initial_moments,
    mean_photon,
    quadrature_covariance,
    tripartite_verdict,
    vlf_correlations,
    vlf_gains,
)
from entanglement.exceptions import DomainError, UsageError
from entanglement.model_core import CouplingParams, ModeId, bogoliubov, oscillation_period
from entanglement.presets import BIPARTITE_PRESETS, PRESETS, TRIPARTITE_PRESETS, preset_params


def moments_at(params, t, convention=SpinConvention.PRODUCT_STATE):
    return evolve_moments(bogoliubov(params, t), initial_moments(convention, params.n_modes))


def series(params, times, convention=SpinConvention.PRODUCT_STATE):
    initial = initial_moments(convention, params.n_modes)
    return [evolve_moments(bogoliubov(params, t), initial) for t in times]


class InitialMomentsTests(SimpleTestCase):
    def test_product_state_spin(self):
        table = initial_moments(SpinConvention.PRODUCT_STATE, 3, n_atoms=100)
        self.assertAlmostEqual(table.mean[0].real, 5.0)
        self.assertAlmostEqual(table.cov_nn[0, 0].real, 0.25)
        self.assertAlmostEqual(table.cov_aa[0, 0].real, -0.25)

    def test_bosonic_vacuum_is_zero(self):
        table = initial_moments(SpinConvention.BOSONIC_VACUUM, 4)
        self.assertFalse(np.any(table.cov_nn) or np.any(table.cov_aa) or np.any(table.mean))

    def test_product_state_needs_two_atoms(self):
        with self.assertRaises(DomainError):
            initial_moments(SpinConvention.PRODUCT_STATE, 3, n_atoms=1)

    def test_shape_mismatch(self):
        with self.assertRaises(UsageError):
            MomentTable(n_modes=3, mean=np.zeros(2), cov_nn=np.zeros((3, 3)), cov_aa=np.zeros((3, 3)))

    def test_initial_value_of_four(self):
        for name in PRESETS:
            params = preset_params(name)
            for convention in SpinConvention:
                moments = moments_at(params, 0.0, convention)
                if params.is_tripartite:
                    values = vlf_correlations(moments, vlf_gains(moments))
                    assert_allclose(values, [4.0, 4.0, 4.0], atol=1e-9)
                else:
                    self.assertAlmostEqual(duan_v(moments), 4.0, delta=1e-9)


class CovarianceTests(SimpleTestCase):
    def test_vacuum_is_identity(self):
        table = initial_moments(SpinConvention.BOSONIC_VACUUM, 3)
        assert_allclose(quadrature_covariance(table), np.eye(6))

    def test_symmetric_after_evolution(self):
        gamma = quadrature_covariance(moments_at(preset_params('fig3b'), 12.3))
        assert_allclose(gamma, gamma.T, atol=1e-12)

    def test_uncertainty_relation(self):
        # Gamma + i Omega >= 0 for physical states in this normalization
        moments = moments_at(preset_params('fig2b'), 80.0, SpinConvention.BOSONIC_VACUUM)
        gamma = quadrature_covariance(moments)
        n = moments.n_modes
        omega = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), np.zeros((n, n))]])
        eigenvalues = np.linalg.eigvalsh(gamma + 1j * omega)
        self.assertGreater(eigenvalues.min(), -1e-9)

    def test_displacement_does_not_change_v(self):
        moments = moments_at(preset_params('fig2b'), 40.0)
        shifted = moments.displaced([0, 3 + 1j, -2j])
        self.assertAlmostEqual(duan_v(moments), duan_v(shifted), places=12)


class EvolveMomentsTests(SimpleTestCase):
    def test_two_mode_squeezing_photons(self):
        params = CouplingParams(k1=1.0, k2=0.0, c=0.0)
        for r in (0.25, 1.0):
            moments = moments_at(params, r, SpinConvention.BOSONIC_VACUUM)
            assert_allclose(mean_photon(moments, ModeId.FIELD1).fluctuation, math.sinh(r) ** 2, rtol=1e-12)

    def test_mode_count_mismatch(self):
        with self.assertRaises(UsageError):
            evolve_moments(bogoliubov(preset_params('fig3b'), 1.0),
                           initial_moments(SpinConvention.BOSONIC_VACUUM, 3))

    def test_product_state_mean_feeds_photons(self):
        moments = moments_at(preset_params('fig2b'), 10.0)
        photons = mean_photon(moments, ModeId.FIELD1)
        self.assertGreater(photons.total, photons.fluctuation)


class DuanTests(SimpleTestCase):
    def test_argument_validation(self):
        moments = moments_at(preset_params('fig2b'), 1.0)
        with self.assertRaises(UsageError):
            duan_v(moments, sign=2)
        with self.assertRaises(UsageError):
            duan_v(moments, modes=(ModeId.FIELD1, ModeId.FIELD3))

    def test_squeezed_pair_with_rotated_spin(self):
        params = CouplingParams(k1=1.0, k2=0.0, c=0.0)
        pair = (ModeId.FIELD1, ModeId.SPIN)
        for r in (0.5, 1.0):
            moments = moments_at(params, r, SpinConvention.BOSONIC_VACUUM)
            assert_allclose(duan_v(moments, pair, sign=-1, theta=-math.pi / 2), 4 * math.exp(-2 * r), rtol=1e-10)
            assert_allclose(duan_v(moments, pair, sign=1, theta=-math.pi / 2), 4 * math.exp(2 * r), rtol=1e-10)
            # Without the local rotation the pair looks like two thermal modes
            assert_allclose(duan_v(moments, pair), 4 * math.cosh(2 * r), rtol=1e-10)

    def test_near_balanced_minimum(self):
        params = preset_params('fig2b')
        period = oscillation_period(params).exact
        times = np.linspace(0, period, 2001)
        for convention in SpinConvention:
            values = np.array([duan_v(m) for m in series(params, times, convention)])
            index = int(np.argmin(values))
            self.assertLess(values[index], 0.4, convention)
            self.assertLess(abs(times[index] / (period / 2) - 1), 0.1, convention)

    def test_minimum_grows_away_from_balance(self):
        minima = {}
        for name in BIPARTITE_PRESETS:
            params = preset_params(name)
            times = np.linspace(0, oscillation_period(params).exact, 2001)
            minima[name] = min(duan_v(m) for m in series(params, times))
        self.assertLess(minima['fig2b'], minima['fig2a'])
        self.assertLess(minima['fig2b'], minima['fig2c'])


class VlfTests(SimpleTestCase):
    def test_gains_minimize_each_correlation(self):
        params = preset_params('fig3b')
        t = oscillation_period(params).exact / 3
        moments = moments_at(params, t)
        gains = vlf_gains(moments)
        best = vlf_correlations(moments, gains)
        scan = np.linspace(-3, 3, 601)
        # g3 enters V12, g2 enters V13, g1 enters V23
        for position, gain_index in ((0, 2), (1, 1), (2, 0)):
            values = []
            for g in scan:
                trial = list(gains)
                trial[gain_index] = g
                values.append(vlf_correlations(moments, tuple(trial))[position])
            self.assertLessEqual(best[position], min(values) + 1e-9)

    def test_v12_never_exceeds_four(self):
        for name in TRIPARTITE_PRESETS:
            params = preset_params(name)
            times = np.linspace(0, 2 * oscillation_period(params).exact, 500)
            for moments in series(params, times):
                v12 = vlf_correlations(moments, vlf_gains(moments))[0]
                self.assertLessEqual(v12, 4 + 1e-9, name)

    def test_guarded_gain(self):
        table = initial_moments(SpinConvention.BOSONIC_VACUUM, 4)
        cov_aa = table.cov_aa.copy()
        # <p1^2> = 1 - 2 Re<a1^2> = 0
        cov_aa[1, 1] = 0.5
        degenerate = MomentTable(n_modes=4, mean=table.mean, cov_nn=table.cov_nn, cov_aa=cov_aa)
        with self.assertLogs('entanglement.criteria', level='WARNING'):
            gains = vlf_gains(degenerate)
        self.assertEqual(gains[0], 0.0)
        with self.assertLogs('entanglement.criteria', level='WARNING'):
            report = entanglement_report(degenerate)
        self.assertEqual(report.guarded_gains, (True, False, False))

    def test_requires_three_fields(self):
        with self.assertRaises(UsageError):
            vlf_gains(moments_at(preset_params('fig2b'), 1.0))

    def test_verdict_needs_two_of_three(self):
        self.assertTrue(tripartite_verdict((3.9, 3.9, 5.0)))
        self.assertTrue(tripartite_verdict((4.0, 3.9, 3.0)))
        self.assertFalse(tripartite_verdict((3.9, 4.0, 5.0)))


class PhotonTests(SimpleTestCase):
    def test_spin_mode_rejected(self):
        with self.assertRaises(UsageError):
            mean_photon(initial_moments(SpinConvention.BOSONIC_VACUUM, 3), ModeId.SPIN)

    def test_vacuum_has_no_photons(self):
        photons = mean_photon(initial_moments(SpinConvention.PRODUCT_STATE, 3), ModeId.FIELD2)
        self.assertEqual((photons.total, photons.fluctuation), (0.0, 0.0))


class ReportTests(SimpleTestCase):
    def test_bipartite_report(self):
        report = entanglement_report(moments_at(preset_params('fig2b'), 0.0))
        self.assertEqual(report.kind, ReportKind.DUAN_BIPARTITE)
        self.assertAlmostEqual(report.v, 4.0, delta=1e-9)
        self.assertFalse(report.verdict)
        self.assertEqual(set(report.photon_numbers), {ModeId.FIELD1, ModeId.FIELD2})

    def test_tripartite_report(self):
        params = preset_params('fig3b')
        report = entanglement_report(moments_at(params, oscillation_period(params).exact / 2))
        self.assertEqual(report.kind, ReportKind.VLF_TRIPARTITE)
        self.assertEqual(len(report.v), 3)
        self.assertTrue(report.verdict)
        self.assertEqual(report.as_dict()['kind'], 'vlf_tripartite')

    def test_kind_follows_mode_count(self):
        zeros = np.zeros((5, 5), dtype=complex)
        table = MomentTable(n_modes=5, mean=np.zeros(5, dtype=complex), cov_nn=zeros, cov_aa=zeros)
        with self.assertRaises(UsageError):
            entanglement_report(table)


class EmpiricalPeriodTests(SimpleTestCase):
    def test_period_of_v(self):
        for name in ('fig2a', 'fig2c'):
            params = preset_params(name)
            period = oscillation_period(params).exact
            times = np.linspace(0, 2 * period, 4000)
            values = [duan_v(m) for m in series(params, times)]
            fit = empirical_period(times, values, extremum='min')
            self.assertLess(abs(fit.period - period) / period, 0.01, name)

    def test_photons_oscillate_with_v(self):
        params = preset_params('fig2b')
        period = oscillation_period(params).exact
        times = np.linspace(0, 2 * period, 400)
        moments = series(params, times)
        v = [duan_v(m) for m in moments]
        photons = [mean_photon(m, ModeId.FIELD1).fluctuation for m in moments]
        v_fit = empirical_period(times, v, extremum='min')
        photon_fit = empirical_period(times, photons, extremum='max')
        self.assertLess(abs(photon_fit.period - v_fit.period) / v_fit.period, 0.01)
        step = times[1] - times[0]
        for v_position, photon_position in zip(v_fit.positions, photon_fit.positions):
            self.assertLessEqual(abs(v_position - photon_position), 2 * step)

    def test_constant_series(self):
        with self.assertRaises(DomainError):
            empirical_period(np.linspace(0, 1, 50), np.ones(50))

    def test_bad_extremum(self):
        with self.assertRaises(UsageError):
            empirical_period(np.linspace(0, 1, 50), np.sin(np.linspace(0, 10, 50)), extremum='saddle')

    def test_sine(self):
        times = np.linspace(0, 10, 1000)
        fit = empirical_period(times, np.cos(2 * math.pi * times / 2.5), extremum='max')
        assert_allclose(fit.period, 2.5, rtol=1e-3)
        assert_allclose(fit.positions, [2.5, 5.0, 7.5], atol=1e-3)


class LoggingTests(SimpleTestCase):
    def test_module_loggers_sit_under_the_app_namespace(self):
        self.assertEqual(criteria.logger.name, 'entanglement.criteria')
        self.assertIn('entanglement', settings.LOGGING['loggers'])
        self.assertFalse(logging.getLogger('entanglement').propagate)
