"""
Time sweeps, minimum scans and the oracle self-check suite.

Grid points are independent, so they are evaluated on a thread pool and
collected in grid order; the output of a given config is deterministic.
"""

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import criteria
from .criteria import SpinConvention
from .exceptions import DegenerateCouplingError, DomainError, UsageError
from .model_core import (
    BogoliubovTransform,
    CouplingParams,
    ModeId,
    beta,
    bogoliubov,
    bogoliubov_bipartite,
    bogoliubov_tripartite,
    check_nondegenerate,
    ode_residual,
    oscillation_period,
)
from .oracle import (
    DEFAULT_QUANTA,
    EDGE_THRESHOLD,
    closed_form_vs_exact,
    spin_moments_bruteforce,
    squeezing_limit_check,
)
from .presets import BIPARTITE_PRESETS, TRIPARTITE_PRESETS, preset_params

logger = logging.getLogger(__name__)

BIPARTITE_COLUMNS = {
    'duan': ['V'],
    'photons': ['n1_total', 'n1_fluct', 'n2_total', 'n2_fluct'],
}
TRIPARTITE_COLUMNS = {
    'vlf': ['V12', 'V13', 'V23', 'g1', 'g2', 'g3'],
    'photons': ['n1_fluct', 'n2_fluct', 'n3_fluct'],
}
OUTPUT_KINDS = frozenset({'duan', 'vlf', 'photons', 'period'})
FORMATS = ('csv', 'json')
NEAR_ZERO_V = 0.4
SIGNIFICANT_DIGITS = '.9g'


@dataclass(frozen=True)
class SweepConfig:
    params: CouplingParams
    t_max: float
    steps: int
    spin_convention: SpinConvention = SpinConvention.PRODUCT_STATE
    n_atoms: int = criteria.DEFAULT_N_ATOMS
    outputs: Optional[FrozenSet[str]] = None
    output_path: Optional[Path] = None
    format: str = 'csv'
    threads: int = 1

    def __post_init__(self):
        if self.steps < 2:
            raise UsageError(f"steps must be at least 2, got {self.steps}")
        if not (math.isfinite(self.t_max) and self.t_max > 0):
            raise UsageError(f"t_max must be positive, got {self.t_max}")
        if self.format not in FORMATS:
            raise UsageError(f"format must be one of {FORMATS}, got {self.format!r}")
        unknown = set(self.outputs or ()) - OUTPUT_KINDS
        if unknown:
            raise UsageError(f"Unknown outputs: {', '.join(sorted(unknown))}")
        if self.threads < 1:
            raise UsageError(f"threads must be at least 1, got {self.threads}")

    @property
    def selected_outputs(self) -> FrozenSet[str]:
        """The requested outputs, or every one that applies to the params"""
        if self.outputs is not None:
            return frozenset(self.outputs)
        groups = TRIPARTITE_COLUMNS if self.params.is_tripartite else BIPARTITE_COLUMNS
        return frozenset(groups) | {'period'}

    @property
    def columns(self) -> List[str]:
        groups = TRIPARTITE_COLUMNS if self.params.is_tripartite else BIPARTITE_COLUMNS
        wrong = (self.selected_outputs - {'period'}) - set(groups)
        if wrong:
            arity = 'tripartite' if self.params.is_tripartite else 'bipartite'
            raise UsageError(f"Outputs {', '.join(sorted(wrong))} do not apply to {arity} params")
        columns = ['t']
        for name, group in groups.items():
            if name in self.selected_outputs:
                columns.extend(group)
        return columns

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max, self.steps)

    def initial_moments(self) -> criteria.MomentTable:
        return criteria.initial_moments(self.spin_convention, self.params.n_modes, self.n_atoms)


@dataclass
class SweepResult:
    config: SweepConfig
    columns: List[str]
    rows: List[Dict[str, float]]
    summary: Dict[str, object]
    path: Optional[Path] = None
    summary_path: Optional[Path] = None

    def column(self, name) -> np.ndarray:
        return np.array([row[name] for row in self.rows])


@dataclass
class MinScanReport:
    min_v: float
    argmin_t: float
    grid_min_v: float
    period_exact: Optional[float]
    phase_ratio: Optional[float]
    empirical_period: Optional[float]
    near_zero_minimum: Optional[bool]
    convention: SpinConvention
    conventions: Dict[str, Dict[str, object]] = field(default_factory=dict)

    def as_dict(self):
        return {
            'min_v': self.min_v,
            'argmin_t': self.argmin_t,
            'grid_min_v': self.grid_min_v,
            'period_exact': self.period_exact,
            'phase_ratio': self.phase_ratio,
            'empirical_period': self.empirical_period,
            'near_zero_minimum': self.near_zero_minimum,
            'convention': self.convention.value,
            'conventions': self.conventions,
        }


def default_t_max(params: CouplingParams, periods: float = 2.0) -> float:
    """`periods` oscillation periods, or 2*pi/k1 when the fields do not oscillate"""
    try:
        return periods * oscillation_period(params).exact
    except DegenerateCouplingError:
        raise
    except DomainError:
        return periods * 2 * math.pi / params.k1


def evaluate_point(params: CouplingParams, initial: criteria.MomentTable, t: float) -> Dict[str, float]:
    """Every column of the sweep schema at one time"""
    moments = criteria.evolve_moments(bogoliubov(params, t), initial)
    row = {'t': float(t)}
    if params.is_tripartite:
        gains = criteria.vlf_gains(moments)
        v12, v13, v23 = criteria.vlf_correlations(moments, gains)
        row.update({'V12': v12, 'V13': v13, 'V23': v23, 'g1': gains[0], 'g2': gains[1], 'g3': gains[2]})
        for label, mode in (('n1', ModeId.FIELD1), ('n2', ModeId.FIELD2), ('n3', ModeId.FIELD3)):
            row[f'{label}_fluct'] = criteria.mean_photon(moments, mode).fluctuation
    else:
        row['V'] = criteria.duan_v(moments)
        for label, mode in (('n1', ModeId.FIELD1), ('n2', ModeId.FIELD2)):
            photons = criteria.mean_photon(moments, mode)
            row[f'{label}_total'] = photons.total
            row[f'{label}_fluct'] = photons.fluctuation
    return row


def objective(params: CouplingParams, row: Dict[str, float]) -> float:
    """V for two fields, the largest VLF correlation for three"""
    if params.is_tripartite:
        return max(row['V12'], row['V13'], row['V23'])
    return row['V']


def evaluate_grid(config: SweepConfig) -> List[Dict[str, float]]:
    check_nondegenerate(config.params)
    initial = config.initial_moments()
    times = config.times()
    logger.info("Evaluating %d points up to t = %g on %d thread(s)", len(times), config.t_max, config.threads)
    if config.threads == 1:
        return [evaluate_point(config.params, initial, t) for t in times]
    with ThreadPoolExecutor(max_workers=config.threads) as executor:
        return list(executor.map(lambda t: evaluate_point(config.params, initial, t), times))


def period_summary(params: CouplingParams) -> Dict[str, Optional[float]]:
    check_nondegenerate(params)
    b = beta(params)
    summary = {
        'beta': b.real,
        'beta_imag': b.imag,
        'imbalance': params.imbalance,
        'period_exact': None,
        'period_approx': None,
    }
    try:
        period = oscillation_period(params)
    except DomainError as e:
        logger.info("No oscillation period: %s", e)
        return summary
    summary['period_exact'] = period.exact
    summary['period_approx'] = period.approximate
    return summary


def _summarize(config: SweepConfig, rows: List[Dict[str, float]]) -> Dict[str, object]:
    values = np.array([objective(config.params, row) for row in rows])
    index = int(np.argmin(values))
    summary = {
        'params': config.params.as_dict(),
        'convention': config.spin_convention.value,
        'n_atoms': config.n_atoms,
        't_max': config.t_max,
        'steps': config.steps,
        'min_v': float(values[index]),
        'argmin_t': rows[index]['t'],
        'near_zero_minimum': (None if config.params.is_tripartite
                              else bool(values[index] < NEAR_ZERO_V)),
    }
    summary.update(period_summary(config.params))
    return summary


def _format(value) -> str:
    return format(value, SIGNIFICANT_DIGITS)


def sidecar_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}.summary.json")


def write_rows(path: Path, columns: List[str], rows: List[Dict[str, float]], fmt: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == 'csv':
        with open(path, 'w', newline='') as handle:
            writer = csv.writer(handle)
            writer.writerow(columns)
            for row in rows:
                writer.writerow([_format(row[name]) for name in columns])
    else:
        payload = {'columns': columns, 'rows': [[row[name] for name in columns] for row in rows]}
        with open(path, 'w') as handle:
            json.dump(payload, handle, indent=2)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Evaluate the grid and, when an output path is set, write the rows plus a JSON sidecar"""
    columns = config.columns
    rows = evaluate_grid(config)
    result = SweepResult(config=config, columns=columns, rows=rows, summary=_summarize(config, rows))
    if config.output_path is not None:
        path = Path(config.output_path)
        write_rows(path, columns, rows, config.format)
        result.path = path
        result.summary_path = sidecar_path(path)
        with open(result.summary_path, 'w') as handle:
            json.dump(result.summary, handle, indent=2)
        logger.info("Wrote %d rows to %s", len(rows), path)
    return result


def _refine_minimum(config: SweepConfig, initial, times, values, index):
    """Golden-section search between the neighbours of the grid minimum"""
    if index == 0 or index == len(times) - 1:
        return float(values[index]), float(times[index])
    left, centre, right = times[index - 1], times[index], times[index + 1]
    if not (values[index] < values[index - 1] and values[index] < values[index + 1]):
        return float(values[index]), float(centre)

    def f(t):
        t = min(max(t, left), right)
        return objective(config.params, evaluate_point(config.params, initial, t))

    result = minimize_scalar(f, bracket=(left, centre, right), method='golden', tol=1e-10)
    if left <= result.x <= right and result.fun <= values[index]:
        return float(result.fun), float(result.x)
    return float(values[index]), float(centre)


def _scan_one(config: SweepConfig) -> MinScanReport:
    rows = evaluate_grid(config)
    times = np.array([row['t'] for row in rows])
    values = np.array([objective(config.params, row) for row in rows])
    index = int(np.argmin(values))
    min_v, argmin_t = _refine_minimum(config, config.initial_moments(), times, values, index)

    period = period_summary(config.params)['period_exact']
    phase_ratio = None
    if period is not None:
        # Minima recur every period; the phase within one period is what locates them
        phase_ratio = (argmin_t % period) / (period / 2)
    try:
        empirical = criteria.empirical_period(times, values, extremum='min').period
    except DomainError as e:
        logger.info("Empirical period unavailable: %s", e)
        empirical = None
    near_zero = None if config.params.is_tripartite else bool(min_v < NEAR_ZERO_V)
    return MinScanReport(
        min_v=min_v,
        argmin_t=argmin_t,
        grid_min_v=float(values[index]),
        period_exact=period,
        phase_ratio=phase_ratio,
        empirical_period=empirical,
        near_zero_minimum=near_zero,
        convention=config.spin_convention,
    )


def min_scan(config: SweepConfig, convention_report: bool = False) -> MinScanReport:
    """
    Minimum of V (or of the largest VLF correlation) over the grid, refined
    between neighbouring grid points. With convention_report both spin
    conventions are scanned and recorded.
    """
    report = _scan_one(config)
    if convention_report:
        for convention in SpinConvention:
            other = report if convention is config.spin_convention else _scan_one(
                replace(config, spin_convention=convention))
            report.conventions[convention.value] = {
                'min_v': other.min_v,
                'argmin_t': other.argmin_t,
                'phase_ratio': other.phase_ratio,
                'near_zero_minimum': other.near_zero_minimum,
            }
    return report


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    observed: float
    threshold: float
    detail: str = ''


@dataclass
class OracleReport:
    level: str
    checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def add(self, name, observed, threshold, detail=''):
        check = CheckResult(name=name, passed=bool(observed < threshold), observed=float(observed),
                            threshold=threshold, detail=detail)
        self.checks.append(check)
        logger.info("Check %s: observed %.3e, threshold %.1e", name, observed, threshold)
        return check


def corrupt_transform(transform: BogoliubovTransform, factor: float = 1.001) -> BogoliubovTransform:
    """Scale the a1 <- a1 coefficient and rebuild the conjugate blocks"""
    n = transform.n_modes
    a = transform.a_block.copy()
    b = transform.b_block.copy()
    a[1, 1] *= factor
    matrix = np.block([[a, b], [np.conj(b), np.conj(a)]])
    return BogoliubovTransform(n_modes=n, matrix=matrix, time=transform.time)


def _spin_check(report: OracleReport, max_atoms: int):
    worst = 0.0
    for n_atoms in range(2, max_atoms + 1):
        moments = spin_moments_bruteforce(n_atoms)
        worst = max(
            worst,
            abs(moments.mean - math.sqrt(n_atoms) / 2),
            abs(moments.s_squared - (n_atoms - 1) / 4),
            abs(moments.s_dag_s - (n_atoms + 1) / 4),
            abs(moments.s_s_dag - (n_atoms + 1) / 4),
            abs(moments.s_dag_s_centered - 0.25),
            abs(moments.s_squared_centered + 0.25),
        )
    report.add('spin_moments', worst, 1e-12, f"N = 2..{max_atoms}")


def _symplectic_check(report: OracleReport, presets, n_times: int, corrupt: bool):
    worst = 0.0
    for name in presets:
        params = preset_params(name)
        t_max = default_t_max(params)
        for t in np.linspace(0.0, t_max, n_times):
            transform = bogoliubov(params, t)
            if corrupt:
                transform = corrupt_transform(transform)
            worst = max(worst, transform.symplectic_error())
    report.add('symplectic', worst, 1e-9, f"{', '.join(presets)} x {n_times} times")


def _ode_check(report: OracleReport, presets):
    for name in presets:
        params = preset_params(name)
        grid = np.linspace(0.0, default_t_max(params), 200)
        report.add(f'ode_residual_{name}', ode_residual(params, grid), 1e-5)


def _k3_reduction_check(report: OracleReport, n_times: int):
    two = CouplingParams(k1=1.0, k2=0.5, c=30.0)
    three = replace(two, k3=0.0)
    worst = 0.0
    for t in np.linspace(0.0, default_t_max(two), n_times):
        small = bogoliubov_bipartite(two, t)
        large = bogoliubov_tripartite(three, t)
        worst = max(worst,
                    float(np.max(np.abs(large.a_block[:3, :3] - small.a_block))),
                    float(np.max(np.abs(large.b_block[:3, :3] - small.b_block))))
    report.add('k3_zero_reduction', worst, 1e-12)


def oracle_check(level: str = 'fast', corrupt: bool = False, fock_quanta: int = DEFAULT_QUANTA,
                 edge_threshold: float = EDGE_THRESHOLD) -> OracleReport:
    """
    Run the self-check suite; `corrupt` perturbs one closed-form coefficient.

    Closed-form/Fock equivalence runs at EQUIVALENCE_QUANTA; the full level
    also evolves at the default truncation `fock_quanta`.
    """
    if level not in ('fast', 'full'):
        raise UsageError(f"level must be 'fast' or 'full', got {level!r}")
    report = OracleReport(level=level)
    full = level == 'full'

    _spin_check(report, 12 if full else 8)

    squeezing = max(squeezing_limit_check(r, edge_threshold=edge_threshold).worst_error() for r in (0.5, 1.0))
    report.add('squeezing_limit', squeezing, 1e-8, 'r = 0.5, 1.0')

    if full:
        _symplectic_check(report, BIPARTITE_PRESETS + TRIPARTITE_PRESETS, 1000, corrupt)
        _ode_check(report, ('fig2a', 'fig2c'))
    else:
        _symplectic_check(report, ('fig2b', 'fig3b'), 200, corrupt)
        _ode_check(report, ('fig2a',))

    bipartite = closed_form_vs_exact(CouplingParams(k1=1.0, k2=0.5, c=0.0), 1.0,
                                     edge_threshold=edge_threshold)
    report.add('closed_form_vs_exact_bipartite', bipartite, 1e-6, 'k1 = 1, k2 = 0.5, t = 1')
    if full:
        tripartite = closed_form_vs_exact(CouplingParams(k1=1.0, k2=0.0, c=0.0, k3=0.5), 1.0,
                                          edge_threshold=edge_threshold)
        report.add('closed_form_vs_exact_tripartite', tripartite, 1e-6, 'k1 = 1, k2 = 0, k3 = 0.5, t = 1')
        _k3_reduction_check(report, 200)
        truncated = squeezing_limit_check(0.5, quanta=fock_quanta, edge_threshold=edge_threshold)
        report.add('fock_default_truncation', truncated.worst_error(), 1e-8, f"{fock_quanta} quanta, r = 0.5")
    return report


def resolve_threads(requested: Optional[int], fallback: Optional[int] = None) -> int:
    """Explicit request, then the configured fallback, then the CPU count"""
    for value in (requested, fallback):
        if value:
            return int(value)
    return os.cpu_count() or 1
