"""
Moment tables and entanglement criteria.

Quadratures follow x = a + a^+, p = -i(a - a^+), so a vacuum mode has
Var(x) = Var(p) = 1 and both the Duan sum and each VLF combination start at 4.
Every criterion works on centered moments; second moments of non-commuting
quadratures are symmetrized.
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import find_peaks

from .exceptions import DomainError, UsageError
from .model_core import BogoliubovTransform, ModeId

logger = logging.getLogger(__name__)

ENTANGLEMENT_BOUND = 4.0
EPS_VAR = 1e-12
VARIANCE_FLOOR = -1e-10
PHOTON_FLOOR = -1e-12
DEFAULT_N_ATOMS = 1_000_000


class SpinConvention(str, Enum):
    # Product of N atoms in (|1> + |2>)/sqrt(2): macroscopic <S>, non-bosonic fluctuations
    PRODUCT_STATE = 'product'
    # Spin wave treated as a bosonic mode in its vacuum
    BOSONIC_VACUUM = 'bosonic'


class ReportKind(str, Enum):
    DUAN_BIPARTITE = 'duan_bipartite'
    VLF_TRIPARTITE = 'vlf_tripartite'


@dataclass(frozen=True)
class MomentTable:
    """First moments and centered <a_i^+ a_j>, <a_i a_j> of all modes"""
    n_modes: int
    mean: np.ndarray
    cov_nn: np.ndarray
    cov_aa: np.ndarray

    def __post_init__(self):
        n = self.n_modes
        if self.mean.shape != (n,) or self.cov_nn.shape != (n, n) or self.cov_aa.shape != (n, n):
            raise UsageError(f"Moment arrays do not match {n} modes")

    @property
    def modes(self):
        return ModeId.modes_for(self.n_modes)

    def displaced(self, shift: Sequence[complex]) -> 'MomentTable':
        """Same fluctuations, means shifted by `shift`"""
        shift = np.asarray(shift, dtype=complex)
        return replace(self, mean=self.mean + shift)


@dataclass(frozen=True)
class PhotonNumber:
    total: float
    fluctuation: float


@dataclass(frozen=True)
class EntanglementReport:
    kind: ReportKind
    v: object
    verdict: bool
    photon_numbers: Dict[ModeId, PhotonNumber]
    gains: Optional[Tuple[float, float, float]] = None
    guarded_gains: Tuple[bool, ...] = field(default_factory=tuple)

    def as_dict(self):
        return {
            'kind': self.kind.value,
            'v': list(self.v) if isinstance(self.v, tuple) else self.v,
            'verdict': self.verdict,
            'gains': list(self.gains) if self.gains is not None else None,
            'guarded_gains': list(self.guarded_gains),
            'photon_numbers': {
                mode.value: {'total': n.total, 'fluctuation': n.fluctuation}
                for mode, n in self.photon_numbers.items()
            },
        }


@dataclass(frozen=True)
class PeriodFit:
    period: float
    positions: Tuple[float, ...]


def initial_moments(convention: SpinConvention, n_modes: int,
                    n_atoms: int = DEFAULT_N_ATOMS) -> MomentTable:
    """Spin wave prepared by the Raman/EIT pair, every generated field in vacuum"""
    ModeId.modes_for(n_modes)
    mean = np.zeros(n_modes, dtype=complex)
    cov_nn = np.zeros((n_modes, n_modes), dtype=complex)
    cov_aa = np.zeros((n_modes, n_modes), dtype=complex)
    if SpinConvention(convention) is SpinConvention.PRODUCT_STATE:
        if n_atoms < 2:
            raise DomainError(f"The product-state spin wave needs at least 2 atoms, got {n_atoms}")
        # <S> = sqrt(N)/2, <S^+S> = (N+1)/4, <S^2> = (N-1)/4
        mean[0] = math.sqrt(n_atoms) / 2
        cov_nn[0, 0] = 0.25
        cov_aa[0, 0] = -0.25
    return MomentTable(n_modes=n_modes, mean=mean, cov_nn=cov_nn, cov_aa=cov_aa)


def evolve_moments(transform: BogoliubovTransform, initial: MomentTable) -> MomentTable:
    """Push means and centered second moments through a(t) = A a + B a^+"""
    if transform.n_modes != initial.n_modes:
        raise UsageError(
            f"Transform acts on {transform.n_modes} modes but the table has {initial.n_modes}"
        )
    a = transform.a_block
    b = transform.b_block
    n = initial.cov_nn
    m = initial.cov_aa
    # <da_k da_l^+> = delta_kl + N_lk for bosonic modes
    anti = np.eye(initial.n_modes) + n.T

    mean = a @ initial.mean + b @ np.conj(initial.mean)
    cov_aa = a @ m @ a.T + a @ anti @ b.T + b @ n @ a.T + b @ np.conj(m) @ b.T
    cov_nn = (np.conj(a) @ n @ a.T + np.conj(a) @ np.conj(m) @ b.T
              + np.conj(b) @ m @ a.T + np.conj(b) @ anti @ b.T)

    return MomentTable(
        n_modes=initial.n_modes,
        mean=mean,
        cov_nn=(cov_nn + cov_nn.conj().T) / 2,
        cov_aa=(cov_aa + cov_aa.T) / 2,
    )


def quadrature_covariance(moments: MomentTable) -> np.ndarray:
    """Real symmetric covariance of (x_1..x_n, p_1..p_n); identity for vacuum"""
    n = moments.n_modes
    nn = moments.cov_nn
    aa = moments.cov_aa
    eye = np.eye(n)
    cxx = eye + 2 * nn.real + 2 * aa.real
    cpp = eye + 2 * nn.real - 2 * aa.real
    cxp = 2 * aa.imag + 2 * nn.imag
    return np.block([[cxx, cxp], [cxp.T, cpp]])


def _combination_variance(gamma: np.ndarray, coefficients: np.ndarray) -> float:
    value = float(coefficients @ gamma @ coefficients)
    if value < VARIANCE_FLOOR:
        logger.warning("Negative combination variance %.3e clamped to zero", value)
    return max(value, 0.0)


def _x(n_modes, index, weight=1.0):
    vector = np.zeros(2 * n_modes)
    vector[index] = weight
    return vector


def _p(n_modes, index, weight=1.0):
    vector = np.zeros(2 * n_modes)
    vector[n_modes + index] = weight
    return vector


def _require_modes(moments: MomentTable, *modes: ModeId):
    for mode in modes:
        if mode.index >= moments.n_modes:
            raise UsageError(f"Mode {mode.value} is not present in a {moments.n_modes}-mode table")


def duan_v(moments: MomentTable, modes: Tuple[ModeId, ModeId] = (ModeId.FIELD1, ModeId.FIELD2),
           sign: int = 1, theta: float = 0.0) -> float:
    """
    Duan sum Var(u) + Var(v) with u = x_i + sign*x_j(theta), v = p_i - sign*p_j(theta).

    x_j(theta) = cos(theta) x_j + sin(theta) p_j is a local rotation of the second
    mode. The defaults give the Stokes/anti-Stokes criterion u = x1 + x2, v = p1 - p2.
    """
    first, second = modes
    _require_modes(moments, first, second)
    if sign not in (1, -1):
        raise UsageError(f"sign must be +1 or -1, got {sign}")
    n = moments.n_modes
    i, j = first.index, second.index
    cos, sin = math.cos(theta), math.sin(theta)
    u = _x(n, i) + sign * (_x(n, j, cos) + _p(n, j, sin))
    v = _p(n, i) - sign * (_p(n, j, cos) - _x(n, j, sin))
    gamma = quadrature_covariance(moments)
    return _combination_variance(gamma, u) + _combination_variance(gamma, v)


def _p_covariance(moments: MomentTable) -> np.ndarray:
    _require_modes(moments, ModeId.FIELD3)
    n = moments.n_modes
    gamma = quadrature_covariance(moments)
    fields = [ModeId.FIELD1.index, ModeId.FIELD2.index, ModeId.FIELD3.index]
    return gamma[np.ix_([n + k for k in fields], [n + k for k in fields])]


def gain_denominators(moments: MomentTable) -> Tuple[float, float, float]:
    cov = _p_covariance(moments)
    return float(cov[0, 0]), float(cov[1, 1]), float(cov[2, 2])


def vlf_gains(moments: MomentTable) -> Tuple[float, float, float]:
    """
    Gains g1, g2, g3 that minimize the p-parts of V23, V13 and V12 respectively.

    A denominator below EPS_VAR yields a gain of 0.
    """
    cov = _p_covariance(moments)
    p12, p13, p23 = cov[0, 1], cov[0, 2], cov[1, 2]
    numerators = (-(p12 - p13), -(p12 + p23), -(p13 - p23))
    gains = []
    for index, numerator in enumerate(numerators):
        denominator = cov[index, index]
        if denominator < EPS_VAR:
            logger.warning("VLF gain g%d guarded: <p%d^2> = %.3e", index + 1, index + 1, denominator)
            gains.append(0.0)
        else:
            gains.append(float(numerator / denominator))
    return tuple(gains)


def vlf_correlations(moments: MomentTable, gains: Tuple[float, float, float]) -> Tuple[float, float, float]:
    """(V12, V13, V23) for the given gains"""
    _require_modes(moments, ModeId.FIELD3)
    g1, g2, g3 = gains
    n = moments.n_modes
    one, two, three = ModeId.FIELD1.index, ModeId.FIELD2.index, ModeId.FIELD3.index
    gamma = quadrature_covariance(moments)
    variance = lambda vector: _combination_variance(gamma, vector)  # noqa: E731

    v12 = (variance(_x(n, one) + _x(n, two))
           + variance(_p(n, one) - _p(n, two) + _p(n, three, g3)))
    v13 = (variance(_x(n, one) - _x(n, three))
           + variance(_p(n, one) + _p(n, two, g2) + _p(n, three)))
    v23 = (variance(_x(n, two) + _x(n, three))
           + variance(_p(n, one, g1) + _p(n, two) - _p(n, three)))
    return v12, v13, v23


def mean_photon(moments: MomentTable, mode: ModeId) -> PhotonNumber:
    """Total and fluctuation-only mean photon number of a generated field"""
    if not mode.is_photonic:
        raise UsageError("mean_photon is defined for photonic modes only")
    _require_modes(moments, mode)
    i = mode.index
    fluctuation = float(moments.cov_nn[i, i].real)
    if fluctuation < PHOTON_FLOOR:
        logger.warning("Negative photon-number fluctuation %.3e in %s", fluctuation, mode.value)
    fluctuation = max(fluctuation, 0.0)
    total = fluctuation + abs(moments.mean[i]) ** 2
    return PhotonNumber(total=float(total), fluctuation=fluctuation)


def tripartite_verdict(v: Sequence[float]) -> bool:
    """Any two of the three VLF inequalities suffice"""
    return sum(1 for value in v if value < ENTANGLEMENT_BOUND) >= 2


def entanglement_report(moments: MomentTable) -> EntanglementReport:
    photon_numbers = {mode: mean_photon(moments, mode) for mode in moments.modes if mode.is_photonic}
    if moments.n_modes == 3:
        v = duan_v(moments)
        return EntanglementReport(
            kind=ReportKind.DUAN_BIPARTITE,
            v=v,
            verdict=v < ENTANGLEMENT_BOUND,
            photon_numbers=photon_numbers,
        )
    gains = vlf_gains(moments)
    v = vlf_correlations(moments, gains)
    guarded = tuple(d < EPS_VAR for d in gain_denominators(moments))
    return EntanglementReport(
        kind=ReportKind.VLF_TRIPARTITE,
        v=v,
        verdict=tripartite_verdict(v),
        photon_numbers=photon_numbers,
        gains=gains,
        guarded_gains=guarded,
    )


def empirical_period(times: Sequence[float], values: Sequence[float], extremum: str = 'min') -> PeriodFit:
    """
    Mean spacing of successive extrema of a sampled oscillation.

    Candidate extrema are taken from a lightly smoothed copy of the series and
    filtered by prominence, so the fast ripple at frequency ~2c does not count;
    each one is then located by a least-squares parabola through the raw
    samples around it.
    """
    times = np.asarray(times, dtype=float)
    signal = np.asarray(values, dtype=float)
    if extremum not in ('min', 'max'):
        raise UsageError(f"extremum must be 'min' or 'max', got {extremum!r}")
    if extremum == 'min':
        signal = -signal
    span = float(signal.max() - signal.min()) if signal.size else 0.0
    if span <= 0:
        raise DomainError("Cannot extract a period from a constant series")

    smooth = uniform_filter1d(signal, size=max(3, signal.size // 100), mode='nearest')
    peaks, _ = find_peaks(smooth, prominence=0.25 * span)
    if len(peaks) < 2:
        raise DomainError(f"Found {len(peaks)} {extremum}ima; need two to measure a period")

    half = max(2, signal.size // 80)
    positions = []
    for peak in peaks:
        lo, hi = max(0, peak - half), min(signal.size, peak + half + 1)
        centre = times[peak]
        curvature, slope, _ = np.polyfit(times[lo:hi] - centre, signal[lo:hi], 2)
        vertex = centre
        if curvature < 0:
            vertex = centre - slope / (2 * curvature)
            vertex = min(max(vertex, times[lo]), times[hi - 1])
        positions.append(float(vertex))
    return PeriodFit(period=float(np.mean(np.diff(positions))), positions=tuple(positions))
