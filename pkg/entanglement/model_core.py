"""
Closed-form operator dynamics of Stokes/anti-Stokes fields scattered off an
atomic spin wave.

All rates are in units of k1 and all times are the normalized time k1*t.
The transforms act on the stacked vector (a_S, a_1, ..., a_S^+, a_1^+, ...)
and are assembled coefficient by coefficient from the closed-form solutions;
nothing here exponentiates a generator.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from .exceptions import DegenerateCouplingError, DomainError, UsageError

logger = logging.getLogger(__name__)

# Nondegeneracy guard on k1^2 (+ k3^2) - k2^2, in units of k1^2
EPS_DEG = 1e-6

# Below this |beta * t| sin(beta t)/beta is evaluated from its Taylor series
_SERIES_CUTOFF = 1e-4


class ModeId(str, Enum):
    SPIN = 'spin'
    FIELD1 = 'field1'
    FIELD2 = 'field2'
    FIELD3 = 'field3'

    @property
    def index(self) -> int:
        return _MODE_ORDER.index(self)

    @property
    def is_photonic(self) -> bool:
        return self is not ModeId.SPIN

    @classmethod
    def modes_for(cls, n_modes: int):
        """Mode ordering used by transforms, moment tables and Fock states"""
        if n_modes not in (3, 4):
            raise UsageError(f"Expected 3 (bipartite) or 4 (tripartite) modes, got {n_modes}")
        return _MODE_ORDER[:n_modes]


_MODE_ORDER = (ModeId.SPIN, ModeId.FIELD1, ModeId.FIELD2, ModeId.FIELD3)


class CouplingKind(str, Enum):
    # k (a^+ S^+ + a S): creates field/spin excitation pairs (Stokes fields)
    SQUEEZING = 'squeezing'
    # k (a^+ S + a S^+): exchanges excitations (anti-Stokes fields)
    BEAM_SPLITTER = 'beam_splitter'


@dataclass(frozen=True)
class CouplingParams:
    """Model constants: couplings k1, k2, optional k3 and the exchange constant c"""
    k1: float
    k2: float
    c: float
    k3: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.k1) and self.k1 > 0):
            raise DomainError(f"k1 must be a positive finite rate, got {self.k1}")
        if not (math.isfinite(self.k2) and self.k2 >= 0):
            raise DomainError(f"k2 must be a non-negative finite rate, got {self.k2}")
        if self.k3 is not None and not (math.isfinite(self.k3) and self.k3 >= 0):
            raise DomainError(f"k3 must be a non-negative finite rate, got {self.k3}")
        if not math.isfinite(self.c):
            raise DomainError(f"c must be a finite real number, got {self.c}")

    @property
    def is_tripartite(self) -> bool:
        return self.k3 is not None

    @property
    def n_modes(self) -> int:
        return 4 if self.is_tripartite else 3

    @property
    def imbalance(self) -> float:
        """k1^2 + k3^2 - k2^2 (k3 = 0 when bipartite); equals c^2 - beta^2"""
        k3 = self.k3 or 0.0
        return self.k1 ** 2 + k3 ** 2 - self.k2 ** 2

    def field_couplings(self):
        """(mode, strength, kind) for each generated field, in mode order"""
        fields = [
            (ModeId.FIELD1, self.k1, CouplingKind.SQUEEZING),
            (ModeId.FIELD2, self.k2, CouplingKind.BEAM_SPLITTER),
        ]
        if self.is_tripartite:
            fields.append((ModeId.FIELD3, self.k3, CouplingKind.SQUEEZING))
        return fields

    def as_dict(self):
        return {'k1': self.k1, 'k2': self.k2, 'k3': self.k3, 'c': self.c}


@dataclass(frozen=True)
class PhysicalCouplings:
    """Microscopic quantities entering k = g * Omega * sqrt(N_a) / Delta"""
    g: float
    omega_rabi: float
    n_atoms: int
    delta: float

    def __post_init__(self):
        if self.n_atoms < 1:
            raise DomainError(f"n_atoms must be at least 1, got {self.n_atoms}")
        if self.delta == 0:
            raise DomainError("Detuning delta must be nonzero")


@dataclass(frozen=True)
class BogoliubovTransform:
    n_modes: int
    matrix: np.ndarray
    time: float

    @property
    def a_block(self) -> np.ndarray:
        return self.matrix[:self.n_modes, :self.n_modes]

    @property
    def b_block(self) -> np.ndarray:
        return self.matrix[:self.n_modes, self.n_modes:]

    def coefficient(self, out_mode: ModeId, in_mode: ModeId, dagger: bool = False) -> complex:
        """Coefficient of in_mode(0) (or its adjoint) in out_mode(t)"""
        column = in_mode.index + (self.n_modes if dagger else 0)
        return complex(self.matrix[out_mode.index, column])

    def symplectic_error(self) -> float:
        return symplectic_error(self)

    def block_conjugate_error(self) -> float:
        n = self.n_modes
        upper = self.matrix[:n]
        lower = self.matrix[n:]
        swapped = np.concatenate([upper[:, n:], upper[:, :n]], axis=1)
        return float(np.max(np.abs(lower - np.conj(swapped))))


@dataclass(frozen=True)
class OscillationPeriod:
    exact: float
    approximate: float
    beta: complex
    imbalance: float


def coupling_from_physical(phys: PhysicalCouplings) -> float:
    """k = g * omega_rabi * sqrt(n_atoms) / delta"""
    if phys.delta == 0:
        raise DomainError("Detuning delta must be nonzero")
    return phys.g * phys.omega_rabi * math.sqrt(phys.n_atoms) / phys.delta


def params_from_physical(stokes: PhysicalCouplings, anti_stokes: PhysicalCouplings, c: float,
                         mixing: Optional[PhysicalCouplings] = None) -> CouplingParams:
    """
    Build CouplingParams from the microscopic description of each scattering field.

    The sign of a detuning only fixes a phase convention, so k2 and k3 are taken
    by magnitude; k1 must come out positive.
    """
    k1 = coupling_from_physical(stokes)
    k2 = abs(coupling_from_physical(anti_stokes))
    k3 = abs(coupling_from_physical(mixing)) if mixing is not None else None
    return CouplingParams(k1=k1, k2=k2, c=c, k3=k3)


def beta(params: CouplingParams) -> complex:
    """Principal square root of c^2 - (k1^2 + k3^2 - k2^2); imaginary in the squeezing regime"""
    return cmath.sqrt(complex(params.c ** 2 - params.imbalance))


def check_nondegenerate(params: CouplingParams) -> float:
    imbalance = params.imbalance
    if abs(imbalance) <= EPS_DEG * params.k1 ** 2:
        raise DegenerateCouplingError(imbalance)
    return imbalance


def oscillation_period(params: CouplingParams) -> OscillationPeriod:
    """
    Period 2*pi/|c - beta| of the slow oscillation, and its large-c form 4*pi*c/|D|.
    """
    imbalance = check_nondegenerate(params)
    b = beta(params)
    if abs(b.imag) > 0.0 or b.real == 0.0:
        raise DomainError(
            f"beta = {b:.6g} is not real and positive; the fields grow without oscillating"
        )
    b = b.real
    # c - beta = D / (c + beta) avoids the cancellation at large c
    gap = imbalance / (params.c + b) if params.c + b != 0 else params.c - b
    exact = 2 * math.pi / abs(gap)
    approximate = 4 * math.pi * params.c / abs(imbalance)
    return OscillationPeriod(exact=exact, approximate=approximate, beta=complex(b), imbalance=imbalance)


def _sin_over(b: complex, t: float) -> complex:
    """sin(b t)/b, entire in b^2, so valid for imaginary and vanishing b"""
    theta = b * t
    if abs(theta) < _SERIES_CUTOFF:
        theta2 = theta * theta
        return t * (1 - theta2 / 6 + theta2 * theta2 / 120)
    return cmath.sin(theta) / b


def _assemble(params: CouplingParams, t: float) -> BogoliubovTransform:
    imbalance = check_nondegenerate(params)
    c = params.c
    b = beta(params)
    co = cmath.cos(b * t)
    s = _sin_over(b, t)
    e = cmath.exp(1j * c * t)
    e_conj = e.conjugate()

    # Rows of the Stokes fields carry e^{-ict}, rows of the anti-Stokes field e^{+ict}
    p = (co + 1j * c * s) * e_conj
    q = (co - 1j * c * s) * e
    x = (p - 1) / imbalance
    y = (1 - q) / imbalance

    fields = params.field_couplings()
    n = 1 + len(fields)
    a = np.zeros((n, n), dtype=complex)
    bb = np.zeros((n, n), dtype=complex)

    a[0, 0] = e * (co + 1j * c * s)
    for mode, k, kind in fields:
        m = mode.index
        if kind is CouplingKind.SQUEEZING:
            bb[0, m] = -1j * k * s * e
            bb[m, 0] = -1j * k * s * e_conj
            weight = x
        else:
            a[0, m] = -1j * k * s * e
            a[m, 0] = -1j * k * s * e
            weight = y
        for other, k_other, kind_other in fields:
            j = other.index
            value = k * k_other * weight
            # Same kind couples annihilator to annihilator, mixed kinds pick up the adjoint
            if kind_other is kind:
                a[m, j] = (1.0 if j == m else 0.0) + value
            else:
                bb[m, j] = value

    matrix = np.block([[a, bb], [np.conj(bb), np.conj(a)]])
    return BogoliubovTransform(n_modes=n, matrix=matrix, time=float(t))


def bogoliubov_bipartite(params: CouplingParams, t: float) -> BogoliubovTransform:
    """6x6 transform for (S, a1, a2) at time t"""
    if params.is_tripartite:
        raise UsageError("bogoliubov_bipartite expects params without k3")
    if t < 0:
        raise DomainError(f"Time must be non-negative, got {t}")
    return _assemble(params, t)


def bogoliubov_tripartite(params: CouplingParams, t: float) -> BogoliubovTransform:
    """8x8 transform for (S, a1, a2, a3) at time t"""
    if not params.is_tripartite:
        raise UsageError("bogoliubov_tripartite needs k3")
    if t < 0:
        raise DomainError(f"Time must be non-negative, got {t}")
    return _assemble(params, t)


def bogoliubov(params: CouplingParams, t: float) -> BogoliubovTransform:
    if params.is_tripartite:
        return bogoliubov_tripartite(params, t)
    return bogoliubov_bipartite(params, t)


def symplectic_form(n_modes: int) -> np.ndarray:
    return np.diag(np.concatenate([np.ones(n_modes), -np.ones(n_modes)]))


def symplectic_error(transform: BogoliubovTransform) -> float:
    """max |M J M^+ - J|"""
    j = symplectic_form(transform.n_modes)
    m = transform.matrix
    return float(np.max(np.abs(m @ j @ m.conj().T - j)))


def ode_residual_of(coefficient: Callable[[float], np.ndarray], c: float, imbalance: float,
                    t_grid: Sequence[float], h: float) -> float:
    """
    Max relative residual of f'' - 2ic f' - D f = 0 by central differences.

    coefficient(t) returns an array of coefficient values; each component is
    scaled by max(|f''| + |2c f'| + |D f|) over the grid. Identically zero
    components have residual 0.
    """
    worst = 0.0
    residuals = []
    scales = []
    for t in t_grid:
        f_minus = np.asarray(coefficient(t - h), dtype=complex)
        f_zero = np.asarray(coefficient(t), dtype=complex)
        f_plus = np.asarray(coefficient(t + h), dtype=complex)
        first = (f_plus - f_minus) / (2 * h)
        second = (f_plus - 2 * f_zero + f_minus) / h ** 2
        residuals.append(np.abs(second - 2j * c * first - imbalance * f_zero))
        scales.append(np.abs(second) + np.abs(2 * c * first) + np.abs(imbalance * f_zero))
    residuals = np.max(np.array(residuals), axis=0)
    scales = np.max(np.array(scales), axis=0)
    for residual, scale in zip(np.atleast_1d(residuals), np.atleast_1d(scales)):
        if scale > 0:
            worst = max(worst, float(residual / scale))
    return worst


def ode_residual(params: CouplingParams, t_grid: Sequence[float], h: float = 1e-4) -> float:
    """Check the spin-row coefficients against d2S/dt2 - 2ic dS/dt - D S = 0"""
    imbalance = check_nondegenerate(params)
    result = ode_residual_of(
        lambda t: _assemble(params, t).matrix[0],
        params.c, imbalance, t_grid, h,
    )
    logger.debug("ODE residual for %s over %d points: %.3e", params, len(t_grid), result)
    return result
