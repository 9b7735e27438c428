"""
Brute-force references for the closed-form dynamics.

States live in a truncated product Fock basis with the spin wave as mode 0
(slowest-varying index). Only the sector reachable from the initial support
is ever built, so the exact quadratic dynamics stay cheap at 60 quanta.
"""

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg, sparse
from scipy.special import gammaln

from .criteria import (
    MomentTable,
    SpinConvention,
    duan_v,
    evolve_moments,
    initial_moments,
)
from .exceptions import DomainError, TruncationOverflowError, UsageError
from .model_core import BogoliubovTransform, CouplingKind, CouplingParams, ModeId, bogoliubov

logger = logging.getLogger(__name__)

DEFAULT_QUANTA = 30
# Closed-form/Fock comparisons need the tail of the photon distribution well
# inside the truncation; at 30 quanta the edge population sits near 1e-6.
EQUIVALENCE_QUANTA = 60
EDGE_THRESHOLD = 1e-6
EXACT_DIAGONALIZATION_LIMIT = 4096
NORM_TOLERANCE = 1e-8
MAX_BRUTEFORCE_ATOMS = 14

Mode = Union[ModeId, int]


def _mode_index(mode: Mode) -> int:
    return mode.index if isinstance(mode, ModeId) else int(mode)


def _mode_label(index: int) -> str:
    if index < len(ModeId):
        return list(ModeId)[index].value
    return f"mode{index}"


@dataclass(frozen=True)
class FieldTerm:
    """One field coupled to the spin wave; integer modes index past FIELD3"""
    mode: Mode
    strength: float
    kind: CouplingKind


@dataclass(frozen=True)
class HamiltonianSpec:
    """
    Quadratic spin/field Hamiltonian: a sum of squeezing k(a^+ S^+ + a S)
    and beam-splitter k(a^+ S + a S^+) terms with real strengths. Any number
    of fields may share the spin wave (mode 0).
    """
    n_modes: int
    terms: Tuple[FieldTerm, ...]

    def __post_init__(self):
        if self.n_modes < 2:
            raise UsageError(f"Need the spin wave and at least one field, got {self.n_modes} modes")
        for term in self.terms:
            index = _mode_index(term.mode)
            if index <= 0:
                raise UsageError("Coupling terms act between the spin wave and a photonic mode")
            if index >= self.n_modes:
                raise UsageError(f"{_mode_label(index)} is outside a {self.n_modes}-mode Hamiltonian")
            if not math.isfinite(term.strength):
                raise DomainError(f"Coupling strength must be finite, got {term.strength}")

    @classmethod
    def from_params(cls, params: CouplingParams) -> 'HamiltonianSpec':
        terms = tuple(FieldTerm(mode, k, kind) for mode, k, kind in params.field_couplings())
        return cls(n_modes=params.n_modes, terms=terms)

    @property
    def is_trivial(self) -> bool:
        return all(term.strength == 0 for term in self.terms)


@dataclass(frozen=True)
class FockState:
    """
    Sparse product-basis vector: one occupation row per stored amplitude.

    `norm_drift` is |norm - 1| of the evolved vector before it was
    renormalized; zero for states that were built rather than evolved.
    """
    dims: Tuple[int, ...]
    occupations: np.ndarray
    amplitudes: np.ndarray
    norm_drift: float = field(default=0.0, compare=False)

    def __post_init__(self):
        if self.occupations.ndim != 2 or self.occupations.shape != (len(self.amplitudes), len(self.dims)):
            raise UsageError("Occupations must have one row per amplitude and one column per mode")
        if np.any(self.occupations < 0) or np.any(self.occupations >= np.array(self.dims)):
            raise DomainError(f"Occupation outside the truncation {self.dims}")
        norm = self.norm
        if abs(norm - 1.0) > 1e-10:
            raise DomainError(f"State must be normalized, got norm {norm:.12f}")

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def keys(self) -> np.ndarray:
        return _keys(self.occupations, self.dims)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(int(np.prod(self.dims)), dtype=complex)
        np.add.at(dense, self.keys(), self.amplitudes)
        return dense

    def population(self, mode: Mode, level: int) -> float:
        mask = self.occupations[:, _mode_index(mode)] == level
        return float(np.sum(np.abs(self.amplitudes[mask]) ** 2))

    def edge_populations(self) -> Dict[int, float]:
        return {index: self.population(index, dim - 1) for index, dim in enumerate(self.dims)}


def _keys(occupations: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    if len(occupations) == 0:
        return np.zeros(0, dtype=np.int64)
    return np.ravel_multi_index(occupations.T, dims).astype(np.int64)


def vacuum(dims: Sequence[int]) -> FockState:
    dims = tuple(int(d) for d in dims)
    return FockState(dims=dims, occupations=np.zeros((1, len(dims)), dtype=np.int64),
                     amplitudes=np.ones(1, dtype=complex))


def fock_basis_state(dims: Sequence[int], occupation: Sequence[int]) -> FockState:
    dims = tuple(int(d) for d in dims)
    if len(occupation) != len(dims):
        raise UsageError(f"Occupation {tuple(occupation)} does not match {len(dims)} modes")
    return FockState(dims=dims, occupations=np.array([occupation], dtype=np.int64),
                     amplitudes=np.ones(1, dtype=complex))


def coherent_state(dims: Sequence[int], mode: Mode, alpha: complex) -> FockState:
    """Coherent amplitude alpha in one mode, truncated to its dimension and renormalized"""
    dims = tuple(int(d) for d in dims)
    index = _mode_index(mode)
    if alpha == 0:
        return vacuum(dims)
    levels = np.arange(dims[index])
    log_weights = levels * math.log(abs(alpha)) - 0.5 * gammaln(levels + 1) - abs(alpha) ** 2 / 2
    phases = np.exp(1j * levels * np.angle(alpha))
    amplitudes = np.exp(log_weights) * phases
    amplitudes = amplitudes / np.linalg.norm(amplitudes)
    occupations = np.zeros((dims[index], len(dims)), dtype=np.int64)
    occupations[:, index] = levels
    return FockState(dims=dims, occupations=occupations, amplitudes=amplitudes.astype(complex))


def _moves(term: FieldTerm):
    """(delta on field, delta on spin) pairs generated by one term"""
    if term.kind is CouplingKind.SQUEEZING:
        return ((1, 1), (-1, -1))
    return ((1, -1), (-1, 1))


def sector_basis(h: HamiltonianSpec, dims: Sequence[int], seeds: Iterable[Sequence[int]]) -> np.ndarray:
    """
    Occupation tuples reachable from `seeds` under h, sorted by basis index.

    Moves that would leave the truncation are dropped, matching the truncated
    Hamiltonian.
    """
    dims = tuple(dims)
    if len(dims) != h.n_modes:
        raise UsageError(f"{len(dims)} truncations given for a {h.n_modes}-mode Hamiltonian")
    active = [(_mode_index(term.mode), _moves(term)) for term in h.terms if term.strength != 0]
    seen = set()
    queue = deque()
    for seed in seeds:
        state = tuple(int(n) for n in seed)
        if state not in seen:
            seen.add(state)
            queue.append(state)
    while queue:
        state = queue.popleft()
        for index, moves in active:
            for d_field, d_spin in moves:
                n_field = state[index] + d_field
                n_spin = state[0] + d_spin
                if not (0 <= n_field < dims[index] and 0 <= n_spin < dims[0]):
                    continue
                neighbour = list(state)
                neighbour[index] = n_field
                neighbour[0] = n_spin
                neighbour = tuple(neighbour)
                if neighbour not in seen:
                    seen.add(neighbour)
                    queue.append(neighbour)
    basis = np.array(sorted(seen), dtype=np.int64).reshape(-1, len(dims))
    order = np.argsort(_keys(basis, dims))
    logger.debug("Sector of %d states for dims %s", len(basis), dims)
    return basis[order]


def _full_basis(dims: Sequence[int]) -> np.ndarray:
    grids = np.indices(tuple(dims)).reshape(len(dims), -1).T
    return grids.astype(np.int64)


def hamiltonian_matrix(h: HamiltonianSpec, dims: Sequence[int],
                       basis: Optional[np.ndarray] = None) -> sparse.csr_matrix:
    """Matrix of h on `basis` (the full product basis when omitted)"""
    dims = tuple(dims)
    if basis is None:
        basis = _full_basis(dims)
    keys = _keys(basis, dims)
    size = len(basis)
    rows, cols, values = [], [], []
    for term in h.terms:
        if term.strength == 0:
            continue
        m = _mode_index(term.mode)
        for d_field, d_spin in _moves(term):
            target = basis.copy()
            target[:, m] += d_field
            target[:, 0] += d_spin
            valid = ((target[:, m] >= 0) & (target[:, m] < dims[m])
                     & (target[:, 0] >= 0) & (target[:, 0] < dims[0]))
            source_index = np.nonzero(valid)[0]
            target_keys = _keys(target[valid], dims)
            position = np.searchsorted(keys, target_keys)
            position = np.minimum(position, size - 1)
            found = keys[position] == target_keys
            # sqrt of the larger occupation on each side, so both directions agree bit for bit
            upper_field = np.maximum(basis[valid, m], target[valid, m])
            upper_spin = np.maximum(basis[valid, 0], target[valid, 0])
            amplitude = term.strength * np.sqrt((upper_field * upper_spin).astype(float))
            rows.append(position[found])
            cols.append(source_index[found])
            values.append(amplitude[found])
    if rows:
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        values = np.concatenate(values).astype(complex)
    else:
        rows = cols = np.zeros(0, dtype=np.int64)
        values = np.zeros(0, dtype=complex)
    return sparse.csr_matrix((values, (rows, cols)), shape=(size, size))


def _rk4(matrix: sparse.csr_matrix, psi: np.ndarray, t: float) -> np.ndarray:
    bound = float(np.max(np.asarray(abs(matrix).sum(axis=1)))) if matrix.nnz else 0.0
    phase = bound * t
    steps = max(1, math.ceil(phase / 2), math.ceil((phase ** 6 / (72 * NORM_TOLERANCE)) ** 0.2))
    dt = t / steps
    logger.debug("RK4 with %d steps (spectral bound %.3g)", steps, bound)

    def rhs(vector):
        return -1j * (matrix @ vector)

    for _ in range(steps):
        k1 = rhs(psi)
        k2 = rhs(psi + 0.5 * dt * k1)
        k3 = rhs(psi + 0.5 * dt * k2)
        k4 = rhs(psi + dt * k3)
        psi = psi + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return psi


def _check_edges(state: FockState, threshold: float):
    for index, population in state.edge_populations().items():
        label = _mode_label(index)
        if population > threshold:
            raise TruncationOverflowError(label, population, threshold)
        if population > threshold / 10:
            logger.warning("Edge population %.3e in %s is close to the threshold", population, label)


def fock_evolve(h: HamiltonianSpec, dims: Sequence[int], initial: FockState, t: float,
                edge_threshold: float = EDGE_THRESHOLD) -> FockState:
    """exp(-iHt)|initial> on the sector reachable from the initial support"""
    dims = tuple(int(d) for d in dims)
    if dims != initial.dims:
        raise UsageError(f"Truncation {dims} does not match the state's {initial.dims}")
    if any(d < 2 for d in dims):
        raise DomainError(f"Every mode needs at least 2 levels, got {dims}")
    if t < 0:
        raise DomainError(f"Time must be non-negative, got {t}")
    if t == 0 or h.is_trivial:
        return initial

    basis = sector_basis(h, dims, initial.occupations)
    keys = _keys(basis, dims)
    psi = np.zeros(len(basis), dtype=complex)
    np.add.at(psi, np.searchsorted(keys, initial.keys()), initial.amplitudes)
    matrix = hamiltonian_matrix(h, dims, basis)

    if len(basis) <= EXACT_DIAGONALIZATION_LIMIT:
        energies, vectors = linalg.eigh(matrix.toarray())
        psi = vectors @ (np.exp(-1j * energies * t) * (vectors.conj().T @ psi))
    else:
        psi = _rk4(matrix, psi, t)

    norm = float(np.linalg.norm(psi))
    drift = abs(norm - 1.0)
    if drift > NORM_TOLERANCE:
        logger.warning("Norm drift %.3e over t = %g exceeds %.0e", drift, t, NORM_TOLERANCE)
    else:
        logger.debug("Norm drift %.3e over t = %g", drift, t)
    state = FockState(dims=dims, occupations=basis, amplitudes=psi / norm, norm_drift=drift)
    _check_edges(state, edge_threshold)
    return state


def heisenberg_transform(h: HamiltonianSpec, t: float) -> BogoliubovTransform:
    """
    Untruncated Bogoliubov transform of h over time t, from the matrix
    exponential of the Heisenberg equations da/dt = -i (G a + F a^+).

    Reference for Hamiltonians without a closed form (relabelled or extra fields).
    """
    if t < 0:
        raise DomainError(f"Time must be non-negative, got {t}")
    n = h.n_modes
    exchange = np.zeros((n, n))
    pairing = np.zeros((n, n))
    for term in h.terms:
        m = _mode_index(term.mode)
        target = pairing if term.kind is CouplingKind.SQUEEZING else exchange
        target[0, m] += term.strength
        target[m, 0] += term.strength
    generator = np.block([[exchange, pairing], [-pairing, -exchange]])
    matrix = linalg.expm(-1j * t * generator)
    return BogoliubovTransform(n_modes=n, matrix=matrix, time=float(t))


def vacuum_moments(n_modes: int) -> MomentTable:
    zeros = np.zeros((n_modes, n_modes), dtype=complex)
    return MomentTable(n_modes=n_modes, mean=np.zeros(n_modes, dtype=complex), cov_nn=zeros, cov_aa=zeros.copy())


def _lower(state: FockState, index: int) -> Tuple[np.ndarray, np.ndarray]:
    occupied = state.occupations[:, index] > 0
    occupations = state.occupations[occupied].copy()
    amplitudes = state.amplitudes[occupied] * np.sqrt(occupations[:, index].astype(float))
    occupations[:, index] -= 1
    return occupations, amplitudes


def _raise(state: FockState, index: int) -> Tuple[np.ndarray, np.ndarray]:
    room = state.occupations[:, index] < state.dims[index] - 1
    occupations = state.occupations[room].copy()
    amplitudes = state.amplitudes[room] * np.sqrt(occupations[:, index] + 1.0)
    occupations[:, index] += 1
    return occupations, amplitudes


def _overlap(bra, ket, dims) -> complex:
    """<bra|ket> for sparse (occupations, amplitudes) pairs with unique rows"""
    bra_keys = _keys(bra[0], dims)
    ket_keys = _keys(ket[0], dims)
    if len(bra_keys) == 0 or len(ket_keys) == 0:
        return 0j
    order = np.argsort(bra_keys)
    bra_keys = bra_keys[order]
    bra_amplitudes = bra[1][order]
    position = np.minimum(np.searchsorted(bra_keys, ket_keys), len(bra_keys) - 1)
    found = bra_keys[position] == ket_keys
    return complex(np.sum(np.conj(bra_amplitudes[position[found]]) * ket[1][found]))


def exact_moments(state: FockState) -> MomentTable:
    """Means and centered second moments over the truncated basis"""
    n = state.n_modes
    own = (state.occupations, state.amplitudes)
    lowered = [_lower(state, i) for i in range(n)]
    raised = [_raise(state, i) for i in range(n)]

    mean = np.array([_overlap(own, lowered[i], state.dims) for i in range(n)])
    normal = np.zeros((n, n), dtype=complex)
    pair = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            # <a_i^+ a_j> = <a_i psi|a_j psi>, <a_i a_j> = <a_i^+ psi|a_j psi>
            normal[i, j] = _overlap(lowered[i], lowered[j], state.dims)
            pair[i, j] = _overlap(raised[i], lowered[j], state.dims)

    cov_nn = normal - np.outer(np.conj(mean), mean)
    cov_aa = pair - np.outer(mean, mean)
    return MomentTable(
        n_modes=n,
        mean=mean,
        cov_nn=(cov_nn + cov_nn.conj().T) / 2,
        cov_aa=(cov_aa + cov_aa.T) / 2,
    )


@dataclass(frozen=True)
class SpinMoments:
    n_atoms: int
    mean: float
    s_squared: float
    s_dag_s: float
    s_s_dag: float

    @property
    def s_dag_s_centered(self) -> float:
        return self.s_dag_s - self.mean ** 2

    @property
    def s_squared_centered(self) -> float:
        return self.s_squared - self.mean ** 2


def _flip(psi: np.ndarray, atom: int, source: int, target: int) -> np.ndarray:
    out = np.zeros_like(psi)
    into = [slice(None)] * psi.ndim
    into[atom] = target
    out_of = [slice(None)] * psi.ndim
    out_of[atom] = source
    out[tuple(into)] = psi[tuple(out_of)]
    return out


def spin_moments_bruteforce(n_atoms: int) -> SpinMoments:
    """
    Exact moments of S = N^-1/2 sum_i |1><2|_i on the product of N atoms in
    (|1> + |2>)/sqrt(2); axis value 0 is |1>, 1 is |2>.
    """
    if not 2 <= n_atoms <= MAX_BRUTEFORCE_ATOMS:
        raise DomainError(f"n_atoms must be in [2, {MAX_BRUTEFORCE_ATOMS}], got {n_atoms}")
    psi = np.full((2,) * n_atoms, 2.0 ** (-n_atoms / 2))
    scale = 1 / math.sqrt(n_atoms)
    lowered = scale * sum(_flip(psi, atom, 1, 0) for atom in range(n_atoms))
    raised = scale * sum(_flip(psi, atom, 0, 1) for atom in range(n_atoms))
    lowered_twice = scale * sum(_flip(lowered, atom, 1, 0) for atom in range(n_atoms))
    return SpinMoments(
        n_atoms=n_atoms,
        mean=float(np.vdot(psi, lowered).real),
        s_squared=float(np.vdot(psi, lowered_twice).real),
        s_dag_s=float(np.vdot(lowered, lowered).real),
        s_s_dag=float(np.vdot(raised, raised).real),
    )


def _table_discrepancy(first: MomentTable, second: MomentTable) -> float:
    return float(max(
        np.max(np.abs(first.mean - second.mean)),
        np.max(np.abs(first.cov_nn - second.cov_nn)),
        np.max(np.abs(first.cov_aa - second.cov_aa)),
    ))


def closed_form_vs_exact(params: CouplingParams, t: float, quanta: int = EQUIVALENCE_QUANTA,
                         edge_threshold: float = EDGE_THRESHOLD) -> float:
    """Largest moment difference between the closed form and the Fock evolution from vacuum"""
    if params.c != 0:
        raise UsageError("The closed form solves the exact Hamiltonian only at c = 0")
    n = params.n_modes
    dims = (quanta + 1,) * n
    closed = evolve_moments(bogoliubov(params, t), initial_moments(SpinConvention.BOSONIC_VACUUM, n))
    state = fock_evolve(HamiltonianSpec.from_params(params), dims, vacuum(dims), t, edge_threshold)
    discrepancy = _table_discrepancy(closed, exact_moments(state))
    logger.info("Closed form vs Fock for %s at t = %g: %.3e", params.as_dict(), t, discrepancy)
    return discrepancy


@dataclass(frozen=True)
class SqueezingLimitReport:
    r: float
    expected_v: float
    closed_form_v: float
    exact_v: float
    expected_photons: float
    closed_form_photons: float
    exact_photons: float
    s_dag_coefficient: complex
    details: Dict[str, float] = field(default_factory=dict)

    def worst_error(self) -> float:
        expected_coefficient = -1j * math.sinh(self.r)
        return max(
            abs(self.closed_form_v - self.expected_v),
            abs(self.exact_v - self.expected_v),
            abs(self.closed_form_photons - self.expected_photons),
            abs(self.exact_photons - self.expected_photons),
            abs(self.s_dag_coefficient - expected_coefficient),
        )


def squeezing_limit_check(r: float, quanta: int = EQUIVALENCE_QUANTA,
                          edge_threshold: float = EDGE_THRESHOLD) -> SqueezingLimitReport:
    """
    Pure two-mode squeezing (k2 = 0, c = 0, k1 t = r) done both ways.

    The closed form gives a1(t) = cosh(r) a1 - i sinh(r) S^+, so the squeezed
    pair is (a1, iS): the Duan sum on (Field1, Spin) with the spin quadratures
    rotated by -pi/2 and sign -1 equals 4 e^{-2r}.
    """
    if r < 0:
        raise DomainError(f"Squeezing parameter must be non-negative, got {r}")
    params = CouplingParams(k1=1.0, k2=0.0, c=0.0)
    pair = (ModeId.FIELD1, ModeId.SPIN)
    transform = bogoliubov(params, r)
    closed = evolve_moments(transform, initial_moments(SpinConvention.BOSONIC_VACUUM, 3))
    dims = (quanta + 1,) * 3
    exact = exact_moments(
        fock_evolve(HamiltonianSpec.from_params(params), dims, vacuum(dims), r, edge_threshold))
    field1 = ModeId.FIELD1.index
    return SqueezingLimitReport(
        r=r,
        expected_v=4 * math.exp(-2 * r),
        closed_form_v=duan_v(closed, pair, sign=-1, theta=-math.pi / 2),
        exact_v=duan_v(exact, pair, sign=-1, theta=-math.pi / 2),
        expected_photons=math.sinh(r) ** 2,
        closed_form_photons=float(closed.cov_nn[field1, field1].real),
        exact_photons=float(exact.cov_nn[field1, field1].real),
        s_dag_coefficient=transform.coefficient(ModeId.FIELD1, ModeId.SPIN, dagger=True),
        details={'anti_squeezed_v': duan_v(closed, pair, sign=1, theta=-math.pi / 2)},
    )
