"""Pauli-string observables, Hamiltonian builders and the dense oracle."""

from __future__ import annotations

import csv
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import cached_property, reduce
from importlib import resources
from pathlib import Path

import numpy as np

from .core import PAULI, DensityState, State, StateVector, born_probabilities

MAX_DIAGONALIZE_QUBITS = 12
DEGENERACY_ATOL = 1e-9


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    factors: str

    def __post_init__(self):
        if isinstance(self.coefficient, complex):
            if abs(self.coefficient.imag) > 1e-15:
                raise ValueError("Pauli coefficients must be real")
            object.__setattr__(self, "coefficient", self.coefficient.real)
        object.__setattr__(self, "coefficient", float(self.coefficient))
        if not self.factors or set(self.factors) - set("IXYZ"):
            raise ValueError(f"invalid Pauli string {self.factors!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.factors)

    @property
    def is_identity(self) -> bool:
        return set(self.factors) == {"I"}

    def matrix(self) -> np.ndarray:
        return self.coefficient * reduce(np.kron, (PAULI[c] for c in self.factors))


@dataclass(frozen=True, eq=False)
class Observable:
    """A real-weighted sum of Pauli strings, kept in canonical form
    (duplicates merged, zero terms dropped, sorted by string)."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()

    def __post_init__(self):
        merged: dict[str, float] = {}
        for term in self.terms:
            if term.n_qubits != self.n_qubits:
                raise ValueError(f"term {term.factors!r} does not act on {self.n_qubits} qubits")
            merged[term.factors] = merged.get(term.factors, 0.0) + term.coefficient
        canon = tuple(PauliTerm(c, s) for s, c in sorted(merged.items()) if c != 0.0)
        object.__setattr__(self, "terms", canon)

    @classmethod
    def from_dict(cls, terms: Mapping[str, float], n_qubits: int | None = None) -> Observable:
        if n_qubits is None:
            if not terms:
                raise ValueError("n_qubits is required for an empty observable")
            n_qubits = len(next(iter(terms)))
        return cls(n_qubits, tuple(PauliTerm(c, s) for s, c in terms.items()))

    @classmethod
    def single(cls, factors: str, coefficient: float = 1.0) -> Observable:
        return cls(len(factors), (PauliTerm(coefficient, factors),))

    @classmethod
    def pauli_on(cls, letter: str, qubit: int, n_qubits: int, coefficient: float = 1.0) -> Observable:
        factors = ["I"] * n_qubits
        factors[qubit] = letter
        return cls.single("".join(factors), coefficient)

    @classmethod
    def identity(cls, n_qubits: int, coefficient: float = 1.0) -> Observable:
        return cls.single("I" * n_qubits, coefficient)

    def to_dict(self) -> dict[str, float]:
        return {t.factors: t.coefficient for t in self.terms}

    def __eq__(self, other) -> bool:
        if not isinstance(other, Observable):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self.to_dict() == other.to_dict()

    def __hash__(self) -> int:
        return hash((self.n_qubits, tuple(self.to_dict().items())))

    def __add__(self, other: Observable) -> Observable:
        if other.n_qubits != self.n_qubits:
            raise ValueError("observables act on different qubit counts")
        return Observable(self.n_qubits, self.terms + other.terms)

    def __mul__(self, scalar: float) -> Observable:
        return Observable(self.n_qubits, tuple(PauliTerm(scalar * t.coefficient, t.factors) for t in self.terms))

    __rmul__ = __mul__

    def __sub__(self, other: Observable) -> Observable:
        return self + (-1.0) * other

    def tensor_identity(self, extra: int) -> Observable:
        """self (x) I^extra, extra qubits appended after the existing ones."""
        return Observable(self.n_qubits + extra,
                          tuple(PauliTerm(t.coefficient, t.factors + "I" * extra) for t in self.terms))

    @cached_property
    def matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for term in self.terms:
            out += term.matrix()
        out.setflags(write=False)
        return out

    def __repr__(self) -> str:
        body = " + ".join(f"{t.coefficient:g}*{t.factors}" for t in self.terms) or "0"
        return f"Observable({body})"


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns

    def vector(self, j: int) -> StateVector:
        return StateVector(self.eigenvectors[:, j])

    def projector(self, levels: int) -> np.ndarray:
        v = self.eigenvectors[:, :levels]
        return v @ v.conj().T


def _check_dims(obs: Observable, state: State) -> None:
    if obs.n_qubits != state.n_qubits:
        raise ValueError(f"observable acts on {obs.n_qubits} qubits, state has {state.n_qubits}")


def expectation(obs: Observable, state: State) -> float:
    """<psi|O|psi> (or Tr(rho O))."""
    _check_dims(obs, state)
    if isinstance(state, DensityState):
        value = np.trace(state.matrix @ obs.matrix)
    else:
        psi = state.amplitudes
        value = np.vdot(psi, obs.matrix @ psi)
    return float(np.real(value))


def parity_expectation(probabilities: np.ndarray, factors: str) -> float:
    """Expectation of the Z-parity over the non-identity positions of ``factors``."""
    n = len(factors)
    mask = sum(1 << (n - 1 - q) for q, c in enumerate(factors) if c != "I")
    signs = np.array([1 - 2 * (bin(i & mask).count("1") % 2) for i in range(2**n)])
    return float(signs @ probabilities)


def sampled_expectation(obs: Observable, state: State, shots: int, seed: int | np.random.Generator
                        ) -> tuple[float, float]:
    """Shot-based estimate of <O> and its standard error.

    Every non-identity term gets its own ``shots`` measurements in the basis
    its letters define; each term contributes a binomial variance
    (1 - m^2)/shots, with m the observed parity mean.
    """
    _check_dims(obs, state)
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    mean, var = 0.0, 0.0
    for term in obs.terms:
        if term.is_identity:
            mean += term.coefficient
            continue
        probs = born_probabilities(state, term.factors)
        p_plus = parity_probability(probs, term.factors)
        k = rng.binomial(shots, p_plus)
        m = 2 * k / shots - 1
        mean += term.coefficient * m
        var += term.coefficient**2 * (1 - m * m) / shots
    return mean, math.sqrt(var)


def estimate_from_counts(obs: Observable, counts: Mapping[str, int], basis: str) -> float:
    """<O> from one histogram taken in ``basis``; every term must be
    measurable there (each letter is I or the basis letter at that qubit)."""
    if len(basis) != obs.n_qubits:
        raise ValueError(f"basis {basis!r} does not match {obs.n_qubits} qubits")
    shots = sum(counts.values())
    if shots < 1:
        raise ValueError("empty histogram")
    total = 0.0
    for term in obs.terms:
        if any(c not in ("I", b) for c, b in zip(term.factors, basis)):
            raise ValueError(f"term {term.factors} is not diagonal in basis {basis}")
        positions = [q for q, c in enumerate(term.factors) if c != "I"]
        parity = sum(n * (-1) ** sum(bits[q] == "1" for q in positions) for bits, n in counts.items())
        total += term.coefficient * parity / shots
    return total


def parity_probability(probabilities: np.ndarray, factors: str) -> float:
    return float(np.clip((1 + parity_expectation(probabilities, factors)) / 2, 0.0, 1.0))


def diagonalize(obs: Observable) -> SpectrumResult:
    """Full dense spectrum, eigenvalues ascending.

    Each eigenvector is phased so its first largest-magnitude entry is real
    positive. Inside a degenerate eigenspace the basis is rebuilt by
    Gram-Schmidt on the projected computational basis vectors, taken in index
    order, which makes the result independent of LAPACK's choice.
    """
    if obs.n_qubits > MAX_DIAGONALIZE_QUBITS:
        raise ValueError(f"dense diagonalisation capped at {MAX_DIAGONALIZE_QUBITS} qubits")
    values, vectors = np.linalg.eigh(obs.matrix)
    out = vectors.copy()
    start = 0
    while start < len(values):
        stop = start + 1
        while stop < len(values) and values[stop] - values[start] < DEGENERACY_ATOL:
            stop += 1
        if stop - start > 1:
            out[:, start:stop] = _canonical_basis(vectors[:, start:stop])
        start = stop
    for j in range(out.shape[1]):
        v = out[:, j]
        k = int(np.argmax(np.abs(v) > np.abs(v).max() - 1e-9))
        out[:, j] = v * (abs(v[k]) / v[k])
    return SpectrumResult(values, out)


def _canonical_basis(block: np.ndarray) -> np.ndarray:
    proj = block @ block.conj().T
    basis: list[np.ndarray] = []
    for i in range(proj.shape[0]):
        v = proj[:, i].copy()
        for b in basis:
            v -= np.vdot(b, v) * b
        norm = np.linalg.norm(v)
        if norm > 1e-6:
            basis.append(v / norm)
        if len(basis) == block.shape[1]:
            break
    return np.column_stack(basis)


def build_rabi_hamiltonian(omega: float) -> Observable:
    return Observable(1, (PauliTerm(omega, "X"),))


H2_TERMS = ("II", "ZI", "IZ", "XX", "YY", "ZZ")


def build_h2_hamiltonian(coeffs: Sequence[float]) -> Observable:
    """c0 I + c1 Z0 + c2 Z1 + c3 X0X1 + c4 Y0Y1 + c5 Z0Z1."""
    coeffs = list(coeffs)
    if len(coeffs) != 6:
        raise ValueError(f"expected 6 coefficients c0..c5, got {len(coeffs)}")
    return Observable(2, tuple(PauliTerm(c, s) for c, s in zip(coeffs, H2_TERMS)))


def occupancy_observable(qubit: int, n_qubits: int = 2) -> Observable:
    """n = (I - Z_qubit) / 2."""
    return 0.5 * (Observable.identity(n_qubits) - Observable.pauli_on("Z", qubit, n_qubits))


def occupancies(state: State) -> tuple[float, float]:
    """(n_coupled, n_anticoupled) = ((1 - <Z0>)/2, (1 - <Z1>)/2)."""
    if state.n_qubits != 2:
        raise ValueError(f"occupancies need a 2-qubit state, got {state.n_qubits}")
    return (expectation(occupancy_observable(0), state), expectation(occupancy_observable(1), state))


# -- H2 coefficient table ---------------------------------------------------

@dataclass(frozen=True)
class H2Record:
    distance: float
    coeffs: tuple[float, ...]
    source: str


H2_TABLE_COLUMNS = ["distance_angstrom", "c0", "c1", "c2", "c3", "c4", "c5", "source_note"]


def default_h2_table_path() -> Path:
    return Path(str(resources.files("svqsim") / "data" / "h2_sto3g.csv"))


def load_h2_table(path: str | Path | None = None) -> list[H2Record]:
    """Read the bond-distance -> (c0..c5) table. Lines starting with '#' are comments."""
    path = Path(path) if path is not None else default_h2_table_path()
    with path.open(newline="") as fh:
        rows = [line for line in fh if line.strip() and not line.lstrip().startswith("#")]
    reader = csv.reader(rows)
    header = next(reader, None)
    if header != H2_TABLE_COLUMNS:
        raise ValueError(f"{path}: header must be {','.join(H2_TABLE_COLUMNS)}")
    records = []
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(H2_TABLE_COLUMNS):
            raise ValueError(f"{path}: record {lineno} has {len(row)} fields, expected {len(H2_TABLE_COLUMNS)}")
        try:
            numbers = [float(x) for x in row[:7]]
        except ValueError as exc:
            raise ValueError(f"{path}: record {lineno}: {exc}") from None
        if not all(math.isfinite(x) for x in numbers):
            raise ValueError(f"{path}: record {lineno} contains a non-finite value")
        records.append(H2Record(numbers[0], tuple(numbers[1:]), row[7]))
    return sorted(records, key=lambda r: r.distance)


def h2_coefficients(distance: float, table: Iterable[H2Record] | None = None, atol: float = 1e-9) -> tuple[float, ...]:
    table = load_h2_table() if table is None else table
    for rec in table:
        if abs(rec.distance - distance) <= atol:
            return rec.coeffs
    raise KeyError(f"no H2 coefficient record for {distance} angstrom")
