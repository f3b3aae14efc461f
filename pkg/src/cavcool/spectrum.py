"""Closed-form eigensystem of the undriven Hamiltonian up to one excitation,
and its check against numerical diagonalization."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import BasisLabel, HilbertSpace, build_space
from .model import SystemParams, h_nl

L = BasisLabel.parse

GROUND_NAMES = ("g00", "T00", "S00", "g11")
EXCITED_NAMES = tuple(f"phi{k}" for k in range(1, 13))
# exact degeneracies are matched as subspaces below this splitting (units of g)
DEGENERACY_TOL = 1e-8


class SpectrumMismatch(AssertionError):
    """An analytic eigenpair is not an eigenpair of the numerical Hamiltonian."""


@dataclass(frozen=True)
class EigenPair:
    name: str
    energy: float
    amplitudes: dict[BasisLabel, float]

    def vector(self, space: HilbertSpace) -> np.ndarray:
        return space.embed(self.amplitudes)


@dataclass(frozen=True)
class AnalyticSpectrum:
    pairs: tuple[EigenPair, ...]
    constants: dict[str, float]
    params: SystemParams
    notes: tuple[str, ...] = ()

    def __getitem__(self, name: str) -> EigenPair:
        for pair in self.pairs:
            if pair.name == name:
                return pair
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.pairs)

    def vector(self, name: str, space: HilbertSpace) -> np.ndarray:
        return self[name].vector(space)

    def energy(self, name: str) -> float:
        return self[name].energy

    def matrix(self, space: HilbertSpace) -> np.ndarray:
        """Columns are the analytic eigenvectors, in ``pairs`` order."""
        return np.column_stack([p.vector(space) for p in self.pairs])


def normalizations(g: float, J: float) -> dict[str, float]:
    r2 = J**2 + g**2
    s = math.sqrt(J**2 + 4 * g**2)
    return {
        "N_a": math.sqrt(2 * r2) / g,
        "N_b": math.sqrt(r2) / J if J > 0 else math.inf,
        "N_c": 1 / math.sqrt(2),
        "N_d": math.sqrt((J**2 + 4 * g**2 - J * s) / g**2),
        "N_e": math.sqrt((J**2 + 4 * g**2 + J * s) / g**2),
    }


def _normed(amps: dict[str, float]) -> dict[BasisLabel, float]:
    norm = math.sqrt(sum(a * a for a in amps.values()))
    return {L(k): a / norm for k, a in amps.items()}


def analytic_spectrum(params: SystemParams) -> AnalyticSpectrum:
    """All sixteen closed-form eigenpairs (four ground, twelve one-excitation).

    The hopping-dark pair phi5/phi6 is written as ``(J|20,00> - g|10,01>)/r``,
    which equals the 1/N_b form for J > 0 and stays finite at J = 0.
    """
    g, J, w1, w2 = params.g, params.J, params.w1, params.w2
    if g <= 0:
        raise ValueError("analytic spectrum needs g > 0")
    r = math.sqrt(J**2 + g**2)
    s = math.sqrt(J**2 + 4 * g**2)
    c_minus = (J - s) / (2 * g)
    c_plus = (J + s) / (2 * g)
    h = 1 / math.sqrt(2)

    pairs = [
        EigenPair("g00", 0.0, {L("00,00"): 1.0}),
        EigenPair("T00", w1, {L("01,00"): h, L("10,00"): h}),
        EigenPair("S00", w1, {L("01,00"): h, L("10,00"): -h}),
        EigenPair("g11", 2 * w1, {L("11,00"): 1.0}),
        EigenPair("phi1", w2 + r, _normed({"10,10": r / g, "10,01": J / g, "20,00": 1.0})),
        EigenPair("phi2", w2 + r, _normed({"01,10": J / g, "01,01": r / g, "02,00": 1.0})),
        EigenPair("phi3", w2 - r, _normed({"10,01": J / g, "10,10": -r / g, "20,00": 1.0})),
        EigenPair("phi4", w2 - r, _normed({"01,10": J / g, "01,01": -r / g, "02,00": 1.0})),
        EigenPair("phi5", w2, _normed({"10,01": -g, "20,00": J})),
        EigenPair("phi6", w2, _normed({"01,10": -g, "02,00": J})),
        EigenPair("phi7", w2 - w1 - J, _normed({"00,10": 1.0, "00,01": -1.0})),
        EigenPair("phi8", w2 - w1 + J, _normed({"00,10": 1.0, "00,01": 1.0})),
        EigenPair(
            "phi9",
            w1 + w2 - J / 2 + s / 2,
            _normed({"11,10": c_minus, "11,01": -c_minus, "21,00": -1.0, "12,00": 1.0}),
        ),
        EigenPair(
            "phi10",
            w1 + w2 - J / 2 - s / 2,
            _normed({"11,10": c_plus, "11,01": -c_plus, "21,00": -1.0, "12,00": 1.0}),
        ),
        EigenPair(
            "phi11",
            w1 + w2 + J / 2 - s / 2,
            _normed({"11,10": c_minus, "11,01": c_minus, "21,00": 1.0, "12,00": 1.0}),
        ),
        EigenPair(
            "phi12",
            w1 + w2 + J / 2 + s / 2,
            _normed({"11,10": c_plus, "11,01": c_plus, "21,00": 1.0, "12,00": 1.0}),
        ),
    ]
    notes = ()
    if J == 0:
        notes = ("J=0: phi5, phi6 taken as the finite limit -|10,01>, -|01,10>",)
    return AnalyticSpectrum(tuple(pairs), normalizations(g, J), params, notes)


@dataclass(frozen=True)
class NumericSpectrum:
    energies: np.ndarray
    vectors: np.ndarray  # columns, embedded in ``space``
    space: HilbertSpace
    hamiltonian: np.ndarray  # <=1-excitation block of H_NL, embedded in ``space``

    def __len__(self) -> int:
        return len(self.energies)

    def __iter__(self):
        return iter(zip(self.energies, self.vectors.T))


def numeric_spectrum(space: HilbertSpace, params: SystemParams) -> NumericSpectrum:
    """eigh of H_NL restricted to the zero- and one-excitation sectors."""
    keep = np.flatnonzero(space.n_exc <= 1)
    if len(keep) != 16:
        raise ValueError("space must contain every state with at most one excitation")
    h = h_nl(space, params)
    block = h[np.ix_(keep, keep)]
    energies, vecs = np.linalg.eigh(block)
    full = np.zeros((space.dim, len(keep)), dtype=complex)
    full[keep, :] = vecs
    h_block = np.zeros_like(h)
    h_block[np.ix_(keep, keep)] = block
    return NumericSpectrum(energies, full, space, h_block)


@dataclass
class StateCheck:
    name: str
    energy: float
    nearest_numeric: float
    residual: float
    subspace_residual: float
    degeneracy: int
    rayleigh: float
    passed: bool


@dataclass
class SpectrumReport:
    checks: list[StateCheck]
    tol: float
    pairing_corrections: list[tuple[str, float, float]] = field(default_factory=list)

    @property
    def max_residual(self) -> float:
        return max(max(c.residual, c.subspace_residual) for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    @property
    def ok(self) -> bool:
        return not self.failures

    def check(self) -> SpectrumReport:
        if self.failures:
            raise SpectrumMismatch(f"analytic eigenpairs failed verification: {', '.join(self.failures)}")
        return self


def verify_spectrum(analytic: AnalyticSpectrum, numeric: NumericSpectrum, tol: float = 1e-10) -> SpectrumReport:
    """Check each analytic pair against the numerical eigensystem.

    A pair passes when some numerical eigenvalue lies within ``tol`` of the
    analytic energy, ``||H v - lambda v|| <= tol``, and ``v`` lies in the
    numerical eigenspace of that energy (degenerate levels are compared as
    subspaces).
    """
    space = numeric.space
    h = numeric.hamiltonian
    checks, corrections = [], []
    for pair in analytic.pairs:
        v = pair.vector(space)
        gaps = np.abs(numeric.energies - pair.energy)
        nearest = float(numeric.energies[np.argmin(gaps)])
        eigenspace = numeric.vectors[:, np.abs(numeric.energies - nearest) < DEGENERACY_TOL]
        projected = eigenspace @ (eigenspace.conj().T @ v)
        residual = float(np.linalg.norm(h @ v - pair.energy * v))
        sub_res = float(np.linalg.norm(v - projected))
        rayleigh = float(np.real(v.conj() @ h @ v))
        passed = gaps.min() <= tol and residual <= tol and sub_res <= tol
        if abs(rayleigh - pair.energy) > tol:
            corrections.append((pair.name, pair.energy, rayleigh))
        checks.append(
            StateCheck(pair.name, pair.energy, nearest, residual, sub_res, eigenspace.shape[1], rayleigh, passed)
        )
    return SpectrumReport(checks, tol, corrections)


def spectrum_check(params: SystemParams, tol: float = 1e-10, space: HilbertSpace | None = None) -> SpectrumReport:
    space = space or build_space(1, 1)
    return verify_spectrum(analytic_spectrum(params), numeric_spectrum(space, params), tol)


def orthonormality_defect(analytic: AnalyticSpectrum) -> float:
    m = analytic.matrix(build_space(1, 1))
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))))
