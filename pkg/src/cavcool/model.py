"""Hamiltonians for two driven Lambda atoms in two coupled cavities.

Units: hbar = 1 and every energy, rate and frequency is given in units of
the atom-cavity coupling ``g``. The cavity frequency is fixed to the
|1> <-> |2> transition, ``wa = w2 - w1``.

Drive convention: laser ``m`` contributes ``Omega_m exp(+i wL_m t)`` to the
lowering part ``|0><2|`` (or ``|1><2|`` for laser 3) plus its Hermitian
conjugate. With this sign the default laser frequencies bring the
|00,00>, |S,00> and |11,00> transitions exactly onto resonance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .hilbert import HilbertSpace, annihilator, atom_op


class ConfigurationError(ValueError):
    """Raised for physically invalid or incomplete parameter sets."""


class LaserFrequencies(NamedTuple):
    wL1: float
    wL2: float
    wL3: float


@dataclass(frozen=True)
class SystemParams:
    w1: float = 8.0
    w2: float = 18.0
    J: float = 1.1
    kappa: float = 0.1
    gamma: float = 0.2
    omega: tuple[float, float, float] = (0.03, 0.03, 0.03)
    laser_freqs: LaserFrequencies | None = None
    g: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", tuple(float(x) for x in self.omega))
        if len(self.omega) != 3:
            raise ConfigurationError("omega must hold three Rabi frequencies")
        if self.laser_freqs is not None:
            object.__setattr__(self, "laser_freqs", LaserFrequencies(*map(float, self.laser_freqs)))
        for name in ("J", "kappa", "gamma", "g"):
            if not getattr(self, name) >= 0:
                raise ConfigurationError(f"{name} must be >= 0, got {getattr(self, name)}")
        if any(not w >= 0 for w in self.omega):
            raise ConfigurationError(f"Rabi frequencies must be >= 0, got {self.omega}")
        if not (self.w2 > self.w1 > 0):
            raise ConfigurationError(f"need w2 > w1 > 0, got w1={self.w1}, w2={self.w2}")

    @property
    def wa(self) -> float:
        return self.w2 - self.w1

    @property
    def lasers(self) -> LaserFrequencies:
        """Explicit laser frequencies, or the resonant defaults."""
        return self.laser_freqs if self.laser_freqs is not None else default_laser_frequencies(self)

    def replace(self, **changes) -> SystemParams:
        return replace(self, **changes)


def default_laser_frequencies(params: SystemParams) -> LaserFrequencies:
    """Laser frequencies that resonantly pump every ground state except |T,00>."""
    g, J = params.g, params.J
    r = math.sqrt(J**2 + g**2)
    s = math.sqrt(J**2 + 4 * g**2)
    return LaserFrequencies(
        params.w2 - r,
        params.w2 - J / 2 + s / 2,
        params.w2 - params.w1 + J / 2 - s / 2,
    )


def bare_energies(space: HilbertSpace, params: SystemParams) -> np.ndarray:
    """Diagonal of H_0 = sum_i w_i |i><i| + wa sum_j a_j^dag a_j (w0 = 0)."""
    level = np.array([0.0, params.w1, params.w2])
    return np.array(
        [level[lab.atom1] + level[lab.atom2] + params.wa * (lab.photons1 + lab.photons2) for lab in space.labels]
    )


def coupling_terms(space: HilbertSpace, params: SystemParams) -> np.ndarray:
    """Hopping J(a1^dag a2 + h.c.) plus resonant g(|2><1| a_j + h.c.)."""
    a1, a2 = annihilator(space, 1), annihilator(space, 2)
    hop = params.J * (a1.conj().T @ a2)
    jc = sum(params.g * (atom_op(space, j, 2, 1) @ a) for j, a in ((1, a1), (2, a2)))
    h = hop + jc
    return h + h.conj().T


def h_nl(space: HilbertSpace, params: SystemParams) -> np.ndarray:
    """Undriven Hamiltonian: bare energies, photon hopping and atom-cavity coupling."""
    return np.diag(bare_energies(space, params)).astype(complex) + coupling_terms(space, params)


def drive_lowering_ops(space: HilbertSpace) -> tuple[np.ndarray, np.ndarray]:
    """(sum_j |0><2|_j, sum_j |1><2|_j): the lowering halves of the drives."""
    s02 = atom_op(space, 1, 0, 2) + atom_op(space, 2, 0, 2)
    s12 = atom_op(space, 1, 1, 2) + atom_op(space, 2, 1, 2)
    return s02, s12


@dataclass(frozen=True)
class DriveTerms:
    """H(t) = static + sum_k (c_k exp(i nu_k t) V_k + h.c.)."""

    static: np.ndarray
    amplitudes: tuple[float, ...]
    frequencies: tuple[float, ...]
    lowering: tuple[np.ndarray, ...]
    _stack: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        stack = np.array([c * v for c, v in zip(self.amplitudes, self.lowering)])
        object.__setattr__(self, "_stack", stack.reshape(len(self.amplitudes), *self.static.shape))

    def __call__(self, t: float) -> np.ndarray:
        phases = np.exp(1j * np.asarray(self.frequencies) * t)
        drive = np.tensordot(phases, self._stack, axes=1)
        return self.static + drive + drive.conj().T


def _drive(space, params, static, frequencies) -> DriveTerms:
    s02, s12 = drive_lowering_ops(space)
    o1, o2, o3 = params.omega
    return DriveTerms(static, (o1, o2, o3), tuple(frequencies), (s02, s02, s12))


def lab_hamiltonian(space: HilbertSpace, params: SystemParams) -> DriveTerms:
    """Callable t -> H_NL + H_AL(t) in the laboratory frame."""
    wl = params.lasers
    return _drive(space, params, h_nl(space, params), wl)


def rotating_hamiltonian(space: HilbertSpace, params: SystemParams) -> DriveTerms:
    """Callable t -> H(t) in the frame rotating with the bare energies.

    Coupling and hopping are time independent there; laser phases oscillate at
    wL - w2 (lasers 1, 2) and wL3 + w1 - w2 (laser 3), all of order g.
    """
    wl = params.lasers
    freqs = (wl.wL1 - params.w2, wl.wL2 - params.w2, wl.wL3 + params.w1 - params.w2)
    return _drive(space, params, coupling_terms(space, params), freqs)


def h_al_lab(space: HilbertSpace, params: SystemParams, t: float) -> np.ndarray:
    wl = params.lasers
    h = _drive(space, params, np.zeros((space.dim, space.dim), dtype=complex), wl)
    return h(t)


def h_rotating(space: HilbertSpace, params: SystemParams, t: float) -> np.ndarray:
    return rotating_hamiltonian(space, params)(t)


def frame_unitary(space: HilbertSpace, params: SystemParams, t: float) -> np.ndarray:
    """Diagonal of U_0(t) = exp(-i H_0 t); lab state = U_0 rho_rot U_0^dag."""
    return np.exp(-1j * bare_energies(space, params) * t)


@dataclass(frozen=True)
class WeakExcitationReport:
    ratio_hopping: float
    ratio_dressed: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.ratio_hopping >= self.threshold and self.ratio_dressed >= self.threshold


def weak_excitation_check(params: SystemParams, threshold: float = 5.0) -> WeakExcitationReport:
    """Compare w1 against the two dressed-state scales it must dominate."""
    g, J = params.g, params.J
    r = math.sqrt(J**2 + g**2)
    s = math.sqrt(J**2 + 4 * g**2)
    return WeakExcitationReport(params.w1 / (J + r), params.w1 / (J / 2 + s / 2 + r), threshold)
