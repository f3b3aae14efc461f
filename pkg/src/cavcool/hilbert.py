"""Truncated basis of two three-level atoms and two cavity modes.

Basis kets are written ``|AB,CD>``: atom 1 in level A, atom 2 in level B,
C photons in cavity 1 and D photons in cavity 2. Operators are dense
complex ``numpy`` arrays indexed by :meth:`HilbertSpace.index`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

LEVELS = (0, 1, 2)


@dataclass(frozen=True, order=True)
class BasisLabel:
    atom1: int
    atom2: int
    photons1: int
    photons2: int

    @property
    def n_exc(self) -> int:
        return self.photons1 + self.photons2 + (self.atom1 == 2) + (self.atom2 == 2)

    @property
    def atoms(self) -> tuple[int, int]:
        return (self.atom1, self.atom2)

    @property
    def photons(self) -> tuple[int, int]:
        return (self.photons1, self.photons2)

    def with_atom(self, atom: int, level: int) -> BasisLabel:
        if atom == 1:
            return BasisLabel(level, self.atom2, self.photons1, self.photons2)
        return BasisLabel(self.atom1, level, self.photons1, self.photons2)

    def with_photons(self, cavity: int, n: int) -> BasisLabel:
        if cavity == 1:
            return BasisLabel(self.atom1, self.atom2, n, self.photons2)
        return BasisLabel(self.atom1, self.atom2, self.photons1, n)

    def __str__(self) -> str:
        return f"|{self.atom1}{self.atom2},{self.photons1}{self.photons2}⟩"

    @classmethod
    def parse(cls, text: str) -> BasisLabel:
        """Parse ``"01,10"`` or ``"|01,10>"`` style labels."""
        body = text.strip().lstrip("|").rstrip(">⟩")
        atoms, photons = body.split(",")
        if len(atoms) != 2 or len(photons) != 2:
            raise ValueError(f"cannot parse basis label {text!r}")
        return cls(int(atoms[0]), int(atoms[1]), int(photons[0]), int(photons[1]))


def _sort_key(label: BasisLabel):
    return (label.n_exc, label.atom1, label.atom2, label.photons1, label.photons2)


@dataclass(frozen=True)
class HilbertSpace:
    labels: tuple[BasisLabel, ...]
    n_max: int
    e_max: int | None = None
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        index = {lab: i for i, lab in enumerate(self.labels)}
        if len(index) != len(self.labels):
            raise ValueError("duplicate basis labels")
        object.__setattr__(self, "_index", index)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: BasisLabel | str) -> int:
        if isinstance(label, str):
            label = BasisLabel.parse(label)
        return self._index[label]

    def __contains__(self, label) -> bool:
        return label in self._index

    @cached_property
    def n_exc(self) -> np.ndarray:
        return np.array([lab.n_exc for lab in self.labels])

    def sector(self, n: int) -> np.ndarray:
        """Indices of the states carrying exactly ``n`` excitations."""
        return np.flatnonzero(self.n_exc == n)

    def ket(self, label: BasisLabel | str) -> np.ndarray:
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(label)] = 1.0
        return v

    def embed(self, amplitudes: dict[BasisLabel, complex]) -> np.ndarray:
        """Vector with the given label amplitudes; labels must lie in the space."""
        v = np.zeros(self.dim, dtype=complex)
        for lab, amp in amplitudes.items():
            v[self.index(lab)] += amp
        return v


def build_space(n_max: int, e_max: int | None = None) -> HilbertSpace:
    """All labels with at most ``n_max`` photons per cavity and, if given,
    at most ``e_max`` total excitations, ordered by excitation sector."""
    if n_max < 0:
        raise ValueError("n_max must be >= 0")
    if e_max is not None and e_max < 0:
        raise ValueError("e_max must be >= 0")
    photons = range(n_max + 1)
    labels = [
        BasisLabel(a1, a2, p1, p2)
        for a1, a2, p1, p2 in itertools.product(LEVELS, LEVELS, photons, photons)
    ]
    if e_max is not None:
        labels = [lab for lab in labels if lab.n_exc <= e_max]
    labels.sort(key=_sort_key)
    return HilbertSpace(tuple(labels), n_max, e_max)


def annihilator(space: HilbertSpace, cavity: int) -> np.ndarray:
    """Photon lowering operator of ``cavity`` (1 or 2); transitions that
    leave the truncated space are dropped."""
    if cavity not in (1, 2):
        raise ValueError(f"cavity must be 1 or 2, got {cavity}")
    op = np.zeros((space.dim, space.dim), dtype=complex)
    for col, lab in enumerate(space.labels):
        m = lab.photons[cavity - 1]
        if m == 0:
            continue
        target = lab.with_photons(cavity, m - 1)
        if target in space:
            op[space.index(target), col] = np.sqrt(m)
    return op


def atom_op(space: HilbertSpace, atom: int, bra: int, ket: int) -> np.ndarray:
    """``|bra><ket|`` on ``atom`` (1 or 2), identity on everything else."""
    if atom not in (1, 2):
        raise ValueError(f"atom must be 1 or 2, got {atom}")
    if bra not in LEVELS or ket not in LEVELS:
        raise ValueError("atomic levels must be 0, 1 or 2")
    op = np.zeros((space.dim, space.dim), dtype=complex)
    for col, lab in enumerate(space.labels):
        if lab.atoms[atom - 1] != ket:
            continue
        target = lab.with_atom(atom, bra)
        if target in space:
            op[space.index(target), col] = 1.0
    return op


def number_operator(space: HilbertSpace, cavity: int) -> np.ndarray:
    a = annihilator(space, cavity)
    return a.conj().T @ a


def excitation_operator(space: HilbertSpace) -> np.ndarray:
    return np.diag(space.n_exc.astype(complex))


def hermiticity_defect(op: np.ndarray) -> float:
    """max |O - O^dagger|"""
    return float(np.max(np.abs(op - op.conj().T))) if op.size else 0.0
