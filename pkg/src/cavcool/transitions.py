"""Laser-driven transitions between the dressed ground and one-excitation states.

Each row couples a ground state (g00, T00, S00, g11) to a dressed excited
state phi_k through one laser. ``coefficient`` is the matrix element
``<ground| V |phi_k>`` of the lowering half of that laser's drive
(V = sum_j |0><2|_j for lasers 1, 2 and sum_j |1><2|_j for laser 3); the
signed effective Rabi frequency is ``Omega_laser * coefficient``; the
detuning is the phase-rotation frequency ``wL + E_ground - lambda_k`` of the
term in the interaction picture of H_NL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .model import LaserFrequencies, SystemParams
from .spectrum import analytic_spectrum, normalizations

SQRT2 = math.sqrt(2)

# target-state (T00) rows carrying the lettered detunings/Rabi frequencies
TARGET_LABELS: dict[tuple[str, int], str] = {
    ("phi1", 3): "a",
    ("phi2", 3): "a",
    ("phi3", 3): "b",
    ("phi4", 3): "b",
    ("phi5", 3): "c",
    ("phi6", 3): "c",
    ("phi12", 1): "d",
    ("phi12", 2): "e",
    ("phi11", 2): "f",
    ("phi11", 1): "g",
}
LETTERS = "abcdefg"
# the three resonant pumping rows selected by the default laser frequencies
RESONANT_ROWS = (("g00", "phi3", 1), ("S00", "phi9", 2), ("g11", "phi11", 3))


@dataclass(frozen=True)
class CouplingConstants:
    L1: float
    L2: float
    L3: float
    N_a: float
    N_b: float
    N_c: float
    N_d: float
    N_e: float


def coupling_coefficients(g: float, J: float) -> CouplingConstants:
    if g <= 0 or J < 0:
        raise ValueError("need g > 0 and J >= 0")
    s = math.sqrt(J**2 + 4 * g**2)
    n = normalizations(g, J)
    L1 = 1 / math.sqrt(J**2 + g**2)
    denom = math.sqrt(2 * J**2 + 8 * g**2)
    L2 = 2 * g**2 * n["N_d"] / (denom * (J - s))
    L3 = 2 * g**2 * n["N_e"] / (denom * (J + s))
    return CouplingConstants(L1, L2, L3, **n)


@dataclass(frozen=True)
class TransitionRow:
    ground: str
    excited: str
    laser: int
    coefficient: float
    rabi: float
    detuning: float

    @property
    def ratio(self) -> float:
        """|detuning| / |rabi|; infinite for an undriven row."""
        if self.rabi == 0:
            return math.inf
        return abs(self.detuning) / abs(self.rabi)

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.ground, self.excited, self.laser)


@dataclass(frozen=True)
class TransitionTable:
    rows: tuple[TransitionRow, ...]
    params: SystemParams
    lasers: LaserFrequencies

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, ground: str, excited: str, laser: int) -> TransitionRow:
        for row in self.rows:
            if row.key == (ground, excited, laser):
                return row
        raise KeyError((ground, excited, laser))

    def for_ground(self, ground: str) -> list[TransitionRow]:
        return [r for r in self.rows if r.ground == ground]

    def resonant(self, tol: float = 1e-12) -> list[TransitionRow]:
        return [r for r in self.rows if abs(r.detuning) <= tol]


def _couplings(g: float, J: float) -> list[tuple[str, str, tuple[int, ...], float]]:
    """(ground, excited, lasers, <ground|V|phi_k>) for every nonzero coupling."""
    c = coupling_coefficients(g, J)
    out = []
    for k in range(1, 7):
        value = SQRT2 * g / 2 * c.L1 if k <= 4 else J * c.L1
        out.append(("g00", f"phi{k}", (1, 2), value))
    out += [
        ("S00", "phi9", (1, 2), c.L2),
        ("S00", "phi10", (1, 2), -c.L3),
        ("T00", "phi11", (1, 2), -c.L2),
        ("T00", "phi12", (1, 2), c.L3),
    ]
    for ground, sign in (("T00", lambda k: 1), ("S00", lambda k: (-1) ** k)):
        for k in range(1, 7):
            value = g / 2 * c.L1 if k <= 4 else J / SQRT2 * c.L1
            out.append((ground, f"phi{k}", (3,), sign(k) * value))
    # |11,00> is reached from |21,00> and |12,00> alike, hence the sqrt(2)
    out += [
        ("g11", "phi11", (3,), -SQRT2 * c.L2),
        ("g11", "phi12", (3,), SQRT2 * c.L3),
    ]
    return out


def transition_table(params: SystemParams, laser_freqs: LaserFrequencies | None = None) -> TransitionTable:
    """Every laser coupling between the ground manifold and phi1..phi12."""
    lasers = laser_freqs if laser_freqs is not None else params.lasers
    spec = analytic_spectrum(params)
    freqs = {1: lasers.wL1, 2: lasers.wL2, 3: lasers.wL3}
    rows = []
    for ground, excited, which, value in _couplings(params.g, params.J):
        for laser in which:
            detuning = freqs[laser] + spec.energy(ground) - spec.energy(excited)
            rows.append(TransitionRow(ground, excited, laser, value, params.omega[laser - 1] * value, detuning))
    order = {"g00": 0, "S00": 1, "T00": 2, "g11": 3}
    rows.sort(key=lambda r: (order[r.ground], r.laser, int(r.excited[3:])))
    return TransitionTable(tuple(rows), params, lasers)


@dataclass(frozen=True)
class TargetDetunings:
    delta1: float
    delta2: float
    DeltaA: float
    DeltaB: float
    DeltaC: float
    DeltaD: float
    DeltaE: float
    DeltaF: float
    DeltaG: float

    def by_letter(self) -> dict[str, float]:
        return {x: getattr(self, "Delta" + x.upper()) for x in LETTERS}


def target_detunings(g: float, J: float) -> TargetDetunings:
    """Level shifts delta1, delta2 and the detunings of the |T,00> transitions."""
    r = math.sqrt(J**2 + g**2)
    h = math.sqrt(J**2 + 4 * g**2) / 2
    return TargetDetunings(
        delta1=h + J / 2,
        delta2=h - J / 2,
        DeltaA=J / 2 - h - r,
        DeltaB=J / 2 - h + r,
        DeltaC=J / 2 - h,
        DeltaD=-J / 2 - h - r,
        DeltaE=-J,
        DeltaF=-J + 2 * h,
        DeltaG=-J / 2 + h - r,
    )


@dataclass
class LabelMatch:
    mapping: dict[tuple[str, int], list[str]]
    unmatched_letters: list[str]
    ambiguous_rows: list[tuple[str, int]]


def match_target_labels(table: TransitionTable, detunings: TargetDetunings, tol: float = 1e-10) -> LabelMatch:
    """Pair each T00 row with the lettered detunings its value equals."""
    letters = detunings.by_letter()
    mapping = {}
    for row in table.for_ground("T00"):
        mapping[(row.excited, row.laser)] = [x for x, v in letters.items() if abs(v - row.detuning) <= tol]
    used = {x for hits in mapping.values() for x in hits}
    return LabelMatch(
        mapping,
        [x for x in LETTERS if x not in used],
        [k for k, hits in mapping.items() if len(hits) != 1],
    )


@dataclass
class SuppressionReport:
    rows: list[tuple[str, TransitionRow]]
    min_ratio: float
    violations: list[TransitionRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def suppression_ratio(params: SystemParams, tol: float = 1e-12) -> SuppressionReport:
    """How far every |T,00> excitation is detuned relative to its Rabi frequency."""
    table = transition_table(params)
    rows = []
    for row in table.for_ground("T00"):
        rows.append((TARGET_LABELS[(row.excited, row.laser)], row))
    violations = [row for _, row in rows if abs(row.detuning) <= tol * params.g]
    min_ratio = min(row.ratio for _, row in rows)
    return SuppressionReport(rows, min_ratio, violations)
