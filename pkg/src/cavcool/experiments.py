"""Observables and the parameter sweeps built on the master-equation solver."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .dynamics import IntegratorSettings, Trajectory, evolve, make_context
from .hilbert import HilbertSpace, build_space
from .model import SystemParams
from .transitions import LETTERS, TARGET_LABELS, target_detunings, transition_table

log = logging.getLogger(__name__)

GROUND_COLUMNS = ("P_T", "P_S", "P_00", "P_11")


def ground_vectors(space: HilbertSpace) -> dict[str, np.ndarray]:
    h = 1 / math.sqrt(2)
    k01, k10 = space.ket("01,00"), space.ket("10,00")
    return {
        "T": h * (k01 + k10),
        "S": h * (k01 - k10),
        "00": space.ket("00,00"),
        "11": space.ket("11,00"),
    }


@dataclass(frozen=True)
class GroundPopulations:
    p_T: float
    p_S: float
    p_00: float
    p_11: float
    p_excited: float

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.p_T, self.p_S, self.p_00, self.p_11, self.p_excited)


def _expect(vec: np.ndarray, rho: np.ndarray) -> float:
    return float(np.real(vec.conj() @ rho @ vec))


def ground_populations(rho: np.ndarray, space: HilbertSpace) -> GroundPopulations:
    v = ground_vectors(space)
    p = [_expect(v[k], rho) for k in ("T", "S", "00", "11")]
    return GroundPopulations(*p, float(np.real(np.trace(rho))) - sum(p))


def fidelity_target(rho: np.ndarray, space: HilbertSpace) -> float:
    """<T,00| rho |T,00>"""
    return _expect(ground_vectors(space)["T"], rho)


def cooperativity_to_rates(C: float, gamma_over_kappa: float, g: float = 1.0) -> tuple[float, float]:
    """(kappa, gamma) with C = g^2 / (kappa gamma) and gamma = ratio * kappa."""
    if C <= 0 or gamma_over_kappa <= 0:
        raise ValueError("cooperativity and rate ratio must be positive")
    kappa = g / math.sqrt(C * gamma_over_kappa)
    return kappa, gamma_over_kappa * kappa


@dataclass(frozen=True)
class RunSettings:
    """Truncation, evolution time and integrator for one simulation."""

    n_max: int = 2
    e_max: int | None = 2
    t_final: float = 1500.0
    sample_step: float = 10.0
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)

    @property
    def space(self) -> HilbertSpace:
        return build_space(self.n_max, self.e_max)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def pure(vec: np.ndarray) -> np.ndarray:
    return np.outer(vec, vec.conj())


def random_density_matrix(dim: int, seed: int) -> np.ndarray:
    """Full-rank mixed state from a Ginibre matrix."""
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def initial_state(space: HilbertSpace, kind: str = "vacuum", seed: int = 0) -> np.ndarray:
    """``vacuum`` (|00,00>), ``target`` (|T,00>), ``ground_mixture`` (equal
    weight on the four ground states) or ``random`` (seeded mixed state)."""
    v = ground_vectors(space)
    if kind == "vacuum":
        return pure(v["00"])
    if kind == "target":
        return pure(v["T"])
    if kind == "ground_mixture":
        return sum(pure(x) for x in v.values()) / 4
    if kind == "random":
        return random_density_matrix(space.dim, seed)
    raise ValueError(f"unknown initial state {kind!r}")


def simulate(
    params: SystemParams,
    rho0: np.ndarray | str = "vacuum",
    settings: RunSettings | None = None,
    seed: int = 0,
    frame: str = "rotating",
) -> tuple[HilbertSpace, Trajectory]:
    settings = settings or RunSettings()
    space = settings.space
    if isinstance(rho0, str):
        rho0 = initial_state(space, rho0, seed)
    ctx = make_context(space, params, frame)
    traj = evolve(rho0, settings.t_final, settings.sample_step, ctx, settings.integrator)
    return space, traj


def final_fidelity(params: SystemParams, settings: RunSettings | None = None, rho0: str = "vacuum") -> float:
    settings = settings or RunSettings()
    coarse = RunSettings(settings.n_max, settings.e_max, settings.t_final, settings.t_final, settings.integrator)
    space, traj = simulate(params, rho0, coarse)
    return fidelity_target(traj.final, space)


def population_table(space: HilbertSpace, traj: Trajectory) -> np.ndarray:
    """Rows of (gt, P_T, P_S, P_00, P_11, P_excited, trace_error)."""
    rows = []
    for t, rho, terr in zip(traj.times, traj.states, traj.trace_corrections):
        rows.append((t, *ground_populations(rho, space).as_tuple(), terr))
    return np.array(rows)


TRAJECTORY_COLUMNS = ("gt", *GROUND_COLUMNS, "P_excited", "trace_error")


def run_fig5(
    params: SystemParams,
    initial_states: Sequence[str] = ("vacuum", "random"),
    settings: RunSettings | None = None,
    seed: int = 0,
) -> list[tuple[str, HilbertSpace, Trajectory]]:
    """Ground-population trajectories from each named initial state."""
    out = []
    for kind in initial_states:
        space, traj = simulate(params, kind, settings, seed)
        out.append((kind, space, traj))
    return out


@dataclass
class SweepResult:
    axes: dict[str, np.ndarray]
    values: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        shape = tuple(len(v) for v in self.axes.values())
        if self.values.shape != shape:
            raise ValueError(f"values shape {self.values.shape} does not match axes {shape}")

    @property
    def holes(self) -> int:
        return int(np.isnan(self.values).sum())

    def argmax(self) -> dict[str, Any]:
        idx = np.unravel_index(np.nanargmax(self.values), self.values.shape)
        return {name: grid[i] for (name, grid), i in zip(self.axes.items(), idx)}

    def rows(self) -> Iterable[tuple]:
        names = list(self.axes)
        for idx in np.ndindex(self.values.shape):
            yield tuple(self.axes[n][i] for n, i in zip(names, idx)) + (self.values[idx],)


def _fidelity_task(args) -> float:
    params, settings, rho0 = args
    return final_fidelity(params, settings, rho0)


def _map(fn: Callable, tasks: list, workers: int) -> list[tuple[float, str | None]]:
    """Run independent tasks; failures become (nan, message) instead of aborting."""

    def guard(future_or_value):
        try:
            return float(future_or_value()), None
        except Exception as exc:  # noqa: BLE001 - recorded as a hole
            log.warning("sweep point failed: %s", exc)
            return math.nan, f"{type(exc).__name__}: {exc}"

    if workers <= 1 or len(tasks) <= 1:
        return [guard(lambda t=t: fn(t)) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, t) for t in tasks]
        return [guard(f.result) for f in futures]


def _sweep_metadata(kind, params, settings, gt_final, started, failures) -> dict[str, Any]:
    return {
        "experiment": kind,
        "params": asdict(params),
        "settings": settings.to_dict(),
        "gt_final": gt_final,
        "initial_state": "vacuum",
        "wall_clock_s": time.time() - started,
        "failures": failures,
    }


def sweep_fig4a(
    J_grid: Sequence[float],
    Omega_grid: Sequence[float],
    params: SystemParams,
    gt_final: float = 1500.0,
    settings: RunSettings | None = None,
    workers: int = 1,
    plateau: float = 0.85,
) -> SweepResult:
    """p_T at ``gt_final`` over hopping strength x common Rabi frequency.

    Laser frequencies follow each J through the resonance rule unless
    ``params.laser_freqs`` pins them.
    """
    if not len(J_grid) or not len(Omega_grid):
        raise ValueError("grids must be non-empty")
    settings = settings or RunSettings()
    run = RunSettings(settings.n_max, settings.e_max, gt_final, gt_final, settings.integrator)
    started = time.time()
    tasks = [(params.replace(J=float(J), omega=(float(o),) * 3), run, "vacuum") for J in J_grid for o in Omega_grid]
    results = _map(_fidelity_task, tasks, workers)
    values = np.array([v for v, _ in results]).reshape(len(J_grid), len(Omega_grid))
    failures = [
        {"J": t[0].J, "Omega": t[0].omega[0], "error": err} for t, (_, err) in zip(tasks, results) if err
    ]
    meta = _sweep_metadata("fig4a", params, run, gt_final, started, failures)
    meta["plateau_threshold"] = plateau
    meta["plateau"] = [
        {"J": float(J), "Omega": float(o)}
        for i, J in enumerate(J_grid)
        for j, o in enumerate(Omega_grid)
        if values[i, j] >= plateau
    ]
    return SweepResult({"J": np.asarray(J_grid, float), "Omega": np.asarray(Omega_grid, float)}, values, meta)


DEFAULT_RATIOS = tuple(np.round(np.arange(0.5, 3.0001, 0.25), 10))


def sweep_fig4b(
    ratio_grid: Sequence[float] = DEFAULT_RATIOS,
    C: float = 50.0,
    params: SystemParams | None = None,
    gt_final: float = 1500.0,
    settings: RunSettings | None = None,
    workers: int = 1,
) -> SweepResult:
    """Target fidelity versus gamma/kappa at fixed cooperativity."""
    params = params or SystemParams()
    settings = settings or RunSettings()
    run = RunSettings(settings.n_max, settings.e_max, gt_final, gt_final, settings.integrator)
    started = time.time()
    tasks = []
    for ratio in ratio_grid:
        kappa, gamma = cooperativity_to_rates(C, float(ratio), params.g)
        tasks.append((params.replace(kappa=kappa, gamma=gamma), run, "vacuum"))
    results = _map(_fidelity_task, tasks, workers)
    values = np.array([v for v, _ in results])
    failures = [{"ratio": float(r), "error": e} for r, (_, e) in zip(ratio_grid, results) if e]
    meta = _sweep_metadata("fig4b", params, run, gt_final, started, failures)
    meta["cooperativity"] = C
    return SweepResult({"gamma_over_kappa": np.asarray(ratio_grid, float)}, values, meta)


def local_maxima(values: np.ndarray, noise: float = 1e-3) -> list[int]:
    """Indices of interior or edge maxima that stand above neighbours by > noise,
    plus the global maximum."""
    v = np.asarray(values, float)
    best = int(np.nanargmax(v))
    peaks = {best}
    for i in range(len(v)):
        left = v[i - 1] if i > 0 else -np.inf
        right = v[i + 1] if i + 1 < len(v) else -np.inf
        if v[i] > left and v[i] > right:
            # prominence against the deepest dip towards the global maximum
            lo, hi = sorted((i, best))
            dip = np.nanmin(v[lo : hi + 1])
            if v[i] - dip > noise:
                peaks.add(i)
    return sorted(peaks)


@dataclass
class RobustnessReport:
    target: str
    relative_size: float
    nominal: float
    plus: float
    minus: float
    retune_lasers: bool

    @property
    def delta_plus(self) -> float:
        return self.plus - self.nominal

    @property
    def delta_minus(self) -> float:
        return self.minus - self.nominal


def perturb(params: SystemParams, target: str, factor: float, retune_lasers: bool = True) -> SystemParams:
    """Scale J or all three Rabi frequencies by ``factor``.

    With ``retune_lasers`` the laser frequencies follow the resonance rule at
    the new J; otherwise they stay at the nominal values.
    """
    base = params if retune_lasers else params.replace(laser_freqs=params.lasers)
    if target == "J":
        return base.replace(J=params.J * factor)
    if target == "Omega":
        return base.replace(omega=tuple(o * factor for o in params.omega))
    raise ValueError(f"unknown perturbation target {target!r}")


def robustness(
    params: SystemParams,
    target: str = "J",
    relative_size: float = 0.1,
    settings: RunSettings | None = None,
    retune_lasers: bool = True,
    workers: int = 1,
    nominal: float | None = None,
) -> RobustnessReport:
    """Fidelity at gt_final for the nominal and the +/- ``relative_size`` offsets."""
    if relative_size < 0:
        raise ValueError("relative_size must be >= 0")
    settings = settings or RunSettings()
    if relative_size == 0:
        f0 = nominal if nominal is not None else final_fidelity(params, settings)
        return RobustnessReport(target, 0.0, f0, f0, f0, retune_lasers)
    variants = [perturb(params, target, 1 + s, retune_lasers) for s in (relative_size, -relative_size)]
    tasks = [(p, settings, "vacuum") for p in variants]
    if nominal is None:
        tasks.insert(0, (params, settings, "vacuum"))
    values = [v for v, err in _map(_fidelity_task, tasks, workers)]
    if nominal is None:
        nominal, values = values[0], values[1:]
    return RobustnessReport(target, relative_size, nominal, values[0], values[1], retune_lasers)


FIG3_COLUMNS = (
    *(f"Omega_{x}" for x in LETTERS),
    "delta1",
    "delta2",
    *(f"Delta_{x}" for x in LETTERS),
)


def sweep_fig3(J_grid: Sequence[float], params: SystemParams | None = None) -> SweepResult:
    """Effective Rabi frequencies and detunings of the |T,00> transitions versus J.

    Analytic only; rows share a letter when they share the detuning, and the
    letter-to-transition assignment is stored in the metadata.
    """
    params = params or SystemParams()
    J_grid = np.asarray(J_grid, float)
    if np.any(J_grid <= 0) or np.any(J_grid > 3 * params.g):
        raise ValueError("J grid must lie in (0, 3g]")
    values = np.empty((len(J_grid), len(FIG3_COLUMNS)))
    for i, J in enumerate(J_grid):
        p = params.replace(J=float(J), laser_freqs=None)
        table = transition_table(p)
        rabi = {}
        for row in table.for_ground("T00"):
            rabi[TARGET_LABELS[(row.excited, row.laser)]] = abs(row.rabi)
        det = target_detunings(p.g, p.J)
        values[i] = [
            *(rabi[x] for x in LETTERS),
            det.delta1,
            det.delta2,
            *(det.by_letter()[x] for x in LETTERS),
        ]
    mapping = {x: [f"T00->{e} (laser {l})" for (e, l), y in TARGET_LABELS.items() if y == x] for x in LETTERS}
    meta = {"experiment": "fig3", "params": asdict(params), "label_mapping": mapping}
    return SweepResult({"J": J_grid, "quantity": np.array(FIG3_COLUMNS)}, values, meta)
