"""Command-line front end.

Every subcommand reads an optional flat JSON config (``--config``), applies
``--KEY VALUE`` overrides, writes its CSV plus a ``<name>.manifest.json``
into ``--out`` and exits 0; 2 on bad configuration, 3 when ``verify``
finds a physics mismatch, 4 when the integrator fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .dynamics import IntegrationError, IntegratorSettings
from .experiments import (
    DEFAULT_RATIOS,
    FIG3_COLUMNS,
    TRAJECTORY_COLUMNS,
    RunSettings,
    cooperativity_to_rates,
    fidelity_target,
    population_table,
    robustness,
    run_fig5,
    simulate,
    sweep_fig3,
    sweep_fig4a,
    sweep_fig4b,
)
from .hilbert import build_space
from .io import write_csv, write_manifest
from .model import ConfigurationError, LaserFrequencies, SystemParams, drive_lowering_ops, weak_excitation_check
from .spectrum import analytic_spectrum, numeric_spectrum, verify_spectrum
from .transitions import RESONANT_ROWS, match_target_labels, suppression_ratio, target_detunings, transition_table

log = logging.getLogger("cavcool")

EXIT_USAGE, EXIT_VERIFY, EXIT_INTEGRATION = 2, 3, 4

DEFAULTS: dict[str, Any] = {
    "w1": 8.0,
    "w2": 18.0,
    "J": 1.1,
    "kappa": 0.1,
    "gamma": 0.2,
    "omega1": 0.03,
    "omega2": 0.03,
    "omega3": 0.03,
    "wL1": None,
    "wL2": None,
    "wL3": None,
    "n_max": 2,
    "e_max": 2,
    "rel_tol": 1e-8,
    "abs_tol": 1e-10,
    "max_step": None,
    "t_final": 1500.0,
    "sample_step": 10.0,
    "initial_state": "vacuum",
    "initial_states": ["vacuum", "random"],
    "C": 50.0,
    "J_grid": [0.0, 0.4, 0.8, 1.1, 1.5, 2.0],
    "Omega_grid": [0.0, 0.01, 0.02, 0.03, 0.04, 0.05],
    "ratio_grid": list(DEFAULT_RATIOS),
    "fig3_J_grid": [round(0.1 * k, 10) for k in range(1, 31)],
    "relative_size": 0.1,
    "retune_lasers": True,
    "frame": "rotating",
}
LIST_KEYS = {"initial_states", "J_grid", "Omega_grid", "ratio_grid", "fig3_J_grid"}
STR_KEYS = {"initial_state", "frame"}
BOOL_KEYS = {"retune_lasers"}
INT_KEYS = {"n_max", "e_max"}

COMMANDS = ("basis", "spectrum", "transitions", "evolve", "fig3", "fig4a", "fig4b", "fig5", "robustness", "verify")


class UsageError(Exception):
    pass


def _coerce(key: str, value: Any) -> Any:
    if value is None or (isinstance(value, str) and value.lower() in ("none", "null", "")):
        return None
    try:
        if key in LIST_KEYS:
            items = value.split(",") if isinstance(value, str) else list(value)
            if key == "initial_states":
                return [str(v).strip() for v in items]
            return [float(v) for v in items]
        if key in STR_KEYS:
            return str(value)
        if key in BOOL_KEYS:
            if isinstance(value, str):
                return value.lower() in ("1", "true", "yes", "on")
            return bool(value)
        if key in INT_KEYS:
            if float(value) != int(float(value)):
                raise ValueError
            return int(float(value))
        return float(value)
    except (TypeError, ValueError):
        raise UsageError(f"invalid value for {key!r}: {value!r}") from None


def load_config(path: str | None, overrides: dict[str, Any]) -> dict[str, Any]:
    """Defaults, then the config file, then command-line overrides."""
    config = dict(DEFAULTS)
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise UsageError(f"config file not found: {p}")
        try:
            data = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {p} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError(f"config file {p} must hold a flat key-value object")
        unknown = sorted(set(data) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys in {p}: {', '.join(unknown)}")
        config.update({k: _coerce(k, v) for k, v in data.items()})
    for key, value in overrides.items():
        if value is not None:
            config[key] = _coerce(key, value)
    return config


def params_from_config(config: dict[str, Any]) -> SystemParams:
    lasers = [config["wL1"], config["wL2"], config["wL3"]]
    if any(x is not None for x in lasers) and any(x is None for x in lasers):
        raise ConfigurationError("wL1, wL2, wL3 must be given together")
    return SystemParams(
        w1=config["w1"],
        w2=config["w2"],
        J=config["J"],
        kappa=config["kappa"],
        gamma=config["gamma"],
        omega=(config["omega1"], config["omega2"], config["omega3"]),
        laser_freqs=LaserFrequencies(*lasers) if lasers[0] is not None else None,
    )


def settings_from_config(config: dict[str, Any]) -> RunSettings:
    if config["n_max"] is None or config["n_max"] < 0:
        raise ConfigurationError("n_max must be a non-negative integer")
    integ = IntegratorSettings(
        config["rel_tol"],
        config["abs_tol"],
        np.inf if config["max_step"] is None else config["max_step"],
    )
    return RunSettings(config["n_max"], config["e_max"], config["t_final"], config["sample_step"], integ)


def _manifest(ctx: dict[str, Any], name: str, extra: dict[str, Any] | None = None) -> None:
    body = {
        "command": ctx["command"],
        "argv": ctx["argv"],
        "config": ctx["config"],
        "seed": ctx["seed"],
        "threads": ctx["threads"],
        "wall_clock_s": time.time() - ctx["started"],
    }
    body.update(extra or {})
    write_manifest(ctx["out"] / f"{name}.manifest.json", body)


def cmd_basis(ctx, config, params):
    space = build_space(config["n_max"], config["e_max"])
    rows = []
    for i, lab in enumerate(space.labels):
        print(f"{lab} {i} {lab.n_exc}")
        rows.append((str(lab), i, lab.n_exc))
    write_csv(ctx["out"] / "basis.csv", ("label", "index", "n_exc"), rows)
    _manifest(ctx, "basis", {"dim": space.dim})
    return 0


def _one_excitation_space(config):
    space = build_space(config["n_max"], config["e_max"])
    if config["n_max"] < 1 or (config["e_max"] is not None and config["e_max"] < 1):
        raise ConfigurationError("spectrum needs n_max >= 1 and e_max >= 1")
    return space


def cmd_spectrum(ctx, config, params):
    space = _one_excitation_space(config)
    report = verify_spectrum(analytic_spectrum(params), numeric_spectrum(space, params))
    rows = [(c.name, c.energy, max(c.residual, c.subspace_residual)) for c in report.checks]
    write_csv(ctx["out"] / "spectrum.csv", ("name", "eigenvalue", "residual"), rows)
    _manifest(ctx, "spectrum", {"max_residual": report.max_residual, "failures": report.failures})
    print(f"max residual {report.max_residual:.3e}; failures: {report.failures or 'none'}")
    return 0


def cmd_transitions(ctx, config, params):
    table = transition_table(params)
    rows = [(r.ground, r.excited, r.laser, r.rabi, r.detuning, r.ratio) for r in table]
    header = ("ground", "excited", "laser", "rabi_over_g", "detuning_over_g", "ratio")
    write_csv(ctx["out"] / "transitions.csv", header, rows)
    sup = suppression_ratio(params)
    _manifest(ctx, "transitions", {"lasers": table.lasers._asdict(), "min_target_ratio": sup.min_ratio})
    print(f"{len(table)} transitions; min |detuning|/|rabi| on T00 rows = {sup.min_ratio:.4g}")
    return 0


def cmd_evolve(ctx, config, params):
    settings = settings_from_config(config)
    space, traj = simulate(params, config["initial_state"], settings, ctx["seed"], config["frame"])
    write_csv(ctx["out"] / "trajectory.csv", TRAJECTORY_COLUMNS, population_table(space, traj))
    fid = fidelity_target(traj.final, space)
    _manifest(ctx, "trajectory", {"final_fidelity": fid, "dim": space.dim, "rhs_evaluations": traj.n_rhs})
    print(f"gt={traj.times[-1]:g}  fidelity={fid:.6f}")
    return 0


def cmd_fig3(ctx, config, params):
    result = sweep_fig3(config["fig3_J_grid"], params)
    rows = [(J, *vals) for J, vals in zip(result.axes["J"], result.values)]
    write_csv(ctx["out"] / "fig3.csv", ("J_over_g", *FIG3_COLUMNS), rows)
    _manifest(ctx, "fig3", {"label_mapping": result.metadata["label_mapping"]})
    return 0


def cmd_fig4a(ctx, config, params):
    result = sweep_fig4a(
        config["J_grid"], config["Omega_grid"], params, config["t_final"], settings_from_config(config), ctx["threads"]
    )
    write_csv(ctx["out"] / "fig4a.csv", ("J_over_g", "Omega_over_g", "P_T"), result.rows())
    _manifest(ctx, "fig4a", {"metadata": result.metadata})
    print(f"max P_T={np.nanmax(result.values):.4f} at {result.argmax()}; holes={result.holes}")
    return 0


def cmd_fig4b(ctx, config, params):
    result = sweep_fig4b(
        config["ratio_grid"], config["C"], params, config["t_final"], settings_from_config(config), ctx["threads"]
    )
    rows = []
    for ratio, fid in zip(result.axes["gamma_over_kappa"], result.values):
        kappa, gamma = cooperativity_to_rates(config["C"], ratio, params.g)
        rows.append((ratio, kappa, gamma, fid))
    write_csv(ctx["out"] / "fig4b.csv", ("gamma_over_kappa", "kappa_over_g", "gamma_over_g", "fidelity"), rows)
    _manifest(ctx, "fig4b", {"metadata": result.metadata})
    print(f"optimal gamma/kappa = {result.argmax()['gamma_over_kappa']:g}; holes={result.holes}")
    return 0


def cmd_fig5(ctx, config, params):
    settings = settings_from_config(config)
    outputs = []
    for kind, space, traj in run_fig5(params, config["initial_states"], settings, ctx["seed"]):
        name = f"fig5_{kind}.csv"
        write_csv(ctx["out"] / name, TRAJECTORY_COLUMNS, population_table(space, traj))
        outputs.append(name)
        print(f"{kind}: final fidelity {fidelity_target(traj.final, space):.6f}")
    _manifest(ctx, "fig5", {"outputs": outputs})
    return 0


def cmd_robustness(ctx, config, params):
    settings = settings_from_config(config)
    reports = []
    nominal = None
    for target in ("J", "Omega"):
        rep = robustness(
            params, target, config["relative_size"], settings, config["retune_lasers"], ctx["threads"], nominal
        )
        nominal = rep.nominal
        reports.append(rep)
        print(f"{target} x(1 +/- {rep.relative_size:g}): dF = {rep.delta_plus:+.4g} / {rep.delta_minus:+.4g}")
    header = ("target", "relative_size", "nominal", "plus", "minus", "delta_plus", "delta_minus")
    rows = [(r.target, r.relative_size, r.nominal, r.plus, r.minus, r.delta_plus, r.delta_minus) for r in reports]
    write_csv(ctx["out"] / "robustness.csv", header, rows)
    _manifest(ctx, "robustness", {"retune_lasers": config["retune_lasers"]})
    return 0


def cmd_verify(ctx, config, params):
    space = build_space(1, 1)
    report = verify_spectrum(analytic_spectrum(params), numeric_spectrum(space, params))
    for c in report.checks:
        print(f"{c.name:6s} lambda={c.energy:+.10f} residual={max(c.residual, c.subspace_residual):.2e}")
    table = transition_table(params)
    resonances = [table.get(*key) for key in RESONANT_ROWS]
    for r in resonances:
        print(f"resonance {r.ground}->{r.excited} laser {r.laser}: detuning {r.detuning:+.3e}")

    analytic = analytic_spectrum(params)
    s02, s12 = drive_lowering_ops(space)
    worst_coeff = 0.0
    for r in table:
        op = s12 if r.laser == 3 else s02
        overlap = analytic.vector(r.ground, space).conj() @ op @ analytic.vector(r.excited, space)
        worst_coeff = max(worst_coeff, abs(overlap - r.coefficient))
    labels = match_target_labels(table, target_detunings(params.g, params.J))
    weak = weak_excitation_check(params)
    print(f"coefficient oracle max deviation {worst_coeff:.2e}")
    print(f"weak excitation ratios {weak.ratio_hopping:.3f}, {weak.ratio_dressed:.3f}")

    failures = list(report.failures)
    failures += [f"resonance {r.key}" for r in resonances if abs(r.detuning) > 1e-12 * params.g]
    if worst_coeff > 1e-12:
        failures.append("coefficient oracle")
    if labels.unmatched_letters:
        failures.append(f"unmatched detuning labels {labels.unmatched_letters}")
    rows = [(c.name, c.energy, max(c.residual, c.subspace_residual)) for c in report.checks]
    write_csv(ctx["out"] / "verify.csv", ("name", "eigenvalue", "residual"), rows)
    _manifest(ctx, "verify", {"failures": failures, "coefficient_deviation": worst_coeff})
    if failures:
        print("VERIFY FAILED: " + "; ".join(failures), file=sys.stderr)
        return EXIT_VERIFY
    print("verify: OK")
    return 0


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavcool", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat JSON key-value config file")
    parser.add_argument("--out", default="out", help="output directory (default: ./out)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("-v", "--verbose", action="store_true")
    group = parser.add_argument_group("config overrides")
    for key in DEFAULTS:
        group.add_argument(f"--{key}", dest=f"set_{key}", metavar="VALUE")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("set_")}
    try:
        config = load_config(args.config, overrides)
        params = params_from_config(config)
        ctx = {
            "command": args.command,
            "argv": argv,
            "config": config,
            "seed": args.seed,
            "threads": max(1, args.threads),
            "out": Path(args.out),
            "started": time.time(),
        }
        ctx["out"].mkdir(parents=True, exist_ok=True)
        return HANDLERS[args.command](ctx, config, params)
    except (UsageError, ConfigurationError) as exc:
        print(f"cavcool: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IntegrationError as exc:
        print(f"cavcool: integration failed: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
