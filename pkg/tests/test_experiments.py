import math

import numpy as np
import pytest

from cavcool import experiments
from cavcool.experiments import (
    DEFAULT_RATIOS,
    FIG3_COLUMNS,
    RunSettings,
    SweepResult,
    cooperativity_to_rates,
    fidelity_target,
    ground_populations,
    initial_state,
    local_maxima,
    perturb,
    population_table,
    pure,
    robustness,
    simulate,
    sweep_fig3,
    sweep_fig4a,
    sweep_fig4b,
)
from cavcool.hilbert import build_space
from cavcool.model import SystemParams

WORKING = SystemParams()
SPACE = build_space(1, 1)
QUICK = RunSettings(n_max=1, e_max=1, t_final=100.0, sample_step=50.0)


def test_populations_of_target():
    pops = ground_populations(initial_state(SPACE, "target"), SPACE)
    assert pops.as_tuple() == pytest.approx((1, 0, 0, 0, 0), abs=1e-15)


def test_populations_of_single_excitation():
    rho = pure(SPACE.ket("01,00"))
    pops = ground_populations(rho, SPACE)
    assert (pops.p_T, pops.p_S) == pytest.approx((0.5, 0.5))
    assert pops.p_excited == pytest.approx(0, abs=1e-15)
    assert ground_populations(pure(SPACE.ket("20,00")), SPACE).p_excited == pytest.approx(1)


def test_fidelity_examples():
    assert fidelity_target(initial_state(SPACE, "vacuum"), SPACE) == 0
    assert fidelity_target(initial_state(SPACE, "ground_mixture"), SPACE) == pytest.approx(0.25)
    assert fidelity_target(np.eye(SPACE.dim) / SPACE.dim, SPACE) == pytest.approx(1 / 16)


def test_random_initial_state_is_seeded_density_matrix():
    a = initial_state(SPACE, "random", seed=4)
    b = initial_state(SPACE, "random", seed=4)
    np.testing.assert_array_equal(a, b)
    assert np.trace(a).real == pytest.approx(1)
    assert np.linalg.eigvalsh(a)[0] > 0
    assert not np.array_equal(a, initial_state(SPACE, "random", seed=5))
    with pytest.raises(ValueError):
        initial_state(SPACE, "thermal")


def test_cooperativity_rates():
    # 30-digit references
    assert cooperativity_to_rates(50, 2.0) == pytest.approx((0.1, 0.2), abs=1e-15)
    kappa, gamma = cooperativity_to_rates(50, 1.5)
    assert kappa == pytest.approx(0.115470053837925153, abs=1e-15)
    assert gamma == pytest.approx(0.173205080756887729, abs=1e-15)
    with pytest.raises(ValueError):
        cooperativity_to_rates(0, 1)


def test_default_ratio_grid():
    assert len(DEFAULT_RATIOS) == 11
    assert DEFAULT_RATIOS[0] == 0.5 and DEFAULT_RATIOS[-1] == 3.0


def test_simulation_keeps_trace_and_table_shape():
    space, traj = simulate(WORKING, "vacuum", QUICK)
    table = population_table(space, traj)
    assert table.shape == (3, 7)
    np.testing.assert_allclose(table[:, 1:6].sum(axis=1), 1, atol=1e-12)
    assert table[-1, 1] > 0  # population already pumped into |T,00>


def test_undriven_system_stays_put():
    p = WORKING.replace(omega=(0, 0, 0))
    space, traj = simulate(p, "vacuum", QUICK)
    assert fidelity_target(traj.final, space) == 0


def test_fig4a_small_grid():
    res = sweep_fig4a([0.0, 1.1], [0.0, 0.03], WORKING, gt_final=300.0, settings=QUICK)
    assert res.values.shape == (2, 2)
    assert res.holes == 0
    np.testing.assert_array_equal(res.values[:, 0], 0)
    # without hopping the scheme pumps less efficiently
    assert res.values[1, 1] > res.values[0, 1]
    assert res.metadata["gt_final"] == 300.0
    assert res.argmax() == {"J": 1.1, "Omega": 0.03}


def test_fig4a_records_holes(monkeypatch):
    real = experiments.final_fidelity

    def flaky(params, settings=None, rho0="vacuum"):
        if params.J == 0:
            raise RuntimeError("step size underflow")
        return real(params, settings, rho0)

    monkeypatch.setattr(experiments, "final_fidelity", flaky)
    res = sweep_fig4a([0.0, 1.1], [0.03], WORKING, gt_final=50.0, settings=QUICK)
    assert res.holes == 1 and math.isnan(res.values[0, 0])
    assert res.metadata["failures"][0]["J"] == 0.0
    assert "underflow" in res.metadata["failures"][0]["error"]


def test_fig4a_rejects_empty_grid():
    with pytest.raises(ValueError):
        sweep_fig4a([], [0.03], WORKING)


def test_fig4b_uses_cooperativity():
    res = sweep_fig4b([1.0, 2.0], C=50, params=WORKING, gt_final=50.0, settings=QUICK)
    assert res.values.shape == (2,)
    assert res.metadata["cooperativity"] == 50
    assert np.all((res.values > 0) & (res.values < 1))


def test_sweep_result_shape_check():
    with pytest.raises(ValueError):
        SweepResult({"x": np.arange(3)}, np.zeros(2))


def test_robustness_zero_offset():
    rep = robustness(WORKING, "J", 0.0, QUICK, nominal=0.5)
    assert rep.delta_plus == rep.delta_minus == 0


def test_robustness_reports_both_sides():
    rep = robustness(WORKING, "Omega", 0.1, QUICK)
    assert rep.nominal == pytest.approx(experiments.final_fidelity(WORKING, QUICK))
    assert rep.plus != rep.nominal and rep.minus != rep.nominal


def test_perturb():
    assert perturb(WORKING, "J", 1.1).J == pytest.approx(1.21)
    assert perturb(WORKING, "J", 1.1).lasers != WORKING.lasers
    fixed = perturb(WORKING, "J", 1.1, retune_lasers=False)
    assert fixed.lasers == WORKING.lasers
    assert perturb(WORKING, "Omega", 0.5).omega == (0.015,) * 3
    with pytest.raises(ValueError):
        perturb(WORKING, "kappa", 1.1)
    with pytest.raises(ValueError):
        robustness(WORKING, "J", -0.1)


def test_local_maxima():
    assert local_maxima(np.array([0.1, 0.5, 0.2, 0.3, 0.1])) == [1, 3]
    # a bump below the noise floor is not a separate maximum
    assert local_maxima(np.array([0.1, 0.5, 0.4999, 0.50005, 0.1])) == [3]
    assert local_maxima(np.array([1.0, 0.5, 0.2])) == [0]


def test_fig3_columns_and_hopping_detuning():
    J = np.linspace(0.1, 3.0, 30)
    res = sweep_fig3(J, WORKING)
    col = {name: i for i, name in enumerate(FIG3_COLUMNS)}
    np.testing.assert_array_equal(res.values[:, col["Delta_e"]], -J)
    np.testing.assert_allclose(res.values[:, col["delta1"]] * res.values[:, col["delta2"]], 1)
    assert set(res.metadata["label_mapping"]) == set("abcdefg")
    assert res.metadata["label_mapping"]["d"] == ["T00->phi12 (laser 1)"]


def test_fig3_scaling_with_drive():
    J = [0.5, 1.1, 2.0]
    a = sweep_fig3(J, WORKING).values
    b = sweep_fig3(J, WORKING.replace(omega=(0.06,) * 3)).values
    np.testing.assert_allclose(b[:, :7], 2 * a[:, :7], rtol=1e-14)
    np.testing.assert_array_equal(b[:, 7:], a[:, 7:])


def test_fig3_grid_bounds():
    with pytest.raises(ValueError):
        sweep_fig3([0.0, 1.0])
    with pytest.raises(ValueError):
        sweep_fig3([3.5])


@pytest.fixture(scope="module")
def headline_from_target():
    return simulate(WORKING, "target", RunSettings(t_final=1500.0, sample_step=5.0))


@pytest.mark.slow
def test_target_start_stays_dominant(headline_from_target):
    space, traj = headline_from_target
    p_T = population_table(space, traj)[:, 1]
    assert p_T.min() > 0.85
    assert np.all(p_T > population_table(space, traj)[:, 2:5].max(axis=1))


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="the three drives beat; p_T keeps a stationary 2e-3 peak-to-peak oscillation")
def test_late_time_drift_below_1e3(headline_from_target):
    space, traj = headline_from_target
    table = population_table(space, traj)
    late = table[table[:, 0] >= 0.9 * table[-1, 0], 1:5]
    assert np.ptp(late, axis=0).max() <= 1e-3
