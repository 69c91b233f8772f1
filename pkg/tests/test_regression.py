import numpy as np
import pytest

from beamalign import regression
from beamalign.errors import BlockedSampleError, UnderdeterminedSystemError
from beamalign.linear_model import sensitivity_matrix
from beamalign.plant import Plant
from beamalign.regression import (
    ConstraintMap,
    RegressionConfig,
    least_squares,
    step1_fit,
    step2_fit,
)

from test_geometry import make_geometry


def make_plant(noise=0.0, seed=0, misalign_seed=None, **geo):
    plant = Plant(make_geometry(**geo), noise_sigma=noise, rng_seed=seed)
    if misalign_seed is not None:
        plant.misalign(seed=misalign_seed, magnitude=0.8)
    return plant


# -- least squares -----------------------------------------------------------


def test_fit_recovers_exact_line():
    x = np.array([[0.0], [1.0], [2.0]])
    y = 2.0 * x[:, 0] + 1.0
    model = least_squares(x, y)
    assert model.coefficients[0] == pytest.approx((2.0, 1.0), abs=1e-12)
    assert model.rank == 2


def test_duplicated_predictor_gets_minimum_norm_solution():
    rng = np.random.default_rng(0)
    base = rng.normal(size=(10, 1))
    x = np.hstack([base, base])  # identical columns
    y = 3.0 * base[:, 0] + 0.5
    model = least_squares(x, y)
    assert model.rank == 2  # two independent directions out of three
    # minimum-norm splits the weight evenly between the twin columns
    assert model.coefficients[0, 0] == pytest.approx(1.5, abs=1e-9)
    assert model.coefficients[0, 1] == pytest.approx(1.5, abs=1e-9)
    np.testing.assert_allclose(model.predict(x)[:, 0], y, atol=1e-9)


def test_noiseless_rectangular_system_fits_to_machine_precision():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(34, 5))
    coef = rng.normal(size=(5,))
    y = x @ coef + 0.25
    model = least_squares(x, y)
    resid = model.predict(x)[:, 0] - y
    assert np.max(np.abs(resid)) <= 1e-10


def test_underdetermined_systems_are_rejected():
    with pytest.raises(UnderdeterminedSystemError):
        least_squares(np.zeros((3, 3)), np.zeros(3))


# -- step 1 --------------------------------------------------------------------


def test_step1_noiseless_fit_matches_sensitivity_matrix():
    plant = make_plant(misalign_seed=2)
    result = step1_fit(plant, RegressionConfig(seed=4))
    gain = sensitivity_matrix(plant.geometry).gain
    ax, bx, _ = result.forward_x.coefficients[0]
    ay, by, _ = result.forward_y.coefficients[0]
    assert ax == pytest.approx(gain[0, 0], rel=1e-9)
    assert bx == pytest.approx(gain[0, 2], rel=1e-9)
    assert ay == pytest.approx(gain[1, 1], rel=1e-9)
    assert by == pytest.approx(gain[1, 3], rel=1e-9)


def test_step1_consumes_exactly_34_readings():
    plant = make_plant(noise=0.01, seed=1, misalign_seed=2)
    cfg = RegressionConfig(seed=4)
    step1_fit(plant, cfg)
    assert plant.readings_used() == cfg.n_random + cfg.n_registration == 34


def test_constraint_map_zeroes_aperture1_for_random_mirror1_settings():
    plant = make_plant(misalign_seed=2)
    result = step1_fit(plant, RegressionConfig(seed=4))
    gain = sensitivity_matrix(plant.geometry).gain
    offset = plant.true_offsets() - gain @ np.array(plant.controls.as_tuple())
    rng = np.random.default_rng(3)
    for m1 in rng.uniform(-5e-3, 5e-3, size=(100, 2)):
        pair1, pair2 = result.constraint.apply(m1)
        c = np.array([pair1[0], pair1[1], pair2[0], pair2[1]])
        a1 = (gain @ c + offset)[:2]
        assert np.max(np.abs(a1)) <= 1e-9


def test_registration_samples_vary_one_axis_each():
    plant = make_plant(misalign_seed=2)
    cfg = RegressionConfig(seed=4)
    result = step1_fit(plant, cfg)
    registration = result.samples.records[cfg.n_random:]
    for k, record in enumerate(registration):
        values = np.array(record.controls.as_tuple())
        assert np.count_nonzero(values) == 1
        assert values[k % 4] != 0.0


# -- step 2 --------------------------------------------------------------------


def test_step2_never_blocks_and_fits_noiseless_data_exactly():
    plant = make_plant(misalign_seed=2)
    s1 = step1_fit(plant, RegressionConfig(seed=4))
    s2 = step2_fit(plant, s1.constraint, s1.m1_settings)
    assert plant.readings_used() == 68
    assert all(r.complete for r in s2.samples.records)
    assert s2.r2_mean >= 0.999


def test_step2_r_squared_with_default_noise():
    plant = make_plant(noise=0.01, seed=6, misalign_seed=2)
    s1 = step1_fit(plant, RegressionConfig(seed=4))
    s2 = step2_fit(plant, s1.constraint, s1.m1_settings)
    assert s2.r2_mean >= 0.95


def test_step2_blocked_sample_is_a_hard_error():
    plant = make_plant(misalign_seed=2)
    s1 = step1_fit(plant, RegressionConfig(seed=4))
    # sabotage the constraint: a fixed mirror-2 offset sends the beam off
    # Aperture 1 (but inside the camera field), violating the guarantee
    bad = ConstraintMap(d=s1.constraint.d, e=s1.constraint.e + 0.025)
    with pytest.raises(BlockedSampleError):
        step2_fit(plant, bad, s1.m1_settings)


# -- full alignment ---------------------------------------------------------------


def test_align_costs_69_readings_and_is_exact_without_noise():
    plant = make_plant(misalign_seed=8)
    outcome = regression.align(plant, RegressionConfig(seed=5))
    assert outcome.report.readings == 69
    assert plant.readings_used() == 69
    assert outcome.report.converged
    assert outcome.report.residuals.radius_a1 <= 1e-6
    assert outcome.report.residuals.radius_a2 <= 1e-6
    # the reverse model's intercept is the applied solution
    np.testing.assert_array_equal(
        np.array(outcome.report.final_controls.as_tuple()),
        outcome.step2.reverse.intercept,
    )


def test_align_matches_plant_compensation():
    plant = make_plant(misalign_seed=8)
    expected = plant.compensating_controls()
    outcome = regression.align(plant, RegressionConfig(seed=5))
    got = outcome.report.final_controls
    assert got.as_tuple() == pytest.approx(expected.as_tuple(), abs=1e-9)


def test_degenerate_dd2_zero_geometry_still_aligns():
    plant = make_plant(misalign_seed=8, dd2=0.0)
    outcome = regression.align(plant, RegressionConfig(seed=5))
    assert outcome.step1.constraint.degenerate
    np.testing.assert_array_equal(outcome.step1.constraint.d, np.zeros((2, 2)))
    assert outcome.report.readings == 69
    assert outcome.report.residuals.radius_a1 <= 1e-6
    assert outcome.report.residuals.radius_a2 <= 1e-6


def test_degenerate_detection_survives_noise():
    # noisy dd2 = 0 fits give a small spurious mirror-2 coefficient; the
    # standard-error test must still flag blindness rather than divide by it
    plant = make_plant(noise=0.01, seed=3, misalign_seed=8, dd2=0.0)
    outcome = regression.align(plant, RegressionConfig(seed=5))
    assert outcome.step1.constraint.degenerate
    assert outcome.report.converged


def test_barely_visible_mirror2_raises_diagnostic():
    from beamalign.errors import DegenerateGeometryError

    # dd2 = 2 mm: mirror 2 is statistically visible at Aperture 1 but the
    # solved constraint would need mirror-2 angles beyond the actuators
    plant = make_plant(noise=0.01, seed=3, misalign_seed=8, dd2=0.002)
    with pytest.raises(DegenerateGeometryError):
        step1_fit(plant, RegressionConfig(seed=5))


def test_stored_diagnostics_match_recomputation_from_samples():
    plant = make_plant(noise=0.01, seed=9, misalign_seed=2)
    s1 = step1_fit(plant, RegressionConfig(seed=4))
    s2 = step2_fit(plant, s1.constraint, s1.m1_settings)
    meas = s2.samples.measurements_array()
    ctrl = s2.samples.controls_array()
    pred = s2.reverse.predict(meas)
    ss_res = ((ctrl - pred) ** 2).sum(axis=0)
    ss_tot = ((ctrl - ctrl.mean(axis=0)) ** 2).sum(axis=0)
    np.testing.assert_allclose(
        1.0 - ss_res / ss_tot, s2.reverse.r_squared_per_outcome, rtol=1e-12
    )
    np.testing.assert_allclose(
        ss_res / len(ctrl), s2.reverse.residual_variance, rtol=1e-12
    )


def test_model_serialization_round_trip(tmp_path):
    import json

    plant = make_plant(misalign_seed=8)
    outcome = regression.align(plant, RegressionConfig(seed=5))
    path = tmp_path / "models.json"
    regression.save_models(outcome, path)
    doc = json.loads(path.read_text())
    reloaded = regression.LinearModel.from_json_dict(doc["reverse"])
    np.testing.assert_array_equal(
        reloaded.coefficients, outcome.step2.reverse.coefficients
    )
    assert reloaded.rank == outcome.step2.reverse.rank
