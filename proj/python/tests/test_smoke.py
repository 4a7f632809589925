import numpy as np
import pytest

import sparsefield as sf


def test_synth_and_roundtrip(tmp_path):
    series = sf.synth_series("standing_waves", 8, 8, 30, seed=1, noise=0.0)
    assert series.height == 8 and series.width == 8
    arr = series.to_numpy()
    assert arr.shape == (30, 8, 8)

    path = str(tmp_path / "s.sfgd")
    sf.save_series(series, path)
    back = sf.load_series(path)
    np.testing.assert_array_equal(back.to_numpy(), arr)


def test_placement_and_linear_recovery():
    series = sf.synth_series("standing_waves", 10, 10, 40, seed=3, noise=0.0)
    train, test = sf.split_series(series, 0.7)
    placement = sf.select_sampling_locations(train, 4)
    assert len(placement) == 4
    assert len(set(placement.gamma)) == 4

    basis = sf.fit_principal_basis(train, 4)
    y = sf.measure_series(placement, test)
    recon = sf.reconstruct_linear(basis, placement, y)
    truth = test.to_matrix()
    assert sf.mse_at_n(truth, recon) <= 1e-10


def test_connectivity_report():
    placement = sf.Placement(6, 6, [0, 5, 35])
    report = sf.analyze_connectivity(placement, 3)
    assert not report.connected
    bridged, post = sf.insert_bridges(placement, 3)
    assert post.single_component
    assert len(bridged) >= len(placement)


def test_training_smoke():
    series = sf.synth_series("traveling_gaussians", 6, 6, 40, seed=2, noise=0.0)
    placement = sf.select_sampling_locations(series, 3)
    model, history = sf.train_model(series, placement, epochs=60, batch=10, seed=0)
    assert len(history) == 60
    assert history[-1] < history[0]
    pred = model.predict(series)
    assert pred.shape == (36, 40)


def test_metrics_match_definitions():
    truth = np.array([[1.0, 2.0], [3.0, 4.0]])
    recon = np.array([[1.0, 2.0], [3.0, 6.0]])
    assert sf.mse_at_n(truth, recon) == pytest.approx(1.0)
    assert sf.improvement_pct(0.4192, 0.3910) == pytest.approx(6.73, abs=0.01)


def test_errors_surface_as_python_exceptions():
    with pytest.raises(ValueError):
        sf.synth_series("nope", 4, 4, 10)
    with pytest.raises(ValueError):
        sf.Placement(2, 2, [0, 0])
