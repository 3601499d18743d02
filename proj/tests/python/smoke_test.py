"""Smoke tests for the pyflame module against the C++ core."""

import math
import sys

import numpy as np

import pyflame


def make_dataset(seed=0, n=40, d=3, sep=1.0):
    rng = np.random.default_rng(seed)
    half = n // 2
    x = rng.normal(size=(n, d))
    x[:half, 0] += sep
    x[half:, 0] -= sep
    y = np.ones(n)
    y[half:] = -1.0
    return pyflame.LabeledDataset(x, y)


def test_losses():
    assert pyflame.dwd_loss(1.0, 1.0) == 1.0
    assert pyflame.dwd_loss(0.0, 1.0) == 2.0
    assert pyflame.modified_hinge(0.25, 4.0) == 1.0
    for u in np.linspace(-3, 3, 50):
        assert abs(pyflame.flame_loss(u, 2.0, 0.0) - pyflame.dwd_loss(u, 2.0)) < 1e-12
        assert abs(pyflame.flame_loss(u, 2.0, 1.0) - pyflame.modified_hinge(u, 2.0)) < 1e-12


def test_fit_and_predict():
    data = make_dataset(seed=3)
    config = pyflame.FlameConfig.norm_ball(0.5)
    result = pyflame.fit_socp(data, config)
    assert result.diagnostics.converged
    assert np.linalg.norm(result.model.direction) <= 1.0 + 1e-6
    margins = pyflame.functional_margins(result.model, data)
    assert margins.shape == (40,)
    # A well separated fresh point lands on the positive side.
    x = np.zeros(3)
    x[0] = 4.0
    assert pyflame.predict_label(result.model, x) == 1.0

    pen = pyflame.FlameConfig.penalized(0.5, 0.5)
    pen_result = pyflame.fit_penalized(data, pen)
    angle = pyflame.angle_between_degrees(result.model.direction,
                                          pen_result.model.direction)
    assert angle < 45.0


def test_metrics():
    assert pyflame.mean_within_class_error(np.array([1.0, -1.0]), np.array([1.0, -1.0])) == 0.0
    assert pyflame.rank_comp(np.array([1.0, 2.0]), np.array([2.0, 1.0])) == 1.0
    assert abs(pyflame.angle_between_degrees(np.array([1.0, 0.0]),
                                             np.array([0.0, 1.0])) - 90.0) < 1e-12
    disp = pyflame.dispersion([np.array([1.0, 0.0]), np.array([0.0, 1.0])])
    assert abs(disp - 1.0) < 1e-12


def test_simulation_and_bayes():
    spec = pyflame.TwoClassGaussianSpec()
    spec.covariance = pyflame.CovarianceSpec.interchangeable(4, 0.3)
    spec.mu_plus = np.full(4, 0.5)
    spec.mu_minus = -np.full(4, 0.5)
    spec.n_plus = 30
    spec.n_minus = 60
    spec.seed = 11
    data = pyflame.sample_two_class(spec)
    assert data.n == 90
    assert data.n_plus == 30
    again = pyflame.sample_two_class(spec)
    assert np.array_equal(np.asarray(data.features), np.asarray(again.features))

    sigma = pyflame.make_covariance(spec.covariance)
    bayes = pyflame.bayes_rule(spec.mu_plus, spec.mu_minus, sigma)
    assert abs(bayes.intercept) < 1e-12  # symmetric means


def test_theory_helpers():
    fm = pyflame.fisher_minimizer(0.8, 1.0)
    assert not fm.is_interval
    assert abs(fm.value - 2.0) < 1e-12
    half = pyflame.fisher_minimizer(0.5, 4.0)
    assert half.is_interval and half.lo == -0.5 and half.hi == 0.5

    regime = pyflame.hdlss_regime(0.0, 1.0, 1000, 0.5, 1.0, 1.0, 4, 16)
    assert regime.interval == pyflame.HdlssInterval.DwdLike
    geom = pyflame.simplex_geometry(0.0, 1.0, 400, 1.0, 9.0)
    assert abs(geom.a / geom.b - 1.0 / 3.0) < 1e-12


def test_tuning():
    data = make_dataset(seed=9, n=36, d=2, sep=0.8)
    config = pyflame.FlameConfig.penalized(0.0, 0.5)
    config.max_iterations = 20000
    theta, thetas, objectives, terminated = pyflame.adaptive_theta(data, config, 20)
    assert 0.0 <= theta <= 1.0
    assert all(b <= a + 1e-9 for a, b in zip(objectives, objectives[1:]))


def main():
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for test in tests:
        test()
        print(f"ok {test.__name__}")
    print(f"pyflame smoke: {len(tests)} tests passed")


if __name__ == "__main__":
    sys.exit(main())
