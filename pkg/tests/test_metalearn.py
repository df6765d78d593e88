import numpy as np
import pytest

from mtuplift import datagen
from mtuplift.baselearn import LinearModel, fit_ridge
from mtuplift.calibrate import CalibratedLearner
from mtuplift.dataset import CampaignDataset, filter_one_vs_control
from mtuplift.errors import FitError, ValidationError
from mtuplift.metalearn import (
    TREATMENT_INDICATOR,
    FittedMetaModel,
    MultiTreatmentModel,
    fit_multi_treatment,
    fit_s,
    fit_t,
    fit_x,
    predict_cate,
    predict_outcome,
    predict_uplift_matrix,
    propensity_weight,
)


@pytest.fixture(scope="module")
def small_campaign():
    return datagen.generate(datagen.default_config(seed=3, n=4000))[0]


@pytest.fixture(scope="module")
def binary_small(small_campaign):
    return filter_one_vs_control(small_campaign, 1)


def _ridge(c, d=2):
    return LinearModel(np.zeros(d), c, "ridge", tuple(f"x{j}" for j in range(d)))


def _logit(w, b):
    return LinearModel(np.asarray(w, dtype=float), b, "logistic")


def test_s_learner_layout(binary_small):
    model = fit_s(binary_small)
    assert model.s_model.feature_names[-1] == TREATMENT_INDICATOR
    assert model.s_model.feature_names.count(TREATMENT_INDICATOR) == 1
    assert model.s_model.dim == binary_small.d + 1
    X = binary_small.features[:5]
    w = model.s_model.weights
    z1 = model.s_model.decision_function(np.column_stack([X, np.ones(5)]))
    z0 = model.s_model.decision_function(np.column_stack([X, np.zeros(5)]))
    np.testing.assert_allclose(z1 - z0, w[-1], atol=1e-12)


def test_required_submodels(binary_small):
    for fit, present in ((fit_s, {"s_model"}), (fit_t, {"mu0", "mu1"}),
                         (fit_x, {"mu0", "mu1", "tau0", "tau1", "propensity"})):
        model = fit(binary_small)
        for name in ("s_model", "mu0", "mu1", "tau0", "tau1", "propensity"):
            assert (getattr(model, name) is not None) == (name in present)
    with pytest.raises(ValidationError):
        FittedMetaModel("T", ("x0",), mu0=_logit([0.0], 0.0))
    with pytest.raises(ValidationError):
        FittedMetaModel("Q", ("x0",))


def test_t_learner_arms_are_independent(binary_small):
    model = fit_t(binary_small)
    treated = binary_small.treatments == 1
    scrambled = binary_small.outcomes.copy()
    scrambled[~treated] = 1.0 - scrambled[~treated]
    other = CampaignDataset(binary_small.customer_ids, binary_small.features, binary_small.treatments,
                            scrambled, binary_small.feature_names)
    again = fit_t(other)
    assert again.mu1.same_as(model.mu1)
    assert not again.mu0.same_as(model.mu0)


def test_x_learner_g_in_clip_range(binary_small):
    model = fit_x(binary_small)
    g = propensity_weight(model, binary_small.features)
    assert np.all((g >= 0.01) & (g <= 0.99))
    cate = predict_cate(model, binary_small.features)
    assert np.all(np.abs(cate) <= 1.0)


def test_x_learner_pseudo_effects(binary_small):
    model = fit_x(binary_small)
    X, y, t = binary_small.features, binary_small.outcomes, binary_small.treatments == 1
    d1 = y[t] - model.mu0.predict_mean(X[t])
    d0 = model.mu1.predict_mean(X[~t]) - y[~t]
    assert fit_ridge(X[t], d1, 1e-3).same_as(LinearModel(model.tau1.weights, model.tau1.intercept, "ridge"))
    assert fit_ridge(X[~t], d0, 1e-3).same_as(LinearModel(model.tau0.weights, model.tau0.intercept, "ridge"))


def test_predict_cate_identities():
    X = np.random.default_rng(0).normal(size=(7, 2))
    s = FittedMetaModel("S", ("a", "b"), s_model=_logit([0.0, 0.0, 0.0], 0.3))
    assert np.all(predict_cate(s, X) == 0.0)
    mu = _logit([0.5, -1.0], 0.2)
    t = FittedMetaModel("T", ("a", "b"), mu0=mu, mu1=_logit([0.5, -1.0], 0.2))
    assert np.all(predict_cate(t, X) == 0.0)
    x = FittedMetaModel("X", ("a", "b"), mu0=mu, mu1=mu, tau0=_ridge(0.07), tau1=_ridge(0.07),
                        propensity=_logit([3.0, 1.0], 0.0))
    np.testing.assert_allclose(predict_cate(x, X), 0.07, atol=1e-15)
    for g in (0.0, 0.3, 1.0):
        np.testing.assert_allclose(predict_cate(x, X, propensity_override=g), 0.07, atol=1e-15)
    with pytest.raises(ValidationError):
        predict_cate(t, X[:, :1])


def test_predict_outcome(binary_small):
    model = fit_t(binary_small)
    X = binary_small.features[:4]
    out = predict_outcome(model, X, [1, 0, 1, 0])
    np.testing.assert_array_equal(out[[0, 2]], model.mu1.predict_proba(X[[0, 2]]))
    np.testing.assert_array_equal(out[[1, 3]], model.mu0.predict_proba(X[[1, 3]]))


def test_calibrated_learners_use_calibrated_outcomes(binary_small):
    model = fit_t(binary_small, calibrated=True, k=3)
    assert model.calibrated and isinstance(model.mu0, CalibratedLearner)
    p = predict_outcome(model, binary_small.features, binary_small.treatments)
    assert np.all((p >= 0) & (p <= 1))


def test_continuous_outcomes_use_ridge():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(400, 2))
    t = rng.integers(0, 2, 400)
    y = 1.0 + X[:, 0] + 2.0 * t + rng.normal(scale=0.1, size=400)
    ds = CampaignDataset([str(i) for i in range(400)], X, t, y)
    for fit in (fit_s, fit_t, fit_x):
        model = fit(ds)
        assert not model.binary_outcome
        assert np.mean(predict_cate(model, X)) == pytest.approx(2.0, abs=0.05)
    with pytest.raises(ValidationError):
        fit_t(ds, calibrated=True)


def test_fit_errors():
    X = np.zeros((4, 1))
    only_treated = CampaignDataset(list("abcd"), X, [1, 1, 1, 1], [0, 1, 0, 1])
    with pytest.raises(FitError):
        fit_t(only_treated)
    with pytest.raises(ValidationError):
        fit_t(CampaignDataset(list("abcd"), X, [0, 2, 0, 2], [0, 1, 0, 1]))
    with pytest.raises(FitError, match="no control"):
        fit_multi_treatment(only_treated)
    one_class = CampaignDataset(list("abcdef"), np.arange(6.0).reshape(-1, 1), [0, 0, 0, 1, 2, 2], [0, 1, 0, 1, 1, 0])
    with pytest.raises(FitError) as err:
        fit_multi_treatment(one_class, "T", calibrated=True, k=2)
    assert err.value.treatment == 1


def test_multi_treatment_k1_matches_single(binary_small):
    multi = fit_multi_treatment(binary_small, "T")
    single = fit_t(binary_small)
    assert multi.treatment_labels == (1,)
    assert multi.per_treatment[1].mu0.same_as(single.mu0)
    assert multi.per_treatment[1].mu1.same_as(single.mu1)
    np.testing.assert_array_equal(
        predict_uplift_matrix(multi, binary_small.features)[:, 0], predict_cate(single, binary_small.features)
    )


@pytest.mark.parametrize("kind", ["S", "T", "X"])
def test_multi_treatment_independence(small_campaign, kind):
    full = fit_multi_treatment(small_campaign, kind)
    keep = np.flatnonzero(small_campaign.treatments != 2)
    without_2 = fit_multi_treatment(small_campaign.take(keep), kind)
    a, b = full.per_treatment[1], without_2.per_treatment[1]
    for name in ("s_model", "mu0", "mu1", "tau0", "tau1", "propensity"):
        if getattr(a, name) is not None:
            assert getattr(a, name).same_as(getattr(b, name)), name


def test_uplift_matrix_shape_and_order():
    names = ("a", "b")
    models = {
        t: FittedMetaModel("X", names, mu0=_logit([0, 0], 0), mu1=_logit([0, 0], 0),
                           tau0=_ridge(c), tau1=_ridge(c), propensity=_logit([0, 0], 0))
        for t, c in ((3, 0.3), (1, 0.1), (2, 0.2))
    }
    multi = MultiTreatmentModel("X", names, models)
    S = predict_uplift_matrix(multi, np.zeros((5, 2)))
    assert S.shape == (5, 3)
    np.testing.assert_allclose(S, np.tile([0.1, 0.2, 0.3], (5, 1)), atol=1e-15)


def test_effect_ordering_is_recovered():
    strong = datagen.GeneratorConfig(
        n=20_000, d=2, assignment_probs=(0.4, 0.3, 0.3), base_weights=(0.2, 0.0), base_intercept=-1.5,
        tau_specs=(datagen.ConstantTau(0.12), datagen.LinearTau(0.04, (0.01, 0.0), 0.0, 0.08)), seed=1,
    )
    ds2, truth2 = datagen.generate(strong)
    assert np.all(truth2.tau[:, 0] > truth2.tau[:, 1])
    S2 = predict_uplift_matrix(fit_multi_treatment(ds2, "T"), ds2.features)
    assert S2[:, 0].mean() > S2[:, 1].mean()
