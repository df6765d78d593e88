import numpy as np
import pytest

from mtuplift import datagen
from mtuplift.baselearn import sigmoid
from mtuplift.errors import ValidationError
from mtuplift.evaluate import policy_value
from mtuplift.selection import NONE, Assignment


def _config(taus, n=20_000, seed=0, probs=None):
    K = len(taus)
    return datagen.GeneratorConfig(
        n=n,
        d=2,
        assignment_probs=probs or (1.0 / (K + 1),) * K + (1.0 - K / (K + 1),),
        base_weights=(0.3, -0.2),
        base_intercept=-1.0,
        tau_specs=tuple(taus),
        seed=seed,
    )


def _arm_effect(ds, t):
    return ds.outcomes[ds.treatments == t].mean() - ds.outcomes[ds.treatments == 0].mean()


def test_null_effects():
    ds, truth = datagen.generate(_config([datagen.ConstantTau(0.0)] * 2, seed=3))
    assert np.all(truth.tau == 0.0)
    for t in (1, 2):
        assert abs(_arm_effect(ds, t)) <= 0.015


def test_constant_effect():
    ds, _ = datagen.generate(_config([datagen.ConstantTau(0.10)], seed=4))
    assert abs(_arm_effect(ds, 1) - 0.10) <= 0.015


def test_seed_determinism_and_sensitivity():
    a, ta = datagen.default_campaign(seed=9)
    b, tb = datagen.default_campaign(seed=9)
    c, _ = datagen.default_campaign(seed=10)
    for name in ("features", "treatments", "outcomes"):
        assert np.array_equal(getattr(a, name), getattr(b, name))
    assert np.array_equal(ta.tau, tb.tau)
    assert not np.array_equal(a.features, c.features)


def test_default_campaign_shape_and_tau():
    ds, truth = datagen.default_campaign(seed=0)
    assert (ds.n, ds.d, ds.K) == (20_000, 5, 2)
    assert ds.has_control and ds.binary_outcome
    x = ds.features
    np.testing.assert_array_equal(truth.tau[:, 0], 0.05 + 0.10 * sigmoid(2.0 * x[:, 0]))
    np.testing.assert_array_equal(truth.tau[:, 1], np.clip(0.08 + 0.02 * x[:, 1], 0.0, 0.16))
    assert abs(truth.tau[:, 0].mean() - 0.10) <= 0.01
    oracle = np.argmax(truth.tau, axis=1)
    assert min(np.mean(oracle == 0), np.mean(oracle == 1)) >= 0.10
    assert np.all((truth.base_prob >= 0.01) & (truth.base_prob <= 0.99))


def test_rct_independence():
    ds, _ = datagen.default_campaign(seed=2)
    for t in (1, 2):
        indicator = (ds.treatments == t).astype(float)
        for j in range(ds.d):
            assert abs(np.corrcoef(indicator, ds.features[:, j])[0, 1]) < 0.03


def test_probabilities_clipped():
    cfg = _config([datagen.ConstantTau(0.9), datagen.ConstantTau(-0.9)], n=2000)
    _, truth = datagen.generate(cfg)
    for j in range(2):
        p = np.clip(truth.base_prob + truth.tau[:, j], 0.01, 0.99)
        assert np.all((p >= 0.01) & (p <= 0.99))


def test_oracle_assignment_is_optimal():
    _, truth = datagen.default_campaign(seed=0)
    ids = np.arange(len(truth.tau))
    best = np.argmax(truth.tau, axis=1) + 1
    oracle = policy_value(Assignment(ids, best, np.zeros(len(ids)), np.zeros(len(ids))), truth.tau, (1, 2))
    rng = np.random.default_rng(0)
    for _ in range(5):
        other = rng.choice([1, 2, NONE], size=len(ids))
        value = policy_value(Assignment(ids, other, np.zeros(len(ids)), np.zeros(len(ids))), truth.tau, (1, 2))
        assert value <= oracle


@pytest.mark.parametrize(
    "kwargs",
    [
        {"assignment_probs": (0.5, 0.6)},
        {"assignment_probs": (0.0, 1.0)},
        {"assignment_probs": (0.3, 0.3, 0.4)},
        {"base_weights": (1.0,)},
        {"n": 0},
    ],
)
def test_config_validation(kwargs):
    base = dict(n=10, d=2, assignment_probs=(0.5, 0.5), base_weights=(0.0, 0.0),
                base_intercept=0.0, tau_specs=(datagen.ConstantTau(0.1),))
    base.update(kwargs)
    with pytest.raises(ValidationError):
        datagen.GeneratorConfig(**base)


def test_tau_catalog():
    X = np.array([[-1.0, 2.0], [0.0, 0.0], [3.0, -1.0]])
    base = np.array([-1.0, 0.0, 1.0])
    assert datagen.ConstantTau(0.2)(X, base).tolist() == [0.2] * 3
    lin = datagen.LinearTau(0.1, (0.1, 0.0), 0.0, 0.3)(X, base)
    np.testing.assert_allclose(lin, [0.0, 0.1, 0.3])
    step = datagen.StepTau(1, 0.5, 0.01, 0.2)(X, base)
    assert step.tolist() == [0.2, 0.01, 0.01]
    shift = datagen.LogitShiftTau(1.0)(X, base)
    np.testing.assert_allclose(shift, sigmoid(base + 1.0) - sigmoid(base))


def test_parse_tau_spec():
    assert datagen.parse_tau_spec("constant:0.1", 2) == datagen.ConstantTau(0.1)
    assert datagen.parse_tau_spec("linear:0.1:0.5,0", 2) == datagen.LinearTau(0.1, (0.5, 0.0), -np.inf, np.inf)
    assert datagen.parse_tau_spec("step:2:0:0.01:0.1", 2) == datagen.StepTau(1, 0.0, 0.01, 0.1)
    assert datagen.parse_tau_spec("sigmoid:0.05:0.1:2:1", 2) == datagen.SigmoidTau(0.05, 0.1, 2.0, 0)
    for bad in ("linear:0.1:1", "wave:1", "constant:x", "constant", "step:0:0:0:1", "sigmoid:0:1:1:3"):
        with pytest.raises(ValidationError):
            datagen.parse_tau_spec(bad, 2)


def test_ground_truth_round_trip(tmp_path):
    _, truth = datagen.generate(datagen.default_config(seed=1, n=500))
    datagen.write_ground_truth_csv(truth, tmp_path / "g.csv")
    header = (tmp_path / "g.csv").read_text().splitlines()[0]
    assert header == "customer_id,true_tau_1,true_tau_2,base_prob"
    back = datagen.read_ground_truth_csv(tmp_path / "g.csv")
    assert np.array_equal(back.tau, truth.tau)
    assert np.array_equal(back.base_prob, truth.base_prob)
    assert back.customer_ids.tolist() == truth.customer_ids.tolist()
