import numpy as np
import pytest

from mtuplift import datagen, modelio
from mtuplift.baselearn import LinearModel
from mtuplift.calibrate import CalibratedLearner
from mtuplift.dataset import filter_one_vs_control
from mtuplift.errors import DatasetError, ValidationError
from mtuplift.metalearn import fit_multi_treatment, fit_s, fit_t, fit_x, predict_cate, predict_uplift_matrix

SUBMODELS = ("s_model", "mu0", "mu1", "tau0", "tau1", "propensity")


@pytest.fixture(scope="module")
def campaign():
    return datagen.generate(datagen.default_config(seed=5, n=3000))[0]


def _same_outcome(a, b):
    if isinstance(a, LinearModel):
        return a.same_as(b)
    assert isinstance(b, CalibratedLearner) and a.k == b.k
    return all(
        ba.same_as(bb) and np.array_equal(ia.knots_x, ib.knots_x) and np.array_equal(ia.knots_y, ib.knots_y)
        for (ba, ia), (bb, ib) in zip(a.folds, b.folds)
    )


def _same_meta(a, b):
    assert (a.kind, a.feature_names, a.binary_outcome, a.calibrated) == (
        b.kind, b.feature_names, b.binary_outcome, b.calibrated)
    for name in SUBMODELS:
        x, y = getattr(a, name), getattr(b, name)
        assert (x is None) == (y is None), name
        if x is not None:
            assert _same_outcome(x, y), name


def test_linear_round_trip():
    rng = np.random.default_rng(0)
    m = LinearModel(rng.normal(size=4) * 1e-7, 1 / 3, "logistic", ("a", "b", "c", "d"))
    back = modelio.linear_from_text(modelio.linear_to_text(m))
    assert back.same_as(m)


@pytest.mark.parametrize("fit", [fit_s, fit_t, fit_x])
def test_meta_round_trip(campaign, fit):
    ds = filter_one_vs_control(campaign, 2)
    model = fit(ds)
    back = modelio.meta_from_text(modelio.meta_to_text(model))
    _same_meta(model, back)
    assert np.array_equal(predict_cate(model, ds.features), predict_cate(back, ds.features))


def test_calibrated_round_trip(campaign):
    model = fit_t(filter_one_vs_control(campaign, 1), calibrated=True, k=3)
    text = modelio.meta_to_text(model)
    assert "[mu0.fold2.iso]" in text
    _same_meta(model, modelio.meta_from_text(text))


def test_multi_directory_round_trip(campaign, tmp_path):
    model = fit_multi_treatment(campaign, "X")
    modelio.save_multi(model, tmp_path / "m", extra={"seed": 7})
    assert sorted(p.name for p in (tmp_path / "m").iterdir()) == [
        "manifest.txt", "treatment_1.model", "treatment_2.model"]
    assert modelio.read_manifest(tmp_path / "m")["seed"] == ["7"]
    back = modelio.load_multi(tmp_path / "m")
    assert back.treatment_labels == (1, 2) and back.kind == "X"
    for t in (1, 2):
        _same_meta(model.per_treatment[t], back.per_treatment[t])
    assert np.array_equal(predict_uplift_matrix(model, campaign.features), predict_uplift_matrix(back, campaign.features))
    # saving again replaces the directory
    modelio.save_multi(fit_multi_treatment(campaign, "S"), tmp_path / "m")
    assert modelio.load_multi(tmp_path / "m").kind == "S"


def test_malformed_documents():
    with pytest.raises(DatasetError):
        modelio.loads("")
    with pytest.raises(DatasetError):
        modelio.loads("mtuplift-model\t2\n")
    with pytest.raises(DatasetError):
        modelio.loads("mtuplift-model\t1\nkind\tT\n")
    with pytest.raises(DatasetError):
        modelio.meta_from_text("mtuplift-model\t1\n[meta]\nkind\tT\n")
    with pytest.raises(DatasetError):
        modelio.meta_from_text(modelio.dumps([("meta", {"kind": ["T"]})]))


def test_unserializable_names():
    m = LinearModel([1.0], 0.0, "ridge", ("bad\tname",))
    with pytest.raises(ValidationError):
        modelio.linear_to_text(m)
