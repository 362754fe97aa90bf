import math

import pytest

import imploss as il


@pytest.fixture(scope="module")
def world():
    spec = il.WorldSpec()
    spec.K = 8
    spec.C = 3
    spec.d = 16
    spec.label_shift = 0.5
    spec.seed = 42
    return il.make_world(spec)


def test_featurize_unit_norm():
    vec = il.featurize("the cash flow rose", il.DEFAULT_FEATURE_DIM)
    assert vec
    norm = math.sqrt(sum(v * v for _, v in vec))
    assert norm == pytest.approx(1.0, abs=1e-12)
    assert il.featurize("", 16) == []


def test_dataset_round_trip(tmp_path, world):
    ds = il.sample(world, il.Which.P, 100, 7)
    path = str(tmp_path / "ds.jsonl")
    il.save_dataset(ds, path)
    back = il.load_dataset(path, il.FileFormat.jsonl,
                           num_classes=ds.num_classes,
                           feature_dim=ds.feature_dim)
    assert len(back) == len(ds)
    assert back.examples[0] == ds.examples[0]


def test_split_partitions(world):
    ds = il.sample(world, il.Which.Q, 90, 8)
    parts = il.split(ds, [1 / 3, 1 / 3, 1 / 3], 9)
    assert [len(p) for p in parts] == [30, 30, 30]


def test_train_evaluate_deterministic(world):
    ds = il.sample(world, il.Which.Q, 600, 10)
    cfg = il.TrainConfig()
    cfg.epochs = 5
    cfg.seed = 11
    a = il.train(ds, cfg, il.WeightProvider.uniform())
    b = il.train(ds, cfg, il.WeightProvider.uniform())
    assert a.params.w1 == b.params.w1
    report = il.evaluate(a.params, ds)
    assert 0.0 <= report.accuracy <= 1.0
    assert report.n_examples == 600
    assert len(a.history.epochs) == 5


def test_imp_and_dimp_pipeline(world):
    q_train = il.sample(world, il.Which.Q, 800, 12)
    p_small = il.sample(world, il.Which.P, 200, 13)

    cc = il.TrainConfig()
    cc.epochs = 8
    cc.seed = 14
    qc = il.fit_quality_checker(p_small, cc)
    dc = il.fit_diversity_checker(q_train, cc)
    quality = il.score_dataset(qc, q_train)
    diversity = il.score_dataset(dc, q_train)
    assert all(0.0 < s <= 1.0 for s in quality)

    cfg = il.TrainConfig()
    cfg.epochs = 10
    cfg.seed = 15

    cfg.loss_kind = il.LossKind.ce
    ce = il.train(q_train, cfg, il.WeightProvider.uniform())
    cfg.loss_kind = il.LossKind.imp
    imp = il.train(q_train, cfg, il.make_imp_provider(quality, diversity))
    cfg.loss_kind = il.LossKind.dimp
    dimp = il.train(q_train, cfg, il.make_dimp_provider(quality))

    ce_risk = il.exact_expected_ce(world, il.Which.P, ce.params)
    assert il.exact_expected_ce(world, il.Which.P, imp.params) < ce_risk
    assert il.exact_expected_ce(world, il.Which.P, dimp.params) < ce_risk


def test_exact_identity(world):
    params = il.init_params(world.feature_dim, world.num_classes, seed=16)
    lhs = il.exact_weighted_expectation(world, params)
    rhs = il.exact_expected_ce(world, il.Which.P, params)
    assert lhs == pytest.approx(rhs, abs=1e-12)
    assert il.true_conditional_kl(world, il.KlDirection.P_given_Q) >= 0.0


def test_weights_and_errors():
    assert il.focal_weight(0.5, 2.0) == pytest.approx(0.25)
    assert il.imp_weight(0.9, 0.45) == pytest.approx(2.0)
    assert il.dimp_weight(0.9, 0.3) == pytest.approx(3.0)
    with pytest.raises(ValueError):
        il.focal_weight(0.0, 1.0)
    with pytest.raises(ValueError):
        il.make_dimp_provider([1.5])


def test_noise_injectors(world):
    ds = il.sample(world, il.Which.P, 30, 17)
    swapped = il.inject_label_swap(ds, 1.0, 18)
    assert all(a.label != b.label
               for a, b in zip(swapped.examples, ds.examples))
    doubled = il.inject_duplicates(ds, 1.0, 19)
    assert len(doubled) == 60
    assert doubled.examples[-1].tag == il.SourceTag.duplicated


def test_params_round_trip(tmp_path, world):
    ds = il.sample(world, il.Which.Q, 200, 20)
    cfg = il.TrainConfig()
    cfg.epochs = 3
    result = il.train(ds, cfg, il.WeightProvider.uniform())
    path = str(tmp_path / "model.json")
    il.save_params(result.params, path)
    back = il.load_params(path)
    assert back.w1 == result.params.w1
    assert il.predict_class(back, ds.examples[0].features) == il.predict_class(
        result.params, ds.examples[0].features)
