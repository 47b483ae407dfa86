"""Smoke tests for the Python bindings: a tiny end-to-end run per component."""

import math

import numpy as np
import pytest

import calnet


def chain_sensors():
    table = calnet.SensorTable()
    table.add(calnet.SensorInfo(0, calnet.SensorKind.Static, True))
    table.add(calnet.SensorInfo(1, calnet.SensorKind.Static, False))
    return table


def ratio_records(ratio=2.0, n=40, horizon=100.0):
    recs = []
    for i in range(n):
        t = horizon * i / n
        p = 50.0 + 20.0 * math.sin(t / 5.0)
        recs.append(calnet.ColocationRecord(t, t, 0, 1, p, ratio * p))
    return recs


def test_pair_vi_roundtrip(tmp_path):
    sensors = chain_sensors()
    records = ratio_records()
    phi = calnet.CalibrationFunction(calnet.CalibKind.LogScale)
    assign = calnet.KernelAssignment(sensors)
    assign.assign_all(calnet.KernelGroup.Static, calnet.KernelSpec.sum_eq_bias(0.3, 500.0, 0.3), 1)
    assign.assign_all(calnet.KernelGroup.Reference, calnet.KernelSpec.bias(1.0), 1)
    like = calnet.LikelihoodConfig(sigma2=4.0, gamma2=500.0)
    model = calnet.PairObservationModel(records, phi, sensors, like)

    Z = calnet.make_inducing_grid([1], 1, 0.0, 100.0, 5)
    opts = calnet.TrainOptions()
    opts.steps = 300
    opts.learning_rate = 0.05
    opts.seed = 1
    result = calnet.train_vi(model, Z, assign, opts)
    assert len(result.elbo_trace) == 300
    assert result.elbo_trace[-1] > result.elbo_trace[0]

    # The sensor reads 2x the reference, so calibration should roughly halve it.
    queries = [calnet.CalibrationQuery(1, r.t2) for r in records]
    preds = calnet.predict_calibration(result.state, assign, queries, phi, 20, seed=1)
    cal = [
        calnet.calibrate_measurement(p, phi, r.y2, False, like.sigma2)
        for p, r in zip(preds, records)
    ]
    truth = [r.y1 for r in records]
    assert calnet.nmse([c.mean for c in cal], truth) < 0.05
    assert calnet.nmse([r.y2 for r in records], truth) > 0.5

    # Checkpoints round-trip exactly.
    path = str(tmp_path / "ckpt.json")
    calnet.save_checkpoint(result.state, path)
    back = calnet.load_checkpoint(path)
    np.testing.assert_array_equal(np.asarray(back.m), np.asarray(result.state.m))

    # Same seed, same result.
    again = calnet.train_vi(model, Z, assign, opts)
    np.testing.assert_array_equal(np.asarray(again.state.m), np.asarray(result.state.m))


def test_multihop_direct_ratio():
    sensors = chain_sensors()
    records = ratio_records(ratio=2.0)
    params = calnet.MultihopParams()
    params.delta = 200.0
    table = calnet.build_graph(records, sensors, params)
    got = calnet.predict_multihop(table, calnet.MultihopQuery(1, 10.0, 80.0))
    assert got == pytest.approx(40.0, rel=1e-9)
    assert table.lookup(1, calnet.window_of(10.0, params.delta)) is not None
    assert table.lookup(1, 99) is None


def test_synthetic_pollution_determinism():
    sc = calnet.PollutionScenario()
    sc.horizon_hours = 240.0
    sc.seed = 7
    a = calnet.gen_pollution(sc)
    b = calnet.gen_pollution(sc)
    assert len(a.records) == len(b.records)
    assert all(x.y1 == y.y1 and x.t1 == y.t1 for x, y in zip(a.records, b.records))
    assert a.truth.pollution(12.0) == b.truth.pollution(12.0)


def test_categorical_pipeline():
    sc = calnet.CategoricalScenario()
    sc.seed = 3
    ds = calnet.gen_categorical(sc)
    assert len(ds.train_items) + len(ds.test_items) == sc.n_items
    pairs = calnet.make_label_pairs(ds)
    assert len(pairs) > len(ds.labels)

    by_item = calnet.labels_by_item(ds)
    votes = calnet.VoteBaselines(3)
    groups = [by_item.get(item, []) for item in ds.train_items]
    truths = [ds.truth[item] for item in ds.train_items]
    votes.fit(groups, truths)
    post = votes.predict(by_item[ds.test_items[0]], calnet.VoteMode.MostGuessed, 0.2)
    assert np.asarray(post).sum() == pytest.approx(1.0)

    prior = calnet.SpeciesPrior.uniform(3)
    assert np.asarray(prior.p).tolist() == pytest.approx([1 / 3] * 3)


def test_metrics_and_errors():
    assert calnet.nmse([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == 0.0
    assert calnet.mae([1.0, 3.0], [2.0, 4.0]) == 1.0
    with pytest.raises(ValueError):
        calnet.nmse([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        calnet.LikelihoodConfig(sigma2=-1.0, gamma2=1.0).validate()


def test_pair_loglik_matches_symmetry():
    sensors = chain_sensors()
    phi = calnet.CalibrationFunction(calnet.CalibKind.LogScale)
    cfg = calnet.LikelihoodConfig(sigma2=2.0, gamma2=30.0)
    rec = calnet.ColocationRecord(0.0, 0.0, 0, 1, 10.0, 11.0)
    ll = calnet.pair_loglik(rec, [], [0.1], phi, sensors, cfg)
    assert math.isfinite(ll)
