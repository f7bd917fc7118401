import json

import numpy as np
import pytest
from hypothesis import given

from fdivbandit.core import (BanditInstance, Dataset, FunctionClass, PreferenceDataset, Regularizer,
                             RngSeed, chi2, chi2_generator, gaussian, kl, load_dataset, make_rng,
                             policy_violations, validate_instance, xlogx_generator)

from strategies import instances


def test_valid_uniform_instance_has_no_violations(uniform_2x2):
    assert validate_instance(uniform_2x2) == []


def test_context_sum_violation_message():
    inst = BanditInstance([0.6, 0.6], np.full((2, 2), 0.5), np.full((2, 2), 0.5))
    assert validate_instance(inst) == ["context_dist sums to 1.2"]


def test_reward_range_violation_names_cell():
    inst = BanditInstance([0.5, 0.5], [[0.5, 1.5], [0.5, 0.5]], np.full((2, 2), 0.5))
    v = validate_instance(inst)
    assert len(v) == 1 and v[0].startswith("mean_reward[0,1] = 1.5")


def test_ref_policy_row_violation():
    inst = BanditInstance([1.0], [[0.5, 0.5]], [[0.7, 0.7]])
    assert validate_instance(inst) == ["ref_policy row 0 sums to 1.4"]


def test_shape_mismatch_rejected_at_construction():
    with pytest.raises(ValueError):
        BanditInstance([1.0], [[0.5, 0.5]], [[1.0]])


@given(instances())
def test_random_valid_instances_pass(inst):
    assert validate_instance(inst) == []


def test_instance_json_round_trip(tmp_path, uniform_2x2):
    inst = BanditInstance([0.25, 0.75], [[0.1, 0.9, 0.3]] * 2, [[0.2, 0.3, 0.5]] * 2, gaussian(0.5))
    path = tmp_path / "inst.json"
    inst.save(path)
    doc = json.loads(path.read_text())
    assert set(doc) == {"num_states", "num_actions", "context_dist", "mean_reward", "ref_policy", "noise"}
    assert doc["noise"] == {"kind": "gaussian", "sigma": 0.5}
    back = BanditInstance.load(path)
    assert np.array_equal(back.mean_reward, inst.mean_reward)
    assert back.noise == inst.noise
    uniform_2x2.save(path)
    assert json.loads(path.read_text())["noise"] == {"kind": "bernoulli"}


def test_instance_arrays_are_read_only(uniform_2x2):
    with pytest.raises(ValueError):
        uniform_2x2.mean_reward[0, 0] = 1.0


def test_rng_streams_are_reproducible_and_independent():
    a = make_rng(7, 3).random(5)
    assert np.array_equal(a, make_rng(7, 3).random(5))
    assert not np.array_equal(a, make_rng(7, 4).random(5))
    assert not np.array_equal(a, make_rng(8, 3).random(5))


def test_rng_stream_is_pinned():
    # PCG64 output is platform independent; freezing the first draws guards
    # against accidental changes to stream derivation.
    got = make_rng(0).random(3)
    assert np.allclose(got, [0.6369616873214543, 0.2697867137638703, 0.04097352393619469], rtol=0, atol=0)


def test_rng_seed_range():
    with pytest.raises(ValueError):
        RngSeed(-1)
    with pytest.raises(ValueError):
        RngSeed(2**64)
    RngSeed(2**64 - 1)


def test_regularizer_checks():
    assert kl(1.0).violations() == []
    assert chi2(2.0, 0.5).violations() == []
    assert xlogx_generator().alpha == 0.1
    assert Regularizer(1.0, "fdiv", xlogx_generator()).violations() == []
    bad = Regularizer(0.0, "fdiv", chi2_generator(1.0))
    assert "eta must be positive" in bad.violations()
    with pytest.raises(ValueError):
        Regularizer(-1.0)


def test_strong_convexity_grid_check_catches_weak_generator():
    gen = xlogx_generator()
    weak = Regularizer(1.0, "fdiv", type(gen)(gen.f, gen.f_prime, gen.f_second, 1.0))
    assert any("f''" in v for v in weak.violations())


def test_function_class_validation():
    with pytest.raises(ValueError, match="empty hypothesis class"):
        FunctionClass(np.zeros((0, 2, 2)))
    with pytest.raises(ValueError):
        FunctionClass(np.full((1, 2, 2), 1.2))
    F = FunctionClass(np.full((2, 2, 2), 0.5), 1)
    inst = BanditInstance([0.5, 0.5], np.full((2, 2), 0.5), np.full((2, 2), 0.5))
    assert F.violations(inst) == []
    other = inst.with_reward(np.full((2, 2), 0.4))
    assert F.violations(other) == ["member 1 is not the instance's mean reward"]


def test_policy_violations():
    assert policy_violations([[0.5, 0.5]]) == []
    assert policy_violations([[0.5, 0.6]]) == ["policy row 0 sums to 1.1"]
    assert policy_violations([[0.5, 0.5]], [[1.0, 0.0]]) == [
        "policy puts mass on (0,1) outside reference support"]


def test_dataset_csv_round_trip(tmp_path):
    d = Dataset([0, 1, 1], [1, 0, 1], [0.25, 1.0, -0.5])
    p = tmp_path / "d.csv"
    d.to_csv(p)
    assert p.read_text().splitlines()[0] == "s,a,r"
    back = load_dataset(p)
    assert isinstance(back, Dataset) and back.rows == d.rows

    pd = PreferenceDataset([0, 1], [1, 0], [0, 0], [1, 0])
    pd.to_csv(p)
    assert p.read_text().splitlines()[0] == "s,a1,a2,y"
    back = load_dataset(p)
    assert isinstance(back, PreferenceDataset) and back.rows == pd.rows


def test_dataset_rejects_bad_columns():
    with pytest.raises(ValueError):
        Dataset([0, 1], [0], [1.0])
    with pytest.raises(ValueError):
        Dataset([0], [0], [np.nan])
    with pytest.raises(ValueError):
        PreferenceDataset([0], [0], [1], [2])
    assert Dataset([0, 3], [0, 0], [1.0, 1.0]).violations(2, 2) == ["state index out of range"]
