import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import exact_mean_var, recourse_brute
from small import desk_instance, tiny_instance
from seqsaa.bundle import default_start
from seqsaa.errors import Infeasible, InvalidSpec, TooLarge
from seqsaa.instances import builtin, lands
from seqsaa.model import (
    TwoStageInstance,
    aggregate_cut,
    build_extensive_form,
    dumps_instance,
    evaluate_batch,
    evaluate_second_stage,
    instance_from_dict,
    instance_to_dict,
    loads_instance,
    mean_and_variance,
    sample_average,
    solve_extensive_form,
)
from seqsaa.sampling import ScenarioModel, StreamKey, draw_iid


def test_second_stage_matches_dual_enumeration():
    inst = tiny_instance(1)
    sset, _ = inst.model.enumerate_support()
    x = np.array([3.0, 4.0, 3.0])
    for i in range(len(sset)):
        sc = sset[i]
        res = evaluate_second_stage(inst, x, sc)
        assert res.status == "optimal"
        assert res.value == pytest.approx(recourse_brute(inst.W, inst.d, sc.h - sc.T @ x), abs=1e-10)
        assert res.dual @ (sc.h - sc.T @ x) == pytest.approx(res.value, abs=1e-10)


def test_batch_agrees_with_single_evaluations_and_thread_count():
    inst, sset = desk_instance(4, m=30)
    x = default_start(inst)
    v1, d1 = evaluate_batch(inst, x, sset, threads=1)
    v4, d4 = evaluate_batch(inst, x, sset, threads=4)
    assert np.array_equal(v1, v4) and np.array_equal(d1, d4)
    for i in (0, 7, 29):
        assert evaluate_second_stage(inst, x, sset[i]).value == pytest.approx(v1[i], abs=1e-9)


def test_duplicate_support_points_solved_once_same_answer():
    inst = lands()
    sset = draw_iid(inst.model, StreamKey(3), 200)
    assert len(np.unique(sset.support_index)) <= 3
    x = np.array([3.0, 4.0, 3.0, 2.0, 0.0, 2.0])
    assert inst.contains(x)
    vals, _ = evaluate_batch(inst, x, sset)
    for i in range(0, 200, 37):
        assert vals[i] == evaluate_second_stage(inst, x, sset[i]).value


def test_infeasible_reports_scenario():
    inst = tiny_instance()
    inst = TwoStageInstance("nocomplete", inst.A, inst.b, inst.c, inst.x_lower, inst.x_upper,
                            np.array([[1.0, 0.0], [0.0, 0.0]]), np.array([1.0, 1.0]), inst.model)
    sset = draw_iid(inst.model, StreamKey(0), 5)
    with pytest.raises(Infeasible) as info:
        evaluate_batch(inst, np.array([0.0, 0.0, 10.0]), sset)
    assert info.value.scenario is not None


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_aggregate_cut_is_a_minorant_tight_at_its_point(seed):
    inst = tiny_instance(seed % 5, continuous=True)
    sset = draw_iid(inst.model, StreamKey(seed), 20)
    rng = np.random.default_rng(seed)
    x0 = np.append(rng.dirichlet([1, 1]) * 10 * rng.uniform(0, 1), 0.0)
    x0[2] = 10 - x0[:2].sum()
    vals, duals = evaluate_batch(inst, x0, sset)
    g, beta = aggregate_cut(sset, duals)
    assert g @ x0 + beta == pytest.approx(vals.mean(), abs=1e-9)
    for _ in range(5):
        x = np.append(rng.uniform(0, 5, 2), 0.0)
        x[2] = 10 - x[:2].sum()
        assert g @ x + beta <= evaluate_batch(inst, x, sset)[0].mean() + 1e-9


def test_lands_extensive_form_optimum():
    inst = lands()
    support, probs = inst.model.enumerate_support()
    z, x, _, _ = solve_extensive_form(inst, support, probs)
    assert z == pytest.approx(381.853333, abs=1e-5)
    assert inst.contains(x)


def test_extensive_form_matches_sample_average_at_its_solution():
    inst, sset = desk_instance(2, m=15)
    z, x, _, _ = solve_extensive_form(inst, sset)
    mean, _ = sample_average(inst, x, sset)
    assert z == pytest.approx(float(inst.c @ x) + mean, rel=1e-9)


def test_extensive_form_size_cap():
    inst, sset = desk_instance(2, m=15)
    with pytest.raises(TooLarge):
        build_extensive_form(inst, sset, nnz_cap=10)


@pytest.mark.parametrize("name", ["lands", "gbd", "pgp2", "cep"])
def test_json_round_trip_preserves_fingerprint(name):
    inst = builtin(name)
    back = loads_instance(dumps_instance(inst))
    assert back.fingerprint() == inst.fingerprint()
    assert dumps_instance(back) == dumps_instance(inst)


def test_json_rejects_unknown_and_missing_keys():
    data = instance_to_dict(lands())
    with pytest.raises(InvalidSpec, match="unknown"):
        instance_from_dict({**data, "extra": 1})
    del data["W"]
    with pytest.raises(InvalidSpec, match="missing"):
        instance_from_dict(data)


def test_malformed_json_reports_position():
    with pytest.raises(InvalidSpec, match="line 2, column"):
        loads_instance('{\n  "n1": ,\n}')


def test_missing_upper_bounds_get_default_and_note():
    inst = tiny_instance()
    fresh = TwoStageInstance("nub", inst.A, inst.b, inst.c, None, None, inst.W, inst.d, inst.model)
    assert np.all(fresh.x_upper == 1e6) and fresh.notes
    with pytest.raises(InvalidSpec):
        TwoStageInstance("inf", inst.A, inst.b, inst.c, None, np.full(3, np.inf), inst.W, inst.d, inst.model)


def test_empty_first_stage_region_rejected():
    inst = tiny_instance()
    bad = TwoStageInstance("empty", inst.A, np.array([100.0]), inst.c, None, inst.x_upper, inst.W, inst.d, inst.model)
    with pytest.raises(InvalidSpec, match="empty"):
        bad.check()


def test_dimension_mismatch_rejected():
    inst = tiny_instance()
    with pytest.raises(InvalidSpec):
        TwoStageInstance("bad", inst.A, inst.b, inst.c, None, inst.x_upper, inst.W[:, :3], inst.d, inst.model)
    with pytest.raises(InvalidSpec):
        TwoStageInstance("bad", inst.A, inst.b, inst.c, None, inst.x_upper, inst.W, inst.d,
                         ScenarioModel(np.zeros(2), np.zeros((2, 2))))


floats = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


@settings(max_examples=200)
@given(st.lists(floats, min_size=1, max_size=60))
def test_moments_are_correctly_rounded(values):
    assert mean_and_variance(values) == exact_mean_var(values)


@given(st.lists(floats, min_size=2, max_size=30), st.randoms())
def test_moments_order_independent(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    assert mean_and_variance(values) == mean_and_variance(shuffled)


def test_variance_uses_divisor_m():
    assert mean_and_variance([1.0, 3.0]) == (2.0, 1.0)
