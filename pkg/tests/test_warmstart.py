import math

import numpy as np
import pytest

from oracles import dual_vertices
from small import desk_instance, tiny_instance
from seqsaa.bundle import solve_sample_path
from seqsaa.errors import DualInfeasible
from seqsaa.model import aggregate_cut, evaluate_batch, solve_extensive_form
from seqsaa.sampling import StreamKey, draw_iid
from seqsaa.warmstart import DualPool, harvest, pool_add, warm_start, warmstart_master


@pytest.mark.parametrize("seed", range(3))
@pytest.mark.parametrize("blocks", [1, 2])
def test_complete_pool_recovers_sample_optimum(seed, blocks):
    inst = tiny_instance(seed, continuous=True)
    sset = draw_iid(inst.model, StreamKey(seed), 25)
    z_star = solve_extensive_form(inst, sset)[0]
    pool = DualPool.for_instance(inst)
    for v in dual_vertices(inst.W, inst.d):
        pool_add(pool, v)
    x0, z0, cuts = warmstart_master(inst, sset, pool, np.array([0.0, 0.0, 10.0]), blocks=blocks)
    assert z0 == pytest.approx(z_star, abs=1e-9 * (1 + abs(z_star)))
    assert {c.origin for c in cuts} == {"warmstart"}


@pytest.mark.parametrize("seed", range(4))
def test_partial_pool_gives_valid_lower_bound(seed):
    inst, sset = desk_instance(seed, m=30)
    old = draw_iid(inst.model, StreamKey(seed + 100), 30)
    res = solve_sample_path(inst, old)
    pool = DualPool.for_instance(inst)
    harvest(pool, res.duals)
    assert len(pool) > 0
    z_star = solve_extensive_form(inst, sset)[0]
    ws = warm_start(inst, sset, pool, res.x)
    assert ws.z_low <= z_star + 1e-9 * (1 + abs(z_star))
    assert inst.contains(ws.x0)
    # every warm-start cut minorizes the sampled recourse everywhere we look
    vals, duals = evaluate_batch(inst, ws.x0, sset)
    for cut in ws.cuts:
        assert cut(ws.x0) <= vals.mean() + 1e-9 * (1 + abs(vals.mean()))


def test_empty_pool_is_a_no_op():
    inst = tiny_instance()
    sset = draw_iid(inst.model, StreamKey(0), 5)
    start = np.array([1.0, 2.0, 7.0])
    x0, z0, cuts = warmstart_master(inst, sset, DualPool.for_instance(inst), start)
    assert np.array_equal(x0, start) and z0 == -math.inf and cuts == []


def test_pool_rejects_infeasible_and_dedups():
    inst = tiny_instance()
    pool = DualPool.for_instance(inst)
    with pytest.raises(DualInfeasible):
        pool_add(pool, np.array([-1.0, 0.0]))
    with pytest.raises(DualInfeasible):
        pool_add(pool, np.array([100.0, 0.0]))
    assert pool_add(pool, np.array([1.0, 1.0])) == "inserted"
    assert pool_add(pool, np.array([1.0, 1.0 + 1e-9])) == "duplicate"
    assert len(pool) == 1


def test_pool_evicts_least_recently_used():
    inst = tiny_instance()
    pool = DualPool.for_instance(inst, cap=3)
    for v in ([0.5, 0.0], [1.0, 0.0], [1.5, 0.0]):
        pool_add(pool, np.array(v))
    pool.touch([0])
    pool_add(pool, np.array([2.0, 0.0]))
    kept = sorted(map(tuple, pool.duals))
    assert kept == [(0.5, 0.0), (1.5, 0.0), (2.0, 0.0)]


def test_pool_dump_lists_rows():
    inst = tiny_instance()
    pool = DualPool.for_instance(inst)
    pool_add(pool, np.array([0.25, 1.0]))
    assert pool.dump() == "0.25 1.0\n"


def test_warm_cut_equals_aggregate_cut_when_pool_holds_the_optimal_duals():
    inst = tiny_instance(2, continuous=True)
    sset = draw_iid(inst.model, StreamKey(3), 10)
    x = np.array([4.0, 3.0, 3.0])
    _, duals = evaluate_batch(inst, x, sset)
    pool = DualPool.for_instance(inst)
    for v in dual_vertices(inst.W, inst.d):
        pool_add(pool, v)
    _, _, cuts = warmstart_master(inst, sset, pool, x, blocks=1)
    g, beta = aggregate_cut(sset, duals)
    assert cuts[0](x) == pytest.approx(g @ x + beta, abs=1e-10)
