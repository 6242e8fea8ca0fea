import csv
import io
import json
import math

import numpy as np
import pytest

from seqsaa.benchlab import (
    FAMILIES,
    ZERO,
    Geometric,
    GeneratorSpec,
    covers,
    fit_loglog,
    generate_deak_like,
    ground_truth,
    lemma_prox_harness,
    probe_recourse,
    run_replications,
)
from seqsaa.benchlab.lemma import Family
from seqsaa.benchlab.reports import TRAJECTORY_FIELDS, rates_csv, summary_csv, to_json, trajectory_csv
from seqsaa.errors import InsufficientData, InvalidSpec
from seqsaa.instances import builtin, lands
from seqsaa.model import dumps_instance, solve_extensive_form
from seqsaa.sequential import Schedule, SeqConfig, true_gap


@pytest.mark.parametrize("spec", [GeneratorSpec(), GeneratorSpec(60, 30, 30, 20, 500, "high", 3),
                                  GeneratorSpec(8, 3, 6, 4, 30, seed=5, random_T=True)])
def test_generated_instances_pass_load_checks(spec):
    inst = generate_deak_like(spec).check()
    assert probe_recourse(inst, 50) == 50
    assert inst.model.support_size == spec.support
    assert np.all(inst.d >= 0)


def test_generator_is_deterministic_and_seed_sensitive():
    a = generate_deak_like(GeneratorSpec(seed=1))
    b = generate_deak_like(GeneratorSpec(seed=1))
    c = generate_deak_like(GeneratorSpec(seed=2))
    assert dumps_instance(a) == dumps_instance(b) != dumps_instance(c)


def test_high_variance_triples_spread():
    lo = generate_deak_like(GeneratorSpec(seed=4))
    hi = generate_deak_like(GeneratorSpec(seed=4, variance="high"))
    assert np.allclose(hi.model.factors[0].h_rows, 3 * lo.model.factors[0].h_rows)


@pytest.mark.parametrize("bad", [dict(n1=0), dict(r1=40), dict(n2=20, r2=20), dict(variance="wild")])
def test_generator_spec_validation(bad):
    with pytest.raises(InvalidSpec):
        GeneratorSpec(**bad)


def test_generator_spec_dict_round_trip():
    spec = GeneratorSpec(10, 4, 8, 5, 20, "high", 9)
    assert GeneratorSpec.from_dict(spec.to_dict()) == spec
    with pytest.raises(InvalidSpec):
        GeneratorSpec.from_dict({"n1": 3, "colour": "red"})


def test_ground_truth_cache_round_trip(tmp_path):
    inst = builtin("pgp2")
    first = ground_truth(inst, directory=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1
    again = ground_truth(inst, directory=tmp_path)
    assert again.z_star == first.z_star
    assert first.primal == pytest.approx(first.dual, rel=1e-8)
    assert first.gap(inst, first.x_star) == pytest.approx(0.0, abs=1e-7 * (1 + abs(first.z_star)))


def test_corrupt_cache_is_recomputed(tmp_path):
    inst = lands()
    good = ground_truth(inst, directory=tmp_path)
    path = next(tmp_path.iterdir())
    data = json.loads(path.read_text())
    data["z_star"] += 1.0
    path.write_text(json.dumps(data))
    assert ground_truth(inst, directory=tmp_path).z_star == good.z_star
    path.write_text("{not json")
    assert ground_truth(inst, directory=tmp_path).z_star == good.z_star


def test_cache_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("SEQSAA_CACHE", str(tmp_path / "c"))
    ground_truth(lands())
    assert len(list((tmp_path / "c").iterdir())) == 1


def test_truth_agrees_with_extensive_form_and_true_gap():
    inst = lands()
    t = ground_truth(inst, use_cache=False)
    support, probs = inst.model.enumerate_support()
    assert t.z_star == solve_extensive_form(inst, support, probs)[0]
    x = np.array([3.0, 4.0, 3.0, 2.0, 0.0, 2.0])
    assert t.gap(inst, x) == pytest.approx(true_gap(x, inst), abs=1e-9)


def test_covers():
    assert covers(0.5, 0.5, 100.0)
    assert covers(-0.1, 0.0, 100.0)
    assert not covers(0.6, 0.5, 100.0)


def test_replications_table_and_determinism():
    cfg = SeqConfig(lands(), seed=10)
    truth = ground_truth(lands())
    a = run_replications(cfg, 3, truth)
    b = run_replications(cfg, 3, truth, workers=3)
    assert summary_csv([a.table]) == summary_csv([b.table])
    t = a.table
    assert t.R == t.completed == 3 and t.failures == 0
    assert [r.seed for r in a.reports] == [10, 11, 12]
    assert t.mean_L == sum(r.L for r in a.reports) / 3
    assert 0.0 <= t.coverage <= 1.0
    assert all(not math.isnan(s.true_gap) for r in a.reports for s in r.trajectory)


def test_loglog_fit_recovers_power_law():
    w = np.array([1e2, 1e3, 1e4, 1e5, 1e6])
    fit = fit_loglog("p", w, 3.0 * w ** -0.5, floor=0.0)
    assert fit.slope == pytest.approx(-0.5, abs=1e-12) and fit.se < 1e-10
    assert fit.intercept == pytest.approx(math.log(3.0))
    with pytest.raises(InsufficientData):
        fit_loglog("p", w, np.array([1, 1, 1e-9, 1e-9, 1e-9]), floor=1e-6)


@pytest.mark.parametrize("name", sorted(FAMILIES))
@pytest.mark.parametrize("seq", [Geometric(1.0, 0.5), Geometric(0.3, 0.9), ZERO])
def test_lemma_harness_families(name, seq):
    rec = lemma_prox_harness(seq, seq, name, K=20)
    assert rec.ok and len(rec.rows) == 40


def test_lemma_harness_detects_a_false_growth_constant():
    wrong = Family("abs-bad-tau", abs, FAMILIES["abs"].tilt_min, 0.0, 0.0, 0.0, gamma=1.0, tau=1e3)
    rec = lemma_prox_harness(Geometric(1.0, 0.5), Geometric(1.0, 0.5), wrong, K=5, strict=False)
    assert not rec.ok
    with pytest.raises(AssertionError):
        lemma_prox_harness(Geometric(1.0, 0.5), Geometric(1.0, 0.5), wrong, K=5)


def test_geometric_tails_are_exact():
    g = Geometric(2.0, 0.5)
    assert g.tail(3) == math.fsum(g.term(j) for j in range(3, 80))
    assert g.alt_tail(2) == pytest.approx(math.fsum((-1) ** j * g.term(j) for j in range(3, 80)), abs=1e-15)


class _State:
    def __init__(self, **kw):
        self.__dict__.update(kw)


def test_report_formats():
    st = _State(ell=1, m=100, n=50, inner_iters=2, lp_count=200, gap=0.1, eps=0.2, ci_upper=math.inf, true_gap=math.nan)
    text = trajectory_csv([("r0", [st])])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(TRAJECTORY_FIELDS)
    assert rows[1] == ["r0", "1", "100", "50", "2", "200", "0.1", "0.2", "inf", "nan"]
    assert json.loads(to_json({"a": math.inf, "b": math.nan, "c": [1.5]})) == {"a": "inf", "b": None, "c": [1.5]}
    fit = fit_loglog("x", [1, 10, 100, 1000], [1, 0.1, 0.01, 0.001], floor=0.0)
    assert rates_csv([fit]).splitlines()[0] == "label,slope,se,intercept,n_points"
