import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from loopoffload.codegen import StaticOps, generate_artifact
from loopoffload.errors import DomainError, EmptyCandidates, InvalidConfig, ModelError, ReportParseError
from loopoffload.intensity import IntensityScore
from loopoffload.resources import (
    CATEGORIES,
    EfficiencyScore,
    efficiency_scores,
    estimate_resources,
    load_cost_model,
    make_estimate,
    model_fractions,
    parse_external_report,
    rank_efficiency,
    resource_efficiency,
    select_top_c,
)

from conftest import loops_of

MODEL = load_cost_model()


def test_efficiency_worked_values():
    assert resource_efficiency(10, 0.5) == 20
    assert resource_efficiency(3, 0.3) == 10
    assert resource_efficiency(0, 0.4) == 0


@pytest.mark.parametrize("frac", [0, -0.1])
def test_efficiency_domain(frac):
    with pytest.raises(DomainError):
        resource_efficiency(1, frac)


def test_configured_fractions_reproduced_and_ordered():
    est = {1: make_estimate({c: 0.5 for c in CATEGORIES}), 2: make_estimate({c: 0.3 for c in CATEGORIES})}
    scores = efficiency_scores([IntensityScore(1, 0, 1, 0, 10.0), IntensityScore(2, 0, 1, 0, 3.0)], est)
    assert [(s.loop_id, s.resource_fraction, s.efficiency) for s in scores] == [(1, 0.5, 20.0), (2, 0.3, 10.0)]


def test_empty_kernel_is_base_only():
    assert model_fractions(StaticOps(), 1, MODEL) == MODEL.base


def test_unroll_doubles_op_part():
    ops = StaticOps(add=3, mul=2, div=1, other=1, access=4)
    one = model_fractions(ops, 1, MODEL)
    two = model_fractions(ops, 2, MODEL)
    for c in CATEGORIES:
        assert math.isclose(two[c] - MODEL.base[c], 2 * (one[c] - MODEL.base[c]), rel_tol=1e-12, abs_tol=1e-15)


def test_aggregate_is_max_and_fits_follows_cap():
    e = make_estimate({"lut": 0.2, "ff": 0.9, "dsp": 0.1, "bram": 0.4}, cap=0.8)
    assert e.aggregate == 0.9 and not e.fits
    assert make_estimate({c: 0.8 for c in CATEGORIES}, cap=0.8).fits


def test_estimate_from_artifact():
    unit, loops = loops_of("#define N 8\nfloat a[N], b[N];\nvoid f(void){int i; for(i=0;i<N;i++) a[i]=b[i]*2.0f;}")
    est = estimate_resources(generate_artifact(loops, unit), MODEL)
    assert est.source == "model" and est.fits
    assert est.aggregate == max(est.fractions().values())


def test_external_report_parity():
    unit, loops = loops_of("#define N 8\nfloat a[N], b[N];\nvoid f(void){int i; for(i=0;i<N;i++) a[i]=b[i]+1.0f;}")
    est = estimate_resources(generate_artifact(loops, unit), MODEL)
    back = parse_external_report(json.dumps(est.fractions()))
    assert back.fractions() == est.fractions()
    assert (back.aggregate, back.fits) == (est.aggregate, est.fits)
    assert back.source == "external_report"


@pytest.mark.parametrize("text", ["{", "[1]", '{"lut": 0.1}', '{"lut":0.1,"ff":0.1,"dsp":0.1,"bram":-1}',
                                  '{"lut":"x","ff":0.1,"dsp":0.1,"bram":0.1}'])
def test_external_report_malformed(text):
    with pytest.raises(ReportParseError):
        parse_external_report(text)


def test_cost_model_errors(tmp_path):
    with pytest.raises(ModelError):
        load_cost_model(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text('{"base": {"lut": -1}, "per_op": {}}')
    with pytest.raises(ModelError):
        load_cost_model(bad)
    bad.write_text('{"base": {}, "per_op": {"shift": {}}}')
    with pytest.raises(ModelError):
        load_cost_model(bad)


def test_top_c_counts_and_fit_rule():
    scores = rank_efficiency([EfficiencyScore(i, 1, 0.1, float(10 - i), fits=True) for i in range(1, 6)])
    assert [s.loop_id for s in select_top_c(scores, 3)] == [1, 2, 3]
    over = rank_efficiency([EfficiencyScore(9, 100, 1.2, 1e6, fits=False)] + scores)
    assert 9 not in [s.loop_id for s in select_top_c(over, 3)]
    with pytest.raises(EmptyCandidates):
        select_top_c([EfficiencyScore(9, 100, 1.2, 1e6, fits=False)], 3)
    with pytest.raises(InvalidConfig):
        select_top_c(scores, 0)


def test_top_c_tie_by_loop_id():
    scores = [EfficiencyScore(4, 1, 0.1, 10.0), EfficiencyScore(2, 1, 0.1, 10.0)]
    assert [s.loop_id for s in select_top_c(scores, 2)] == [2, 4]


pos = st.floats(1e-3, 1e3, allow_nan=False)


@given(st.lists(st.tuples(st.floats(0.1, 1e6), st.floats(0.01, 2.0)), min_size=1, max_size=12), pos, pos)
def test_efficiency_ranking_scale_invariant(pairs, ki, kr):
    def order(kint, kres):
        intens = [IntensityScore(i + 1, 0, 1, 0, v * kint) for i, (v, _) in enumerate(pairs)]
        est = {i + 1: make_estimate({c: r * kres for c in CATEGORIES}, cap=1e9) for i, (_, r) in enumerate(pairs)}
        return [(s.loop_id, s.efficiency) for s in efficiency_scores(intens, est)]

    base = order(1, 1)
    scaled = order(ki, kr)
    # compare orders only where the base efficiencies are clearly distinct
    effs = [e for _, e in base]
    if all(abs(a - b) > 1e-9 * max(abs(a), abs(b)) for a, b in zip(effs, effs[1:])):
        assert [i for i, _ in base] == [i for i, _ in scaled]


ops = st.builds(StaticOps, *(st.integers(0, 50) for _ in range(5)))


@given(ops, st.integers(1, 8), st.sampled_from(["add", "mul", "div", "other", "access"]), st.integers(1, 5))
def test_model_monotone_in_ops_and_b(o, b, kind, extra):
    base = model_fractions(o, b, MODEL)
    more = model_fractions(StaticOps(**{**o.__dict__, kind: getattr(o, kind) + extra}), b, MODEL)
    wider = model_fractions(o, b + 1, MODEL)
    for c in CATEGORIES:
        assert more[c] >= base[c]
        assert wider[c] >= base[c]
