import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial.transform import Rotation

from matagent import errors
from matagent.scoring import (
    AeCompletionFlags,
    AeItem,
    BsItem,
    ScoreBreakdown,
    ScoringOptions,
    SoapParams,
    SoapVector,
    SrItem,
    TsCompletionFlags,
    TsItem,
    aggregate_report,
    ratio_score,
    relative_error,
    score_ae,
    score_bs,
    score_sr,
    score_ts,
    soap_descriptor,
    soap_similarity,
    structure_similarity,
)
from matagent.scoring.tasks import ItemScore
from matagent.vasp_files.structure import CrystalStructure

from oracles import cluster, grid_soap
from strategies import random_cell

P = SoapParams()
finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


# -- ratio --------------------------------------------------------------------


def test_ratio_examples():
    assert ratio_score(1.17, 1.17) == 1.0
    assert ratio_score(1.0, 1.2) == pytest.approx(1 / 1.2, abs=1e-12)
    assert ratio_score(0.0, 0.0) == 1.0
    assert ratio_score(0.0, 0.5) == 0.0
    assert ratio_score(-1.8, -2.0) == pytest.approx(0.9, abs=1e-12)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_ratio_rejects_non_finite(bad):
    with pytest.raises(errors.NonFinite):
        ratio_score(bad, 1.0)
    with pytest.raises(errors.NonFinite):
        ratio_score(1.0, bad)


@given(finite, finite)
def test_ratio_symmetric_and_bounded(a, b):
    r = ratio_score(a, b)
    assert r == ratio_score(b, a)
    assert 0.0 <= r <= 1.0


@given(finite, finite, st.floats(1e-3, 1e3).flatmap(lambda k: st.sampled_from([k, -k])))
def test_ratio_scale_invariant(a, b, k):
    assert ratio_score(k * a, k * b) == pytest.approx(ratio_score(a, b), abs=1e-12)


@given(st.floats(0.01, 100), st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_ratio_monotone_toward_truth(truth, f1, f2):
    # two predictions on the same side of truth; the closer never scores worse
    for side in (lambda f: truth * f, lambda f: truth / max(f, 1e-9)):
        near, far = side(max(f1, f2)), side(min(f1, f2))
        assert ratio_score(near, truth) >= ratio_score(far, truth) - 1e-15


def test_small_error_regime():
    for re in np.linspace(0.0, 0.1, 100):
        pred = 1.3 * (1 - re)
        assert abs(ratio_score(pred, 1.3) - (1 - relative_error(pred, 1.3))) <= re**2 + 1e-15


def test_relative_error():
    assert relative_error(1.1, 1.0) == pytest.approx(0.1)
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(0.2, 0.0) == math.inf


# -- SOAP ---------------------------------------------------------------------


def rel(a, b):
    return np.linalg.norm(a.components - b.components) / np.linalg.norm(a.components)


def random_structures(n=20):
    out = []
    for seed in range(n):
        rng = np.random.default_rng(1000 + seed)
        species = [("Si",), ("Cu", "Ni"), ("C", "O", "Pt")][seed % 3]
        out.append(random_cell(rng, n_atoms=6 + seed % 3, species=species, a=7.0 + seed % 4, min_dist=1.5))
    return out


RANDOM = random_structures()


def diamond_si(reps=2):
    base = np.array([[0, 0, 0], [0, .5, .5], [.5, 0, .5], [.5, .5, 0],
                     [.25, .25, .25], [.25, .75, .75], [.75, .25, .75], [.75, .75, .25]])
    frac = np.concatenate([(base + np.array(s)) / reps for s in np.ndindex(reps, reps, reps)])
    return CrystalStructure("Si", 1.0, np.eye(3) * 5.43 * reps, ["Si"], [len(frac)], frac)


def test_params_validation():
    with pytest.raises(ValueError):
        SoapParams(n_max=0)
    with pytest.raises(ValueError):
        SoapParams(sigma=0.0)


def test_layout_length():
    v = soap_descriptor(RANDOM[2], P)
    assert v.species_pairs == (("C", "C"), ("C", "O"), ("C", "Pt"), ("O", "O"), ("O", "Pt"), ("Pt", "Pt"))
    assert v.components.shape == (6 * 8 * 8 * 7,)


def test_isolated_atom_is_pure_self_term():
    a = soap_descriptor(cluster([[0, 0, 0]], ["Cu"], [1]), P)
    b = soap_descriptor(cluster([[0, 0, 0]], ["Cu"], [1], box=14.0), P)
    assert np.allclose(a.components, b.components, rtol=0, atol=1e-15)
    # only l = 0 carries weight
    blk = a.components.reshape(8, 8, 7)
    assert np.abs(blk[:, :, 1:]).max() == 0.0
    assert np.abs(blk[:, :, 0]).max() > 0


@pytest.mark.parametrize("k", range(20))
def test_rotation_invariance(k):
    s = RANDOM[k]
    rot = Rotation.random(random_state=k).as_matrix()
    turned = CrystalStructure("r", s.scale, s.lattice @ rot.T, s.species, s.counts, s.fractional())
    assert rel(soap_descriptor(s, P), soap_descriptor(turned, P)) < 1e-8


@pytest.mark.parametrize("k", range(20))
def test_translation_invariance(k):
    s = RANDOM[k]
    shift = np.random.default_rng(k).normal(size=3) * 3.0
    moved = s.with_cartesian(s.cartesian() + shift)
    assert rel(soap_descriptor(s, P), soap_descriptor(moved, P)) < 1e-10


@pytest.mark.parametrize("k", range(20))
def test_permutation_invariance(k):
    s = RANDOM[k]
    rng = np.random.default_rng(k)
    frac = s.fractional()
    order, start = [], 0
    for c in s.counts:
        order.extend(start + rng.permutation(c))
        start += c
    shuffled = s.with_fractional(frac[order])
    assert rel(soap_descriptor(s, P), soap_descriptor(shuffled, P)) < 1e-10


@pytest.mark.parametrize("k", range(20))
def test_self_similarity(k):
    v = soap_descriptor(RANDOM[k], P)
    assert abs(soap_similarity(v, v) - 1.0) <= 1e-12


def test_grid_oracle_on_dimer():
    u = np.array([0.3, -0.5, 0.81])
    dimer = cluster([[0, 0, 0], 2.0 * u / np.linalg.norm(u)], ["Si"], [2])
    analytic = soap_descriptor(dimer, P).components
    grid = grid_soap(dimer, P)
    assert np.abs(analytic - grid).max() / np.abs(analytic).max() < 1e-4


def test_grid_oracle_on_mixed_cluster():
    p = SoapParams(cutoff=4.0, n_max=4, l_max=3, sigma=0.5)
    s = cluster([[0, 0, 0], [1.1, 0.2, -0.3], [-0.4, 1.3, 0.9]], ["C", "O"], [2, 1])
    analytic = soap_descriptor(s, p).components
    grid = grid_soap(s, p, nr=48, nt=32, nphi=64)
    assert np.abs(analytic - grid).max() / np.abs(analytic).max() < 1e-4


def test_periodic_images_are_counted():
    # a one-atom cell smaller than the cutoff still has neighbours
    s = CrystalStructure("sc", 1.0, np.eye(3) * 2.5, ["Cu"], [1], np.zeros((1, 3)))
    blk = soap_descriptor(s, P).components.reshape(8, 8, 7)
    assert np.abs(blk[:, :, 4]).max() > 0  # cubic environment shows up at l = 4


def test_rattling_lowers_similarity_monotonically():
    si = diamond_si()
    rng = np.random.default_rng(5)
    light = si.with_cartesian(si.cartesian() + rng.normal(scale=0.05, size=(64, 3)))
    heavy = si.with_cartesian(si.cartesian() + rng.normal(scale=0.5, size=(64, 3)))
    s_light = structure_similarity(si, light)
    s_heavy = structure_similarity(si, heavy)
    assert s_heavy < 1.0
    assert s_heavy < s_light


def test_similarity_errors():
    a = soap_descriptor(RANDOM[0], P)
    b = soap_descriptor(RANDOM[1], P)
    with pytest.raises(errors.LayoutMismatch):
        soap_similarity(a, b)
    zero = SoapVector(np.zeros_like(a.components), a.species_pairs, P)
    with pytest.raises(errors.ZeroNorm):
        soap_similarity(a, zero)


def test_union_layout_for_different_compositions():
    pure = cluster([[0, 0, 0], [2.2, 0, 0]], ["Cu"], [2])
    mixed = cluster([[0, 0, 0], [2.2, 0, 0]], ["Cu", "Ni"], [1, 1])
    sim = structure_similarity(pure, mixed)
    assert 0.0 <= sim < 1.0
    v = soap_descriptor(pure, P).aligned((("Cu", "Cu"), ("Cu", "Ni"), ("Ni", "Ni")))
    assert np.all(v.block(("Ni", "Ni")) == 0)


# -- task scores ----------------------------------------------------------------


def si_pair():
    s = diamond_si(1)
    return CrystalStructure("Si", 1.0, np.eye(3) * 10.86, s.species, s.counts, s.fractional() / 2)


def test_sr_full_marks_and_weights():
    s = si_pair()
    items = [SrItem(f"sr{k}", True, s, s) for k in range(40)]
    # descriptor of the same structure is computed once per item; keep it cheap
    b = score_sr(items)
    assert b.completion_total == pytest.approx(100.0, abs=1e-9)
    assert b.accuracy_total == pytest.approx(100.0, abs=1e-9)
    assert b.items[0].max_points == 2.5


def test_sr_single_item_and_independence():
    s = si_pair()
    one = score_sr([SrItem("a", True, s, s)])
    assert one.items[0].max_points == 100.0
    b = score_sr([SrItem(f"i{k}", k != 0, s, s) for k in range(40)])
    assert b.items[0].completion == 0.0
    assert b.items[0].accuracy == pytest.approx(2.5, abs=1e-12)
    coupled = score_sr([SrItem("i0", False, s, s)], ScoringOptions(couple_accuracy=True))
    assert coupled.items[0].accuracy == 0.0


def test_sr_missing_prediction():
    b = score_sr([SrItem("a", False, None, si_pair())])
    assert (b.completion_total, b.accuracy_total) == (0.0, 0.0)


def test_bs_scores():
    b = score_bs([BsItem(f"b{k}", True, 1.17, 1.17) for k in range(24)])
    assert b.completion_total == pytest.approx(100.0, abs=1e-9)
    assert b.accuracy_total == pytest.approx(100.0, abs=1e-9)
    assert b.items[0].accuracy == pytest.approx(100 / 24, abs=1e-12)
    # pred above truth by 10%: ratio 1/1.1
    it = score_bs([BsItem("x", True, 1.1, 1.0)] + [BsItem(f"b{k}", True, 1.0, 1.0) for k in range(23)])
    assert it.items[0].accuracy == pytest.approx(100 / 24 / 1.1, abs=1e-12)
    assert it.items[0].relative_error == pytest.approx(0.1, abs=1e-12)
    # pred below truth by 10%: ratio 0.9, the 1 - RE regime
    below = score_bs([BsItem("y", True, 0.9, 1.0)])
    assert below.accuracy_total == pytest.approx(90.0, abs=1e-9)


def test_bs_non_finite():
    with pytest.raises(errors.NonFinite):
        score_bs([BsItem("x", True, math.nan, 1.0)])
    with pytest.raises(errors.NonFinite):
        score_bs([BsItem("x", True, 1.0, math.inf)])


def test_ae_scores():
    full = AeCompletionFlags(True, True, True)
    b = score_ae([AeItem(f"a{k}", full, -2.0, -2.0) for k in range(10)])
    assert b.completion_total == pytest.approx(100.0, abs=1e-9)
    assert b.accuracy_total == pytest.approx(100.0, abs=1e-9)
    assert AeCompletionFlags(True, True, False).points == 5
    assert AeCompletionFlags(True, False, False).points == 2
    assert AeCompletionFlags(False, True, False).points == 3
    one = score_ae([AeItem("a", full, -1.8, -2.0)] + [AeItem(f"a{k}", full, -2.0, -2.0) for k in range(9)])
    assert one.items[0].accuracy == pytest.approx(9.0, abs=1e-12)


def test_ts_scores():
    full = TsCompletionFlags(True, True, True, True)
    b = score_ts([TsItem(f"t{k}", full, -0.3, -0.3, 1.0, 1.0) for k in range(6)])
    assert b.rescale == pytest.approx(10 / 6)
    assert b.completion_total == pytest.approx(100.0, abs=1e-9)
    assert b.accuracy_total == pytest.approx(100.0, abs=1e-9)
    partial = score_ts([TsItem("t", TsCompletionFlags(True, True, False, False), None, -0.3, None, 1.0)]
                       + [TsItem(f"t{k}", full, -0.3, -0.3, 1.0, 1.0) for k in range(5)])
    assert partial.items[0].completion == 2.0
    assert partial.completion_total == pytest.approx((10 / 6) * 52, abs=1e-9)
    close = score_ts([TsItem("t", full, -0.3, -0.3, 0.9, 1.0)])
    assert close.items[0].accuracy == pytest.approx(9.2, abs=1e-12)


def test_ts_strict_gate():
    full = TsCompletionFlags(True, True, True, True)
    items = [TsItem("t", full, -0.3, -0.3, 0.85, 1.0)]
    assert score_ts(items).items[0].accuracy == pytest.approx(2 + 8 * 0.85, abs=1e-12)
    assert score_ts(items, ScoringOptions(ts_strict_gate=True)).items[0].accuracy == pytest.approx(2.0, abs=1e-12)
    ok = [TsItem("t", full, -0.3, -0.3, 0.95, 1.0)]
    assert score_ts(ok, ScoringOptions(ts_strict_gate=True)).items[0].accuracy == pytest.approx(2 + 8 * 0.95)


@given(st.lists(st.tuples(st.booleans(), st.floats(-5, 5, allow_nan=False), st.floats(0.1, 5)),
                min_size=1, max_size=30))
def test_score_bounds(rows):
    b = score_bs([BsItem(str(k), c, p, t) for k, (c, p, t) in enumerate(rows)])
    for item in b.items:
        assert 0.0 <= item.accuracy <= item.max_points + 1e-12
    assert 0.0 <= b.completion_total <= 100.0 + 1e-9
    assert 0.0 <= b.accuracy_total <= 100.0 + 1e-9


# -- aggregation ------------------------------------------------------------------


def flat(task, completion, accuracy):
    return ScoreBreakdown(task, (ItemScore("x", completion, accuracy, 100.0),))


def test_aggregate_examples():
    r = aggregate_report([flat(t, 100.0, 100.0) for t in ("SR", "BS", "AE", "TS")])
    assert (r.overall_completion, r.overall_accuracy) == (100.0, 100.0)
    r = aggregate_report([flat("SR", 100, 0), flat("BS", 100, 0), flat("AE", 100, 0), flat("TS", 91.67, 0)])
    assert r.overall_completion == pytest.approx(97.9175, abs=1e-9)
    single = aggregate_report([flat("BS", 80.0, 70.0)])
    assert (single.overall_completion, single.overall_accuracy) == (80.0, 70.0)


def test_aggregate_rejects_duplicates():
    with pytest.raises(errors.DuplicateTaskType):
        aggregate_report([flat("SR", 1, 1), flat("SR", 2, 2)])


def test_report_orders_tasks_and_sums_check():
    r = aggregate_report([flat("TS", 50, 40), flat("SR", 100, 90)])
    assert r.task_types == ["SR", "TS"]
    rows = [line.split() for line in r.summary_table().splitlines() if line.startswith(("SR", "TS"))]
    assert [float(x[2]) for x in rows] == [100.0, 50.0]
    assert r.to_dict()["overall"]["completion"] == 75.0
