import numpy as np
import pytest

from schauder.compactness import (
    KPHI_MARGIN,
    MAIN_MARGIN,
    FunctionFamily,
    basepoint_cells_check,
    covering_to_net,
    default_cap,
    diagnose_c0alpha,
    diagnose_cmalpha,
    diagnose_sup,
    greedy_eps_net,
    kphi_partition,
    net_covering,
    net_to_covering,
    pairwise_distances,
    pointwise_boundedness,
)
from schauder.covering import Covering, equioscillation_check
from schauder.domain import box, build_grid_domain, interval, union_of_boxes
from schauder.errors import OrderUnavailable, PreconditionError, SchauderError
from schauder.families import builtin_family
from schauder.function import sample
from schauder.soperator import build_pair_grid, s_transform

import oracles

DOM = build_grid_domain(interval(), 0.01)
PAIRS = build_pair_grid(DOM)


def _exhaustive_net_ok(rows, net):
    for k, row in enumerate(rows):
        d = min(oracles.sup_distance(row, rows[c]) for c in net.member_indices)
        assert d <= net.eps
        assert net.distances[k] == oracles.sup_distance(row, rows[net.assignment[k]])
        assert net.assignment[k] in net.member_indices


def test_margins_are_distinct():
    assert (MAIN_MARGIN, KPHI_MARGIN) == (3, 4)
    assert default_cap(10) == 6 and default_cap(20) == 8 and default_cap(1) == 2


def test_pointwise_boundedness(rng):
    assert pointwise_boundedness(np.zeros((1, 5))).sup == 0
    assert pointwise_boundedness(np.arange(1, 6)[:, None] * np.ones((5, 4))).sup == 5
    rows = rng.normal(size=(50, 30))
    expected = max(abs(v) for row in rows for v in row)
    res = pointwise_boundedness(rows)
    assert res.bounded and res.sup == expected
    with pytest.raises(SchauderError, match="non-finite input"):
        pointwise_boundedness([[1.0, np.nan]])


def test_greedy_hand_example():
    rows = np.array([0, 0.1, 0.2, 0.3, 0.4])[:, None] * np.ones((5, 3))
    net = greedy_eps_net(rows, 0.25)
    assert net.member_indices == (0, 4)
    assert net.assignment.tolist() == [0, 0, 0, 4, 4]  # member 2 ties and goes to the lower index
    assert greedy_eps_net(rows, 1.0).member_indices == (0,)


def test_greedy_random_certificate(rng):
    rows = rng.random((100, 20))
    net = greedy_eps_net(rows, 0.3)
    _exhaustive_net_ok(rows, net)
    centers = list(net.member_indices)
    for a in centers:
        for b in centers:
            if a < b:
                assert oracles.sup_distance(rows[a], rows[b]) > 0.3
    d = pairwise_distances(rows, subset=centers)
    np.testing.assert_array_equal(d, d.T)


def test_greedy_metric_errors():
    fam = builtin_family("constants", DOM, 0.5, 0)
    with pytest.raises(SchauderError, match="pair grid"):
        greedy_eps_net(fam, 0.1, metric="sup_on_pairs")
    fam1 = FunctionFamily((sample(DOM, lambda x: x),), ("x",), 0.5, 1)
    with pytest.raises(OrderUnavailable):
        greedy_eps_net(fam1, 0.1, metric="cmalpha_norm", pairs=PAIRS)
    with pytest.raises(SchauderError):
        greedy_eps_net(np.zeros((2, 2)), 0.0)


def test_greedy_on_sfunctions_and_norm_metrics():
    fam = builtin_family("linear", DOM, 0.5, 1, count=4)
    s = [s_transform(f, 0.5, PAIRS) for f in fam.members]
    net = greedy_eps_net(s, 0.2, metric="sup_on_pairs")
    assert len(net) >= 1
    n1 = greedy_eps_net(fam, 0.2, metric="c0alpha_norm", pairs=PAIRS)
    n2 = greedy_eps_net(fam, 0.2, metric="cmalpha_norm", pairs=PAIRS)
    # the C^{1,alpha} distance dominates the C^{0,alpha} one
    assert np.all(n2.distances >= 0) and len(n2) >= len(n1)


def test_net_to_covering_trivial():
    cov = net_to_covering(np.zeros((1, 6)), np.zeros((1, 6)), 0.3)
    assert [p.tolist() for p in cov.parts] == [list(range(6))]


def test_net_to_covering_shifted_identity():
    x = np.linspace(0, 1, 21)
    fam = np.stack([x, x + 0.1])
    cov, how = net_covering(fam, x[None, :], 0.9)
    assert how == "intersection"
    radius = 0.15
    expected = [np.flatnonzero(np.abs(x - y) < radius).tolist() for y in np.arange(8) * radius]
    assert [p.tolist() for p in cov.parts] == [p for p in expected if p]
    assert all(oracles.diameter_of_image(f, p) < 0.9 for f in fam for p in cov.parts)


def test_net_precondition_error():
    x = np.linspace(0, 1, 11)
    with pytest.raises(PreconditionError, match="not a valid ε/3-net"):
        net_to_covering(np.stack([x, x + 0.5]), x[None, :], 0.9)


@pytest.mark.parametrize("seed", range(3))
def test_lipschitz_family_pipeline(seed):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 1, 60)
    slopes, shifts = rng.uniform(-1, 1, 20), rng.uniform(0, 1, 20)
    fam = slopes[:, None] * np.abs(t[None, :] - shifts[:, None])
    eps = 0.5
    net = greedy_eps_net(fam, eps / 3)
    cov = net_to_covering(fam, fam[list(net.member_indices)], eps)
    for f in fam:
        for p in cov.parts:
            assert oracles.diameter_of_image(f, p) < eps


def test_cell_fallback_keeps_guarantee(rng):
    fam = np.cumsum(rng.normal(scale=0.05, size=(12, 200)), axis=1)
    eps = 0.3
    net = greedy_eps_net(fam, eps / 3)
    cov, how = net_covering(fam, fam[list(net.member_indices)], eps, exact_limit=100)
    assert how == "cells"
    assert equioscillation_check(fam, cov, eps).holds


def test_covering_to_net_examples():
    rows = np.array([0, 0.05, 1.0])[:, None] * np.ones((3, 4))
    cov = Covering(4, ([0, 1], [2, 3]))
    net = covering_to_net(rows, cov, 0.2)
    clusters = sorted({tuple(np.flatnonzero(net.assignment == c).tolist()) for c in net.member_indices})
    assert clusters == [(0, 1), (2,)]
    near = 0.01 * np.arange(6)[:, None] + np.zeros((6, 5))
    single = covering_to_net(near, Covering(5, (np.arange(5),)), 0.3)
    assert len(single) == 1


def test_covering_to_net_precondition():
    x = np.linspace(0, 1, 5)
    with pytest.raises(PreconditionError, match="eps/3"):
        covering_to_net([x], Covering(5, (np.arange(5),)), 0.6)


@pytest.mark.parametrize("seed", range(3))
def test_round_trip(seed):
    rng = np.random.default_rng(seed)
    fam = np.cumsum(rng.normal(scale=0.05, size=(25, 50)), axis=1)
    eps = 0.6
    cov = net_to_covering(fam, fam[list(greedy_eps_net(fam, eps / 9).member_indices)], eps / 3)
    net = covering_to_net(fam, cov, eps)
    _exhaustive_net_ok(fam, net)
    assert np.all(net.distances < eps)


def test_kphi_examples():
    one = kphi_partition(np.ones((1, 3)), Covering(3, ([0, 1, 2],)), 0.1)
    assert [c.tolist() for c in one] == [[0]]
    rows = np.array([0, 0.05, 1.0])[:, None] * np.ones((3, 4))
    classes = kphi_partition(rows, Covering(4, ([0, 1], [2, 3])), 0.3)
    assert [2] in [c.tolist() for c in classes]
    for c in classes:
        assert max(oracles.sup_distance(rows[a], rows[b]) for a in c for b in c) < 0.3


def test_kphi_thirty_members(rng):
    fam = np.cumsum(rng.normal(scale=0.04, size=(30, 40)), axis=1)
    eps = 0.8
    cov = net_to_covering(fam, fam[list(greedy_eps_net(fam, eps / 12).member_indices)], eps / 4)
    classes = kphi_partition(fam, cov, eps)
    assert sorted(np.concatenate(classes).tolist()) == list(range(30))
    for c in classes:
        assert max(oracles.sup_distance(fam[a], fam[b]) for a in c for b in c) < eps
    reps = [int(c[0]) for c in classes]
    assert all(min(oracles.sup_distance(f, fam[r]) for r in reps) < eps for f in fam)
    net = covering_to_net(fam, cov, eps)
    _exhaustive_net_ok(fam, net)
    assert max(len(classes), len(net)) <= 30


def test_scale_coherence(rng):
    rows = rng.random((40, 10))
    net = greedy_eps_net(rows, 0.3)
    for bigger in (0.31, 0.5, 2.0):
        assert np.all(net.distances <= bigger)


def test_diagnose_constants_succeeds():
    fam = builtin_family("constants", DOM, 0.5, 0)
    diag = diagnose_c0alpha(fam, PAIRS, 0.1)
    assert diag.verdict == "totally_bounded_at_eps"
    assert len(diag.covering) == 1 and diag.covering_found
    assert diag.pointwise_sup == 2.0 and diag.min_pair_separation == pytest.approx(0.01)


@pytest.mark.parametrize("alpha", [0.3, 0.5, 1.0])
def test_diagnose_translates_fails(alpha):
    fam = builtin_family("holder_translates", DOM, alpha, 0, count=10)
    diag = diagnose_c0alpha(fam, PAIRS, 1.0)
    assert diag.verdict == "fails_at_eps"
    wit = diag.separation_witness
    assert len(wit["members"]) > diag.cap
    rows = s_values_rows(fam, PAIRS)
    for a in wit["members"]:
        for b in wit["members"]:
            if a < b:
                assert oracles.sup_distance(rows[a], rows[b]) > wit["bound"]
    assert wit["min_distance"] >= 1.8


def s_values_rows(fam, pairs):
    return np.stack([s_transform(f, fam.alpha, pairs).values for f in fam.members])


def test_diagnose_oscillatory_observed_verdict():
    # members stay at least 0.95 apart in the 1/2-seminorm, so no small net exists at eps = 0.5
    fam = builtin_family("oscillatory", DOM, 0.5, 0, count=20)
    diag = diagnose_c0alpha(fam, PAIRS, 0.5)
    assert diag.verdict == "fails_at_eps"
    d = pairwise_distances(fam, "sup_on_pairs", PAIRS)
    assert d[~np.eye(20, dtype=bool)].min() > 0.9


def test_diagnose_sup_verdicts():
    rows = np.eye(9)  # pairwise sup distance exactly 1
    diag = diagnose_sup(rows, 3.1)  # eps/3 > 1: one-member net
    assert diag.theorem == "thm_2_3" and diag.verdict == "totally_bounded_at_eps"
    assert diag.net_size == 1
    # eps/3 = 0.4: all 9 members in the net; the 0.6-separated set also has 9 > cap
    assert diagnose_sup(rows, 1.2, cap=8).verdict == "fails_at_eps"
    # eps/3 < 1 keeps 9 > cap, but eps/2 = 1.25 > 1 leaves no separated set above the cap
    diag = diagnose_sup(rows, 2.5, cap=8)
    assert diag.verdict == "inconclusive_at_cap" and len(diag.notes) == 2


def test_diagnose_cmalpha_linear_succeeds():
    fam = builtin_family("linear", DOM, 0.5, 1)
    diag = diagnose_cmalpha(fam, DOM, PAIRS, 0.1)
    assert diag.verdict == "totally_bounded_at_eps"
    assert list(diag.sub_diagnoses) == ["1"]


def test_diagnose_cmalpha_translate_derivatives_fail():
    dom = build_grid_domain(interval(), 0.005)
    pairs = build_pair_grid(dom)
    fam = builtin_family("holder_translates", dom, 0.5, 1, count=10, integrate=1)
    diag = diagnose_cmalpha(fam, dom, pairs, 1.0)
    assert diag.verdict == "fails_at_eps"
    assert diag.sub_diagnoses["1"].separation_witness["min_distance"] >= 1.8


def test_diagnose_cmalpha_product_observed_verdict():
    dom = build_grid_domain(box((0, 1), (0, 1)), 0.05)
    pairs = build_pair_grid(dom, budget=50_000, seed=0)
    fam = builtin_family("product_2d", dom, 0.5, 1, count=10)
    diag = diagnose_cmalpha(fam, dom, pairs, 0.5)
    assert diag.verdict == "fails_at_eps"
    assert set(diag.sub_diagnoses) == {"1,0", "0,1"}


def test_diagnose_cmalpha_preconditions():
    dom = build_grid_domain(union_of_boxes(((0, 1),), ((2, 3),)), 0.1)
    fam = builtin_family("linear", dom, 0.5, 1)
    with pytest.raises(PreconditionError, match="c\\[Ω\\] < ∞ violated"):
        diagnose_cmalpha(fam, dom, build_pair_grid(dom), 0.5)
    bare = FunctionFamily((sample(DOM, lambda x: x),), ("x",), 0.5, 1)
    with pytest.raises(OrderUnavailable):
        diagnose_cmalpha(bare, DOM, PAIRS, 0.5)


def test_diagnose_cmalpha_norm_bound():
    fam = builtin_family("linear", DOM, 0.5, 1)
    diag = diagnose_cmalpha(fam, DOM, PAIRS, 0.1, norm_bound=0.5)
    assert diag.verdict == "fails_at_eps" and not diag.pointwise_bounded


def test_basepoint_cells_check(rng):
    dom = build_grid_domain(interval(), 0.05)
    pairs = build_pair_grid(dom, point_set="closure", anchors=[0])
    members = tuple(sample(dom, lambda x, a=a, b=b: a * np.sin(3 * x) + b) for a, b in rng.uniform(-0.2, 0.2, (15, 2)))
    fam = FunctionFamily(members, (), 0.5, 0)
    diag = diagnose_c0alpha(fam, pairs, 0.4)
    assert diag.verdict == "totally_bounded_at_eps"
    res = basepoint_cells_check(fam, pairs, diag, 0)
    assert res["holds"] and res["bound"] == pytest.approx(0.4 * (2 + dom.euclidean_diameter**0.5))
    with pytest.raises(SchauderError):
        basepoint_cells_check(fam, pairs, diagnose_sup(fam.values(), 0.4), 0)


def test_family_validation():
    f = sample(DOM, lambda x: x)
    with pytest.raises(SchauderError, match="unique"):
        FunctionFamily((f, f), ("a", "a"))
    other = build_grid_domain(interval(), 0.01)
    with pytest.raises(SchauderError, match="share"):
        FunctionFamily((f, sample(other, lambda x: x)), ())
    with pytest.raises(SchauderError, match="mismatch"):
        diagnose_c0alpha(FunctionFamily((sample(other, lambda x: x),), ()), PAIRS, 0.1)
