import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from schauder.covering import (
    Covering,
    RealBallNet,
    RefinementTooLarge,
    cell_refinement,
    equioscillation_check,
    oscillation,
    oscillation_table,
    preimage_ball_coverings,
    refine_by_intersection,
)
from schauder.errors import SchauderError

import oracles


def _parts(cov):
    return [p.tolist() for p in cov.parts]


def test_covering_invariants():
    cov = Covering(3, ([0, 1], [1, 2]))
    assert len(cov) == 2
    with pytest.raises(SchauderError, match="missing"):
        Covering(3, ([0, 1],))
    with pytest.raises(SchauderError, match="nonempty"):
        Covering(2, ([0, 1], []))
    with pytest.raises(SchauderError):
        Covering(2, ([0, 2],))
    assert Covering(2, ([1, 0],), ("all",)).to_dict() == {"ground_set_size": 2, "parts": [[0, 1]], "labels": ["all"]}


def test_ball_net():
    net = RealBallNet.spanning(0.0, 1.0, 0.3)
    np.testing.assert_allclose(net.centers, [0, 0.3, 0.6, 0.9, 1.2])
    with pytest.raises(SchauderError):
        RealBallNet((0.0,), 0.0)


def test_oscillation_examples(rng):
    assert oscillation([5, 5, 5], [0, 1, 2]) == 0
    assert oscillation([1, 4, 2], [0, 1, 2]) == 3
    with pytest.raises(SchauderError, match="empty"):
        oscillation([1, 2], [])
    for _ in range(20):
        f = rng.normal(size=40)
        part = rng.choice(40, size=rng.integers(1, 40), replace=False)
        assert oscillation(f, part) == oracles.diameter_of_image(f, part)


def test_preimage_of_zero_is_everything():
    (cov,) = preimage_ball_coverings([np.zeros(7)], 0.2)
    assert _parts(cov) == [list(range(7))]


def test_preimage_identity_on_five_points():
    x = np.array([0, 0.25, 0.5, 0.75, 1])
    (cov,) = preimage_ball_coverings([x], 0.3)
    # centers 0, .3, .6, .9, 1.2 and open balls of radius .3
    expected = [[k for k in range(5) if abs(x[k] - y) < 0.3] for y in (0, 0.3, 0.6, 0.9, 1.2)]
    assert _parts(cov) == expected == [[0, 1], [1, 2], [2, 3], [3, 4], [4]]
    assert all(oscillation(x, p) < 0.6 for p in cov.parts)


def test_preimage_two_functions_against_oracle(rng):
    eps = 0.6
    fam = rng.normal(size=(2, 50))
    covs = preimage_ball_coverings(fam, eps / 6)
    for f, cov in zip(fam, covs):
        assert oracles.covers(50, _parts(cov))
        assert all(oracles.diameter_of_image(f, p) < eps / 3 for p in cov.parts)


def test_empty_family():
    with pytest.raises(SchauderError):
        preimage_ball_coverings(np.empty((0, 0)), 0.1)


def test_refine_identity_and_singletons():
    cov = Covering(4, ([0, 1], [2, 3], [0, 1]))
    assert _parts(refine_by_intersection([cov])) == [[0, 1], [2, 3]]
    a = Covering(4, ([0, 1], [2, 3]))
    b = Covering(4, ([0, 2], [1, 3]))
    assert _parts(refine_by_intersection([a, b])) == [[0], [1], [2], [3]]
    with pytest.raises(SchauderError, match="mismatched"):
        refine_by_intersection([a, Covering(3, ([0, 1, 2],))])


def _random_covering(rng, n):
    k = int(rng.integers(2, 6))
    parts = [rng.choice(n, size=rng.integers(1, n // 2), replace=False) for _ in range(k)]
    parts.append(np.arange(n)[rng.random(n) < 0.5])
    covered = np.zeros(n, bool)
    for p in parts:
        covered[p] = True
    parts.append(np.flatnonzero(~covered) if (~covered).any() else [0])
    return Covering(n, tuple(p for p in parts if len(p)))


@pytest.mark.parametrize("seed", range(5))
def test_refine_three_random_coverings_exhaustive(seed):
    rng = np.random.default_rng(seed)
    covs = [_random_covering(rng, 30) for _ in range(3)]
    out = refine_by_intersection(covs)
    assert oracles.covers(30, _parts(out))
    for part in out.parts:
        for cov in covs:
            assert any(set(part.tolist()) <= set(q.tolist()) for q in cov.parts)
    # every nonempty choice-intersection appears
    want = set()
    for choice in itertools.product(*(c.parts for c in covs)):
        inter = set(choice[0].tolist()).intersection(*(set(q.tolist()) for q in choice[1:]))
        if inter:
            want.add(tuple(sorted(inter)))
    assert {tuple(p.tolist()) for p in out.parts} == want
    minimal = refine_by_intersection(covs, minimal=True)
    assert oracles.covers(30, _parts(minimal)) and len(minimal) <= len(out)


def test_refinement_monotone(rng):
    fam = rng.normal(size=(3, 30))
    covs = [_random_covering(rng, 30) for _ in range(2)]
    out = refine_by_intersection(covs)
    for f in fam:
        for part in out.parts:
            for cov in covs:
                for q in cov.parts:
                    if set(part.tolist()) <= set(q.tolist()):
                        assert oscillation(f, part) <= oscillation(f, q)


def test_equioscillation_examples():
    cov = Covering(5, ([0, 1, 2], [2, 3, 4]))
    assert equioscillation_check(np.ones((3, 5)) * [[0], [1], [2]], cov, 1e-9).holds
    x = np.linspace(0, 1, 11)
    res = equioscillation_check([x], Covering(11, (np.arange(11),)), 0.5)
    assert not res.holds and res.worst == (0, 0, 1.0)


@pytest.mark.parametrize("seed", range(5))
def test_pipeline_holds_at_eps(seed):
    rng = np.random.default_rng(seed)
    eps = 0.5
    fam = np.cumsum(rng.normal(scale=0.1, size=(5, 40)), axis=1)
    cov = refine_by_intersection(preimage_ball_coverings(fam, eps / 6))
    assert equioscillation_check(fam, cov, eps).holds
    for f in fam:
        assert all(oracles.diameter_of_image(f, p) < eps for p in _parts(cov))


def test_refinement_limit_and_cell_fallback(rng):
    fam = np.cumsum(rng.normal(scale=0.05, size=(6, 300)), axis=1)
    with pytest.raises(RefinementTooLarge):
        refine_by_intersection(preimage_ball_coverings(fam, 0.1), limit=1000)
    cells = cell_refinement(fam, 0.1)
    assert oracles.covers(300, _parts(cells))
    assert sum(len(p) for p in cells.parts) == 300  # a partition
    covs = preimage_ball_coverings(fam, 0.1)
    for part in cells.parts:
        for cov in covs:
            assert any(set(part.tolist()) <= set(q.tolist()) for q in cov.parts)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.floats(-5, 5), min_size=12, max_size=12), min_size=1, max_size=4),
       st.floats(0.05, 2.0))
def test_oscillation_table_matches_oracle(rows, radius):
    fam = np.array(rows)
    cov = refine_by_intersection(preimage_ball_coverings(fam, radius))
    table = oscillation_table(fam, cov)
    for i, f in enumerate(fam):
        for j, p in enumerate(cov.parts):
            assert table[i, j] == oracles.diameter_of_image(f, p)
            assert table[i, j] < 2 * radius
