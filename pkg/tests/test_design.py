import numpy as np
import pytest

from mbsp import RankDeficientError, build_scheme, check_rank, greedy_augment, sensitivity
from mbsp.design import to_db


def test_rank_report_base_set(five_sets):
    r = check_rank(build_scheme([68, 69, 70, 71]), five_sets)
    assert (r.rows, r.cols, r.n_instants, r.full_rank) == (278, 273, 274, True)
    assert r.to_dict()["full_column_rank"] is True


def test_rank_independent_of_t0(five_sets):
    a = check_rank(build_scheme([68, 69, 70, 71], t0=0.0), five_sets)
    b = check_rank(build_scheme([68, 69, 70, 71], t0=0.37), five_sets)
    assert a == b


def test_rank_deficient_is_reported():
    r = check_rank(build_scheme([5]), [0, 5, 10])
    assert r.rank == 1 and not r.full_rank
    with pytest.raises(RankDeficientError):
        sensitivity(build_scheme([5]), [0, 5, 10])


@pytest.mark.parametrize("moduli,target", [([68, 69, 70, 71], 48.75),
                                           ([11, 18, 19, 37, 49, 68, 69, 70, 71], 18.77)])
def test_gamma_of_paper_sets(five_sets, moduli, target):
    rep = sensitivity(build_scheme(moduli), five_sets)
    assert rep.gamma_max_db == pytest.approx(target, abs=0.1)
    assert len(rep.t) == rep.grid_density == 8192
    assert rep.gamma_db.max() == pytest.approx(rep.gamma_max_db)


def test_physical_gamma_not_above_grid_gamma(five_sets, final_scheme):
    a = sensitivity(final_scheme, five_sets, grid_density=1024)
    b = sensitivity(final_scheme, five_sets, grid_density=1024, physical=True)
    assert np.all(b.gamma >= 0)
    # merging coincident samples reuses the same noise, so it can only cost more
    assert b.gamma_max >= a.gamma_max * (1 - 1e-9)


def test_component_gamma_curves(five_sets, final_scheme):
    for m in range(5):
        rep = sensitivity(final_scheme, five_sets, five_sets.per_component[m], grid_density=512)
        assert np.all(np.isfinite(rep.gamma)) and rep.gamma.min() > 0


def test_to_db():
    assert to_db(10.0) == pytest.approx(20.0)


@pytest.mark.slow
def test_greedy_reaches_twenty_db(five_sets):
    res = greedy_augment(build_scheme([68, 69, 70, 71]), five_sets, range(2, 68),
                         target_db=19.0, max_added=6, grid_density=2048, threads=4)
    assert res.history_db[-1] <= 20.0
    assert len(res.added) <= 6
    assert all(b <= a * (1 + 1e-9) for a, b in zip(res.history_db, res.history_db[1:]))
    assert res.target_met == (res.history_db[-1] <= 19.0)
    assert set(res.added) <= set(range(2, 68))


def test_greedy_trivial_cases(five_sets):
    base = build_scheme([68, 69, 70, 71])
    met = greedy_augment(base, five_sets, range(2, 10), target_db=60.0, grid_density=512)
    assert met.added == [] and met.target_met and met.scheme.moduli == base.moduli
    empty = greedy_augment(base, five_sets, [], target_db=19.0, grid_density=512)
    assert empty.added == [] and not empty.target_met


def test_greedy_prefers_larger_reduction():
    # for J = {0}, Gamma^2 = 1/sum(Q), so the largest candidate wins
    res = greedy_augment(build_scheme([3]), [0], [2, 4], target_db=-100, max_added=1,
                         grid_density=64)
    assert res.added == [4]
    assert res.history_db[-1] == pytest.approx(to_db(1 / np.sqrt(7)))
