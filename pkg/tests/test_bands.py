import json

import numpy as np
import pytest

from mbsp import Band, IndexSets, MultibandSupport, ValidationError, expanded_index_sets, support_metrics


def test_band_from_center():
    b = Band.from_center(10.0, 4.0)
    assert (b.a, b.b) == (8.0, 12.0)
    assert b.width == 4.0 and b.center == 10.0


@pytest.mark.parametrize("a,b", [(1.0, 1.0), (2.0, 1.0), (float("nan"), 1.0)])
def test_band_rejects_bad_edges(a, b):
    with pytest.raises(ValidationError):
        Band(a, b)


def test_rejects_empty_plan():
    with pytest.raises(ValidationError):
        MultibandSupport.from_dict({"T": 1, "Bw": 1, "bands": []})


def test_rejects_overlap_and_narrow_gap():
    with pytest.raises(ValidationError):
        MultibandSupport((Band(0, 10), Band(5, 20)), 1.0, 1.0)
    # gap of 2 Hz cannot host a 3 Hz window
    with pytest.raises(ValidationError):
        MultibandSupport((Band(0, 10), Band(12, 20)), 1.0, 3.0)


def test_malformed_document():
    with pytest.raises(ValidationError):
        MultibandSupport.from_dict({"T": 1, "bands": [{"fc": 1, "B": 1}]})


def test_five_band_runs(five_sets):
    assert five_sets.runs == [(275, 343), (571, 621), (897, 945), (1132, 1207), (1368, 1395)]
    assert len(five_sets.union) == 273


def test_single_band_symmetric():
    sup = MultibandSupport((Band(-68, 68),), 1.0, 13.6)
    sets = expanded_index_sets(sup)
    assert sets.runs == [(-74, 74)]


def test_edge_inclusive():
    # widened band ends exactly on an integer frequency
    sup = MultibandSupport((Band(10.5, 19.5),), 1.0, 1.0)
    assert expanded_index_sets(sup).runs == [(10, 20)]


def test_index_sets_roundtrip(five_sets):
    again = IndexSets.from_dict(json.loads(json.dumps(five_sets.to_dict())))
    assert again.runs == five_sets.runs
    np.testing.assert_array_equal(again.union, five_sets.union)
    assert five_sets.component_of(600) == 1
    with pytest.raises(KeyError):
        five_sets.component_of(500)


def test_overlapping_runs_rejected():
    with pytest.raises(ValidationError):
        IndexSets.from_runs([(0, 5), (5, 9)])


def test_occupancy(five_band):
    occ = support_metrics(five_band)
    assert occ.landau == pytest.approx(228.0, abs=0.01)
    assert occ.windowed_landau == pytest.approx(273.6, abs=0.01)
    assert occ.nyquist_span == pytest.approx(1112.13, abs=0.01)
    r = occ.ratios(394)
    assert r["nyquist_over_rate"] == pytest.approx(2.82, abs=0.01)
    assert r["rate_over_landau"] == pytest.approx(1.73, abs=0.01)


def test_support_json_roundtrip(five_band, tmp_path):
    p = tmp_path / "plan.json"
    p.write_text(json.dumps(five_band.to_dict()))
    again = MultibandSupport.load(p)
    for a, b in zip(again.bands, five_band.bands):
        assert a.a == pytest.approx(b.a) and a.b == pytest.approx(b.b)
