import json

import numpy as np
import pytest

from mbsp import ValidationError, expanded_index_sets, plan_block
from mbsp.cli import main, run_reconstruct
from mbsp.io import (atomic_open, config_hash, read_csv, read_samples, write_csv,
                     write_samples)
from mbsp.scenario import Scenario


@pytest.mark.parametrize("name", ["s.mbsp", "s.csv"])
def test_sample_roundtrip(tmp_path, rng, name):
    n = rng.integers(-10 ** 6, 10 ** 6, 50)
    k = rng.integers(0, 9, 50)
    q = rng.integers(0, 70000, 50)
    v = rng.standard_normal(50) + 1j * rng.standard_normal(50)
    write_samples(tmp_path / name, n, k, q, v)
    n2, k2, q2, v2 = read_samples(tmp_path / name)
    np.testing.assert_array_equal(n2, n)
    np.testing.assert_array_equal(k2, k)
    np.testing.assert_array_equal(q2, q)
    np.testing.assert_array_equal(v2, v)


def test_binary_layout(tmp_path):
    write_samples(tmp_path / "a.mbsp", [-1], [2], [3], [1.5 - 2j])
    raw = (tmp_path / "a.mbsp").read_bytes()
    assert raw[:4] == b"MBSP" and len(raw) == 16 + 30
    assert int.from_bytes(raw[4:8], "little") == 1 and int.from_bytes(raw[8:16], "little") == 1
    assert int.from_bytes(raw[16:24], "little", signed=True) == -1


@pytest.mark.parametrize("blob", [b"XXXX" + bytes(12), b"MBSP" + (7).to_bytes(4, "little") + bytes(8),
                                  b"MBSP" + (1).to_bytes(4, "little") + (5).to_bytes(8, "little"),
                                  b"MBS"])
def test_corrupt_files(tmp_path, blob):
    p = tmp_path / "bad.mbsp"
    p.write_bytes(blob)
    with pytest.raises(ValidationError):
        read_samples(p)


def test_missing_csv_column(tmp_path):
    write_csv(tmp_path / "x.csv", ["n", "k"], [[1], [2]])
    with pytest.raises(ValidationError):
        read_samples(tmp_path / "x.csv")
    assert read_csv(tmp_path / "x.csv")["k"][0] == 2.0


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    with pytest.raises(RuntimeError):
        with atomic_open(tmp_path / "out.json") as fh:
            fh.write("partial")
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []


def test_config_hash_is_order_free():
    assert config_hash({"a": 1, "b": [1, 2]}) == config_hash({"b": [1, 2], "a": 1})


def test_scenario_validation():
    with pytest.raises(ValidationError):
        Scenario.from_dict({"signals": []})
    doc = Scenario.shipped("five_band").doc
    doc["signals"][0]["band"] = 9
    with pytest.raises(ValidationError):
        Scenario.from_dict(doc)
    with pytest.raises(ValidationError):
        Scenario.shipped("nope")
    assert Scenario.shipped("five_band", seed=5).seed == 5


def test_window_info_cli(tmp_path):
    assert main(["window-info", "--bwt", "13.61", "--out-dir", str(tmp_path), "--csv-points", "5"]) == 0
    doc = json.loads((tmp_path / "window.json").read_text())
    assert np.log10(doc["epsilon"]) == pytest.approx(-8.0, abs=1e-3)
    assert set(doc) >= {"delta", "rho", "epsilon", "delta_w", "C"}
    assert read_csv(tmp_path / "window.csv")["w"].shape == (5,)
    assert (tmp_path / "manifest.json").exists()
    assert main(["window-info", "--out-dir", str(tmp_path)]) == 2


def test_design_cli(tmp_path):
    assert main(["design", "--config", "five_band", "--out-dir", str(tmp_path)]) == 0
    occ = json.loads((tmp_path / "occupancy.json").read_text())
    assert occ["nyquist_span"] == pytest.approx(1112.13, abs=0.01)
    assert occ["landau"] == pytest.approx(228.0, abs=0.01)
    assert occ["windowed_landau"] == pytest.approx(273.6, abs=0.01)
    assert occ["sampling_rate"] == 394
    assert occ["nyquist_over_rate"] == pytest.approx(2.82, abs=0.01)
    assert occ["rate_over_landau"] == pytest.approx(1.73, abs=0.01)
    scheme = json.loads((tmp_path / "scheme.json").read_text())
    assert scheme["n_instants"] == 394 and scheme["rank"]["full_column_rank"]
    assert len(read_csv(tmp_path / "gamma.csv")["t"]) == 8192
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config_sha256"] == config_hash(man["config"])
    assert "gamma.csv" in man["outputs"]


def test_exit_codes(tmp_path):
    bad = tmp_path / "empty.json"
    bad.write_text(json.dumps({"band_plan": {"T": 1, "Bw": 1, "bands": []}}))
    assert main(["design", "--config", str(bad), "--out-dir", str(tmp_path)]) == 2
    assert main(["design", "--config", str(tmp_path / "missing.json")]) == 2
    # a single small grid cannot resolve 273 unknowns
    assert main(["design", "--config", "five_band", "--moduli", "50", "--out-dir", str(tmp_path)]) == 3
    with pytest.raises(SystemExit) as exc:
        main(["design", "--moduli", "x,y"])
    assert exc.value.code == 2


def test_generate_then_reconstruct_matches_in_memory(tmp_path):
    g, a, b = tmp_path / "g", tmp_path / "a", tmp_path / "b"
    assert main(["generate", "--config", "five_band", "--out-dir", str(g)]) == 0
    assert main(["reconstruct", "--config", "five_band", "--samples", str(g / "samples.mbsp"),
                 "--out-dir", str(a)]) == 0
    assert main(["reconstruct", "--config", "five_band", "--out-dir", str(b)]) == 0
    za, zb = read_csv(a / "z.csv"), read_csv(b / "z.csv")
    np.testing.assert_array_equal(za["re"], zb["re"])
    sa = json.loads((a / "summary.json").read_text())
    assert sa["coefficient_snr_db"] > 40
    eb = read_csv(a / "error_budget.csv")
    assert np.all(eb["error_z"] <= eb["bound_z"])
    for m in range(5):
        assert np.all(eb[f"error_{m}"] <= eb[f"bound_{m}"])
        assert (a / f"component_{m}.csv").exists()


def test_runs_are_bit_reproducible(tmp_path):
    for d in ("x", "y"):
        assert main(["reconstruct", "--config", "five_band", "--out-dir", str(tmp_path / d),
                     "--components", "0,2", "--blocks", "2", "--tau-step", "0.25"]) == 0
    for name in ("z.csv", "component_0.csv", "error_budget.csv", "summary.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
    assert not (tmp_path / "x" / "component_1.csv").exists()


def test_single_band_reconstruction_error(tmp_path):
    out = run_reconstruct(Scenario.shipped("single_band"), tmp_path)
    assert out["min_error_z_db"] < -200
    assert out["max_error_z_db"] < -100


def test_noiseless_sparse_polynomial(tmp_path, rng):
    """Samples of (trig polynomial)/w reconstruct to 1e-9."""
    doc = {"band_plan": {"T": 1.0, "Bw": 4.0, "bands": [{"fc": 10.0, "B": 8.0}, {"fc": 30.0, "B": 6.0}]},
           "window": {"T1": 0.5}, "scheme": {"moduli": [9, 11, 13]},
           "blocks": {"tau0": 0, "tau_step": 0.5, "count": 1, "out_rate": 200}}
    sc = Scenario.from_dict(doc)
    scheme, win = sc.scheme(), sc.window()
    cols = expanded_index_sets(sc.support).union
    beta = rng.standard_normal(len(cols)) + 1j * rng.standard_normal(len(cols))
    z = lambda t: (np.exp(2j * np.pi * np.outer(t, cols)) @ beta) / win(t)
    plan = plan_block(scheme, 0)
    n = plan.n
    k, q = scheme.canonical_kq()
    write_samples(tmp_path / "s.csv", n, k, q, z(plan.absolute))
    cfg = tmp_path / "sc.json"
    cfg.write_text(json.dumps(doc))
    assert main(["reconstruct", "--config", str(cfg), "--samples", str(tmp_path / "s.csv"),
                 "--out-dir", str(tmp_path / "o")]) == 0
    got = read_csv(tmp_path / "o" / "z.csv")
    want = z(got["t"])
    err = np.abs(got["re"] + 1j * got["im"] - want)
    assert err.max() < 1e-9 * np.abs(want).max()


def test_blind_noise_only_is_empty(tmp_path):
    doc = Scenario.shipped("blind_five_band").doc
    sc = Scenario.from_dict(doc)
    scheme = sc.scheme()
    taus = sc.blind_taus()[:400]
    from mbsp import SampleStore
    from mbsp.reconstruct import plan_block as pb
    keys = np.unique(np.concatenate([pb(scheme, t).keys for t in taus]))
    noise = np.random.default_rng(3).standard_normal(len(keys)) * (1 + 0j)
    store = SampleStore(scheme, keys, noise)
    n, k, q = store.grid_coords()
    write_samples(tmp_path / "noise.mbsp", n, k, q, store.values)
    del doc["signals"]
    cfg = tmp_path / "noise.json"
    cfg.write_text(json.dumps(doc))
    assert main(["blind-scan", "--config", str(cfg), "--samples", str(tmp_path / "noise.mbsp"),
                 "--blocks", "400", "--subspace-dim", "40", "--out-dir", str(tmp_path / "o")]) == 0
    sup = json.loads((tmp_path / "o" / "support.json").read_text())
    assert sup["runs"] == [] and sup["count"] == 0
    chi = read_csv(tmp_path / "o" / "chi.csv")
    assert len(chi["p"]) == 1601 and np.all(chi["chi"] >= 1 - 1e-9)
