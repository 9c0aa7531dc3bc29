import math

import numpy as np
import pytest

import milb


def gaussian(mean, var=1.0):
    return milb.DiagGaussianMixture.gaussian(np.array([mean]), np.array([var]))


def test_version():
    assert milb.__version__


def test_rng_is_deterministic():
    a, b = milb.RngStream(5), milb.RngStream(5)
    assert [a.next_u64() for _ in range(4)] == [b.next_u64() for _ in range(4)]
    assert milb.RngStream(5).split(1).next_u64() != milb.RngStream(5).split(2).next_u64()


def test_mixture_roundtrip_and_density():
    m = milb.DiagGaussianMixture(np.array([0.25, 0.75]), np.zeros((2, 3)), np.ones((2, 3)))
    assert m.n_components == 2 and m.dim == 3
    np.testing.assert_allclose(m.weights, [0.25, 0.75])
    assert milb.log_pdf(m, np.zeros(3)) == pytest.approx(-1.5 * math.log(2 * math.pi))
    with pytest.raises(ValueError):
        milb.log_pdf(m, np.zeros(2))


def test_entropy_bounds_and_mc():
    g = gaussian(0.0)
    assert milb.entropy_upper(g) == pytest.approx(0.5 * math.log(2 * math.pi * math.e))
    assert milb.entropy_lower(g) == pytest.approx(0.5 * math.log(4 * math.pi))
    est = milb.entropy_mc(g, 20000, milb.RngStream(1))
    assert abs(est.estimate - milb.entropy_upper(g)) < 4 * est.stderr


def test_milb_closed_forms():
    g = gaussian(0.0)
    assert milb.milb(milb.EnsemblePrediction([g, g])) == pytest.approx(-0.153426, abs=1e-6)
    apart = milb.EnsemblePrediction([gaussian(-50.0), gaussian(50.0)])
    assert milb.milb(apart) == pytest.approx(0.539721, abs=1e-6)
    assert milb.milb_explicit(apart) == pytest.approx(milb.milb(apart), abs=1e-10)
    assert milb.epistemic_variance(milb.EnsemblePrediction([gaussian(-1.0), gaussian(1.0)])) == pytest.approx(1.0)


def test_selection():
    assert sorted(milb.select_topk([3.0, 1.0, 2.0], 2)) == [0, 2]
    assert sorted(milb.select_topk([3.0, 1.0, 2.0], 1, exclusions=[0])) == [2]
    feats = np.array([[0.0], [1.0], [10.0]])
    assert milb.select_maxdist([0.5, 0.5, 0.5], feats, 1, 1.0, exclusions=[0]) == [2]
    picked = milb.select_sbal(list(np.linspace(0, 1, 20)), 5, 1.0, milb.RngStream(3))
    assert len(set(picked)) == 5
    assert milb.select_coreset(feats, np.array([[0.0]]), 1) == [2]
    assert milb.select_bait(np.eye(3), np.zeros((0, 3)), 3) == [0, 1, 2]


def test_simulators():
    sim = milb.make_simulator("double_well")
    assert (sim.input_dim, sim.output_dim) == (7, 20)
    s = milb.RngStream(9)
    x = sim.sample_input(s)
    assert sim.simulate(x, s).shape == (20,)
    assert sim.oracle(x) is None
    mm = milb.make_simulator("multimodal")
    xs, ys = milb.sample_dataset(mm, 50, milb.RngStream(2))
    assert xs.shape == (10, 50) and ys.shape == (16, 50)
    assert math.isfinite(milb.oracle_nll(mm, xs, ys))


def test_variance_demo():
    r = milb.variance_failure_demo(math.pi / 8, 20000, milb.RngStream(0))
    assert r.passed
    assert r.entropy_gap == pytest.approx(math.log(4.0))


def test_quick_verify():
    assert all(s.passed for s in milb.run_verify(0, True))


def test_tiny_experiment_and_aggregate():
    cfg = milb.default_config("double_well")
    cfg.update(hidden=8, depth=1, n_components=2, n_ens=2, pool_size=200, test_size=50,
               init_size=10, rounds=1, query_batch=5, probe_size=5)
    cfg["train"]["iter_cap"] = 20
    assert len(milb.config_hash(cfg)) == 16
    records = [milb.run_experiment(cfg, seed) for seed in (0, 1)]
    assert [r["n_labeled"] for r in records[0]["rounds"]] == [10, 15]
    rows = milb.aggregate(records)
    assert [row["round"] for row in rows] == [0, 1]
    assert rows[0]["nll_min"] <= rows[0]["nll_mean"] <= rows[0]["nll_max"]
    with pytest.raises(ValueError):
        milb.run_experiment({**cfg, "bogus": 1}, 0)
