import math
import pathlib

import numpy as np
import pytest

import phom

ROOT = pathlib.Path(__file__).resolve().parents[2]


def one_mode():
    return phom.ModeSet([((1.0, 0.0), ("const 1", "const 1"))], 0.5, 0.5)


def test_mode_sets():
    ref = phom.ModeSet.reference()
    assert len(ref) == 3
    assert ref.gamma0 == 0.5
    assert len(ref.fingerprint()) == 16
    with pytest.raises(ValueError):
        phom.ModeSet([((0.0, 0.0), ("const 1", "const 1"))], 0.5, 0.5)


def test_profiles():
    p = phom.Profile.parse("logistic 0.5 2 1 0 0")
    assert p.value([0.0, 0.0]) == pytest.approx(1.25)
    assert p.reflected().value([1.0, 0.0]) == pytest.approx(p.value([-1.0, 0.0]))


def test_single_mode_corrector():
    modes = one_mode()
    r = phom.corrector(modes, [0.7], [-0.3], n=2000, seed=3)
    # chi = k^perp b / alpha with k^perp = (0, -1)
    assert abs(r["chi"][1] - 0.3) <= 3 * (r["se"][1] + r["truncation"])
    g = phom.galerkin_corrector(modes, [0.7], [-0.3], degree=4)
    assert g[1] == pytest.approx(0.3, abs=1e-12)


def test_effective_coefficients():
    e = phom.effective_coefficients(one_mode(), n=1000, seed=4)
    assert e["A"].shape == (2, 2)
    assert abs(e["A"][1, 1] - 2.0) < 1e-2
    assert e["A"][0, 0] == 0.0


def test_simulate_is_seeded():
    modes = phom.ModeSet.reference()
    a = phom.simulate(modes, eps=0.4, T=0.25, n_paths=8, seed=11)
    b = phom.simulate(modes, eps=0.4, T=0.25, n_paths=8, seed=11, threads=2)
    assert a["paths"].shape == (8, len(a["times"]), 2)
    assert np.array_equal(a["paths"], b["paths"])
    assert np.all(a["paths"][:, 0, :] == 0.0)


def test_limit_and_pde():
    model = phom.EffectiveModel.constant(2 * np.eye(2), np.zeros(2))
    ens = phom.simulate_limit(model, T=1.0, n_paths=4000, seed=5)
    end = ens["paths"][:, -1, :]
    assert np.cov(end.T)[0, 0] == pytest.approx(2.0, rel=0.1)
    sol = phom.solve_backward_pde(model, lambda x: math.exp(-0.5 * (x[0] ** 2 + x[1] ** 2)), T=0.5,
                                  half_width=8.0, nodes=81)
    i = len(sol["x"]) // 2
    # heat kernel: s^2 / (s^2 + a tau) at the origin
    assert sol["u"][i, i] == pytest.approx(0.5, rel=0.03)


def test_config_and_reports():
    cfg = phom.Config.load(str(ROOT / "configs" / "reference.toml"))
    assert len(cfg.probe_points()) == 9
    cfg.eps_list = [0.4, 0.2]
    cfg.T = 0.25
    cfg.t0 = 0.0
    cfg.n_paths = 100
    cfg.coeff_samples = 1000
    cfg.bootstrap = 5
    rep = phom.run_convergence(cfg)
    assert [e["eps"] for e in rep["per_eps"]] == [0.4, 0.2]
    assert rep["provenance"]["config_hash"] == cfg.content_hash()
    again = phom.run_convergence(cfg)
    assert again == rep
    assert phom.Config.parse(cfg.to_toml()).content_hash() == cfg.content_hash()


def test_distances():
    assert phom.wasserstein1([0.0, 1.0], [1.0, 2.0]) == pytest.approx(1.0)
    assert phom.sliced_wasserstein1([[0.0, 0.0]], [[0.0, 0.0]]) == 0.0
