"""Smoke tests for the python bindings."""

import math

import pytest

import ising_games as ig


def test_generate_and_exact():
    m = ig.generate_model(3, "mixed", 2.0, seed=7)
    assert m.n == 9
    assert m.num_edges == 12
    assert m.grid_d == 3
    ex = ig.brute_force(m)
    tm = ig.transfer_matrix(m)
    assert ex.log_z == pytest.approx(tm.log_z, abs=1e-9)
    assert max(abs(a - b) for a, b in zip(ex.marginals, tm.marginals)) <= 1e-10


def test_potential_and_payoff():
    m = ig.IsingModel(2, [(0, 1, 0.5)], [1.0, -1.0])
    assert ig.potential(m, [1, 1]) == pytest.approx(0.5)
    assert ig.local_payoff(m, 0, [1, 1]) == pytest.approx(1.5)
    assert ig.local_payoff(m, 1, [1, 1]) == pytest.approx(-0.5)


def test_bp_matches_exact_on_a_tree():
    m = ig.IsingModel(3, [(0, 1, 1.2), (1, 2, -0.7)], [0.3, -0.1, 0.4])
    bp = ig.belief_prop(m)
    ex = ig.brute_force(m)
    assert bp.converged
    assert max(abs(a - b) for a, b in zip(bp.p_plus, ex.marginals)) <= 1e-6


def test_baseline_and_error():
    m = ig.generate_model(2, "sign", 4.0, q=1.0, seed=3)
    ex = ig.exact_auto(m)
    err = ig.marginal_error(ig.baseline(m).p_plus, ex.marginals)
    assert 0.0 <= err <= 0.5


def test_dynamics_run():
    m = ig.generate_model(2, "mixed", 2.0, seed=11)
    hist, marg = ig.mwu_run(m, iters=2000, seed=1)
    assert hist.rounds == 2000
    rep = ig.empirical_regret(m, hist, True)
    assert rep.normalized
    assert all(s >= e - 1e-12 for e, s in zip(rep.external, rep.swap_regret))
    bound = ig.log_z_lower_bound(m, hist)
    assert bound <= ig.brute_force(m).log_z + 1e-9


def test_fp_run():
    m = ig.generate_model(3, "sign", 4.0, q=0.5, seed=5)
    marg, state = ig.fp_run(m, m=15, variant="ce", seed=2)
    assert state.rounds == 15
    assert len(state.assignments) == 16
    assert all(0.0 <= p <= 1.0 for p in marg.p_plus)
    coupling, entropy = ig.fp_log_z_bound(m, state)
    assert coupling + entropy <= ig.exact_auto(m).log_z + 1e-9


def test_determinism():
    m = ig.generate_model(3, "attractive", 2.0, seed=9)
    a = ig.gibbs(m, 5000, 0.1, 4)
    b = ig.gibbs(m, 5000, 0.1, 4)
    assert a.p_plus == b.p_plus


def test_model_file_roundtrip(tmp_path):
    m = ig.generate_model(3, "mixed", 3.5, seed=20240811)
    path = str(tmp_path / "m.json")
    ig.save_model(m, path)
    back = ig.load_model(path)
    assert back.biases == m.biases
    assert back.edges == m.edges


def test_errors_surface_as_exceptions():
    with pytest.raises(ValueError):
        ig.generate_model(3, "mixed", -1.0, seed=0)
    m = ig.generate_model(2, "mixed", 1.0, seed=0)
    with pytest.raises(RuntimeError):
        ig.brute_force(m, max_nodes=1)
