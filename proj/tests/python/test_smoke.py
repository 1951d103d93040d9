import math

import numpy as np
import pytest

import msbound

R_EXAMPLE = 3.6316049058937194


def small_config(**overrides):
    cfg = msbound.paper_example_config()
    cfg["runs"] = 64
    cfg["horizon"] = 200
    cfg["c1_samples"] = 10000
    cfg["outputs"] = {"csv": "", "plot_data": "", "svg": ""}
    cfg.update(overrides)
    return cfg


def test_saturate_and_rotation():
    np.testing.assert_allclose(msbound.saturate(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])
    np.testing.assert_allclose(msbound.saturate(np.array([0.3, 0.4]), 1.0), [0.3, 0.4])
    q = msbound.rotation(0.8)
    np.testing.assert_allclose(q @ q.T, np.eye(2), atol=1e-15)


def test_subsampled_sigma_and_bound():
    p = msbound.synth_subsampled(msbound.rotation(0.8), np.array([[1.0], [0.0]]), 2.0, 1.0)
    assert p.cycle_length == 2
    assert p.sigma_d == pytest.approx(0.550720701129742, abs=1e-12)
    assert p.control_bound == pytest.approx(R_EXAMPLE, abs=1e-10)


def test_policy_step_respects_bound():
    p = msbound.synth_random_walk(2.0, 0.8)
    s = p.initial_state()
    np.testing.assert_allclose(p.step(s, np.array([10.0, 0.0]), 0), [-2.0, 0.0])


def test_oracle():
    a = np.diag([0.5, 2.0])
    assert msbound.zero_control_moment_oracle(a, np.eye(2), np.array([1.0, 1.0]), 1) == pytest.approx(6.25)


def test_synthesize_paper_example():
    policy, report = msbound.synthesize(msbound.paper_example_config())
    assert report["k"] == 2
    assert report["R"] == pytest.approx(R_EXAMPLE, abs=1e-9)
    assert policy.variant == "general"


def test_monte_carlo_is_bounded_and_thread_invariant():
    cfg = small_config()
    a = msbound.monte_carlo(cfg, threads=1)
    b = msbound.monte_carlo(cfg, threads=4)
    np.testing.assert_array_equal(a["mean_sq"], b["mean_sq"])
    assert a["mean_sq"][0] == pytest.approx(3000.0)
    assert a["boundedness"]["verdict"] == "BOUNDED"
    assert np.all(a["max_u_norm"] <= R_EXAMPLE + 1e-9)


def test_noiseless_convergence():
    rep = msbound.noiseless_convergence(msbound.paper_example_config())
    assert rep["steps"] == 24
    assert rep["max_control_after"] <= 1e-12


def test_invalid_config_raises_with_kind():
    cfg = small_config(horizon=-1)
    with pytest.raises(msbound.Error) as info:
        msbound.validate_config(cfg)
    assert info.value.kind == "invalid-config"
    assert info.value.exit_code == 2


def test_cli_in_process():
    code, out, _ = msbound.run_cli("synth", "--paper-example")
    assert code == 0
    assert '"k": 2' in out or '"k":2' in out
    code, _, _ = msbound.run_cli("synth")
    assert code == 2
