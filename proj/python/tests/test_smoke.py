"""Smoke tests for the _hermifp extension module."""

import math

import _hermifp as hfp

DOUBLE_WELL = [0.0, 0.0, -0.5, 0.0, 0.25]
QUADRATIC = [0.0, 0.0, 0.5]


def test_zeta_constants():
    assert abs(hfp.zeta("ou") - 1.0 / math.sqrt(2.0)) < 1e-12
    assert abs(hfp.zeta("harmonic") - 1.0 / math.sqrt(2.0)) < 1e-12
    assert abs(hfp.zeta("bistable") - 0.624) < 1e-3
    assert abs(hfp.zeta("asymmetric-bistable") - 0.944) < 1e-3
    assert abs(hfp.alpha_shift() - 0.885) < 1e-3


def test_white_map_oddness():
    assert abs(hfp.white_R(0.0, 1.0, 1.0, DOUBLE_WELL)) < 1e-12
    plus = hfp.white_R(0.4, 5.0, 1.0, DOUBLE_WELL)
    minus = hfp.white_R(-0.4, 5.0, 1.0, DOUBLE_WELL)
    assert abs(plus + minus) < 1e-10
    assert plus > 0.0


def test_white_fixed_points_pitchfork():
    spec = hfp.ProblemSpec(DOUBLE_WELL, theta=1.0, beta=5.0)
    smap = hfp.SelfConsistencyMap("white-exact", spec)
    roots = smap.fixed_points(5.0)
    assert len(roots) == 3
    assert abs(roots[0] + roots[2]) < 1e-6
    assert abs(roots[1]) < 1e-7
    # Below the transition only the symmetric equilibrium survives.
    assert len(smap.fixed_points(1.0)) == 1


def test_spectral_matches_exact_map():
    spec = hfp.ProblemSpec(QUADRATIC, theta=0.5, beta=2.0)
    exact = hfp.white_R(0.3, 2.0, 0.5, QUADRATIC)
    smap = hfp.SelfConsistencyMap("spectral-mckean", spec, degrees=[24])
    assert abs(smap(0.3, 2.0) - exact) < 1e-6


def test_mc_noiseless_descent():
    # With beta = inf the dynamics is x' = -x: every particle decays to the
    # origin and the window average is deterministic.
    spec = hfp.ProblemSpec(QUADRATIC, theta=0.0, beta=math.inf)
    est = hfp.simulate(spec, particles=8, dt=1e-3, burn_in=6.0, window=2.0,
                       init_mean=1.0, init_stddev=0.0, batches=2)
    assert abs(est["m_hat"]) < 2e-3
    assert est["std_error"] < 1e-3


def test_solve_steady_gaussian():
    spec = hfp.ProblemSpec(QUADRATIC, theta=0.0, beta=2.0)
    out = hfp.solve_steady(spec, mean=0.0)
    assert out["steady"]
    assert abs(out["mean"]) < 1e-8
    assert abs(out["mass"] - 1.0) < 1e-9


def test_colored_steady_runs():
    spec = hfp.ProblemSpec(QUADRATIC, theta=0.0, beta=2.0, noise="ou", epsilon=0.5)
    out = hfp.solve_steady(spec, degrees=[12, 12])
    assert out["steady"]
    assert abs(out["mean"]) < 1e-6


def test_config_error_surfaces():
    try:
        hfp.ProblemSpec([0.0, 1.0], theta=0.0, beta=1.0)
    except hfp.ConfigError:
        pass
    else:
        raise AssertionError("degree-1 potential must be rejected")
