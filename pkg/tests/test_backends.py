"""The compiled core and the NumPy fallback must be interchangeable."""

import numpy as np
import pytest

from conftest import random_stationary_phi
from paeback._backend import _purepy

core = pytest.importorskip("paeback._backend._core")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def test_backend_is_compiled_by_default():
    import paeback

    assert paeback.backend_name() == "compiled"


def test_autocov_agrees(rng):
    x = rng.standard_normal(400) + 2.0
    np.testing.assert_allclose(core.autocov(x, 8), _purepy.autocov(x, 8), rtol=1e-12, atol=1e-14)


def test_levinson_agrees(rng):
    for p in (1, 3, 6):
        phi = random_stationary_phi(rng, p)
        x = rng.standard_normal(500)
        g = _purepy.autocov(x, p)
        phi_c, s2_c, st_c = core.levinson(g, p)
        phi_p, s2_p, st_p = _purepy.levinson(g, p)
        assert st_c == st_p == 0
        np.testing.assert_allclose(phi_c, phi_p, rtol=1e-12)
        assert s2_c == pytest.approx(s2_p, rel=1e-12)


def test_levinson_degenerate_status():
    g = np.zeros(3)
    _, _, st_c = core.levinson(g, 2)
    _, _, st_p = _purepy.levinson(g, 2)
    assert st_c == st_p == 1


def test_ar_forecast_agrees(rng):
    phi = random_stationary_phi(rng, 4)
    tail = rng.standard_normal(4)
    np.testing.assert_allclose(
        core.ar_forecast(phi, tail, 6), _purepy.ar_forecast(phi, tail, 6), rtol=1e-12
    )


def test_oracle_forecasts_agree(rng):
    x = rng.standard_normal(300).cumsum() * 0.1 + rng.standard_normal(300)
    ks = np.array([20, 50, 120, 250], dtype=np.int64)
    fc_c, s_c, st_c = core.oracle_forecasts(x, 250, 4, 3, ks)
    fc_p, s_p, st_p = _purepy.oracle_forecasts(x, 250, 4, 3, ks)
    np.testing.assert_array_equal(st_c, st_p)
    np.testing.assert_allclose(fc_c, fc_p, rtol=1e-10)
    np.testing.assert_allclose(s_c, s_p, rtol=1e-10)


def test_fukuchi_risks_agree(rng):
    x = rng.standard_normal(90)
    ks = np.array([10, 30, 60], dtype=np.int64)
    r_c, st_c = core.fukuchi_risks(x, 85, 5, 2, ks)
    r_p, st_p = _purepy.fukuchi_risks(x, 85, 5, 2, ks)
    np.testing.assert_array_equal(st_c, st_p)
    np.testing.assert_allclose(r_c, r_p, rtol=1e-10)


def test_cd_enet_agrees(rng):
    for _ in range(5):
        Z = rng.standard_normal((40, 5))
        y = Z @ rng.uniform(-1, 1, 5) + 0.2 * rng.standard_normal(40)
        G, c = Z.T @ Z, Z.T @ y
        w = rng.uniform(0.5, 2.0, 5)
        l1, l2 = rng.uniform(0.1, 3.0), rng.uniform(0.0, 2.0)
        phi_c = np.zeros(5)
        phi_p = np.zeros(5)
        s_c, conv_c = core.cd_enet(G, c, w, l1, l2, phi_c, 1e-10, 10_000)
        s_p, conv_p = _purepy.cd_enet(G, c, w, l1, l2, phi_p, 1e-10, 10_000)
        assert conv_c and conv_p
        np.testing.assert_allclose(phi_c, phi_p, atol=1e-8)


def test_sw_scores_agree(rng):
    Z = rng.standard_normal((80, 4))
    y = Z @ np.array([0.5, -0.2, 0.1, 0.0]) + 0.3 * rng.standard_normal(80)
    w = rng.uniform(0.5, 2.0, 4)
    l1s = np.array([0.01, 0.5, 5.0, 50.0])
    l2s = np.array([0.0, 0.25, 2.5, 0.0])
    factors = np.array([1.0, 1.01, 1.05, 1.0])
    s_c = core.sw_scores(Z, y, w, l1s, l2s, factors, 10, 1e-8, 10_000)
    s_p = _purepy.sw_scores(Z, y, w, l1s, l2s, factors, 10, 1e-8, 10_000)
    np.testing.assert_allclose(s_c, s_p, rtol=1e-6)


def test_fallback_selected_by_env(tmp_path):
    import subprocess
    import sys

    code = (
        "import paeback, sys; "
        "sys.exit(0 if paeback.backend_name() == 'python' else 1)"
    )
    env = {"PAEBACK_BACKEND": "python", "PATH": "/usr/bin:/bin"}
    import os

    env.update({k: v for k, v in os.environ.items() if k not in env})
    proc = subprocess.run([sys.executable, "-c", code], env=env)
    assert proc.returncode == 0
