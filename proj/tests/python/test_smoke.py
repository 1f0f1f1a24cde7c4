import numpy as np
import pytest

import pdetkit


def spd(n, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, n))
    return g @ g.T / n + np.eye(n)


def reference_logdet(a, x):
    s1, l1 = np.linalg.slogdet(a)
    s2, l2 = np.linalg.slogdet(x.T @ np.linalg.solve(a, x))
    return s1 * s2, l1 + l2


@pytest.mark.parametrize("alg", ["ld1", "ld2", "ld3"])
def test_logdet_matches_numpy(alg):
    a = spd(40, 1)
    x = np.random.default_rng(2).standard_normal((40, 12))
    sign, want = reference_logdet(a, x)
    r = pdetkit.logdet(a, x, algorithm=alg, spd=True)
    assert r["sign"] == sign
    assert r["logabs"] == pytest.approx(want, rel=1e-9, abs=1e-9)
    assert r["macs"]["weighted_total"] > 0


def test_complexity_model():
    assert pdetkit.complexity_model("ld1", 0.0, spd=True) == pytest.approx(1 / 3, abs=0)


def test_m_matrix_annihilates_x_and_pdet_agrees():
    a = spd(10, 3)
    x = np.random.default_rng(4).standard_normal((10, 3))
    m = pdetkit.m_matrix(a, x, x)
    assert np.abs(m @ x).max() < 1e-10
    s_direct, l_direct = pdetkit.pdet(m)
    s_fact, l_fact = pdetkit.pdet_m(a, x, x)
    assert s_direct == s_fact
    assert l_fact == pytest.approx(l_direct, rel=1e-8)


def test_pinv_matches_numpy():
    a = np.random.default_rng(5).standard_normal((6, 4))
    assert np.allclose(pdetkit.pinv(a), np.linalg.pinv(a), atol=1e-12)


def test_likelihood_backends_agree():
    rng = np.random.default_rng(6)
    sigma = spd(16, 7)
    x = rng.standard_normal((16, 2))
    y = rng.standard_normal(16)
    values = [pdetkit.loglike_singular(sigma, x, y, backend=b) for b in ("ld1", "ld2", "ld3")]
    assert max(values) - min(values) < 1e-8 * max(1.0, abs(values[0]))


def test_precision_is_m_matrix():
    sigma = spd(9, 8)
    x = np.random.default_rng(9).standard_normal((9, 2))
    assert np.allclose(pdetkit.precision(sigma, x), pdetkit.m_matrix(sigma, x, x), atol=1e-10)


def test_dmx_round_trip(tmp_path):
    a = np.random.default_rng(10).standard_normal((5, 3))
    path = str(tmp_path / "a.dmx")
    pdetkit.save_dmx(path, a)
    assert np.array_equal(pdetkit.load_dmx(path), a)


def test_errors_surface_as_pdetkit_error():
    a = np.diag([1.0, -1.0, 2.0])
    x = np.eye(3)[:, :1]
    with pytest.raises(pdetkit.PdetkitError):
        pdetkit.logdet(a, x, algorithm="ld1", spd=True)
    with pytest.raises(ValueError):
        pdetkit.logdet(a, x, algorithm="ld9")
