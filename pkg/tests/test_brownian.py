import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sllgs import brownian as br


def test_deterministic():
    a = br.generate(7, 100, 0.01)
    b = br.generate(7, 100, 0.01)
    np.testing.assert_array_equal(a.W, b.W)
    assert not np.array_equal(a.W, br.generate(8, 100, 0.01).W)
    assert not np.array_equal(a.W, br.generate(7, 100, 0.01, path_index=1).W)


def test_starts_at_zero_and_shapes():
    p = br.generate(1, 10, 0.5, dimensions=1)
    assert p.W.shape == (11, 1)
    assert np.all(p.W[0] == 0)
    assert p.increments.shape == (10, 1)
    np.testing.assert_allclose(p.times[-1], 5.0)


def test_distribution_mean_and_variance():
    dt = 0.003
    dw = br.generate(123, 1_000_000 // 3 + 1, dt).increments.ravel()[:1_000_000]
    se = np.sqrt(dt / dw.size)
    assert abs(dw.mean()) < 4 * se
    assert dw.var() == pytest.approx(dt, rel=0.01)


def test_components_uncorrelated():
    dw = br.generate(5, 200_000, 1.0).increments
    c = np.corrcoef(dw.T)
    assert np.max(np.abs(c - np.eye(3))) < 4 / np.sqrt(200_000)


def test_coarsen_identity_and_sum():
    p = br.generate(3, 12, 0.1)
    np.testing.assert_array_equal(br.coarsen(p, 1).W, p.W)
    c = br.coarsen(p, 3)
    assert c.base_dt == pytest.approx(0.3)
    np.testing.assert_allclose(c.increments, p.increments.reshape(4, 3, 3).sum(axis=1),
                               rtol=0, atol=1e-15)
    assert np.array_equal(c.terminal, p.terminal)


def test_coarsen_nesting_exact():
    p = br.generate(9, 64, 1 / 64)
    np.testing.assert_array_equal(p.coarsen(2).coarsen(2).W, p.coarsen(4).W)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63 - 1), st.integers(1, 6), st.integers(1, 6))
def test_terminal_value_preserved(seed, k1, k2):
    p = br.generate(seed, k1 * k2 * 5, 0.01)
    assert np.array_equal(p.coarsen(k1).coarsen(k2).terminal, p.terminal)


def test_coarsen_rejects_non_divisor():
    with pytest.raises(ValueError):
        br.coarsen(br.generate(1, 10, 0.1), 3)


@pytest.mark.parametrize('kw', [dict(n_steps=0), dict(base_dt=0.0), dict(base_dt=-1.0)])
def test_generate_preconditions(kw):
    args = dict(seed=1, n_steps=4, base_dt=0.1)
    args.update(kw)
    with pytest.raises(ValueError):
        br.generate(**args)


def test_dump_load_round_trip(tmp_path):
    p = br.generate(2**63 + 5, 33, 0.02, path_index=0)
    f = tmp_path / 'w.bin'
    p.dump(f)
    q = br.BrownianPath.load(f)
    assert (q.seed, q.base_dt) == (p.seed, p.base_dt)
    np.testing.assert_array_equal(q.W, p.W)
    f.write_bytes(f.read_bytes()[:-8])
    with pytest.raises(ValueError):
        br.BrownianPath.load(f)


def test_ensemble_independent_of_order():
    E = br.ensemble_values(11, 5, 20, 0.1)
    tail = br.ensemble_values(11, 2, 20, 0.1, start=3)
    np.testing.assert_array_equal(E[3:], tail)
    np.testing.assert_array_equal(E[2], br.generate(11, 20, 0.1, path_index=2).W)


def test_noise_stream_matches_generate():
    s = br.NoiseStream(4, [0, 3], 0.05, block=7)
    got = np.stack([s.next() for _ in range(30)], axis=1)
    for row, idx in enumerate([0, 3]):
        ref = br.generate(4, 30, 0.05, path_index=idx).increments
        np.testing.assert_allclose(got[row], ref, rtol=0, atol=1e-14)
    assert len(s) == 2
