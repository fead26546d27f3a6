"""Stream keying/reuse and the numba/numpy kernel pair."""

import numpy as np
import pytest

from speccast import kernels
from speccast import rng as rngmod


class TestStreams:
    def test_distinct_keys_distinct_draws(self):
        a = rngmod.stream(1, 0, rngmod.ROUND).random(8)
        b = rngmod.stream(1, 0, rngmod.FALLBACK).random(8)
        c = rngmod.stream(1, 1, rngmod.ROUND).random(8)
        d = rngmod.stream(2, 0, rngmod.ROUND).random(8)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)
        assert not np.array_equal(a, d)

    def test_same_key_replays(self):
        a = rngmod.stream(5, 3, rngmod.FALLBACK).standard_normal(16)
        b = rngmod.stream(5, 3, rngmod.FALLBACK).standard_normal(16)
        assert np.array_equal(a, b)

    def test_reusable_matches_fresh(self):
        pool = rngmod.ReusableStream()
        for key in [(1, 0, rngmod.ROUND), (1, 1, rngmod.FALLBACK), (9, 2, rngmod.RESIDUAL)]:
            gen = pool.rekey(*key)
            got = (gen.random(4), gen.standard_normal(3))
            fresh = rngmod.stream(*key)
            want = (fresh.random(4), fresh.standard_normal(3))
            assert np.array_equal(got[0], want[0])
            assert np.array_equal(got[1], want[1])

    def test_negative_round_rejected(self):
        with pytest.raises(ValueError):
            rngmod.stream(0, -1, 0)

    def test_derive_seed_stable_and_distinct(self):
        assert rngmod.derive_seed(7, 1, 2) == rngmod.derive_seed(7, 1, 2)
        assert rngmod.derive_seed(7, 1, 2) != rngmod.derive_seed(7, 2, 1)


def _pairs(name):
    impls = kernels.implementations(name)
    out = [("numpy", impls["numpy"])]
    if "numba" in impls:
        out.append(("numba", impls["numba"]))
    return out


class TestBlockLengthsIid:
    def test_against_python_reference(self):
        rng = np.random.default_rng(1)
        u = rng.random((500, 4))
        alpha = 0.7
        expected = []
        for row in u:
            length = 5
            for i, v in enumerate(row):
                if v >= alpha:
                    length = i + 1
                    break
            expected.append(length)
        got = kernels.block_lengths_iid(u, alpha)
        assert got.tolist() == expected

    def test_backends_agree(self):
        rng = np.random.default_rng(2)
        u = rng.random((2000, 5))
        results = {}
        for name, fn in _pairs("block_lengths_iid"):
            out = np.empty(u.shape[0], dtype=np.int64)
            fn(u, 0.8, out)
            results[name] = out
        ref = results.pop("numpy")
        for name, out in results.items():
            assert np.array_equal(ref, out), name

    def test_extremes(self):
        u = np.random.default_rng(0).random((100, 3))
        assert np.all(kernels.block_lengths_iid(u, 1.0) == 4)
        # alpha = 0 rejects immediately except measure-zero u == 0 draws
        assert np.all(kernels.block_lengths_iid(u, 0.0) == 1)


class TestBlockLengthsMarkov:
    def test_backends_agree(self):
        rng = np.random.default_rng(3)
        ua = rng.random((3000, 6))
        us = rng.random((3000, 6))
        args = (0.4, 0.6, 0.9, 0.3, 0.5)
        results = {}
        for name, fn in _pairs("block_lengths_markov"):
            out = np.empty(ua.shape[0], dtype=np.int64)
            fn(ua, us, *args, out)
            results[name] = out
        ref = results.pop("numpy")
        for name, out in results.items():
            assert np.array_equal(ref, out), name

    def test_constant_chain_reduces_to_iid(self):
        rng = np.random.default_rng(4)
        ua = rng.random((5000, 4))
        us = rng.random((5000, 4))
        same = kernels.block_lengths_markov(ua, us, 0.5, 0.75, 0.75, 0.5, 0.5)
        iid = kernels.block_lengths_iid(ua, 0.75)
        assert np.array_equal(same, iid)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            kernels.block_lengths_markov(np.zeros((4, 2)), np.zeros((4, 3)), 0.5, 0.5, 0.5, 0.5, 0.5)


class TestPracticalSingleStep:
    def test_backends_agree(self):
        rng = np.random.default_rng(5)
        n = 5000
        z, u, z_fb = rng.standard_normal(n), rng.random(n), rng.standard_normal(n)
        results = {}
        for name, fn in _pairs("practical_single_step_1d"):
            out = np.empty(n)
            fn(z, u, z_fb, 0.0, 1.0, 1.0, 0.0, out)
            results[name] = out
        ref = results.pop("numpy")
        for name, out in results.items():
            assert np.array_equal(ref, out), name

    def test_identical_heads_pass_through(self):
        rng = np.random.default_rng(6)
        n = 1000
        z, u, z_fb = rng.standard_normal(n), rng.random(n), rng.standard_normal(n)
        out = kernels.practical_single_step_1d(z, u, z_fb, 2.0, 2.0, 0.5)
        np.testing.assert_array_equal(out, 2.0 + 0.5 * z)


class TestResidualPool:
    def test_backends_agree(self):
        rng = np.random.default_rng(7)
        n, m = 2000, 32
        zp, up = rng.standard_normal((n, m)), rng.random((n, m))
        results = {}
        for name, fn in _pairs("residual_pool_1d"):
            out = np.full(n, np.nan)
            draws = np.empty(n, dtype=np.int64)
            fn(zp, up, 1.0, 0.0, 1.0, out, draws)
            results[name] = (out, draws)
        ref_out, ref_draws = results.pop("numpy")
        for name, (out, draws) in results.items():
            assert np.array_equal(ref_draws, draws), name
            mask = ref_draws > 0
            assert np.array_equal(ref_out[mask], out[mask]), name

    def test_exhaustion_flagged(self):
        # overlapping heads with a tiny pool must leave some rows unfilled
        rng = np.random.default_rng(8)
        zp, up = rng.standard_normal((500, 1)), rng.random((500, 1))
        _, draws = kernels.residual_pool_1d(zp, up, 0.05, 0.0, 1.0)
        assert np.any(draws == -1)

    def test_draw_cost_matches_identity(self):
        from speccast.prob import gap_for_overlap

        beta = 0.6
        gap = gap_for_overlap(beta)
        rng = np.random.default_rng(9)
        n, m = 20000, 256
        zp, up = rng.standard_normal((n, m)), rng.random((n, m))
        _, draws = kernels.residual_pool_1d(zp, up, gap, 0.0, 1.0)
        assert np.all(draws > 0)
        expected = 1.0 / (1.0 - beta)
        assert abs(draws.mean() - expected) / expected < 0.05


class TestBackendSelection:
    def test_backend_reported(self):
        assert kernels.BACKEND in ("numba", "numpy")

    def test_numpy_fallback_env(self):
        import subprocess
        import sys

        code = (
            "import speccast.kernels as k; "
            "assert k.BACKEND == 'numpy'; "
            "import numpy as np; "
            "print(k.block_lengths_iid(np.random.default_rng(0).random((10, 3)), 0.5).sum())"
        )
        out = subprocess.run(
            [sys.executable, "-c", code],
            env={"SPECCAST_BACKEND": "numpy", "PATH": "/usr/bin:/bin"},
            capture_output=True,
            text=True,
        )
        assert out.returncode == 0, out.stderr
