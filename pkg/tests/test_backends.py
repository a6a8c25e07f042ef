"""The compiled and numpy kernels must agree exactly, not approximately."""

import os
import subprocess
import sys
from itertools import combinations

import numpy as np
import pytest

from textdiv._kernels import _python as pyk

ck = pytest.importorskip(
    "textdiv._kernels._speedups", reason="compiled extension not built"
)


def all_combos(size, n):
    return np.array(list(combinations(range(size), n)), dtype=np.int32)


def tied_matrix(rng, size):
    """Symmetric matrix drawn from a coarse grid so ties actually occur."""
    v = rng.integers(1, 9, (size, size)).astype(np.float64) / 8.0
    v = (v + v.T) / 2
    np.fill_diagonal(v, 0.0)
    return v


class TestTrmMasses:
    @pytest.mark.parametrize("inclusive", [False, True])
    def test_batch_equality(self, inclusive):
        rng = np.random.default_rng(101)
        for size, n in [(5, 2), (7, 3), (8, 4)]:
            edge = tied_matrix(rng, size)
            combos = all_combos(size, n)
            a = pyk.trm_masses_batch(edge, combos, inclusive)
            b = ck.trm_masses_batch(edge, combos, inclusive)
            assert a.dtype == b.dtype == np.int64
            assert np.array_equal(a, b)

    def test_asymmetric_edges(self):
        rng = np.random.default_rng(103)
        edge = rng.uniform(0.1, 1.0, (6, 6))
        np.fill_diagonal(edge, 0.0)
        combos = all_combos(6, 3)
        assert np.array_equal(
            pyk.trm_masses_batch(edge, combos, False),
            ck.trm_masses_batch(edge, combos, False),
        )

    def test_fractional_masses_sum_to_six_per_triangle(self):
        rng = np.random.default_rng(107)
        edge = tied_matrix(rng, 6)
        combos = all_combos(6, 2)
        from textdiv import triangle_count

        masses = ck.trm_masses_batch(edge, combos, False)
        assert (masses.sum(axis=1) == 6 * triangle_count(2, 4)).all()


class TestMinMean:
    def test_bitwise_equality(self):
        rng = np.random.default_rng(109)
        for size, n in [(5, 2), (8, 4), (9, 3)]:
            dist = rng.uniform(0.0, 2.0, (size, size))
            np.fill_diagonal(dist, 0.0)
            combos = all_combos(size, n)
            a = pyk.min_mean_batch(dist, combos)
            b = ck.min_mean_batch(dist, combos)
            assert np.array_equal(a, b)  # exact, not approx


class TestMeteorPairs:
    def make_fixture(self, rng, n_utts=6, vocab=9):
        toks = []
        stems = []
        for _ in range(n_utts):
            length = int(rng.integers(1, 8))
            t = rng.integers(0, vocab, length).astype(np.int32)
            # map several surface ids onto one "stem" id to force stage 2
            s = (t // 2).astype(np.int32) + vocab
            toks.append(t)
            stems.append(s)
        off = np.zeros(n_utts + 1, dtype=np.int64)
        for i, t in enumerate(toks):
            off[i + 1] = off[i] + len(t)
        tok_flat = np.concatenate(toks).astype(np.int32)
        stem_flat = np.concatenate(stems).astype(np.int32)
        pairs = np.array(
            [(i, j) for i in range(n_utts) for j in range(n_utts) if i != j],
            dtype=np.int32,
        )
        return tok_flat, off, stem_flat, pairs

    def test_bitwise_equality(self):
        rng = np.random.default_rng(113)
        for _ in range(5):
            tok_flat, off, stem_flat, pairs = self.make_fixture(rng)
            a = pyk.meteor_score_pairs(tok_flat, off, stem_flat, off, pairs)
            b = ck.meteor_score_pairs(tok_flat, off, stem_flat, off, pairs)
            assert np.array_equal(a, b)

    def test_scores_in_unit_interval(self):
        rng = np.random.default_rng(127)
        tok_flat, off, stem_flat, pairs = self.make_fixture(rng)
        scores = ck.meteor_score_pairs(tok_flat, off, stem_flat, off, pairs)
        assert (scores >= 0.0).all()
        assert (scores <= 1.0).all()


class TestCiderPairs:
    MAX_N = 4

    def make_sparse_fixture(self, rng, n_utts=5):
        ids = []
        ws = []
        off = [0]
        for _ in range(n_utts * self.MAX_N):
            size = int(rng.integers(0, 7))
            slot = np.sort(rng.choice(60, size=size, replace=False))
            ids.extend(slot.tolist())
            ws.extend(rng.uniform(0.2, 2.5, size=size).tolist())
            off.append(len(ids))
        lengths = rng.integers(1, 12, n_utts).astype(np.int32)
        pairs = np.array(
            [(i, j) for i in range(n_utts) for j in range(n_utts) if i != j],
            dtype=np.int32,
        )
        return (
            np.asarray(ids or [0], dtype=np.int64),
            np.asarray(ws or [0.0]),
            np.asarray(off, dtype=np.int64),
            lengths,
            pairs,
        )

    def make_token_fixture(self, rng, n_utts=6, vocab=30):
        toks = []
        lens = [0, 1] + [int(rng.integers(2, 10)) for _ in range(n_utts - 2)]
        for length in lens:
            toks.append(rng.integers(1, vocab + 1, length).astype(np.int32))
        off = np.zeros(n_utts + 1, dtype=np.int64)
        for i, t in enumerate(toks):
            off[i + 1] = off[i] + len(t)
        flat = (
            np.concatenate(toks).astype(np.int32)
            if off[-1]
            else np.zeros(1, dtype=np.int32)
        )
        keys = set()
        for _ in range(80):
            k = int(rng.integers(1, self.MAX_N + 1))
            grams = rng.integers(1, vocab + 1, k)
            key = 0
            for d in range(k):
                key |= int(grams[d]) << (15 * d)
            keys.add(key)
        keys = np.array(sorted(keys), dtype=np.int64)
        vals = rng.uniform(0.1, 3.0, len(keys))
        pairs = np.array(
            [(i, j) for i in range(n_utts) for j in range(n_utts) if i != j],
            dtype=np.int32,
        )
        return flat, off, keys, vals, pairs

    def test_sparse_pairs_bitwise_equality(self):
        rng = np.random.default_rng(131)
        for _ in range(5):
            ids, ws, off, lengths, pairs = self.make_sparse_fixture(rng)
            a = pyk.cider_sim_pairs(ids, ws, off, lengths, pairs, self.MAX_N, 6.0)
            b = ck.cider_sim_pairs(ids, ws, off, lengths, pairs, self.MAX_N, 6.0)
            assert np.array_equal(a, b)

    def test_from_tokens_bitwise_equality(self):
        rng = np.random.default_rng(137)
        for _ in range(5):
            flat, off, keys, vals, pairs = self.make_token_fixture(rng)
            a = pyk.cider_sim_from_tokens(
                flat, off, keys, vals, 1.1, pairs, self.MAX_N, 6.0
            )
            b = ck.cider_sim_from_tokens(
                flat, off, keys, vals, 1.1, pairs, self.MAX_N, 6.0
            )
            assert np.array_equal(a, b)

    def test_similarities_in_unit_interval(self):
        rng = np.random.default_rng(139)
        flat, off, keys, vals, pairs = self.make_token_fixture(rng)
        sims = ck.cider_sim_from_tokens(
            flat, off, keys, vals, 1.1, pairs, self.MAX_N, 6.0
        )
        assert (sims >= 0.0).all()
        assert (sims <= 1.0).all()

    def test_identical_slices_score_highest(self):
        # two copies of one utterance must tie at similarity 1
        toks = np.array([3, 5, 3, 7], dtype=np.int32)
        flat = np.concatenate([toks, toks]).astype(np.int32)
        off = np.array([0, 4, 8], dtype=np.int64)
        keys = np.array([], dtype=np.int64)
        vals = np.array([])
        pairs = np.array([(0, 1), (1, 0)], dtype=np.int32)
        sims = ck.cider_sim_from_tokens(flat, off, keys, vals, 2.0, pairs, self.MAX_N, 6.0)
        assert sims == pytest.approx([1.0, 1.0], abs=1e-12)


class TestBackendSelection:
    def _backend_name(self, env_value):
        env = dict(os.environ)
        if env_value is None:
            env.pop("TEXTDIV_BACKEND", None)
        else:
            env["TEXTDIV_BACKEND"] = env_value
        out = subprocess.run(
            [sys.executable, "-c", "from textdiv._kernels import BACKEND_NAME; print(BACKEND_NAME)"],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        return out.stdout.strip()

    def test_default_prefers_compiled(self):
        assert self._backend_name(None) == "compiled"

    def test_forced_python(self):
        assert self._backend_name("python") == "python"

    def test_forced_compiled(self):
        assert self._backend_name("compiled") == "compiled"

    def test_unknown_value_errors(self):
        env = dict(os.environ, TEXTDIV_BACKEND="fortran")
        out = subprocess.run(
            [sys.executable, "-c", "import textdiv._kernels"],
            capture_output=True,
            text=True,
            env=env,
        )
        assert out.returncode != 0
