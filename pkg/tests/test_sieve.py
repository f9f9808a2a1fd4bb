import math
import os
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mertens_bounds import sieve as S
from mertens_bounds.errors import FormatError, InvalidParameterError, SegmentationError


def mu_naive(n):
    if n == 1:
        return 1
    sign, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            sign = -sign
        p += 1
    return -sign if n > 1 else sign


@pytest.fixture(scope="module")
def naive_mu():
    return np.array([0] + [mu_naive(n) for n in range(1, 100001)], dtype=np.int64)


class TestMobiusSegment:
    def test_first_ten(self):
        assert S.mobius_segment(1, 10).mu.tolist() == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]

    def test_spot_values(self):
        seg = S.mobius_segment(1, 40)
        assert seg[30] == -1 and seg[12] == 0

    def test_prime_squares(self):
        primes = S.primes_up_to(600)[:100]
        for p in primes:
            assert S.mobius_segment(int(p * p), int(p * p))[int(p * p)] == 0

    @given(st.integers(1, 10**12), st.integers(0, 300))
    @settings(max_examples=30, deadline=None)
    def test_matches_factorization_high(self, lo, width):
        seg = S.mobius_segment(lo, lo + width)
        for n in range(lo, lo + width + 1, max(1, width // 7)):
            assert seg[n] == mu_naive(n)

    def test_budget(self):
        with pytest.raises(SegmentationError):
            S.mobius_segment(1, 1000, max_len=100)

    def test_invalid(self):
        with pytest.raises(InvalidParameterError):
            S.mobius_segment(0, 5)


class TestMertensTable:
    def test_mertens_values(self):
        run = S.sieve_pass(1000, stride=10)
        assert run.at(10).M == -1 and run.at(100).M == 1 and run.at(1000).M == 2

    def test_squarefree_counts(self):
        run = S.sieve_pass(100, stride=10)
        assert run.at(10).Q == 7 and run.at(100).Q == 61

    def test_harmonic_sum_exact(self):
        exact = sum(Fraction(mu_naive(n), n) for n in range(1, 11))
        assert S.sieve_pass(10).at(10).m == pytest.approx(float(exact), abs=1e-12)

    def test_harmonic_sum_exact_10k(self):
        exact = sum(Fraction(mu_naive(n), n) for n in range(1, 10001) if mu_naive(n))
        run = S.sieve_pass(10000)
        assert abs(run.at(10000).m - float(exact)) <= 1e-15 + run.m_error

    def test_remainder_definition(self):
        c = S.sieve_pass(100).at(100)
        assert c.R == pytest.approx(61 - 600 / math.pi**2, abs=1e-12)

    def test_known_large(self):
        run = S.sieve_pass(10**7, stride=10**6)
        assert run.at(10**6).M == 212 and run.at(10**7).M == 1037
        assert run.at(10**6).Q == 607926 and run.at(10**7).Q == 6079291

    def test_checkpoint_positions(self):
        xs = [c.x for c in S.mertens_table(95, 10, points=[33, 7])]
        assert xs == [7, 10, 20, 30, 33, 40, 50, 60, 70, 80, 90, 95]

    def test_first_checkpoint(self):
        c = S.sieve_pass(1).at(1)
        assert (c.M, c.m, c.Q) == (1, 1.0, 1)

    def test_prefixes_match_naive(self, naive_mu):
        rng = np.random.default_rng(1)
        pts = sorted(set(rng.integers(1, 100001, 30).tolist()))
        run = S.sieve_pass(100000, points=pts, segment=4099)
        M = np.cumsum(naive_mu)
        Q = np.cumsum(naive_mu != 0)
        for x in pts:
            assert run.at(x).M == M[x] and run.at(x).Q == Q[x]

    def test_increments(self):
        run = S.sieve_pass(5000, stride=1)
        cps = run.checkpoints
        for a, b in zip(cps, cps[1:]):
            assert abs(b.M - a.M) <= 1
            assert b.Q - a.Q in (0, 1)
            assert b.m - a.m == pytest.approx(mu_naive(b.x) / b.x, abs=1e-15)

    @pytest.mark.parametrize("workers,segment", [(1, 1 << 22), (3, 777), (2, 10000)])
    def test_deterministic(self, workers, segment):
        ref = S.sieve_pass(200000, stride=12345, scans=[("M_over_sqrt", 33, 200000)], workers=1, segment=1 << 22)
        run = S.sieve_pass(200000, stride=12345, scans=[("M_over_sqrt", 33, 200000)], workers=workers, segment=segment)
        assert [c.row() for c in run.checkpoints] == [c.row() for c in ref.checkpoints]
        assert run.sups == ref.sups

    def test_multiples_of_four_contribute_nothing(self, naive_mu):
        mu = S.mobius_range(10000)
        assert int(mu[::4].sum()) == 0
        assert int(mu[1:].sum()) == int(mu[1:][(np.arange(1, 10001) % 4) != 0].sum())

    def test_exhaustive_small_remainder(self):
        oracle = S.MertensOracle(2400)
        n = np.arange(1, 2401)
        assert np.all(np.abs(oracle.R(n)) <= np.sqrt(n))


class TestSupScan:
    def test_below_33(self):
        assert S.sup_ratio_scan("M_over_sqrt", 1, 32).sup <= 1

    def test_main_range(self):
        assert S.sup_ratio_scan("M_over_sqrt", 33, 10**6).sup <= 0.570591

    def test_remainder_quarter(self):
        assert S.sup_ratio_scan("R_over_qtr", 7, 10**6).sup <= 1.12543

    def test_against_brute_force(self):
        oracle = S.MertensOracle(3000)
        n = np.arange(50, 3001)
        assert S.sup_ratio_scan("M_over_sqrt", 50, 3000).sup == pytest.approx(np.max(np.abs(oracle.M(n)) / np.sqrt(n)), rel=1e-15)
        # R(x) on [n, n+1) takes values between R(n) and the left limit at n+1
        right = np.abs(oracle.Q(n) - S.SIX_OVER_PI2 * n) / n**0.25
        lim = np.abs(oracle.Q(n[:-1]) - S.SIX_OVER_PI2 * (n[:-1] + 1)) / (n[:-1] + 1) ** 0.25
        assert S.sup_ratio_scan("R_over_qtr", 50, 3000).sup == pytest.approx(max(right.max(), lim.max()), rel=1e-14)

    def test_dense_real_sampling_never_exceeds(self):
        oracle = S.MertensOracle(600)
        rec = S.sup_ratio_scan("R_over_sqrt", 10, 600)
        x = np.linspace(10, 600, 200001)
        vals = np.abs(oracle.R(x)) / np.sqrt(x)
        assert vals.max() <= rec.sup * (1 + 1e-14)
        assert vals.max() >= rec.sup * (1 - 1e-3)

    def test_harmonic_left_limit(self):
        rec = S.sup_ratio_scan("m_times_sqrt", 1, 100)
        assert rec.sup == pytest.approx(math.sqrt(2)) and rec.argmax == 2 and rec.left_limit

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            S.sup_ratio_scan("bogus", 1, 10)


class TestDifintsq:
    def test_hundred(self):
        assert S.verify_difintsq(100)

    def test_one(self):
        assert S.verify_difintsq(1)

    def test_random(self):
        oracle = S.MertensOracle(10**6)
        rng = np.random.default_rng(4)
        for x in rng.integers(1, 10**6 + 1, 50):
            assert S.verify_difintsq(int(x), oracle)

    def test_detects_corruption(self):
        oracle = S.MertensOracle(1000)
        oracle._Q = oracle._Q.copy()
        oracle._Q[1000] += 1
        assert not S.verify_difintsq(1000, oracle)


class TestPersistence:
    def test_write_read(self, tmp_path):
        cps = S.mertens_table(1000, 100)
        path = tmp_path / "m.csv"
        S.write_checkpoints(path, cps)
        back = S.read_checkpoints(path)
        for c in cps:
            b = back[c.x]
            assert (b.M, b.Q) == (c.M, c.Q)
            assert b.m == pytest.approx(c.m, rel=1e-14) and b.R == pytest.approx(c.R, rel=1e-14, abs=1e-14)

    def test_streamed_file_matches(self, tmp_path):
        path = tmp_path / "m.csv"
        run = S.sieve_pass(50000, stride=5000, out_path=path, segment=3000)
        back = S.read_checkpoints(path)
        assert sorted(back) == [c.x for c in run.checkpoints]
        assert not os.path.exists(str(path) + ".state.json")

    def test_resume_after_interrupt(self, tmp_path):
        path = tmp_path / "m.csv"
        scans = [("M_over_sqrt", 33, 60000), ("R_over_qtr", 7, 60000)]

        class Stop(Exception):
            pass

        def interrupt(done, limit):
            if done >= 25000:
                raise Stop

        with pytest.raises(Stop):
            S.sieve_pass(60000, stride=4000, scans=scans, out_path=path, segment=5000, progress=interrupt)
        assert not path.exists()
        resumed = S.sieve_pass(60000, stride=4000, scans=scans, out_path=path, segment=5000, resume=True)
        fresh = S.sieve_pass(60000, stride=4000, scans=scans)
        assert [c.row() for c in resumed.checkpoints] == [c.row() for c in fresh.checkpoints]
        assert resumed.sups == fresh.sups
        assert sorted(S.read_checkpoints(path)) == [c.x for c in fresh.checkpoints]

    def test_malformed(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("x,M,m,Q,R\n10,-1,0.09,7\n")
        with pytest.raises(FormatError) as info:
            S.read_checkpoints(path)
        assert info.value.line == 2


def test_workers_env(monkeypatch):
    monkeypatch.setenv(S.WORKERS_ENV, "3")
    assert S.default_workers() == 3
    monkeypatch.setenv(S.WORKERS_ENV, "x")
    with pytest.raises(InvalidParameterError):
        S.default_workers()
