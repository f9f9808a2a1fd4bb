import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mertens_bounds import tightness as Tt
from mertens_bounds.errors import InvalidParameterError, RangeError

T4PI = 4 * math.pi


@pytest.fixture(scope="module")
def p399():
    return Tt.FejerParams(399, T4PI)


class TestCoefficients:
    def test_even_coefficients_vanish(self, p399):
        assert np.all(p399.c[0::2] == 0)

    def test_magnitudes(self, p399):
        k = np.arange(1, 400, 2)
        np.testing.assert_allclose(np.abs(p399.c[k]), 4 / math.pi * (1 / k - 1 / 400), rtol=1e-15)

    def test_signs_alternate(self, p399):
        signs = np.sign(p399.c[1::2])
        assert np.all(signs[0::2] == 1) and np.all(signs[1::2] == -1)

    def test_total_variation(self, p399):
        k = np.arange(1, 400, 2)
        expected = math.fsum(16 / math.pi * (1 - k / 400))
        assert p399.total_variation == pytest.approx(expected, rel=1e-13)

    def test_rejects_bad_params(self):
        with pytest.raises(InvalidParameterError):
            Tt.FejerParams(0, 1.0)
        with pytest.raises(InvalidParameterError):
            Tt.FejerParams(5, -1.0)


class TestSigma:
    @pytest.mark.parametrize("K", [9, 99, 999])
    def test_bounded_by_one(self, K):
        t = np.linspace(0, 2 * math.pi, 200_001)
        assert np.max(np.abs(Tt.sigma_k(Tt.FejerParams(K, 1.0), t))) <= 1

    @given(st.floats(-50, 50))
    @settings(max_examples=200, deadline=None)
    def test_half_period_antisymmetry(self, t):
        p = Tt.FejerParams(49, 1.0)
        assert Tt.sigma_k(p, t + math.pi) == pytest.approx(-Tt.sigma_k(p, t), abs=1e-12)

    def test_zero_mean(self, p399):
        x, w = np.polynomial.legendre.leggauss(64)
        edges = np.linspace(0, 2 * math.pi, 401)
        mid, half = (edges[1:] + edges[:-1]) / 2, (edges[1:] - edges[:-1]) / 2
        t = (mid[:, None] + half[:, None] * x).ravel()
        vals = Tt.sigma_k(p399, t).reshape(400, 64)
        assert abs(math.fsum((half[:, None] * w * vals).ravel())) <= 1e-10

    def test_approaches_square_wave(self):
        p = Tt.FejerParams(999, 1.0)
        assert Tt.sigma_k(p, 0.0) == pytest.approx(1, abs=0.01)
        assert Tt.sigma_k(p, math.pi) == pytest.approx(-1, abs=0.01)

    def test_scalar_in_scalar_out(self, p399):
        assert isinstance(Tt.sigma_k(p399, 0.3), float)


class TestL1:
    def test_decreases_with_K(self):
        vals = [Tt.l1_distance(Tt.FejerParams(K, T4PI)) for K in (49, 199, 799)]
        assert vals[0] > vals[1] > vals[2] > 0

    def test_quadrature_converged(self, p399):
        a = Tt.l1_distance(p399)
        b = Tt.l1_distance(p399, panels_per_unit=8, nodes=16)
        assert a == pytest.approx(b, rel=1e-9)

    def test_main_term_closed_form(self):
        # int_1^x sgn cos(T log y) dy by substitution, piecewise
        T, N = 3.0, 4
        x = Tt.x_of(N, T)
        edges = [1.0] + [math.exp((math.pi / 2 + j * math.pi) / T) for j in range(2 * N + 1)]
        edges[-1] = x
        total = math.fsum((-1) ** j * (b - a) for j, (a, b) in enumerate(zip(edges, edges[1:])))
        assert Tt.square_wave_sum_main(x, T) == pytest.approx(total, rel=1e-12)


class TestFejerSums:
    def test_matches_direct_sum(self, p399):
        stops = [1, 17, 1000, 100_000]
        n = np.arange(1, stops[-1] + 1, dtype=float)
        a = Tt.sigma_k(p399, T4PI * np.log(n))
        for stop, (S, H, err) in zip(stops, Tt.fejer_sums(p399, stops)):
            assert abs(S - math.fsum(a[:stop])) <= err
            assert abs(H - math.fsum(a[:stop] / n[:stop])) <= err

    def test_worker_count_irrelevant(self, p399, monkeypatch):
        monkeypatch.setattr(Tt, "BLOCK", 1 << 12)
        one = Tt.fejer_sums(p399, [50_000], workers=1)
        four = Tt.fejer_sums(p399, [50_000], workers=4)
        assert one == four

    def test_rejects_nonpositive_stop(self, p399):
        with pytest.raises(InvalidParameterError):
            Tt.fejer_sums(p399, [0])


class TestAdmissible:
    def test_published_range(self):
        assert Tt.admissible_N(T4PI) == [39, 40, 41]
        assert Tt.x_of(41, T4PI) <= 1e9 < Tt.x_of(42, T4PI)

    def test_phase(self):
        x = Tt.x_of(7, 2.5)
        assert math.cos(2.5 * math.log(x)) == pytest.approx(0, abs=1e-12)


class TestExperiment:
    def test_moderate_N(self, p399):
        rep = Tt.tightness_experiment(p399, [10, 20, 25])
        assert rep.ok
        assert rep.envelope_shrinking
        last = rep.rows[-1]
        assert last.ratio == pytest.approx(math.tanh(math.pi / (2 * T4PI)), abs=last.envelope)

    def test_cap(self, p399):
        with pytest.raises(RangeError):
            Tt.tightness_experiment(p399, [42])

    def test_rejects_nonpositive_N(self, p399):
        with pytest.raises(InvalidParameterError):
            Tt.tightness_experiment(p399, [0, 3])

    def test_report_file(self, p399, tmp_path):
        rep = Tt.tightness_experiment(p399, [5, 6])
        out = tmp_path / "r.csv"
        Tt.write_report(out, rep)
        lines = out.read_text().splitlines()
        assert lines[0] == "N,x,S,ratio,target,envelope,harmonic,harmonic_target,harmonic_envelope"
        assert len(lines) == 3
        fields = lines[1].split(",")
        assert int(fields[0]) == 5
        assert float(fields[3]) == pytest.approx(rep.rows[0].ratio, rel=1e-14)


class TestDirichlet:
    @pytest.mark.parametrize("K,T,s", [(9, 10.0, 2.0), (1, T4PI, 3.0), (9, 10.0, 2 + 5j)])
    def test_series_matches_zeta_combination(self, K, T, s):
        chk = Tt.dirichlet_rep_check(Tt.FejerParams(K, T), s)
        assert chk.ok, chk

    def test_requires_half_plane(self):
        with pytest.raises(InvalidParameterError):
            Tt.dirichlet_rep_check(Tt.FejerParams(3, 1.0), 1.2)

    def test_value_at_one_finite(self, p399):
        A1, err = Tt.dirichlet_value_at_one(p399)
        assert math.isfinite(A1) and err < 1e-8
