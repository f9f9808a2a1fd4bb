import math

import numpy as np
import pytest

from mertens_bounds import explicit_formula as E
from mertens_bounds import sieve as S
from mertens_bounds import zeta as Z
from mertens_bounds.approximant import WeightParams, weight_w
from mertens_bounds.errors import HypothesisViolationError, IncompleteTableError, InvalidParameterError


@pytest.fixture(scope="module")
def table500(zero_table_5000):
    return zero_table_5000.truncated(500.0)


@pytest.fixture(scope="module")
def line_max_500():
    return Z.zeta_line_max(500.0)


class TestZeroSum:
    def test_real_and_matches_unpaired_sum(self, table500):
        x, sigma = 1e5, 0.0
        p = WeightParams(500.0, sigma)
        g = table500.gammas
        rho = np.concatenate([0.5 + 1j * g, 0.5 - 1j * g])
        res = table500.residue_array()
        res = np.concatenate([res, np.conj(res)])
        direct = p.delta * np.sum(weight_w(p, rho) * res * np.exp((rho - sigma) * math.log(x)))
        got = E.zero_sum(x, sigma, p, table500)
        assert abs(direct.imag) <= 1e-9 * rho.size
        assert got.imag == 0
        assert abs(got.real - direct.real) <= 1e-9 * rho.size

    def test_bounded_by_coth_constant(self, table500):
        rng = np.random.default_rng(8)
        for sigma in (0.0, 1.0):
            p = WeightParams(500.0, sigma)
            C = E.coth_constant(p, table500)
            for x in np.exp(rng.uniform(math.log(4000), math.log(1e9), 20)):
                # both signs of gamma contribute, hence the factor 2
                assert abs(E.zero_sum(x, sigma, p, table500)) <= 2 * C * x ** (0.5 - sigma)

    def test_empty_table(self):
        assert E.zero_sum(100.0, 0.0, WeightParams(13.0, 0.0), Z.ZeroTable(13.0, (), True)) == 0

    def test_refuses_incomplete(self, table500):
        bad = Z.ZeroTable(500.0, table500.zeros[:-1], False)
        with pytest.raises(IncompleteTableError):
            E.zero_sum(1e5, 0.0, WeightParams(500.0, 0.0), bad)

    def test_refuses_short_table(self, table500):
        with pytest.raises(IncompleteTableError):
            E.zero_sum(1e5, 0.0, WeightParams(600.0, 0.0), table500)

    def test_deterministic(self, zero_table_5000):
        p = WeightParams(5000.0, 0.0)
        a = E.zero_sum_with_error(3.7e7, 0.0, p, zero_table_5000)
        b = E.zero_sum_with_error(3.7e7, 0.0, p, zero_table_5000)
        assert a == b

    def test_error_estimate_small(self, zero_table_5000):
        _, err = E.zero_sum_with_error(1e8, 0.0, WeightParams(5000.0, 0.0), zero_table_5000)
        assert err < 1e-2


class TestCothConstant:
    def test_single_zero(self, zero_table_5000):
        one = zero_table_5000.truncated(15.0)
        p = WeightParams(100.0, 1.0)
        rho = complex(0.5, one.zeros[0].gamma)
        # on the critical line |w_{delta,1}(rho)| = |coth(delta rho)|
        hand = p.delta * abs(weight_w(p, rho)) * abs(one.zeros[0].inv_zeta_prime)
        assert E.coth_constant(p, one) == pytest.approx(hand, rel=1e-13)

    def test_monotone_prefixes(self, zero_table_5000):
        partial = E.coth_partial_sums(WeightParams(1e6 + 1, 1.0), zero_table_5000)
        assert np.all(np.diff(partial) > 0)

    def test_one_sided_at_million(self, zero_table_5000):
        partial = E.coth_partial_sums(WeightParams(1e6 + 1, 1.0), zero_table_5000)
        assert np.all(partial < 2.66161277991001)
        assert partial[-1] == pytest.approx(E.coth_constant(WeightParams(1e6 + 1, 1.0), zero_table_5000), rel=1e-13)


class TestTrivialZeros:
    @pytest.mark.parametrize("x", [2.0, 10.0, 1e4])
    @pytest.mark.parametrize("sigma", [-1.0, 0.0, 1.0])
    @pytest.mark.parametrize("T", [4 * math.pi, 100.0])
    def test_bound(self, x, sigma, T):
        t = E.trivial_zero_term(x, sigma, WeightParams(T, sigma))
        assert abs(t.value) <= t.bound

    def test_alternating_decreasing(self):
        t = E.trivial_zero_term(2.0, 0.0, WeightParams(50.0, 0.0))
        terms = t.terms
        assert all(a * b < 0 for a, b in zip(terms, terms[1:]))
        assert all(abs(b) < abs(a) for a, b in zip(terms, terms[1:]))

    @pytest.mark.parametrize("x", [2.0, 3.0, 10.0])
    @pytest.mark.parametrize("sigma", [-1.0, 0.0, 1.0])
    @pytest.mark.parametrize("T", [4 * math.pi, 50.0, 5000.0])
    def test_alternation_grid(self, x, sigma, T):
        terms = E.trivial_zero_term(x, sigma, WeightParams(T, sigma), n_max=12).terms
        assert all(a * b < 0 for a, b in zip(terms, terms[1:]))
        assert all(abs(b) < abs(a) for a, b in zip(terms, terms[1:]))

    def test_fast_decay(self):
        p = WeightParams(100.0, 0.0)
        a = E.trivial_zero_term(1e2, 0.0, p).value
        b = E.trivial_zero_term(1e3, 0.0, p).value
        # the leading x^-3 term dominates
        assert abs(a / b) == pytest.approx(1e3, rel=1e-3)

    def test_first_term_against_mpmath(self):
        import mpmath

        p = WeightParams(100.0, 0.5)
        first = E.trivial_zero_term(5.0, 0.5, p, n_max=1).value
        ref = p.delta * weight_w(p, -2.0).real * 5.0**-3 / float(mpmath.zeta(-2, derivative=1))
        assert first == pytest.approx(ref, rel=1e-12)

    def test_domain(self):
        with pytest.raises(InvalidParameterError):
            E.trivial_zero_term(1.5, 0.0, WeightParams(100.0, 0.0))
        with pytest.raises(InvalidParameterError):
            E.trivial_zero_term(5.0, -2.0, WeightParams(100.0, -2.0))


class TestErrorBudget:
    def test_seven_quarters(self):
        T = 1000.0
        x = math.e**2 * T
        b = E.error_budget(x, WeightParams(T, 0.0), 1.0, math.log(x) ** 2)
        assert b.I <= 1
        assert 1 / b.L + 1 / b.L**2 + b.I <= 7 / 4 + 1e-15

    def test_iota_sigma_one(self):
        b = E.error_budget(1e5, WeightParams(500.0, 1.0), 1.0, 1.0)
        assert b.iota_bound == pytest.approx(math.pi / 1000, rel=1e-15)

    def test_iota_sigma_zero(self):
        b = E.error_budget(1e5, WeightParams(500.0, 0.0), 1.0, 1.0)
        assert b.iota_bound == pytest.approx(math.tanh(math.pi / 1000), rel=1e-14)
        assert b.iota_bound <= b.iota_bound / b.iota_bound * math.pi / 1000

    def test_generic_formula(self):
        x, T = 1e6, 500.0
        b = E.error_budget(x, WeightParams(T, 0.0), 1.0, 3.0)
        L = math.log(x / T)
        I = 3.0 / math.log(x) ** 2
        assert b.eps_total == pytest.approx(math.pi / 4 * (1 / L + 1 / L**2 + I) / T**2 + 2 / x, rel=1e-15)

    def test_squarefree_formula(self):
        x, T, c = 1e7, 500.0, 0.0134
        b = E.error_budget(x, WeightParams(T, 0.0), 1.0, 3.0, E.Variant(c))
        L = math.log(x / (c * T) ** 2)
        I = 3.0 / math.log(x) ** 2
        assert b.L == pytest.approx(L)
        assert b.eps_total == pytest.approx(math.pi / 4 * (1 / L + 4 / L**2 + I) / T**2 + 2.9 * c / math.sqrt(x), rel=1e-15)

    def test_domain_named(self):
        with pytest.raises(InvalidParameterError, match="e\\^2 T"):
            E.error_budget(100.0, WeightParams(500.0, 0.0), 1.0, 1.0)
        with pytest.raises(InvalidParameterError, match="4 pi"):
            E.error_budget(1e6, WeightParams(5.0, 0.0), 1.0, 1.0)
        with pytest.raises(InvalidParameterError, match="e c T"):
            E.error_budget(100.0, WeightParams(5000.0, 0.0), 1.0, 1.0, E.Variant(0.0134))

    def test_decreasing_in_T(self):
        x = 1e8
        vals = [E.error_budget(x, WeightParams(T, 0.0), 1.0, 5.0).eps_total for T in (50.0, 200.0, 1000.0, 5000.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("T", [4 * math.pi, 100.0, 5000.0])
    @pytest.mark.parametrize("sigma", [-1.0, 0.0, 1.0])
    def test_corollary_envelope_dominates_assembled(self, T, sigma):
        for x in np.geomspace(math.e**2 * T, 1e12, 25):
            assembled = E.theorem_envelope(x, sigma, WeightParams(T, sigma), math.log(x) ** 2)
            assert assembled <= E.corollary_envelope(x, sigma, T)

    @pytest.mark.parametrize("T", [50.0, 500.0, 5000.0])
    @pytest.mark.parametrize("sigma", [-1.0, 0.0, 1.0])
    def test_squarefree_envelope_dominates_assembled(self, T, sigma):
        v = E.Variant(0.0134)
        for x in np.geomspace(E.corollary_domain(T, v), 1e12, 25):
            assembled = E.theorem_envelope(x, sigma, WeightParams(T, sigma), math.log(x) ** 2 / 3, v)
            assert assembled <= E.corollary_envelope(x, sigma, T, v)


class TestTailIntegral:
    def test_within_line_bound(self, line_max_500):
        value, tail = E.tail_integral(1e5, 500.0)
        assert 0 < value
        assert tail < 1e-12
        assert value + tail <= line_max_500 / math.log(1e5) ** 2


class TestEvaluate:
    def test_sigma_terms(self):
        assert E.sigma_term(0.0) == pytest.approx(-2.0, abs=1e-13)
        assert E.sigma_term(1.0) == 0.0

    def test_headline_point(self, zero_table_5000):
        run = S.sieve_pass(10**6)
        ev = E.evaluate_formula(1e6, 0.0, WeightParams(5000.0, 0.0), zero_table_5000)
        assert run.at(10**6).M == 212
        assert abs(212 - ev.predicted) <= ev.envelope - ev.numerical_error
        ev1 = E.evaluate_formula(1e6, 1.0, WeightParams(5000.0, 1.0), zero_table_5000)
        assert ev1.slack(run.at(10**6).m) > 0

    def test_hypothesis_violation(self, table500):
        with pytest.raises(HypothesisViolationError):
            E.evaluate_formula(4000.0, 0.0, WeightParams(500.0, 0.0), table500, line_max=1e3)

    def test_squarefree_threshold_is_tighter(self, table500):
        x = 2e4
        lm = math.log(x) ** 2 / 2
        E.evaluate_formula(x, 0.0, WeightParams(500.0, 0.0), table500, line_max=lm)
        with pytest.raises(HypothesisViolationError):
            E.evaluate_formula(x, 0.0, WeightParams(500.0, 0.0), table500, E.Variant(0.0134), line_max=lm)

    def test_domain(self, table500):
        with pytest.raises(InvalidParameterError):
            E.evaluate_formula(1000.0, 0.0, WeightParams(500.0, 0.0), table500, line_max=1.0)
        with pytest.raises(InvalidParameterError):
            E.evaluate_formula(1e5, -1.5, WeightParams(500.0, -1.5), table500, line_max=1.0)

    def test_sweep_small(self, table500, line_max_500):
        xs = np.unique(np.ceil(np.geomspace(math.e**2 * 500, 1e6, 30)).astype(np.int64))
        run = S.sieve_pass(10**6, points=xs)
        for sigma, pick in ((0.0, "M"), (1.0, "m")):
            rows = E.certify(xs, sigma, 500.0, table500, [getattr(run.at(int(x)), pick) for x in xs], line_max=line_max_500)
            assert all(r.ok for r in rows)

    def test_certificate_file(self, tmp_path, table500, line_max_500):
        rows = E.certify([5000, 6000], 0.0, 500.0, table500, [S.sieve_pass(6000, points=[5000]).at(5000).M, 0], line_max=line_max_500)
        path = tmp_path / "cert.csv"
        E.write_certificate(path, rows)
        lines = path.read_text().splitlines()
        assert lines[0] == "x,sigma,T,zero_sum,sigma_term,envelope,observed,slack"
        assert len(lines) == 3


class TestCleanBounds:
    def test_published_triples(self):
        t9 = E.PUBLISHED_CLEAN["T=1e9"]
        assert t9.lead == pytest.approx(math.pi / (2 * (1e9 - 1)))
        assert t9.C == 9.758736
        assert E.PUBLISHED_CLEAN["T=1e7+1"].C == 6.738093

    def test_at_one(self):
        for inp in E.PUBLISHED_CLEAN.values():
            assert E.clean_bound(1.0, inp) == pytest.approx(inp.lead + inp.C)
            assert E.clean_bound(1.0, inp, "m") == pytest.approx(inp.lead + inp.C)

    def test_crossover_is_seamless(self):
        assert E.crossover_margin() < 0
        x = E.SQUAREFREE_CROSSOVER * (1 - 1e-9)
        assert E.mertens_clean_bound(x) <= E.clean_bound(x, E.SQUAREFREE_CLEAN)

    def test_published_constants_reflect_coth_sums(self):
        # C is twice the coth sum, rounded up past the absorbed constants
        for key, coth in (("T=1e10+1", 5.675256), ("T=1e9", 4.87936778767100), ("T=1e7+1", 3.36904620179490)):
            C = E.PUBLISHED_CLEAN[key].C
            assert 2 * coth <= C <= 2 * coth + 1e-5

    def test_desk_triple_holds(self, table500):
        p = WeightParams(500.0, 1.0)
        inputs = E.desk_clean_inputs(500.0, E.coth_constant(p, table500))
        oracle = S.MertensOracle(10**6)
        n = np.unique(np.geomspace(1, 10**6, 3000).astype(np.int64))
        assert np.all(np.abs(oracle.M(n)) <= inputs.lead * n + inputs.C * np.sqrt(n))
        assert np.all(np.abs(oracle.m(n)) <= inputs.lead + inputs.C / np.sqrt(n))
