import csv
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from unbiased_market import (
    DomainError,
    MenuEntry,
    MenuError,
    RequestError,
    UniformCost,
    CohortSpec,
    UtilitySpec,
    baseline_menu,
    build_menu,
    cara_certainty_equivalent,
    discrimination_lower_bound,
    expected_total_price,
    generate_population,
    optimal_y,
    optimal_y_bundled,
    utility_value,
)

from conftest import CARA1, LINEAR

# mpmath oracles for u(x) = 1 - e^-x, x_bar = 10.
Y_STAR_Q02 = 0.2231322013961797
PER_POINT_K200 = 5.557830503490449
PER_POINT_K10 = 5.502493863422874
Y_BUNDLED_R2 = 0.22314355079892135
AMORTIZED_R2 = 0.11157177539946068
AMORTIZED_R100 = 0.002231435513142098
U_10 = 0.9999546000702375


def mp_certainty_equivalent(q, x_bar, a):
    with mpmath.workdps(400):
        q, x_bar, a = mpmath.mpf(q), mpmath.mpf(x_bar), mpmath.mpf(a)
        return float(-mpmath.log1p(q * mpmath.expm1(-a * x_bar)) / a)


class TestOptimalY:
    def test_sure_thing(self):
        assert optimal_y(1.0, 10.0, CARA1) == pytest.approx(10.0, abs=1e-9)

    def test_reference_q(self):
        assert optimal_y(0.2, 10.0, CARA1) == pytest.approx(Y_STAR_Q02, abs=1e-9)

    def test_small_q_limit(self):
        q = 1e-6
        assert optimal_y(q, 10.0, CARA1, tol=1e-15) / q == pytest.approx(U_10, abs=1e-6)

    def test_linear_is_expected_value(self):
        assert optimal_y(0.3, 10.0, LINEAR) == pytest.approx(3.0, abs=1e-9)

    def test_returns_feasible_side(self):
        y = optimal_y(0.2, 10.0, CARA1)
        assert utility_value(CARA1, y) >= 0.2 * utility_value(CARA1, 10.0)

    @settings(max_examples=200)
    @given(q=st.floats(1e-4, 1.0), a=st.floats(0.01, 3.0), x_bar=st.floats(0.5, 50.0))
    def test_matches_high_precision_closed_form(self, q, a, x_bar):
        y = optimal_y(q, x_bar, UtilitySpec("cara", a))
        assert abs(y - mp_certainty_equivalent(q, x_bar, a)) < 1e-8

    @pytest.mark.parametrize("q", [1.0, 0.999999])
    def test_resolves_root_where_utility_is_flat(self, q):
        # u(y) equals 1/5 to double precision for y > 7.5, yet the root is near 50
        y = optimal_y(q, 50.0, UtilitySpec("cara", 5.0))
        assert y == pytest.approx(mp_certainty_equivalent(q, 50.0, 5.0), abs=1e-8)

    def test_closed_form_helper(self):
        assert cara_certainty_equivalent(0.2, 10.0, 1.0) == pytest.approx(Y_STAR_Q02, rel=1e-14)

    @pytest.mark.parametrize("q,x", [(0.0, 10.0), (1.5, 10.0), (0.5, 0.0)])
    def test_domain(self, q, x):
        with pytest.raises(DomainError):
            optimal_y(q, x, CARA1)


class TestBundled:
    def test_r1_reduces(self):
        assert optimal_y_bundled(0.2, 10.0, CARA1, 1).y_star == optimal_y(0.2, 10.0, CARA1)

    def test_r2(self):
        b = optimal_y_bundled(0.2, 10.0, CARA1, 2)
        assert b.y_star == pytest.approx(Y_BUNDLED_R2, abs=1e-9)
        assert b.amortized == pytest.approx(AMORTIZED_R2, abs=1e-9)

    def test_r100(self):
        assert optimal_y_bundled(0.2, 10.0, CARA1, 100).amortized == pytest.approx(AMORTIZED_R100, abs=1e-10)

    @given(q=st.floats(0.01, 0.99), a=st.floats(0.05, 3.0))
    def test_amortized_nonincreasing(self, q, a):
        u = UtilitySpec("cara", a)
        am = [optimal_y_bundled(q, 10.0, u, r).amortized for r in (1, 2, 4, 10, 100)]
        assert all(b <= a_ + 1e-9 for a_, b in zip(am, am[1:]))

    def test_linear_amortized_constant(self):
        am = [optimal_y_bundled(0.2, 10.0, LINEAR, r).amortized for r in (1, 2, 10)]
        assert am == pytest.approx([2.0, 2.0, 2.0], abs=1e-9)

    def test_bad_r(self):
        with pytest.raises(DomainError):
            optimal_y_bundled(0.2, 10.0, CARA1, 0)


class TestExpectedTotal:
    def test_reference_example(self):
        total = expected_total_price(500, 500, 0.2, 10.0, 1.0)
        assert total == 1500.0 and total / 200 == 7.5

    def test_all_a(self):
        assert expected_total_price(500, 0, 0.2, 10.0, 0.5) == 1000.0

    def test_empty(self):
        assert expected_total_price(0, 0, 0.2, 10.0, 1.0) == 0.0


@pytest.fixture(scope="module")
def model_menu(reference_pop, reference_log):
    return build_menu(reference_log, 10.0, [1, 2, 5, 10, 200, 500, 999, 1000], mode="model",
                      sellers=reference_pop.sellers)


class TestBuildMenu:
    def test_k200(self, model_menu):
        e = model_menu.entry(200)
        assert e.per_point == pytest.approx(PER_POINT_K200, abs=1e-6)
        assert e.y_star == pytest.approx(Y_STAR_Q02, abs=1e-8)
        assert (e.n_a, e.n_b) == (500, 500)

    def test_small_k(self, model_menu):
        assert model_menu.entry(10).per_point == pytest.approx(PER_POINT_K10, abs=1e-6)
        assert model_menu.entry(1).per_point == pytest.approx(5.5, abs=0.01)

    def test_full_sample_matches_baseline(self, model_menu):
        assert model_menu.entry(1000).per_point == pytest.approx(10.0, abs=1e-6)

    def test_constraint_and_monotone(self, model_menu):
        assert all(e.y_star < e.q * e.x_bar for e in model_menu)
        totals = [e.expected_total for e in model_menu]
        assert all(b > a for a, b in zip(totals, totals[1:]))
        pp = [e.per_point for e in model_menu]
        assert all(b >= a - 1e-12 for a, b in zip(pp, pp[1:]))

    def test_sandwich(self, model_menu, reference_pop):
        lb = discrimination_lower_bound(reference_pop.sellers)
        for e in model_menu:
            assert lb <= e.per_point <= 10.0

    def test_log_mode_prices_recorded_answers(self, reference_log):
        menu = build_menu(reference_log, 10.0, [200], mode="log")
        e = menu.entry(200)
        # recorded ys at q=0.2 below 2 are {.01,.05,.1,.25,.5,1}; 0.25 is the cheapest that flips the low-cost half
        assert e.y_star == 0.25 and e.q_elicited == 0.2
        assert e.expected_total == pytest.approx(0.2 * 500 * 10 + 500 * 0.25)

    def test_log_mode_snaps(self, reference_log):
        e = build_menu(reference_log, 10.0, [190], mode="log").entry(190)
        assert e.q_elicited == 0.2

    def test_log_mode_without_snap(self, reference_log):
        with pytest.raises(MenuError):
            build_menu(reference_log, 10.0, [190], mode="log", snap=False)

    def test_k_above_n(self, reference_log):
        with pytest.raises(RequestError):
            build_menu(reference_log, 10.0, [1001])

    def test_model_mode_needs_profiles(self, reference_log):
        with pytest.raises(MenuError):
            build_menu(reference_log, 10.0, [10], mode="model")

    def test_tie_toward_smaller_y(self, reference_pop, reference_log):
        # Both grid points flip the low-cost half; the refined switch point undercuts them.
        e = build_menu(reference_log, 10.0, [200], y_grid=[0.3, 0.4], mode="model",
                       sellers=reference_pop.sellers).entry(200)
        assert e.y_star == pytest.approx(Y_STAR_Q02, abs=1e-8)


class TestBaselineAndBound:
    def test_baseline_total(self):
        e = baseline_menu(1000, [200], 10.0).entry(200)
        assert e.expected_total == 2000.0 and e.per_point == 10.0

    def test_baseline_flat(self):
        assert {e.per_point for e in baseline_menu(1000, range(1, 1001, 37), 10.0)} == {10.0}

    def test_baseline_rejects_zero(self):
        with pytest.raises(RequestError):
            baseline_menu(1000, [0], 10.0)

    def test_lower_bound_reference(self, reference_pop):
        assert discrimination_lower_bound(reference_pop.sellers) == 5.0

    def test_lower_bound_zero_costs(self, single_cohort):
        assert discrimination_lower_bound(generate_population(single_cohort(0.0), 5, seed=1).sellers) == 0.0

    def test_lower_bound_uniform(self):
        pop = generate_population([CohortSpec("u", 1.0, UniformCost(0, 10))], 2000, seed=11)
        # sd of U(0,10) is 10/sqrt(12); 3 standard errors
        assert abs(discrimination_lower_bound(pop.sellers) - 5.0) <= 3 * 10 / math.sqrt(12 * 2000)

    def test_lower_bound_empty(self):
        with pytest.raises(DomainError):
            discrimination_lower_bound([])


def test_entry_invariants():
    with pytest.raises(MenuError):
        MenuEntry(200, 0.2, 2.0, 10.0, 1500.0, 7.5, 500, 500)
    with pytest.raises(MenuError):
        MenuEntry(200, 0.2, 1.0, 10.0, 1500.0, 7.0, 500, 500)


def test_menu_csv(reference_log, tmp_path):
    menu = build_menu(reference_log, 10.0, [100, 200])
    with open(menu.to_csv(tmp_path / "m.csv", lower_bound=5.0), newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["k", "q", "y_star", "expected_total", "per_point", "baseline_per_point", "lower_bound"]
    assert [r[0] for r in rows[1:]] == ["100", "200"] and rows[1][-1] == "5.0"
