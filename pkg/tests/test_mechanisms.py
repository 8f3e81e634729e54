import itertools
import math

import numpy as np
import pytest

from riskauction import (
    AssumptionError,
    DirectMechanism,
    DomainError,
    Instance,
    MenuOption,
    UsageError,
    Utility,
    check_assumption_A1,
    check_bic,
    check_feasibility,
    check_ir,
    expected_revenue,
    loser_pay_auction,
    menu_mechanism_revenue,
    menu_utility,
    optimal_posted_price,
    optimal_revenue_oracle,
    posted_price_revenue,
    to_direct,
    utility_curve,
)
from riskauction.instances import (
    MENU_W1,
    MENU_X1,
    counterexample_instance,
    counterexample_menu,
    two_buyer_instance,
    two_buyer_loser_payment,
    two_buyer_revenue,
)
from riskauction.mechanisms import (
    loser_payment_probabilities,
    loser_payment_probabilities_recursive,
)

from generators import random_multi_instance, random_single_instance


# posted price


def test_counterexample_posted_price():
    m = optimal_posted_price(counterexample_instance())
    assert m.v_star == pytest.approx(0.4)
    assert m.p_high == pytest.approx(0.96 / 1.8, rel=1e-14)
    assert round(m.p_high, 4) == 0.5333
    assert m.revenue == pytest.approx(0.32, abs=1e-12)


def test_counterexample_price_at_half():
    assert posted_price_revenue(counterexample_instance(), 0.5) == pytest.approx(0.5 * 1.25 / 2.0, rel=1e-14)


def test_two_point_posted_price(two_point):
    m = optimal_posted_price(two_point)
    assert (m.v_star_index, m.v_star) == (1, 1.0)
    assert m.p_high == pytest.approx(2 / 3, rel=1e-14)
    assert m.revenue == pytest.approx(2 / 3, rel=1e-14)
    assert posted_price_revenue(two_point, 1.0) == pytest.approx(2 / 3, rel=1e-14)


def test_posted_price_zero_value_only():
    inst = Instance([0.0], [1.0], [0.0, 1.0], 1, Utility.exponential(1.0))
    m = optimal_posted_price(inst)
    assert (m.v_star, m.p_high, m.revenue) == (0.0, 0.0, 0.0)


def test_posted_price_at_zero(two_point):
    assert posted_price_revenue(two_point, 0.0) == 0.0


def test_posted_price_off_grid(two_point):
    with pytest.raises(DomainError):
        posted_price_revenue(two_point, 0.5)


def test_posted_price_needs_single_buyer():
    with pytest.raises(UsageError):
        optimal_posted_price(two_buyer_instance())


def test_posted_price_ties_go_to_smallest_value():
    # linear utility, values 0, 1, 2 with f chosen so thresholds 1 and 2 tie
    inst = Instance([0.0, 1.0, 2.0], [0.5, 0.25, 0.25], [0.0, 4.0], 1, Utility.linear())
    m = optimal_posted_price(inst)
    assert m.v_star_index == 1
    assert m.revenue == pytest.approx(0.5)


@pytest.mark.parametrize("seed", range(15))
def test_posted_price_is_argmax_and_matches_reserve(seed):
    inst = random_single_instance(np.random.default_rng(seed))
    m = optimal_posted_price(inst)
    revs = [posted_price_revenue(inst, v) for v in inst.values]
    assert m.revenue == pytest.approx(max(revs), rel=1e-14)
    assert m.p_high < 1.0


# assumption A1


def test_A1_passes_two_buyer_example():
    rep = check_assumption_A1(two_buyer_instance(0.1, 100.0))
    assert rep.ok
    top = rep.checks[1]
    assert top.lhs == pytest.approx(3 * math.expm1(0.1), rel=1e-14)
    assert round(top.lhs, 4) == 0.3155
    assert top.rhs == pytest.approx(-math.expm1(-10.0), rel=1e-14)


def test_A1_fails_two_point():
    inst = Instance([0.0, 1.0], [0.5, 0.5], [0.0, 2.0], 2, Utility.exponential(math.log(2.0)))
    rep = check_assumption_A1(inst)
    assert not rep.ok
    assert [c.value for c in rep.failures] == [1.0]
    assert rep.checks[1].lhs == pytest.approx(3.0)
    assert rep.checks[1].rhs == pytest.approx(0.75)
    assert rep.checks[0].ok and rep.checks[0].lhs == 0.0
    with pytest.raises(AssumptionError) as err:
        loser_pay_auction(inst)
    assert "v=1" in str(err.value)
    assert err.value.report.failures[0].value == 1.0


# loser-pay auction


def test_two_buyer_loser_pay():
    m = loser_pay_auction(two_buyer_instance(0.1, 100.0))
    np.testing.assert_allclose(m.x, [0.0, 0.75], rtol=1e-15)
    assert m.q[0] == 0.0
    assert m.q[1] == pytest.approx(3 * math.expm1(0.1) / -math.expm1(-10.0), rel=1e-12)
    assert round(m.q[1], 5) == 0.31553
    assert m.revenue == pytest.approx(two_buyer_revenue(0.1, 100.0), rel=1e-12)
    assert round(m.revenue, 4) == 7.8882
    assert m.reserve_index == 1


def test_two_buyer_closed_forms_agree():
    assert two_buyer_loser_payment(0.1, 100.0) * 0.25 * 100.0 == pytest.approx(two_buyer_revenue(0.1, 100.0))


def test_loser_pay_nothing_above_reserve():
    inst = Instance([0.0], [1.0], [0.0, 5.0], 2, Utility.exponential(0.2))
    m = loser_pay_auction(inst)
    assert m.reserve_index is None
    assert m.x.tolist() == [0.0] and m.q.tolist() == [0.0] and m.revenue == 0.0


def test_loser_pay_three_buyers_matches_oracle():
    inst = Instance([0.0, 1.0], [0.5, 0.5], [0.0, 200.0], 3, Utility.exponential(0.05))
    m = loser_pay_auction(inst)
    assert 0.0 <= m.q[1] <= 1.0
    oracle = optimal_revenue_oracle(inst).revenue
    assert m.revenue == pytest.approx(oracle, rel=1e-7)


def test_loser_pay_needs_two_buyers(two_point):
    with pytest.raises(UsageError):
        loser_pay_auction(two_point)


def test_utility_curve_examples():
    alpha = 0.2
    inst = two_buyer_instance(alpha, 20.0)
    m = loser_pay_auction(inst)
    assert utility_curve(m, inst, 1, 0.0) == pytest.approx(-0.75 * math.expm1(alpha), rel=1e-12)
    assert utility_curve(m, inst, 1, 1.0) == pytest.approx(0.0, abs=1e-12)
    for v in (0.0, 1.0):
        assert utility_curve(m, inst, 0, v) == 0.0
    with pytest.raises(DomainError):
        utility_curve(m, inst, 2, 0.0)


@pytest.mark.parametrize("seed", range(25))
def test_loser_pay_properties(seed):
    rng = np.random.default_rng(seed)
    inst = random_multi_instance(rng, irregular=True if seed % 3 == 0 else None)
    m = loser_pay_auction(inst)
    rec = loser_payment_probabilities_recursive(m.x, inst, m.reserve_index)
    np.testing.assert_allclose(m.q, rec, atol=1e-9)
    assert np.all(m.q >= -1e-12) and np.all(m.q <= 1 + 1e-12)
    assert np.all(np.diff(m.x) >= -1e-15)
    if m.reserve_index is not None:
        assert np.all(m.x[: m.reserve_index] == 0.0)
        assert np.all(m.q[: m.reserve_index] == 0.0)
    for k in range(inst.K):
        own = utility_curve(m, inst, k, inst.values[k])
        assert own >= -1e-9
        for kp in range(inst.K):
            assert own >= utility_curve(m, inst, kp, inst.values[k]) - 1e-9


def test_q_forms_agree_with_reserve_none():
    inst = two_buyer_instance()
    x = np.zeros(2)
    assert loser_payment_probabilities(x, inst, None).tolist() == [0.0, 0.0]
    assert loser_payment_probabilities_recursive(x, inst, None).tolist() == [0.0, 0.0]


# menus


def test_exact_menu_rounds_to_quoted_numbers():
    assert round(float(MENU_X1), 4) == 0.5102
    assert round(float(MENU_W1), 4) == 0.5699


def test_menu_utility_boundary_type():
    inst = counterexample_instance()
    opt = counterexample_menu()[0]
    assert menu_utility(opt, inst.utility, 1.0, 0.4) == pytest.approx(0.0, abs=1e-14)
    # closed form (1/1.96)(v+1)^2 - 1
    assert menu_utility(opt, inst.utility, 1.0, 0.7) == pytest.approx(1.7**2 / 1.96 - 1, rel=1e-13)


def test_menu_null_option_is_zero():
    u = Utility.quadratic(L=1.0)
    for v in (0.0, 0.3, 0.9):
        assert menu_utility(MenuOption(0.0), u, 1.0, v) == 0.0


@pytest.mark.parametrize("v", [0.0, 0.2, 0.4, 0.6, 0.8, 0.9])
def test_menu_difference_polynomial(v):
    inst = counterexample_instance()
    o1, o2 = counterexample_menu()
    diff = menu_utility(o2, inst.utility, 1.0, v) - menu_utility(o1, inst.utility, 1.0, v)
    assert diff == pytest.approx(24 / 2695 * (11 * v + 3) * (5 * v - 3), abs=1e-13)


def test_counterexample_menu_revenue():
    inst = counterexample_instance()
    mm = menu_mechanism_revenue(counterexample_menu(), inst)
    assert mm.revenue == pytest.approx(0.3259, abs=1e-4)
    assert mm.choice == [None] * 4 + [0, 0, 1, 1, 1, 1]
    assert mm.revenue > optimal_posted_price(inst).revenue


def test_rounded_menu_loses_the_boundary_type():
    inst = counterexample_instance()
    mm = menu_mechanism_revenue([MenuOption(0.5102, 0.0, 1.0), MenuOption(1.0, 0.5699, 0.0)], inst)
    # v = 0.4 now has utility -8e-6 under the first option and walks away
    assert mm.choice[4] is None
    assert mm.revenue == pytest.approx(0.2769, abs=1e-4)


def test_null_menu_has_zero_revenue():
    inst = counterexample_instance()
    mm = menu_mechanism_revenue([], inst)
    assert mm.revenue == 0.0 and mm.choice == [None] * inst.K
    d = to_direct(mm, inst)
    np.testing.assert_array_equal(d.y0[0, 0], 1.0)
    assert expected_revenue(d, inst) == 0.0


@pytest.mark.parametrize("make", [counterexample_instance, lambda: random_single_instance(np.random.default_rng(4))])
def test_single_tioli_menu_equals_posted_price(make):
    inst = make()
    pp = optimal_posted_price(inst)
    mm = menu_mechanism_revenue([MenuOption(1.0, pp.p_high, 0.0)], inst)
    assert mm.revenue == pytest.approx(pp.revenue, rel=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_no_single_option_beats_posted_price(seed):
    inst = random_single_instance(np.random.default_rng(100 + seed))
    best = optimal_posted_price(inst).revenue
    grid = np.round(np.arange(0, 101) / 100, 2)
    u, zM, v = inst.utility, inst.z_max, inst.values
    lose = u(-zM)
    win_hi = u(v - zM)
    win_lo = u(v)
    # U = x [w1 u(v-z) + (1-w1) u(v)] + (1-x) w0 u(-z); vectorised over (x, w1, w0, k)
    X, W1, W0 = np.meshgrid(grid, grid, grid, indexing="ij")
    X, W1, W0 = X[..., None], W1[..., None], W0[..., None]
    U = X * (W1 * win_hi + (1 - W1) * win_lo) + (1 - X) * W0 * lose
    pay = zM * (X * W1 + (1 - X) * W0)
    rev = np.sum(inst.pmf * np.where(U >= -1e-12, pay, 0.0), axis=-1)
    assert rev.max() <= best + 1e-9


def test_menu_needs_single_buyer():
    with pytest.raises(UsageError):
        menu_mechanism_revenue([], two_buyer_instance())


# to_direct


def test_to_direct_posted_price(two_point):
    pp = optimal_posted_price(two_point)
    d = to_direct(pp, two_point)
    assert check_bic(d, two_point).bic_ok
    assert check_ir(d, two_point).ir_ok
    assert check_feasibility(d, two_point).feasible_ok
    assert expected_revenue(d, two_point) == pytest.approx(2 / 3, rel=1e-14)


def test_to_direct_loser_pay_two_buyer():
    inst = two_buyer_instance()
    m = loser_pay_auction(inst)
    d = to_direct(m, inst)
    assert expected_revenue(d, inst) == pytest.approx(m.revenue, rel=1e-12)
    assert round(expected_revenue(d, inst), 4) == 7.8882
    # both high: each wins half the time
    assert d.y1[0, 0, 1, 1] == 0.5 and d.y1[1, 0, 1, 1] == 0.5


def test_to_direct_menu_matches_revenue():
    inst = counterexample_instance()
    mm = menu_mechanism_revenue(counterexample_menu(), inst)
    d = to_direct(mm, inst)
    assert expected_revenue(d, inst) == pytest.approx(mm.revenue, abs=1e-12)
    assert check_bic(d, inst).bic_ok and check_ir(d, inst).ir_ok


def test_to_direct_mismatch(two_point, myerson_three):
    pp = optimal_posted_price(two_point)
    with pytest.raises(UsageError):
        to_direct(pp, counterexample_instance())
    three = Instance([0.0, 1.0, 2.0], [0.2, 0.3, 0.5], [0.0, 100.0], 2, Utility.exponential(0.01))
    with pytest.raises(UsageError):
        to_direct(loser_pay_auction(two_buyer_instance()), three)
    with pytest.raises(UsageError):
        to_direct(DirectMechanism.null(two_point), myerson_three)
    with pytest.raises(UsageError):
        to_direct(object(), two_point)


@pytest.mark.parametrize("seed", range(10))
def test_to_direct_loser_pay_reproduces_interim(seed):
    from riskauction import interim

    inst = random_multi_instance(np.random.default_rng(500 + seed))
    m = loser_pay_auction(inst)
    d = to_direct(m, inst)
    im = interim(d, inst)
    for i in range(inst.n):
        np.testing.assert_allclose(im.y1[i].sum(axis=1), m.x, atol=1e-12)
        np.testing.assert_allclose(im.y0[i, :, -1], (1 - m.x) * m.q, atol=1e-12)
    assert expected_revenue(d, inst) == pytest.approx(m.revenue, rel=1e-12, abs=1e-12)
    for check in (check_bic, check_ir, check_feasibility):
        assert check(d, inst).worst_violation <= 1e-9


def test_tie_splitting_in_ironed_interval():
    # forced irregular three-value instance: the two ironed types tie
    rng = np.random.default_rng(0)
    inst = random_multi_instance(rng, irregular=True)
    m = loser_pay_auction(inst)
    d = to_direct(m, inst)
    for profile in itertools.product(range(inst.K), repeat=inst.n):
        total = d.y1[(slice(None), 0) + profile].sum()
        assert total <= 1.0 + 1e-15
