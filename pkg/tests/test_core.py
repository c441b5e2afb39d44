from fractions import Fraction as F

import pytest
from hypothesis import given, strategies as st

from focil_tfm.core import (
    DoubleBid,
    OrderedFeeList,
    ScenarioParams,
    SingleBid,
    PrioritizedBid,
    Transaction,
    block_valid,
    bp_fee,
    build_l_bp,
    build_l_cm,
    cm_fee,
    full_fee,
    inclusion_vector,
    money,
    render_money,
)

from _util import dbl, params, state, user

fractions = st.fractions(min_value=0, max_value=20, max_denominator=8)


# ---------------------------------------------------------------- money


def test_money_parses_exact_forms():
    assert money("3/4") == F(3, 4)
    assert money(2) == F(2)
    assert money(F(1, 3)) == F(1, 3)


@pytest.mark.parametrize("bad", ["0.5", "1e3", 0.5, True])
def test_money_rejects_inexact_input(bad):
    with pytest.raises((TypeError, ValueError)):
        money(bad)


@given(fractions)
def test_money_render_round_trip(x):
    assert money(render_money(x)) == x
    assert "/" in render_money(x)


# ---------------------------------------------------------------- params and bids


def test_params_reject_out_of_range():
    with pytest.raises(ValueError):
        ScenarioParams(m=0, c_block=1, c_incl=1)
    with pytest.raises(ValueError):
        ScenarioParams(m=1, c_block=1, c_incl=1, gamma=F(3, 2))
    with pytest.raises(ValueError):
        ScenarioParams(m=1, c_block=1, c_incl=1, z=-1)


def test_bids_reject_negative_components():
    with pytest.raises(ValueError):
        DoubleBid(F(-1), F(0), F(1))
    with pytest.raises(ValueError):
        SingleBid(F(-1, 2))


def test_value_present_iff_user():
    with pytest.raises(ValueError):
        Transaction(id=2, sender="x", bid=dbl(0, 1))
    with pytest.raises(ValueError):
        Transaction(id=2, sender="x", bid=dbl(0, 1), value=F(1), owner=1)


# ---------------------------------------------------------------- fee formulas


def test_double_fees_hand_evaluated():
    p = ScenarioParams(m=1, c_block=1, c_incl=1, s=1, r=1)
    b = DoubleBid(F(2), F(3), F(7))
    assert bp_fee(b, p) == 3
    assert cm_fee(b, p) == 2


def test_double_fee_clamps_when_c_equals_r():
    p = ScenarioParams(m=1, c_block=1, c_incl=1, s=1, r=1)
    assert bp_fee(DoubleBid(F(0), F(5), F(1)), p) == 0


def test_single_fees_hand_evaluated():
    p = ScenarioParams(m=1, c_block=1, c_incl=1, s=1, r=1, mu_cost_bp=1, z=F(1, 2))
    assert bp_fee(SingleBid(F(5)), p) == F(5, 2)
    assert cm_fee(SingleBid(F(5)), p) == F(3, 2)
    assert cm_fee(SingleBid(F(3, 2)), p) == 0


def test_prioritized_fee_is_whole_surplus():
    p = ScenarioParams(m=1, c_block=1, c_incl=1, s=2, r=1)
    assert bp_fee(PrioritizedBid(F(4)), p) == 6
    assert cm_fee(PrioritizedBid(F(4)), p) == 6
    assert full_fee(PrioritizedBid(F(4)), p) == 6


@st.composite
def fee_params(draw):
    return ScenarioParams(
        m=1,
        c_block=1,
        c_incl=1,
        s=draw(st.sampled_from([F(1), F(2), F(1, 2)])),
        r=draw(fractions),
        mu_cost_bp=draw(fractions),
        z=draw(st.fractions(min_value=0, max_value=1, max_denominator=8)),
    )


@given(fee_params(), fractions, fractions, fractions)
def test_double_split_never_exceeds_surplus(p, dcm, dbp, c):
    b = DoubleBid(dcm, dbp, c)
    f_bp, f_cm = bp_fee(b, p), cm_fee(b, p)
    assert f_bp >= 0 and f_cm >= 0
    assert f_bp + f_cm <= max(c * p.s - p.r * p.s, F(0))
    assert f_bp <= dbp * p.s and f_cm <= dcm * p.s


@given(fee_params(), fractions)
def test_single_split_is_exact_partition(p, c):
    b = SingleBid(c)
    f_bp, f_cm = bp_fee(b, p), cm_fee(b, p)
    assert f_bp >= 0 and f_cm >= 0
    assert f_bp + f_cm == max(c * p.s - p.r * p.s, F(0))


@given(fee_params(), fractions, fractions)
def test_single_fees_monotone_in_bid(p, a, b):
    lo, hi = sorted((a, b))
    assert bp_fee(SingleBid(lo), p) <= bp_fee(SingleBid(hi), p)
    assert cm_fee(SingleBid(lo), p) <= cm_fee(SingleBid(hi), p)


# ---------------------------------------------------------------- ordered lists


def test_l_bp_filters_then_sorts():
    p = params(mu_cost_bp=1)
    txs = [user(1, dbl(0, 3)), user(2, dbl(0, 5)), user(3, dbl(0, 0))]
    assert build_l_bp(txs, p).ids == (2, 1)


def test_l_bp_empty():
    lst = build_l_bp([], params())
    assert len(lst) == 0
    assert lst.fee_at(1) == 0


def test_l_bp_tie_broken_by_id():
    p = params(mu_cost_bp=1)
    txs = [user(2, dbl(0, 2)), user(1, dbl(0, 2))]
    assert build_l_bp(txs, p).ids == (1, 2)


def test_l_cm_window_excludes_by_bp_position():
    p = params(c_block=1, mu_cost_cm=1)
    # L_BP = [t2, t1]; only t2 survives the c_block window
    txs = [user(1, dbl(9, 1)), user(2, dbl(4, 2))]
    assert build_l_bp(txs, p).ids == (2, 1)
    assert build_l_cm(txs, p).ids == (2,)


def test_l_cm_threshold_removes_everything():
    p = params(mu_cost_cm=5)
    txs = [user(1, dbl(1, 1)), user(2, dbl(2, 1))]
    assert len(build_l_cm(txs, p)) == 0


def test_l_cm_sorted_by_committee_fee():
    p = params(c_block=4, mu_cost_cm=1)
    txs = [user(1, dbl(2, 3)), user(2, dbl(3, 1))]
    assert build_l_cm(txs, p).ids == (2, 1)


def test_single_bids_tie_on_split_fee_rank_by_total():
    # z = 1 leaves the producer a flat cost-sized fee for every bid
    p = params(mu_cost_bp=1, z=1)
    txs = [user(1, SingleBid(F(2))), user(2, SingleBid(F(5)))]
    assert bp_fee(txs[0].bid, p) == bp_fee(txs[1].bid, p)
    assert build_l_bp(txs, p).ids == (2, 1)


@given(st.lists(st.tuples(st.integers(1, 50), fractions), unique_by=lambda e: e[0], max_size=12))
def test_ordered_fee_list_invariants(rows):
    lst = OrderedFeeList.from_fees(rows)
    fees = [f for _, f in lst.entries]
    assert fees == sorted(fees, reverse=True)
    for a, b in zip(lst.entries, lst.entries[1:]):
        if a[1] == b[1]:
            assert a[0] < b[0]
    assert lst.fee_at(len(rows) + 1) == 0
    assert lst.fee_at(0) == 0


# ---------------------------------------------------------------- validity and inclusion vector


def _three():
    return [user(1, dbl(1, 1)), user(2, dbl(1, 1)), user(3, dbl(1, 1))]


def test_block_valid_when_lists_covered():
    txs = _three()
    assert block_valid(state(txs, [[1], [2]], [1, 2]), params(c_block=3))


def test_conditional_full_block_may_skip_listed():
    txs = _three()
    st_ = state(txs, [[1], [3]], [1, 2])
    assert block_valid(st_, params(c_block=2, conditional=True))
    assert not block_valid(st_, params(c_block=3, conditional=True))


def test_unconditional_rejects_missing_listed():
    txs = _three()
    assert not block_valid(state(txs, [[1], [3]], [1, 2]), params(c_block=2, conditional=False))


def test_block_over_capacity_rejected():
    txs = _three()
    assert not block_valid(state(txs, [[], []], [1, 2, 3]), params(c_block=2))


def test_inclusion_vector_encodings():
    txs = _three()
    st_ = state(txs, [[], [1], [1, 2]], [1])
    assert inclusion_vector(txs[0], st_).as_ints() == [1, 0, 1, 1]
    st_ = state(txs, [[], [1], []], [1])
    assert inclusion_vector(txs[0], st_).as_ints() == [1, 0, 1, 0]
    assert inclusion_vector(txs[2], st_).as_ints() == [0, 0, 0, 0]
    st_ = state(txs, [[3], [3], [3]], [3])
    assert inclusion_vector(txs[2], st_).as_ints() == [1, 1, 1, 1]
