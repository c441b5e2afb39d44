from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from focil_tfm.core import GameState, PrioritizedBid, TfmKind, block_valid, check_feasible
from focil_tfm.scenario import GeneratorKnobs, generate_scenario
from focil_tfm.tfm import (
    compute_payments,
    indicated_bp_allocation,
    indicated_inclusion_lists,
    indicated_includer_allocation,
)

from _util import dbl, params, state, user


def test_includer_allocation_greedy_by_order():
    p = params(m=2, c_incl=1, c_block=4)
    txs = [user(3, dbl(3, 1)), user(5, dbl(4, 1))]
    assert [t.id for t in indicated_includer_allocation(1, txs, p, TfmKind.DOUBLE)] == [5]
    assert [t.id for t in indicated_includer_allocation(2, txs, p, TfmKind.DOUBLE)] == [3]


def test_includer_allocation_empty_pool():
    assert indicated_includer_allocation(1, [], params(), TfmKind.DOUBLE) == ()


def test_includer_skips_transactions_outside_predicted_block():
    p = params(m=1, c_incl=2, c_block=1)
    # t1 pays the committee more but loses the only block slot to t2
    txs = [user(1, dbl(9, 1)), user(2, dbl(1, 5))]
    assert [t.id for t in indicated_includer_allocation(1, txs, p, TfmKind.DOUBLE)] == [2]


def test_unique_sender_lists_hold_one_tx_per_sender():
    p = params(m=1, c_incl=2, c_block=4, unique_sender=True)
    txs = [user(1, dbl(5, 1), sender="a"), user(2, dbl(4, 1), sender="a"), user(3, dbl(3, 1), sender="b")]
    assert [t.id for t in indicated_includer_allocation(1, txs, p, TfmKind.DOUBLE)] == [1, 3]


def test_bp_allocation_greedy_top_c_block():
    p = params(c_block=2)
    txs = [user(1, dbl(0, 5)), user(2, dbl(0, 4)), user(3, dbl(0, 3))]
    assert [t.id for t in indicated_bp_allocation(txs, (), p, TfmKind.DOUBLE)] == [1, 2]


def test_bp_allocation_no_eligible_transactions():
    p = params(mu_cost_bp=1)
    txs = [user(1, dbl(2, 0))]
    assert indicated_bp_allocation(txs, (), p, TfmKind.DOUBLE) == ()


def test_prioritized_producer_prefers_unlisted():
    p = params(c_block=1, r=1, mu_cost_bp=1)
    listed = user(1, PrioritizedBid(F(9)))
    free = user(2, PrioritizedBid(F(3)))
    block = indicated_bp_allocation([listed, free], ((listed,), ()), p, TfmKind.SINGLE_PRIORITIZED)
    assert [t.id for t in block] == [2]


def test_payments_go_to_smallest_order_includer():
    p = params(m=3, c_block=3)
    t = user(1, dbl(2, 3))
    pay = compute_payments(state([t], [[], [1], [1]], [1]), p, TfmKind.DOUBLE)[1]
    assert pay.bp_payment == 3
    assert pay.cm_payment == ((2, F(2)),)


def test_unlisted_transaction_pays_no_committee_fee():
    p = params(m=2, c_block=3)
    t = user(1, dbl(2, 3))
    pay = compute_payments(state([t], [[], []], [1]), p, TfmKind.DOUBLE)[1]
    assert pay.cm_payment == ()
    assert pay.bp_payment == 3


def test_prioritized_listed_fee_goes_to_committee():
    p = params(m=2, c_block=3, r=1)
    t = user(1, PrioritizedBid(F(4)))
    pay = compute_payments(state([t], [[1], []], [1]), p, TfmKind.SINGLE_PRIORITIZED)[1]
    assert pay.cm_payment == ((1, F(3)),)
    assert pay.bp_payment == 0
    assert pay.burn == 1


seeds = st.integers(0, 10_000)
knob_choices = st.sampled_from(
    [GeneratorKnobs(), GeneratorKnobs(tfm=TfmKind.SINGLE_PRIORITIZED), GeneratorKnobs(congested=True)]
)


@settings(max_examples=60, deadline=None)
@given(seeds, knob_choices)
def test_indicated_play_is_feasible_and_valid(seed, knobs):
    sc = generate_scenario(seed, knobs)
    p = sc.params
    ils = indicated_inclusion_lists(sc.m0, p, sc.tfm)
    block = indicated_bp_allocation(sc.m0, ils, p, sc.tfm)
    st_ = GameState(sc.m0, ils, block)
    check_feasible(st_, p)
    ids = [t.id for il in ils for t in il]
    assert len(ids) == len(set(ids)), "indicated lists never overlap"
    if sc.tfm is not TfmKind.SINGLE_PRIORITIZED:
        # the prioritized producer skips listed transactions even in a non-full block
        assert block_valid(st_, p)
    for j in range(1, p.m + 1):
        assert indicated_includer_allocation(j, sc.m0, p, sc.tfm) == ils[j - 1]


@settings(max_examples=60, deadline=None)
@given(seeds, knob_choices)
def test_payment_breakdown_invariants(seed, knobs):
    sc = generate_scenario(seed, knobs)
    p = sc.params
    ils = indicated_inclusion_lists(sc.m0, p, sc.tfm)
    block = indicated_bp_allocation(sc.m0, ils, p, sc.tfm)
    pays = compute_payments(GameState(sc.m0, ils, block), p, sc.tfm)
    assert [i for i, _ in pays.per_tx] == [t.id for t in block]
    for _, pay in pays.per_tx:
        assert pay.burn == p.r * p.s
        assert len(pay.cm_payment) <= 1
        assert pay.bp_payment >= 0 and pay.cm_total >= 0
