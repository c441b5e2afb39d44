from dataclasses import replace
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from focil_tfm.bribery import (
    BP1,
    CM1,
    CM2,
    CM3,
    BeliefCM,
    TargetContext,
    TypeAssignment,
    admissible_assignments,
    bribe_bp_terms,
    bribe_bp_value,
    bribe_cm_base,
    bribe_cm_value,
    bribe_loss,
    standard_beliefs,
)
from focil_tfm.scenario import GeneratorKnobs, generate_scenario

from _util import dbl, params, state, user


def ctx_for(txs, target, **kw):
    return TargetContext.build(txs, target, params(**kw))


def test_g_position_formula():
    txs = [user(i, dbl(11 - i, 1)) for i in range(1, 8)]
    ctx = ctx_for(txs, 5, m=2, c_incl=3, c_block=7)
    assert ctx.o == 5
    assert ctx.g == 7
    assert ctx.target_order == 2


def test_cm1_pays_fee_minus_outside_option():
    ctx = ctx_for([user(1, dbl(4, 1))], 1, m=1, c_incl=1, c_block=2, mu_cost_cm=1)
    assert ctx.f_cm == 4 and ctx.l_cm.fee_at(ctx.g) == 0
    assert bribe_cm_value(CM1(), ctx, all_omitted=False) == 3


def test_cm2_needs_everyone_to_omit():
    ctx = ctx_for([user(1, dbl(4, 1))], 1, m=1, c_incl=1, c_block=2, mu_cost_cm=1)
    assert bribe_cm_value(CM2(), ctx, all_omitted=False) == 0
    assert bribe_cm_value(CM2(), ctx, all_omitted=True) == 3
    assert bribe_cm_value(CM3(F(7)), ctx, all_omitted=False) == 7


def test_bp_bribe_congested_replace_term():
    txs = [user(1, dbl(1, 5)), user(2, dbl(1, 4)), user(3, dbl(1, 2))]
    ctx = ctx_for(txs, 2, m=1, c_incl=1, c_block=2, mu_cost_bp=1)
    assert ctx.congested
    assert bribe_bp_value(ctx) == 2


def test_bp_bribe_uncongested_zero_gamma():
    # w = c_block, t0 last in both lists, so o_BP = c_block and Q = 1
    txs = [user(1, dbl(3, 6, c=10)), user(2, dbl(1, 3, c=5))]
    ctx = ctx_for(txs, 2, m=1, c_incl=2, c_block=2, r=1, mu_cost_bp=1)
    assert (ctx.o_bp, ctx.o, ctx.w) == (2, 2, 2)
    terms = dict(bribe_bp_terms(ctx).terms)
    expected = ctx.f_bp - 1 + 1
    assert terms["fill"] == terms["push_bp"] == terms["push_cm"] == expected
    assert bribe_bp_value(ctx) == expected


def test_bp_bribe_vanishes_without_surplus():
    txs = [user(1, dbl(2, 1))]
    ctx = ctx_for(txs, 1, m=1, c_incl=1, c_block=2, mu_cost_bp=1)
    assert ctx.f_bp == 1
    assert bribe_bp_value(ctx) == 0


def test_bp_bribe_requires_t0_in_l_bp():
    txs = [user(1, dbl(2, 0))]
    ctx = ctx_for(txs, 1, m=1, c_incl=1, c_block=2, mu_cost_bp=1)
    with pytest.raises(ValueError):
        bribe_bp_value(ctx)


def _loss_setup():
    txs = [user(1, dbl(4, 2)), user(2, dbl(3, 2))]
    ctx = ctx_for(txs, 1, m=2, c_incl=1, c_block=3, mu_cost_cm=1)
    return txs, ctx


def test_bribe_loss_only_when_listed():
    txs, ctx = _loss_setup()
    a = TypeAssignment(BP1(), (CM1(), CM3(F(7))))
    st_ = state(txs, [[1], [2]], [1, 2])
    assert bribe_loss(2, st_, a, ctx) == 0
    assert bribe_loss(1, st_, a, ctx) == bribe_cm_base(ctx)
    listed_twice = state(txs, [[1], [1]], [1, 2])
    assert bribe_loss(2, listed_twice, a, ctx) == 7


def test_bribe_loss_block_producer():
    txs, ctx = _loss_setup()
    a = TypeAssignment(BP1(), (CM1(), CM1()))
    assert bribe_loss("bp", state(txs, [[1], [2]], [1, 2]), a, ctx) == bribe_bp_value(ctx)
    assert bribe_loss("bp", state(txs, [[], [2]], [2]), a, ctx) == 0


def test_cm2_loss_depends_on_others():
    txs, ctx = _loss_setup()
    a = TypeAssignment(BP1(), (CM2(), CM1()))
    alone = state(txs, [[1], [2]], [2])
    shared = state(txs, [[1], [1]], [2])
    assert bribe_loss(1, alone, a, ctx) == bribe_cm_base(ctx)
    assert bribe_loss(1, shared, a, ctx) == 0


def test_assignment_typing_constraints():
    _, ctx = _loss_setup()
    TypeAssignment(BP1(), (CM2(), CM3(F(1)))).validate(ctx)
    with pytest.raises(ValueError):
        TypeAssignment(BP1(), (CM3(F(1)), CM1())).validate(ctx)
    kinds = {type(a.cm(1)) for a in admissible_assignments(ctx)}
    assert kinds == {CM1, CM2}


def test_belief_marginals_must_sum_to_one():
    with pytest.raises(ValueError):
        BeliefCM((((CM1(), F(1, 2)),),))
    b = BeliefCM((((CM1(), F(1, 2)), (CM2(), F(1, 2))),))
    assert sum(p for _, p in b.type_vectors(None, None)) == 1


uncongested_with_target = st.integers(0, 5000).map(lambda s: generate_scenario(s, GeneratorKnobs(congested=False)))


@settings(max_examples=60, deadline=None)
@given(uncongested_with_target)
def test_unique_sender_bribe_at_least_multi_sender(sc):
    multi = replace(sc.params, unique_sender=False)
    uniq = replace(sc.params, unique_sender=True)
    v_multi = bribe_bp_value(TargetContext.build(sc.m0, sc.target, multi))
    v_uniq = bribe_bp_value(TargetContext.build(sc.m0, sc.target, uniq))
    assert v_uniq >= v_multi


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000))
def test_generated_beliefs_are_well_formed(seed):
    sc = generate_scenario(seed)
    ctx = sc.context()
    sc.assignment.validate(ctx)
    for b in standard_beliefs(ctx, sc.assignment):
        assert len(b.marginals) == sc.params.m
        for marg in b.marginals:
            assert sum(p for _, p in marg) == 1
