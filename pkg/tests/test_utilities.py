from fractions import Fraction as F

from hypothesis import given, settings, strategies as st

from focil_tfm.bribery import BP1, CM1, CM2, CM3, BeliefCM, TargetContext, TypeAssignment, point_belief
from focil_tfm.core import DoubleBid, TfmKind, Transaction
from focil_tfm.equilibrium import build_deviation_state, realized_utility
from focil_tfm.scenario import generate_scenario
from focil_tfm.utilities import expected_utility, settle

from _util import dbl, params, state, user

D = TfmKind.DOUBLE


def test_user_utility_cases():
    p = params(r=1, c_block=2)
    t = user(1, DoubleBid(F(0), F(3), F(4)), value=5)
    other = user(2, dbl(1, 1, c=3))
    out = settle(state([t, other], [[], []], [1]), p, D)
    assert out.approved
    assert out.user(t, p) == 1
    assert out.user(other, p) == 0
    # a listed transaction left out of a non-full block gets the block rejected
    rejected = settle(state([t, other], [[2], []], [1]), p, D)
    assert not rejected.approved
    assert rejected.user(t, p) == 0


def _includer_setup():
    p = params(m=1, c_incl=1, c_block=2, mu_cost_cm=1)
    t0 = user(1, dbl(4, 2))
    ctx = TargetContext.build([t0], 1, p)
    return p, t0, ctx, TypeAssignment(BP1(), (CM1(),))


def test_includer_utility_listing_t0():
    p, t0, ctx, a = _includer_setup()
    rep = settle(state([t0], [[1]], [1]), p, D).includer(1, a, ctx, p)
    assert rep.realized_utility == 4 - 3 - 1
    assert rep.term("bribe_loss") == -3


def test_includer_utility_empty_list():
    p, t0, ctx, a = _includer_setup()
    assert settle(state([t0], [[]], [1]), p, D).includer(1, a, ctx, p).realized_utility == 0


def test_includer_utility_rejected_block_keeps_costs():
    p, t0, ctx, a = _includer_setup()
    out = settle(state([t0], [[1]], []), p, D)
    assert not out.approved
    assert out.includer(1, a, ctx, p).realized_utility == -4


def test_bp_utility_fee_minus_cost():
    p = params(mu_cost_bp=1)
    t = user(1, dbl(0, 3))
    assert settle(state([t], [[], []], [1]), p, D).bp(None, None, p).realized_utility == 2
    assert settle(state([t], [[], []], []), p, D).bp(None, None, p).realized_utility == 0


def test_bp_utility_invalidated_phase1_fake():
    p = params(r=1, gamma=F(1, 2))
    fake = Transaction(id=10, sender="bp-a", bid=DoubleBid(F(2), F(4), F(7)), owner=0)
    inv = Transaction(id=11, sender="bp-a", bid=DoubleBid(F(0), F(0), F(1)), owner=0, via_mempool=False, invalidates="bp-a")
    st_ = state([fake, inv], [[], []], [11])
    rep = settle(st_, p, D).bp(None, None, p)
    assert rep.approved
    assert rep.term("phase1_fake_cost") == -3
    assert rep.term("own_fake_outflow") == -1
    assert rep.realized_utility == -4


def test_expected_utility_point_mass_and_mean():
    point = point_belief(TypeAssignment(BP1(), (CM1(), CM3(F(2)))))
    ev = lambda play, a: a.cm(2).x if isinstance(a.cm(2), CM3) else F(0)
    assert expected_utility(1, CM1(), lambda v: "same", ev, point) == 2
    two = BeliefCM((((CM1(), F(1)),), ((CM3(F(2)), F(1, 2)), (CM3(F(4)), F(1, 2)))))
    assert expected_utility(1, CM1(), lambda v: v, ev, two) == 3


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3000))
def test_expected_utility_under_indicated_play_ignores_beliefs(seed):
    sc = generate_scenario(seed)
    ctx = sc.context()
    st_ = build_deviation_state(sc, None)
    for j in range(1, sc.params.m + 1):
        own = sc.assignment.cm(j)
        realized = realized_utility(sc, st_, "cm", j, sc.assignment, ctx)
        ev = lambda play, a, j=j: realized_utility(sc, play, "cm", j, a, ctx)
        for belief in sc.beliefs:
            assert expected_utility(j, own, lambda v: st_, ev, belief) == realized


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 3000))
def test_utility_reports_sum_their_terms(seed):
    sc = generate_scenario(seed)
    ctx = sc.context()
    out = settle(build_deviation_state(sc, None), sc.params, sc.tfm)
    reps = [out.bp(sc.assignment, ctx, sc.params)]
    reps += [out.includer(j, sc.assignment, ctx, sc.params) for j in range(1, sc.params.m + 1)]
    for rep in reps:
        assert rep.realized_utility == sum(v for _, v in rep.term_breakdown)


def test_cm2_type_changes_expected_value_only_through_flags():
    p, t0, ctx, _ = _includer_setup()
    out = settle(state([t0], [[1]], [1]), p, D)
    a1 = TypeAssignment(BP1(), (CM1(),))
    a2 = TypeAssignment(BP1(), (CM2(),))
    # t0 is in the block, so a CM2 includer forfeits nothing
    assert out.includer(1, a2, ctx, p).realized_utility == out.includer(1, a1, ctx, p).realized_utility + 3
