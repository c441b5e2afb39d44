"""Realized utilities of users, includers and the block producer, and their
interim expectations under beliefs over includer types."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Hashable, Optional, Union

from .bribery import BP1, BeliefCM, BPType, CMType, TargetContext, TypeAssignment, bribe_loss
from .core import ZERO, GameState, ScenarioParams, TfmKind, Transaction, block_valid, full_fee
from .tfm import PaymentBreakdown, compute_payments


@dataclass(frozen=True)
class UtilityReport:
    party: str
    realized_utility: Fraction
    approved: bool
    term_breakdown: tuple[tuple[str, Fraction], ...]

    @classmethod
    def of(cls, party: str, approved: bool, terms: list[tuple[str, Fraction]]) -> "UtilityReport":
        return cls(party, sum((v for _, v in terms), ZERO), approved, tuple(terms))

    def term(self, name: str) -> Fraction:
        return dict(self.term_breakdown)[name]


def user_utility(
    t: Transaction, state: GameState, payments: PaymentBreakdown, params: ScenarioParams, approved: bool
) -> Fraction:
    if not t.is_user:
        raise ValueError("user utility is defined for user transactions only")
    if not approved or not state.in_block(t.id):
        return ZERO
    return t.value * params.s - payments[t.id].outflow


def includer_utility(
    j: int,
    state: GameState,
    payments: PaymentBreakdown,
    assignment: Optional[TypeAssignment],
    ctx: Optional[TargetContext],
    params: ScenarioParams,
    approved: bool,
) -> UtilityReport:
    income = ZERO
    outflow = ZERO
    for t in state.block:
        pay = payments[t.id]
        if t.owner == j:
            outflow += pay.burn + pay.bp_payment + pay.cm_total - pay.cm_to(j)
        else:
            income += pay.cm_to(j)
    listed_others = sum(1 for t in state.inclusion_lists[j - 1] if t.owner != j)
    loss = bribe_loss(j, state, assignment, ctx) if ctx is not None and assignment is not None else ZERO
    terms = [
        ("fee_income", income if approved else ZERO),
        ("bribe_loss", -loss),
        ("list_cost", -params.cm_cost * listed_others),
        ("own_fake_outflow", -outflow if approved else ZERO),
    ]
    return UtilityReport.of(f"includer({j})", approved, terms)


def bp_utility(
    state: GameState,
    payments: PaymentBreakdown,
    assignment: Optional[TypeAssignment],
    ctx: Optional[TargetContext],
    params: ScenarioParams,
    approved: bool,
) -> UtilityReport:
    income = ZERO
    outflow = ZERO
    for t in state.block:
        pay = payments[t.id]
        if t.owner == 0:
            outflow += pay.burn + pay.cm_total
        else:
            income += pay.bp_payment - params.bp_cost
    phase1 = sum((full_fee(t.bid, params) for t in state.fake_init_bp), ZERO)
    loss = bribe_loss("bp", state, assignment, ctx) if ctx is not None and assignment is not None else ZERO
    terms = [
        ("fee_income", income if approved else ZERO),
        ("bribe_loss", -loss),
        ("own_fake_outflow", -outflow if approved else ZERO),
        ("phase1_fake_cost", -params.gamma * phase1),
    ]
    return UtilityReport.of("block_producer", approved, terms)


@dataclass(frozen=True)
class Outcome:
    state: GameState
    approved: bool
    payments: PaymentBreakdown

    def bp(self, assignment, ctx, params) -> UtilityReport:
        return bp_utility(self.state, self.payments, assignment, ctx, params, self.approved)

    def includer(self, j, assignment, ctx, params) -> UtilityReport:
        return includer_utility(j, self.state, self.payments, assignment, ctx, params, self.approved)

    def user(self, t: Transaction, params) -> Fraction:
        return user_utility(t, self.state, self.payments, params, self.approved)


def settle(state: GameState, params: ScenarioParams, tfm: TfmKind) -> Outcome:
    """Run the attesters and the payment rule on a finished slot."""
    return Outcome(state, block_valid(state, params), compute_payments(state, params, tfm))


Party = Union[int, str]


def expected_utility(
    party: Party,
    own_type: Union[CMType, BPType],
    profile: Callable[[tuple[CMType, ...]], Hashable],
    evaluate: Callable[[Hashable, TypeAssignment], Fraction],
    beliefs: BeliefCM,
    bp_type: BPType = BP1(),
) -> Fraction:
    """Interim expected utility of ``party`` over the other includers' types.

    ``profile`` maps a full type vector to the resulting play (any hashable
    description, e.g. a game state); ``evaluate`` scores that play for the
    party under the realized assignment. Type vectors that induce the same
    play and the same realized bribe for the party are scored once.
    """
    holder = party if isinstance(party, int) else None
    total = ZERO
    mass = ZERO
    cache: dict = {}
    for vector, prob in beliefs.type_vectors(holder, own_type if holder else None):
        if holder is None:
            assignment = TypeAssignment(own_type, vector)
        else:
            assignment = TypeAssignment(bp_type, vector)
        play = profile(vector)
        key = (play, own_type if holder is None else vector[holder - 1])
        if key not in cache:
            cache[key] = evaluate(play, assignment)
        total += prob * cache[key]
        mass += prob
    if mass != 1:
        raise ValueError("belief probabilities do not sum to 1")
    return total
