"""Small builders shared by the test modules."""

from fractions import Fraction as F

from focil_tfm.core import DoubleBid, GameState, ScenarioParams, SingleBid, Transaction
from focil_tfm.tfm import indicated_bp_allocation, indicated_inclusion_lists


def params(**kw) -> ScenarioParams:
    base = dict(m=2, c_block=3, c_incl=1, s=1, r=0)
    base.update(kw)
    return ScenarioParams(**base)


def user(i: int, bid, value=None, sender=None) -> Transaction:
    if value is None:
        value = bid.c
    return Transaction(id=i, sender=sender or f"u{i}", bid=bid, value=F(value))


def dbl(cm, bp, c=None) -> DoubleBid:
    """Double bid; ``c`` defaults to exactly cm + bp (with r = 0)."""
    cm, bp = F(cm), F(bp)
    return DoubleBid(cm, bp, cm + bp if c is None else F(c))


def single(c) -> SingleBid:
    return SingleBid(F(c))


def state(txs, ils, block) -> GameState:
    by_id = {t.id: t for t in txs}
    return GameState(
        tuple(txs),
        tuple(tuple(by_id[i] for i in il) for il in ils),
        tuple(by_id[i] for i in block),
    )


def bribe_aware_rules(mempool, p, tfm, bribes):
    """Negative control: drops the target once the producer bribe is positive."""
    ils = indicated_inclusion_lists(mempool, p, tfm)
    if bribes.bp_bribe > 0:
        mempool = [t for t in mempool if t.id != bribes.target]
        ils = tuple(tuple(t for t in il if t.id != bribes.target) for il in ils)
    return ils, indicated_bp_allocation(mempool, ils, p, tfm)
