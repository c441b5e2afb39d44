"""Indicated allocation rules and the payment/burning rules of the three TFMs."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .core import (
    ZERO,
    GameState,
    PrioritizedBid,
    ScenarioParams,
    TfmKind,
    Transaction,
    bp_eligible,
    bp_fee,
    check_bid,
    cm_fee,
    rank_key,
)


def routed_bp_fee(t: Transaction, params: ScenarioParams, listed: bool) -> Fraction:
    """Fee the block producer actually earns for ``t`` given list membership."""
    if isinstance(t.bid, PrioritizedBid) and listed:
        return ZERO
    return bp_fee(t.bid, params)


def routed_cm_fee(t: Transaction, params: ScenarioParams, listed: bool) -> Fraction:
    if not listed:
        return ZERO
    return cm_fee(t.bid, params)


def _dedupe(txs: Iterable[Transaction]) -> list[Transaction]:
    seen: dict[int, Transaction] = {}
    for t in txs:
        seen.setdefault(t.id, t)
    return list(seen.values())


def indicated_bp_allocation(
    mempool: Sequence[Transaction],
    inclusion_lists: Sequence[Sequence[Transaction]],
    params: ScenarioParams,
    tfm: TfmKind,
) -> tuple[Transaction, ...]:
    """Greedy top-``c_block`` selection by block-producer fee over the mempool and lists."""
    candidates = _dedupe(list(mempool) + [t for il in inclusion_lists for t in il])
    listed = {t.id for il in inclusion_lists for t in il}
    scored = []
    for t in candidates:
        check_bid(t.bid, tfm)
        if t.invalidates is not None or not bp_eligible(t.bid, params):
            continue
        fee = routed_bp_fee(t, params, t.id in listed)
        if tfm is TfmKind.SINGLE_PRIORITIZED and fee < params.bp_cost:
            # a listed prioritized transaction pays the producer nothing
            continue
        scored.append((fee, t))
    scored.sort(key=lambda e: rank_key(e[1], e[0]))
    return tuple(t for _, t in scored[: params.c_block])


def _predicted_pool(mempool: Sequence[Transaction], params: ScenarioParams, tfm: TfmKind) -> list[Transaction]:
    predicted = indicated_bp_allocation(mempool, (), params, tfm)
    threshold = params.cm_cost
    pool = [t for t in predicted if cm_fee(t.bid, params) >= threshold]
    pool.sort(key=lambda t: rank_key(t, cm_fee(t.bid, params)))
    return pool


def indicated_inclusion_lists(
    mempool: Sequence[Transaction], params: ScenarioParams, tfm: TfmKind
) -> tuple[tuple[Transaction, ...], ...]:
    """Lists of all ``m`` includers when each follows the indicated rule.

    Every includer runs the same greedy simulation of the orders before it,
    so computing all lists in one pass gives the same result as calling
    :func:`indicated_includer_allocation` for each order.
    """
    pool = _predicted_pool(mempool, params, tfm)
    lists = []
    for _ in range(params.m):
        chosen: list[Transaction] = []
        senders: set[str] = set()
        for t in pool:
            if len(chosen) == params.c_incl:
                break
            if params.unique_sender and t.sender in senders:
                continue
            chosen.append(t)
            senders.add(t.sender)
        taken = {t.id for t in chosen}
        pool = [t for t in pool if t.id not in taken]
        lists.append(tuple(chosen))
    return tuple(lists)


def indicated_includer_allocation(
    order_j: int, mempool: Sequence[Transaction], params: ScenarioParams, tfm: TfmKind
) -> tuple[Transaction, ...]:
    if not 1 <= order_j <= params.m:
        raise ValueError(f"order must lie in 1..{params.m}, got {order_j}")
    return indicated_inclusion_lists(mempool, params, tfm)[order_j - 1]


@dataclass(frozen=True)
class TxPayment:
    burn: Fraction
    bp_payment: Fraction
    cm_payment: tuple[tuple[int, Fraction], ...] = ()

    @property
    def cm_total(self) -> Fraction:
        return sum((v for _, v in self.cm_payment), ZERO)

    def cm_to(self, j: int) -> Fraction:
        for k, v in self.cm_payment:
            if k == j:
                return v
        return ZERO

    @property
    def outflow(self) -> Fraction:
        return self.burn + self.bp_payment + self.cm_total


@dataclass(frozen=True)
class PaymentBreakdown:
    per_tx: tuple[tuple[int, TxPayment], ...]

    def __getitem__(self, tx_id: int) -> TxPayment:
        for i, p in self.per_tx:
            if i == tx_id:
                return p
        raise KeyError(tx_id)

    def get(self, tx_id: int) -> Optional[TxPayment]:
        for i, p in self.per_tx:
            if i == tx_id:
                return p
        return None


def compute_payments(state: GameState, params: ScenarioParams, tfm: TfmKind) -> PaymentBreakdown:
    """Fees, committee payment and burn for every transaction in the block."""
    out = []
    for t in state.block:
        check_bid(t.bid, tfm)
        first = state.smallest_order_includer(t.id)
        listed = first is not None
        bp = routed_bp_fee(t, params, listed)
        cm = routed_cm_fee(t, params, listed)
        cm_payment = ((first, cm),) if listed and cm != 0 else ()
        out.append((t.id, TxPayment(params.burn, bp, cm_payment)))
    return PaymentBreakdown(tuple(out))
