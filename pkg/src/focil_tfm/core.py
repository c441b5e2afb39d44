"""Domain types, exact money arithmetic, per-TFM fee formulas and block validity.

All money is a :class:`fractions.Fraction`. Fee helpers return *total* amounts
for one transaction (already multiplied by the uniform size ``s``).
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

Money = Fraction

ZERO = Fraction(0)
# Fakes are numbered after every user transaction, so they lose fee ties.
FAKE_ID_BASE = 1_000_000


def money(value) -> Fraction:
    """Parse an exact rational: int, Fraction, or a ``"num/den"`` string.

    Floats are rejected on purpose; they would silently round.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not money")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "." in text or "e" in text.lower():
            raise ValueError(f"decimal money literal not allowed: {value!r}")
        return Fraction(text)
    raise TypeError(f"cannot interpret {value!r} as exact money")


def render_money(value: Fraction) -> str:
    """Canonical ``num/den`` rendering (denominator always present)."""
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)


class TfmKind(str, enum.Enum):
    DOUBLE = "double"
    SINGLE = "single"
    SINGLE_PRIORITIZED = "single_prioritized"


@dataclass(frozen=True)
class ScenarioParams:
    m: int
    c_block: int
    c_incl: int
    s: Fraction = Fraction(1)
    r: Fraction = ZERO
    gamma: Fraction = ZERO
    mu_cost_cm: Fraction = ZERO
    mu_cost_bp: Fraction = ZERO
    z: Fraction = Fraction(1, 2)
    conditional: bool = True
    unique_sender: bool = False
    unit: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("s", "r", "gamma", "mu_cost_cm", "mu_cost_bp", "z", "unit"):
            object.__setattr__(self, name, money(getattr(self, name)))
        if self.m < 1 or self.c_block < 1 or self.c_incl < 1:
            raise ValueError("m, c_block and c_incl must be >= 1")
        if self.s <= 0 or self.unit <= 0:
            raise ValueError("s and unit must be positive")
        if self.r < 0 or self.mu_cost_cm < 0 or self.mu_cost_bp < 0:
            raise ValueError("r and costs must be non-negative")
        if not (0 <= self.gamma <= 1) or not (0 <= self.z <= 1):
            raise ValueError("gamma and z must lie in [0, 1]")

    @property
    def burn(self) -> Fraction:
        """Burnt amount per transaction, r*s."""
        return self.r * self.s

    @property
    def bp_cost(self) -> Fraction:
        return self.mu_cost_bp * self.s

    @property
    def cm_cost(self) -> Fraction:
        return self.mu_cost_cm * self.s


@dataclass(frozen=True)
class DoubleBid:
    delta_cm: Fraction
    delta_bp: Fraction
    c: Fraction

    def __post_init__(self):
        for name in ("delta_cm", "delta_bp", "c"):
            v = money(getattr(self, name))
            if v < 0:
                raise ValueError(f"bid component {name} must be >= 0")
            object.__setattr__(self, name, v)


@dataclass(frozen=True)
class SingleBid:
    c: Fraction

    def __post_init__(self):
        v = money(self.c)
        if v < 0:
            raise ValueError("bid must be >= 0")
        object.__setattr__(self, "c", v)


@dataclass(frozen=True)
class PrioritizedBid:
    c: Fraction

    def __post_init__(self):
        v = money(self.c)
        if v < 0:
            raise ValueError("bid must be >= 0")
        object.__setattr__(self, "c", v)


Bid = Union[DoubleBid, SingleBid, PrioritizedBid]

BID_TYPES = {
    TfmKind.DOUBLE: DoubleBid,
    TfmKind.SINGLE: SingleBid,
    TfmKind.SINGLE_PRIORITIZED: PrioritizedBid,
}


def tfm_of(bid: Bid) -> TfmKind:
    for kind, cls in BID_TYPES.items():
        if isinstance(bid, cls):
            return kind
    raise TypeError(f"unknown bid {bid!r}")


def zero_bid(tfm: TfmKind) -> Bid:
    if tfm is TfmKind.DOUBLE:
        return DoubleBid(ZERO, ZERO, ZERO)
    return BID_TYPES[tfm](ZERO)


def check_bid(bid: Bid, tfm: TfmKind) -> None:
    if not isinstance(bid, BID_TYPES[tfm]):
        raise ValueError(f"bid {type(bid).__name__} does not match TFM {tfm.value}")


@functools.lru_cache(maxsize=1 << 16)
def bp_fee(bid: Bid, params: ScenarioParams) -> Fraction:
    """Block producer fee of a transaction carrying ``bid``.

    For the prioritized single-fee TFM this is the amount the block producer
    gets when the transaction sits in no inclusion list; routing happens in
    :func:`focil_tfm.tfm.compute_payments`.
    """
    s, r = params.s, params.r
    spare = bid.c * s - r * s
    if isinstance(bid, DoubleBid):
        return max(min(bid.delta_bp * s, spare), ZERO)
    if isinstance(bid, SingleBid):
        residual = max(spare - params.bp_cost, ZERO)
        return max(min(params.bp_cost, spare) + residual * (1 - params.z), ZERO)
    if isinstance(bid, PrioritizedBid):
        return max(spare, ZERO)
    raise TypeError(f"unknown bid {bid!r}")


@functools.lru_cache(maxsize=1 << 16)
def cm_fee(bid: Bid, params: ScenarioParams) -> Fraction:
    """Committee fee, paid only if the transaction is in an inclusion list and the block."""
    s, r = params.s, params.r
    spare = bid.c * s - r * s
    if isinstance(bid, DoubleBid):
        return max(min(bid.delta_cm * s, spare - min(bid.delta_bp * s, spare)), ZERO)
    if isinstance(bid, SingleBid):
        return max(spare - params.bp_cost, ZERO) * params.z
    if isinstance(bid, PrioritizedBid):
        return max(spare, ZERO)
    raise TypeError(f"unknown bid {bid!r}")


def full_fee(bid: Bid, params: ScenarioParams) -> Fraction:
    """Total fee to proposers when included in both a list and the block (``Fee_t * s``)."""
    if isinstance(bid, PrioritizedBid):
        return cm_fee(bid, params)
    return bp_fee(bid, params) + cm_fee(bid, params)


def bp_eligible(bid: Bid, params: ScenarioParams) -> bool:
    """Eligibility test of the indicated block-producer rule."""
    if bid.c < params.r + params.mu_cost_bp:
        return False
    if isinstance(bid, DoubleBid):
        return bid.delta_bp >= params.mu_cost_bp
    return True


@dataclass(frozen=True)
class Transaction:
    """One transaction of uniform size ``params.s``.

    ``owner`` is None for user transactions, 0 for the block producer and j
    for includer j. ``via_mempool`` separates Phase-1 fakes (sent to the
    mempool) from fakes placed directly into a list or block.
    """

    id: int
    sender: str
    bid: Bid
    value: Optional[Fraction] = None
    owner: Optional[int] = None
    via_mempool: bool = True
    invalidates: Optional[str] = None
    public_info: str = ""

    def __post_init__(self):
        if self.value is not None:
            object.__setattr__(self, "value", money(self.value))
        if (self.value is not None) != (self.owner is None):
            raise ValueError("value is present iff the transaction is a user transaction")
        if self.owner is None and not self.via_mempool:
            raise ValueError("user transactions always go through the mempool")
        if self.invalidates is not None and self.owner != 0:
            raise ValueError("only the block producer can invalidate its own fakes")

    @property
    def is_user(self) -> bool:
        return self.owner is None

    @property
    def origin(self) -> str:
        if self.owner is None:
            return "user"
        if self.owner == 0:
            return "block_producer"
        return f"includer({self.owner})"


@dataclass(frozen=True)
class OrderedFeeList:
    """Transactions sorted by decreasing fee, ties by ascending id.

    ``from_fees`` accepts an optional secondary key per entry (larger first)
    that is consulted before the id; single-fee bids use their total fee.
    """

    entries: tuple[tuple[int, Fraction], ...] = ()

    @classmethod
    def from_fees(cls, fees: Iterable[tuple]) -> "OrderedFeeList":
        rows = [(e[0], e[1], e[2] if len(e) > 2 else ZERO) for e in fees]
        rows.sort(key=lambda e: (-e[1], -e[2], e[0]))
        return cls(tuple((i, f) for i, f, _ in rows))

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.entries)

    def fee_at(self, j: int) -> Fraction:
        """Fee at 1-based position ``j``; zero past the end."""
        if 1 <= j <= len(self.entries):
            return self.entries[j - 1][1]
        return ZERO

    def position(self, tx_id: int) -> Optional[int]:
        for k, (i, _) in enumerate(self.entries, start=1):
            if i == tx_id:
                return k
        return None


def tiebreak(bid: Bid) -> Fraction:
    """Secondary ordering key among equal split fees.

    A single-fee bid is ranked by its total fee, so the split (which can be
    flat at z=0 or z=1) never hides a higher bid; Double bids use ids only.
    """
    if isinstance(bid, DoubleBid):
        return ZERO
    return bid.c


def rank_key(t: "Transaction", fee: Fraction) -> tuple:
    return (-fee, -tiebreak(t.bid), t.id)


def build_l_bp(m0: Iterable[Transaction], params: ScenarioParams) -> OrderedFeeList:
    threshold = params.bp_cost
    fees = []
    for t in m0:
        if not t.is_user:
            raise ValueError("L_BP is built from user transactions only")
        f = bp_fee(t.bid, params)
        if f >= threshold:
            fees.append((t.id, f, tiebreak(t.bid)))
    return OrderedFeeList.from_fees(fees)


def build_l_cm(m0: Iterable[Transaction], params: ScenarioParams) -> OrderedFeeList:
    m0 = list(m0)
    l_bp = build_l_bp(m0, params)
    window = set(l_bp.ids[: params.c_block])
    threshold = params.cm_cost
    fees = []
    for t in m0:
        if t.id in window:
            f = cm_fee(t.bid, params)
            if f >= threshold:
                fees.append((t.id, f, tiebreak(t.bid)))
    return OrderedFeeList.from_fees(fees)


def _ids(txs: Iterable[Transaction]) -> frozenset[int]:
    return frozenset(t.id for t in txs)


@dataclass(frozen=True)
class InclusionVector:
    bits: tuple[bool, ...]

    def __getitem__(self, j: int) -> bool:
        return self.bits[j]

    def as_ints(self) -> list[int]:
        return [int(b) for b in self.bits]


@dataclass(frozen=True)
class GameState:
    """Everything produced by Phases 1-3 of one slot.

    ``transactions`` holds every transaction known in the slot (users and all
    fakes, invalidators included); lists and the block hold transactions too.
    """

    transactions: tuple[Transaction, ...]
    inclusion_lists: tuple[tuple[Transaction, ...], ...]
    block: tuple[Transaction, ...]
    _index: Mapping[int, Transaction] = field(default=None, compare=False, repr=False, hash=False)

    def __post_init__(self):
        index = {t.id: t for t in self.transactions}
        if len(index) != len(self.transactions):
            raise ValueError("duplicate transaction ids")
        for t in self.block:
            index.setdefault(t.id, t)
        for il in self.inclusion_lists:
            for t in il:
                index.setdefault(t.id, t)
        object.__setattr__(self, "_index", index)
        object.__setattr__(self, "_block_ids", _ids(self.block))
        object.__setattr__(self, "_il_ids", tuple(_ids(il) for il in self.inclusion_lists))

    def tx(self, tx_id: int) -> Transaction:
        return self._index[tx_id]

    @property
    def m(self) -> int:
        return len(self.inclusion_lists)

    @property
    def mempool_m0(self) -> tuple[Transaction, ...]:
        return tuple(t for t in self.transactions if t.is_user)

    @property
    def mempool(self) -> tuple[Transaction, ...]:
        return tuple(t for t in self.transactions if t.via_mempool)

    @property
    def fake_init_bp(self) -> tuple[Transaction, ...]:
        return tuple(t for t in self._index.values() if t.owner == 0 and t.via_mempool)

    @property
    def fake_phase_bp(self) -> tuple[Transaction, ...]:
        return tuple(t for t in self._index.values() if t.owner == 0 and not t.via_mempool)

    def fake_init_cm(self, j: int) -> tuple[Transaction, ...]:
        return tuple(t for t in self._index.values() if t.owner == j and t.via_mempool)

    def fake_phase_cm(self, j: int) -> tuple[Transaction, ...]:
        return tuple(t for t in self._index.values() if t.owner == j and not t.via_mempool)

    @property
    def invalidators(self) -> tuple[Transaction, ...]:
        return tuple(t for t in self.block if t.invalidates is not None)

    def in_block(self, tx_id: int) -> bool:
        return tx_id in self._block_ids

    def in_list(self, j: int, tx_id: int) -> bool:
        return tx_id in self._il_ids[j - 1]

    def listed_ids(self) -> frozenset[int]:
        out: set[int] = set()
        for ids in self._il_ids:
            out |= ids
        return frozenset(out)

    def smallest_order_includer(self, tx_id: int) -> Optional[int]:
        for j, ids in enumerate(self._il_ids, start=1):
            if tx_id in ids:
                return j
        return None

    def invalidated_ids(self) -> frozenset[int]:
        """Block-producer mempool fakes whose sender is drained by an invalidator."""
        senders = {t.invalidates for t in self.block if t.invalidates is not None}
        if not senders:
            return frozenset()
        return frozenset(
            t.id for t in self._index.values() if t.owner == 0 and t.via_mempool and t.sender in senders
        )


def check_feasible(state: GameState, params: ScenarioParams) -> None:
    """Raise ValueError unless every list and the block respect capacity and sender rules."""
    if len(state.block) > params.c_block:
        raise ValueError("block exceeds c_block")
    if len(state.inclusion_lists) != params.m:
        raise ValueError("need exactly m inclusion lists")
    for j, il in enumerate(state.inclusion_lists, start=1):
        if len(il) > params.c_incl:
            raise ValueError(f"inclusion list {j} exceeds c_incl")
        if params.unique_sender and len({t.sender for t in il}) != len(il):
            raise ValueError(f"inclusion list {j} repeats a sender")


def block_valid(state: GameState, params: ScenarioParams) -> bool:
    """Attester verdict on B_k under the scenario's list variant."""
    if len(state.block) > params.c_block:
        return False
    invalidated = state.invalidated_ids()
    if any(t.id in invalidated for t in state.block):
        return False
    # a user transaction whose bid cannot cover the burn is not includable
    if any(t.is_user and t.bid.c < params.r for t in state.block):
        return False
    missing = [i for i in state.listed_ids() if i not in invalidated and not state.in_block(i)]
    if not missing:
        return True
    return params.conditional and len(state.block) >= params.c_block


def inclusion_vector(t: Transaction, state: GameState) -> InclusionVector:
    bits = [state.in_block(t.id)]
    bits += [state.in_list(j, t.id) for j in range(1, state.m + 1)]
    return InclusionVector(tuple(bits))


def sort_by_fee(txs: Sequence[Transaction], fee) -> list[Transaction]:
    return sorted(txs, key=lambda t: rank_key(t, fee(t)))
