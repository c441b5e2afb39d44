"""Brute-force deviation and equilibrium search over discretised strategy spaces.

Every check fixes all parties but one to their indicated rules and searches
the remaining party's deviations. The inner loops use arithmetic shortcuts;
the best deviation found is always rebuilt as a full game state and replayed
through :mod:`focil_tfm.utilities`, and the two routes must agree exactly.
"""

from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Iterable, Optional, Sequence

from .bribery import (
    CM1,
    CM2,
    CM3,
    BeliefCM,
    FlatCM,
    TargetContext,
    TypeAssignment,
    admissible_assignments,
    bribe_bp_amount,
    bribe_cm_base,
    standard_beliefs,
)
from .core import (
    FAKE_ID_BASE,
    ZERO,
    DoubleBid,
    GameState,
    PrioritizedBid,
    ScenarioParams,
    SingleBid,
    TfmKind,
    Transaction,
    bp_fee,
    build_l_bp,
    build_l_cm,
    cm_fee,
    full_fee,
)
from .scenario import Scenario, StrategySpace
from .tfm import (
    indicated_bp_allocation,
    indicated_inclusion_lists,
    routed_bp_fee,
    routed_cm_fee,
)
from .utilities import expected_utility, settle

__all__ = [
    "Verdict",
    "PropertyReport",
    "Deviation",
    "StrategySpace",
    "check_dsic",
    "check_mcbn",
    "check_mbbn",
    "check_censorship_resistance",
    "check_fair_under_congestion",
    "check_single_prioritized_unfair",
    "replay_deviation",
]


class Verdict(str, enum.Enum):
    HOLDS = "holds"
    VIOLATED = "violated"
    INCONCLUSIVE = "inconclusive"
    INCONCLUSIVE_AT_GRID = "inconclusive_at_grid"


@dataclass
class PropertyReport:
    property: str
    verdict: Verdict
    witness: Any = None
    utility_delta: Optional[Fraction] = None
    details: dict = field(default_factory=dict)
    evaluations: int = 0

    def __post_init__(self):
        if self.verdict is Verdict.VIOLATED and self.property in ("DSIC", "MCBN", "MBBN"):
            if self.witness is None or self.utility_delta is None or self.utility_delta <= 0:
                raise ValueError("a violation needs a witness with positive delta")


@dataclass(frozen=True)
class Deviation:
    """A unilateral deviation, complete enough to rebuild the slot.

    ``phase1`` are the deviator's mempool fakes, ``direct`` its fakes placed
    straight into its list or block. For an includer ``chosen`` is its list,
    for the block producer it is the block (ids of any transaction above).
    """

    party: str
    order: Optional[int]
    phase1: tuple[Transaction, ...]
    direct: tuple[Transaction, ...]
    chosen: tuple[int, ...]

    def describe(self) -> str:
        who = "block producer" if self.party == "bp" else f"includer {self.order}"
        parts = [f"{who}: {len(self.phase1)} mempool fake(s)"]
        if self.direct:
            parts.append(f"{len(self.direct)} direct fake(s)")
        parts.append(f"chooses {list(self.chosen)}")
        return ", ".join(parts)


class BudgetExceeded(RuntimeError):
    pass


class _Counter:
    def __init__(self, budget: int):
        self.n = 0
        self.budget = budget

    def tick(self, k: int = 1):
        self.n += k
        if self.n > self.budget:
            raise BudgetExceeded(self.n)


# ---------------------------------------------------------------- fee grids


def _levels(values: Iterable[Fraction], unit: Fraction, fine: bool) -> list[Fraction]:
    out = set()
    for v in values:
        out.add(v)
        if fine:
            out.add(v + unit)
            if v - unit >= 0:
                out.add(v - unit)
    out.add(ZERO)
    return sorted(x for x in out if x >= 0)


def _bid_for(tfm: TfmKind, params: ScenarioParams, bp: Fraction, cm: Fraction = ZERO, c: Optional[Fraction] = None):
    if tfm is TfmKind.DOUBLE:
        s = params.s
        return DoubleBid(cm / s, bp / s, params.r + (bp + cm) / s)
    if tfm is TfmKind.SINGLE:
        return SingleBid(c)
    return PrioritizedBid(c)


def _single_levels(scenario: Scenario) -> list[Fraction]:
    p = scenario.params
    base = [t.bid.c for t in scenario.m0] + [p.r, p.r + p.mu_cost_bp]
    if p.z > 0:
        base.append(p.r + p.mu_cost_bp + p.mu_cost_cm / p.z)
    return _levels(base, p.unit / p.s, scenario.space.grid == "spec")


def fake_bid_grid(scenario: Scenario) -> list:
    """Bids for mempool fakes: every (block-producer fee, committee fee) level pair."""
    p, tfm = scenario.params, scenario.tfm
    fine = scenario.space.grid == "spec"
    if tfm is TfmKind.DOUBLE:
        bps = _levels([bp_fee(t.bid, p) for t in scenario.m0] + [p.bp_cost], p.unit, fine)
        cms = _levels([cm_fee(t.bid, p) for t in scenario.m0] + [p.cm_cost], p.unit, fine)
        return [_bid_for(tfm, p, b, c) for b in bps for c in cms]
    return [_bid_for(tfm, p, ZERO, c=c) for c in _single_levels(scenario)]


def direct_bid_grid(scenario: Scenario) -> list:
    """Bids for fakes an includer writes straight into its own list.

    The committee fee of such a fake flows back to the includer, so only the
    block-producer fee level matters.
    """
    p, tfm = scenario.params, scenario.tfm
    fine = scenario.space.grid == "spec"
    if tfm is TfmKind.DOUBLE:
        bps = _levels([bp_fee(t.bid, p) for t in scenario.m0] + [p.bp_cost], p.unit, fine)
        return [_bid_for(tfm, p, b) for b in bps]
    return [_bid_for(tfm, p, ZERO, c=c) for c in _single_levels(scenario)]


def sender_patterns(k: int) -> Iterable[tuple[int, ...]]:
    """Restricted growth strings: every way to split k ordered fakes among senders."""
    if k == 0:
        yield ()
        return

    def rec(prefix, top):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for v in range(top + 2):
            yield from rec(prefix + [v], max(top, v))

    yield from rec([0], 0)


def _make_fakes(owner: int, bids: Sequence, pattern: Sequence[int], via_mempool: bool, start: int, tag: str):
    return tuple(
        Transaction(
            id=FAKE_ID_BASE + start + i,
            sender=f"{tag}{pattern[i]}",
            bid=b,
            owner=owner,
            via_mempool=via_mempool,
        )
        for i, b in enumerate(bids)
    )


def _batches(grid: Sequence, kmax: int, kinds: int) -> Iterable[tuple]:
    """Multisets of fake bids, all identical (kinds=1) or drawn from two levels."""
    for k in range(1, kmax + 1):
        for b in grid:
            yield (b,) * k
    if kinds == 2:
        for a, b in itertools.combinations(grid, 2):
            for k in range(2, kmax + 1):
                for ka in range(1, k):
                    yield (a,) * ka + (b,) * (k - ka)


# ---------------------------------------------------------------- replay


def _indicated_state(scenario: Scenario, mempool: Sequence[Transaction]) -> GameState:
    p, tfm = scenario.params, scenario.tfm
    ils = indicated_inclusion_lists(mempool, p, tfm)
    block = indicated_bp_allocation(mempool, ils, p, tfm)
    return GameState(tuple(mempool), ils, block)


def build_deviation_state(scenario: Scenario, dev: Optional[Deviation]) -> GameState:
    """Rebuild the slot when ``dev`` is played and everyone else is indicated."""
    p, tfm = scenario.params, scenario.tfm
    users = tuple(scenario.m0)
    if dev is None:
        return _indicated_state(scenario, users)
    mempool = users + dev.phase1
    known = {t.id: t for t in mempool + dev.direct}
    ils = list(indicated_inclusion_lists(mempool, p, tfm))
    if dev.party == "bp":
        block = tuple(known[i] for i in dev.chosen)
        return GameState(mempool + dev.direct, tuple(ils), block)
    ils[dev.order - 1] = tuple(known[i] for i in dev.chosen)
    block = indicated_bp_allocation(mempool, ils, p, tfm)
    return GameState(mempool + dev.direct, tuple(ils), block)


def realized_utility(scenario: Scenario, state: GameState, party: str, order: Optional[int], assignment, ctx) -> Fraction:
    outcome = settle(state, scenario.params, scenario.tfm)
    if party == "bp":
        return outcome.bp(assignment, ctx, scenario.params).realized_utility
    return outcome.includer(order, assignment, ctx, scenario.params).realized_utility


def replay_deviation(scenario: Scenario, dev: Deviation, assignment: TypeAssignment) -> Fraction:
    """Utility gain of ``dev`` over indicated play, computed from full game states."""
    ctx = scenario.context()
    base = realized_utility(scenario, build_deviation_state(scenario, None), dev.party, dev.order, assignment, ctx)
    alt = realized_utility(scenario, build_deviation_state(scenario, dev), dev.party, dev.order, assignment, ctx)
    return alt - base


# ---------------------------------------------------------------- MBBN


@dataclass(frozen=True)
class BpSearch:
    """Best block-producer deviations, split by whether t0 stays in the block.

    Values exclude the bribe; ``baseline`` is indicated play without bribe.
    """

    baseline: Fraction
    baseline_has_t0: bool
    best_in: Fraction
    best_out: Optional[Fraction]
    dev_in: Deviation
    dev_out: Optional[Deviation]
    evaluations: int
    complete: bool

    @property
    def empirical_cap(self) -> Optional[Fraction]:
        """Largest bribe that leaves indicated play a best response.

        None when no bribe works: t0 is not in the indicated block, a
        deviation keeping t0 already gains, or t0 cannot be dropped.
        """
        if not self.baseline_has_t0 or self.best_in > self.baseline or self.best_out is None:
            return None
        return self.baseline - self.best_out


def _bp_block_search(scenario: Scenario, fakes: tuple[Transaction, ...], ils, counter: _Counter):
    """Exhaustive block choice for fixed mempool fakes and lists.

    Returns the best (value, chosen ids, direct fakes) for blocks with and
    without t0, excluding bribe and the phase-1 fee cost.
    """
    p = scenario.params
    t0 = scenario.target
    listed = {t.id for il in ils for t in il}
    users = [t for t in scenario.m0 if t.bid.c >= p.r]
    n = len(users)
    vals = [routed_bp_fee(u, p, u.id in listed) - p.bp_cost for u in users]
    must = 0
    t0bit = 0
    for i, u in enumerate(users):
        if u.id in listed:
            must |= 1 << i
        if u.id == t0:
            t0bit = 1 << i
    listed_unincludable = any(t.id in listed and t.is_user and t.bid.c < p.r for t in scenario.m0)
    by_sender: dict[str, list[Transaction]] = {}
    for f in fakes:
        by_sender.setdefault(f.sender, []).append(f)
    senders = sorted(by_sender)
    group_cost = []
    for snd in senders:
        cost = ZERO
        for f in by_sender[snd]:
            cost += p.burn + routed_cm_fee(f, p, f.id in listed)
        group_cost.append(cost)
    masks = []
    for mask in range(1 << n):
        size = bin(mask).count("1")
        if size > p.c_block:
            continue
        val = ZERO
        for i in range(n):
            if mask >> i & 1:
                val += vals[i]
        masks.append((mask, size, val))
    best = {True: None, False: None}
    for inval in range(1 << len(senders)):
        forced = 0
        forced_cost = ZERO
        n_inval = 0
        for gi, snd in enumerate(senders):
            if inval >> gi & 1:
                n_inval += 1
            else:
                forced += len(by_sender[snd])
                forced_cost += group_cost[gi]
        base_slots = forced + n_inval
        if base_slots > p.c_block:
            continue
        for mask, size, val in masks:
            free = p.c_block - size - base_slots
            if free < 0:
                continue
            counter.tick()
            for d in {0, free}:
                full = d == free
                valid = (mask & must) == must and not listed_unincludable
                valid = valid or (p.conditional and full)
                has_t0 = bool(mask & t0bit)
                if valid:
                    util = val - forced_cost - (n_inval + d) * p.burn
                else:
                    util = ZERO
                cur = best[has_t0]
                if cur is None or util > cur[0]:
                    best[has_t0] = (util, mask, inval, d)
    out = {}
    for key, entry in best.items():
        if entry is None:
            out[key] = None
            continue
        util, mask, inval, d = entry
        chosen = [users[i].id for i in range(n) if mask >> i & 1]
        direct = []
        nid = len(fakes) + 1
        for gi, snd in enumerate(senders):
            if inval >> gi & 1:
                direct.append(
                    Transaction(id=FAKE_ID_BASE + 1000 + nid, sender=f"bp-inv{gi}", bid=_zero_bid(scenario), owner=0,
                                via_mempool=False, invalidates=snd)
                )
                nid += 1
            else:
                chosen.extend(f.id for f in by_sender[snd])
        for _ in range(d):
            direct.append(
                Transaction(id=FAKE_ID_BASE + 1000 + nid, sender="bp-fill", bid=_zero_bid(scenario), owner=0, via_mempool=False)
            )
            nid += 1
        chosen.extend(t.id for t in direct)
        out[key] = (util, tuple(chosen), tuple(direct))
    return out


def _zero_bid(scenario: Scenario):
    if scenario.tfm is TfmKind.DOUBLE:
        return DoubleBid(ZERO, ZERO, ZERO)
    if scenario.tfm is TfmKind.SINGLE:
        return SingleBid(ZERO)
    return PrioritizedBid(ZERO)


@functools.lru_cache(maxsize=256)
def search_bp_deviations(scenario: Scenario) -> BpSearch:
    """Search the block producer's mempool fakes, invalidators, fillers and block contents."""
    p, tfm = scenario.params, scenario.tfm
    space = scenario.space
    counter = _Counter(space.budget)
    users = tuple(scenario.m0)
    base_state = build_deviation_state(scenario, None)
    baseline = settle(base_state, p, tfm).bp(None, None, p).realized_utility

    options: dict = {}
    best = {True: None, False: None}
    complete = True
    try:
        candidates = [()]
        grid = fake_bid_grid(scenario)
        for batch in _batches(grid, space.bp_fake_cap(p), space.fake_kinds):
            for pattern in sender_patterns(len(batch)):
                candidates.append(_make_fakes(0, batch, pattern, True, 1, "bp-fake"))
        for fakes in candidates:
            counter.tick()
            mempool = users + fakes
            ils = indicated_inclusion_lists(mempool, p, tfm)
            listed = {t.id for il in ils for t in il}
            listed_users = frozenset(t.id for t in users if t.id in listed)
            shape = tuple((f.sender, routed_cm_fee(f, p, f.id in listed)) for f in fakes)
            cost = p.gamma * sum((full_fee(f.bid, p) for f in fakes), ZERO)
            key = (listed_users, shape)
            if key not in options or cost < options[key][0]:
                options[key] = (cost, fakes, ils)
        for cost, fakes, ils in options.values():
            found = _bp_block_search(scenario, fakes, ils, counter)
            for has_t0, entry in found.items():
                if entry is None:
                    continue
                util, chosen, direct = entry
                total = util - cost
                cur = best[has_t0]
                if cur is None or total > cur[0]:
                    best[has_t0] = (total, Deviation("bp", None, fakes, direct, chosen))
    except BudgetExceeded:
        complete = False
    if best[True] is None:
        best_in, dev_in = baseline, None
    else:
        best_in, dev_in = best[True]
    best_out, dev_out = best[False] if best[False] is not None else (None, None)
    has_t0 = base_state.in_block(scenario.target)
    return BpSearch(baseline, has_t0, best_in, best_out, dev_in, dev_out, counter.n, complete)


def check_mbbn(scenario: Scenario, assignment: Optional[TypeAssignment] = None) -> PropertyReport:
    """Block producer best-response check with every includer on its indicated rule."""
    assignment = assignment or scenario.assignment
    ctx = scenario.context()
    bribe = bribe_bp_amount(assignment.bp_type, ctx)
    res = search_bp_deviations(scenario)
    candidates = [(res.best_in - bribe, res.dev_in)]
    if res.best_out is not None:
        candidates.append((res.best_out, res.dev_out))
    best, dev = max(candidates, key=lambda e: e[0])
    delta = best - (res.baseline - (bribe if res.baseline_has_t0 else ZERO))
    details = {
        "bribe": bribe,
        "empirical_cap": res.empirical_cap,
        "complete": res.complete,
    }
    if delta > 0:
        replayed = replay_deviation(scenario, dev, assignment)
        if replayed != delta:
            raise AssertionError(f"search and replay disagree: {delta} vs {replayed}")
        details["witness"] = dev.describe()
        return PropertyReport("MBBN", Verdict.VIOLATED, dev, delta, details, res.evaluations)
    verdict = Verdict.HOLDS if res.complete else Verdict.INCONCLUSIVE_AT_GRID
    return PropertyReport("MBBN", verdict, None, delta, details, res.evaluations)


# ---------------------------------------------------------------- MCBN


@dataclass(frozen=True)
class CmSearch:
    """Best type-free utilities of includer ``order`` per bribe-relevant outcome.

    Keys are (t0 in own list, every other party omitted t0).
    """

    order: int
    baseline_state: GameState
    best: dict
    evaluations: int
    complete: bool


def _includer_value(scenario: Scenario, j: int, ils, block, counter: _Counter):
    """Type-free utility of includer j plus the two bribe flags."""
    p = scenario.params
    counter.tick()
    block_ids = {t.id for t in block}
    first: dict[int, int] = {}
    for order, il in enumerate(ils, start=1):
        for t in il:
            first.setdefault(t.id, order)
    if len(block) >= p.c_block:
        valid = True if p.conditional else all(i in block_ids for i in first)
    else:
        valid = all(i in block_ids for i in first)
    value = ZERO
    if valid:
        for t in block:
            listed = t.id in first
            if t.owner == j:
                value -= p.burn + routed_bp_fee(t, p, listed)
                if listed and first[t.id] != j:
                    value -= routed_cm_fee(t, p, True)
            elif listed and first[t.id] == j:
                value += routed_cm_fee(t, p, True)
    own_list = ils[j - 1]
    value -= p.cm_cost * sum(1 for t in own_list if t.owner != j)
    t0 = scenario.target
    in_own = any(t.id == t0 for t in own_list)
    others_omit = t0 not in block_ids and not any(
        t.id == t0 for i, il in enumerate(ils, start=1) if i != j for t in il
    )
    return value, in_own, others_omit


def _subsets(items: Sequence[Transaction], limit: int, unique_sender: bool, taken_senders: frozenset):
    for size in range(limit + 1):
        for combo in itertools.combinations(items, size):
            if unique_sender:
                snds = [t.sender for t in combo]
                if len(set(snds)) != len(snds) or taken_senders.intersection(snds):
                    continue
            yield combo


@functools.lru_cache(maxsize=1024)
def search_cm_deviations(scenario: Scenario, j: int) -> CmSearch:
    """Search includer j's mempool fakes, direct fakes and list contents."""
    p, tfm = scenario.params, scenario.tfm
    space = scenario.space
    counter = _Counter(space.budget)
    users = tuple(scenario.m0)
    base_state = build_deviation_state(scenario, None)
    best: dict = {}
    complete = True

    def record(key, value, dev):
        cur = best.get(key)
        if cur is None or value > cur[0]:
            best[key] = (value, dev)

    try:
        phase1_options = [()]
        grid = fake_bid_grid(scenario)
        for batch in _batches(grid, space.max_fakes_mempool_cm, space.fake_kinds):
            for pattern in sender_patterns(len(batch)):
                phase1_options.append(_make_fakes(j, batch, pattern, True, 1, f"cm{j}-fake"))
        direct_options = [()]
        dgrid = direct_bid_grid(scenario)
        for n in range(1, min(space.direct_cap(p), p.c_incl) + 1):
            for b in dgrid:
                bids = (b,) * n
                direct_options.append(
                    tuple(
                        Transaction(id=FAKE_ID_BASE + 500 + i, sender=f"cm{j}-direct{i}", bid=bids[i], owner=j, via_mempool=False)
                        for i in range(n)
                    )
                )
        for fakes in phase1_options:
            mempool = users + fakes
            ils = list(indicated_inclusion_lists(mempool, p, tfm))
            others = [il for i, il in enumerate(ils, start=1) if i != j]
            for direct in direct_options:
                room = p.c_incl - len(direct)
                taken = frozenset(t.sender for t in direct)
                block_cache = None
                if tfm is not TfmKind.SINGLE_PRIORITIZED:
                    block_cache = indicated_bp_allocation(mempool, others + [direct], p, tfm)
                for combo in _subsets(mempool, room, p.unique_sender, taken):
                    own = direct + combo
                    ils[j - 1] = own
                    block = block_cache
                    if block is None:
                        block = indicated_bp_allocation(mempool, ils, p, tfm)
                    value, in_own, others_omit = _includer_value(scenario, j, ils, block, counter)
                    dev = Deviation(f"includer({j})", j, fakes, direct, tuple(t.id for t in own))
                    record((in_own, others_omit), value, dev)
    except BudgetExceeded:
        complete = False
    return CmSearch(j, base_state, best, counter.n, complete)


def _cm_loss(kind, ctx: TargetContext, in_own: bool, others_omit: bool) -> Fraction:
    if not in_own:
        return ZERO
    if isinstance(kind, CM1):
        return bribe_cm_base(ctx) + kind.bonus
    if isinstance(kind, CM2):
        return bribe_cm_base(ctx) + kind.bonus if others_omit else ZERO
    if isinstance(kind, CM3):
        return kind.x
    if isinstance(kind, FlatCM):
        return kind.b
    raise TypeError(kind)


def best_cm_deviation(scenario: Scenario, j: int, kind, ctx: TargetContext):
    """Best deviation for includer j of type ``kind`` by realized utility."""
    res = search_cm_deviations(scenario, j)
    best = None
    for (in_own, others_omit), (value, dev) in res.best.items():
        total = value - _cm_loss(kind, ctx, in_own, others_omit)
        if best is None or total > best[0]:
            best = (total, dev)
    return best, res


def check_mcbn(
    scenario: Scenario,
    assignment: Optional[TypeAssignment] = None,
    beliefs: Optional[Sequence[BeliefCM]] = None,
) -> PropertyReport:
    """Includer best-response check under each belief, all others indicated."""
    assignment = assignment or scenario.assignment
    ctx = scenario.context()
    beliefs = list(beliefs if beliefs is not None else (scenario.beliefs or standard_beliefs(ctx, assignment)))
    worst = None
    evaluations = 0
    complete = True
    per_includer = {}
    memo: dict = {}

    for j in range(1, scenario.params.m + 1):
        own_type = assignment.cm(j)
        (best_value, dev), res = best_cm_deviation(scenario, j, own_type, ctx)
        evaluations += res.evaluations
        complete = complete and res.complete
        dev_state = build_deviation_state(scenario, dev)
        base_state = res.baseline_state

        def evaluate(state, realized, j=j):
            key = (state, j, realized.cm(j))
            if key not in memo:
                memo[key] = realized_utility(scenario, state, "cm", j, realized, ctx)
            return memo[key]

        for bi, belief in enumerate(beliefs):
            e_dev = expected_utility(j, own_type, lambda v: dev_state, evaluate, belief)
            e_base = expected_utility(j, own_type, lambda v: base_state, evaluate, belief)
            delta = e_dev - e_base
            per_includer[(j, bi)] = delta
            if worst is None or delta > worst[0]:
                worst = (delta, dev, j, bi)
    delta, dev, j, bi = worst
    details = {"per_includer_belief": {f"{k[0]}:{k[1]}": v for k, v in sorted(per_includer.items())},
               "complete": complete}
    if delta > 0:
        replayed = replay_deviation(scenario, dev, assignment)
        if replayed != delta:
            raise AssertionError(f"search and replay disagree: {delta} vs {replayed}")
        details["witness"] = dev.describe()
        details["belief_index"] = bi
        return PropertyReport("MCBN", Verdict.VIOLATED, dev, delta, details, evaluations)
    verdict = Verdict.HOLDS if complete else Verdict.INCONCLUSIVE_AT_GRID
    return PropertyReport("MCBN", verdict, None, delta, details, evaluations)


def check_mcbn_all_types(scenario: Scenario, x_grid=None) -> PropertyReport:
    """MCBN over every admissible type assignment and three beliefs each."""
    ctx = scenario.context()
    worst = None
    count = 0
    evaluations = 0
    for assignment in admissible_assignments(ctx, x_grid):
        rep = check_mcbn(scenario, assignment, standard_beliefs(ctx, assignment, x_grid))
        count += 1
        evaluations = max(evaluations, rep.evaluations)
        if rep.verdict is Verdict.VIOLATED:
            rep.details["assignment"] = assignment
            return rep
        if worst is None or rep.utility_delta > worst.utility_delta:
            worst = rep
    worst.details["assignments_checked"] = count
    return worst


# ---------------------------------------------------------------- DSIC


def _recommended(tfm: TfmKind, params: ScenarioParams, value: Fraction):
    c = min(value, params.r + params.mu_cost_bp)
    if tfm is TfmKind.DOUBLE:
        return DoubleBid(ZERO, params.mu_cost_bp, c)
    return SingleBid(c) if tfm is TfmKind.SINGLE else PrioritizedBid(c)


def dsic_bid_grid(scenario: Scenario, value: Fraction) -> list:
    """Alternative bids from 0 to ``value`` (no overbidding)."""
    p, tfm = scenario.params, scenario.tfm
    n = max(25, scenario.space.dsic_levels)
    cs = {value * k / (n - 1) for k in range(n)}
    cs.add(min(value, p.r + p.mu_cost_bp))
    if tfm is TfmKind.DOUBLE:
        out = set()
        for c in cs:
            for dbp in {ZERO, p.mu_cost_bp, max(c - p.r, ZERO), value}:
                for dcm in {ZERO, p.mu_cost_cm, value}:
                    out.add(DoubleBid(dcm, dbp, c))
        return sorted(out, key=lambda b: (b.c, b.delta_bp, b.delta_cm))
    extra = {t.bid.c for t in scenario.m0 if t.bid.c <= value}
    extra |= {p.r, p.r + p.mu_cost_bp}
    cs |= {c for c in extra if 0 <= c <= value}
    cls = SingleBid if tfm is TfmKind.SINGLE else PrioritizedBid
    return [cls(c) for c in sorted(cs)]


def _other_profiles(scenario: Scenario, idx: int) -> list[dict]:
    """Bid profiles of the other users: as given, all recommended, and single switches."""
    p, tfm = scenario.params, scenario.tfm
    users = scenario.m0
    rec = {t.id: _recommended(tfm, p, t.value) for t in users}
    given = {t.id: t.bid for t in users}
    others = [t.id for i, t in enumerate(users) if i != idx]
    profiles = [given, rec]
    for tid in others:
        alt = dict(given)
        alt[tid] = rec[tid]
        profiles.append(alt)
    seen, out = set(), []
    for prof in profiles:
        key = tuple(prof[t] for t in others)
        if key not in seen:
            seen.add(key)
            out.append(prof)
    return out[: scenario.space.dsic_profiles]


def _user_outcome(scenario: Scenario, idx: int, bid, profile) -> Fraction:
    users = []
    for i, t in enumerate(scenario.m0):
        users.append(replace(t, bid=bid if i == idx else profile[t.id]))
    state = _indicated_state(scenario, users)
    return settle(state, scenario.params, scenario.tfm).user(users[idx], scenario.params)


def dsic_preconditions(scenario: Scenario) -> Optional[str]:
    p = scenario.params
    over = [t.id for t in scenario.m0 if t.bid.c > t.value]
    if over:
        return f"overbidding transactions {over}"
    eager = sum(1 for t in scenario.m0 if t.value >= p.r)
    if eager > p.c_block:
        return f"burn too low: {eager} transactions value at least r but c_block={p.c_block}"
    return None


def check_dsic(scenario: Scenario) -> PropertyReport:
    """Recommended bids against every grid bid and sampled bid profiles of other users."""
    reason = dsic_preconditions(scenario)
    if reason is not None:
        return PropertyReport("DSIC", Verdict.INCONCLUSIVE, None, None, {"reason": reason})
    p, tfm = scenario.params, scenario.tfm
    worst = None
    evaluations = 0
    for idx, t in enumerate(scenario.m0):
        rec = _recommended(tfm, p, t.value)
        grid = dsic_bid_grid(scenario, t.value)
        for profile in _other_profiles(scenario, idx):
            u_rec = _user_outcome(scenario, idx, rec, profile)
            for bid in grid:
                evaluations += 1
                delta = _user_outcome(scenario, idx, bid, profile) - u_rec
                if worst is None or delta > worst[0]:
                    worst = (delta, {"user": t.id, "bid": bid, "profile": profile})
    delta, witness = worst
    # a zero-value user has exactly one non-overbidding bid, so it does not count toward grid size
    sizes = [len(dsic_bid_grid(scenario, t.value)) for t in scenario.m0 if t.value > 0]
    details = {"users": len(scenario.m0), "grid_size_min": min(sizes) if sizes else None}
    if delta > 0:
        return PropertyReport("DSIC", Verdict.VIOLATED, witness, delta, details, evaluations)
    return PropertyReport("DSIC", Verdict.HOLDS, None, delta, details, evaluations)


# ---------------------------------------------------------------- censorship resistance


@dataclass(frozen=True)
class BribeView:
    """Bribe amounts an allocation rule could, in principle, read."""

    target: Optional[int]
    bp_bribe: Fraction
    cm_bribes: tuple[Fraction, ...]

    def scaled(self, k) -> "BribeView":
        return BribeView(self.target, self.bp_bribe * k, tuple(b * k for b in self.cm_bribes))


def indicated_rules(mempool, params, tfm, bribes: BribeView):
    """The indicated rules; they take the bribe view and never look at it."""
    ils = indicated_inclusion_lists(mempool, params, tfm)
    return ils, indicated_bp_allocation(mempool, ils, params, tfm)


def bribe_view(scenario: Scenario) -> BribeView:
    if scenario.target is None or scenario.assignment is None:
        return BribeView(scenario.target, Fraction(1), tuple(Fraction(1) for _ in range(scenario.params.m)))
    ctx = scenario.context()
    a = scenario.assignment
    bp = bribe_bp_amount(a.bp_type, ctx) if ctx.o_bp is not None and (ctx.congested or ctx.o is not None) else ZERO
    cms = tuple(_cm_loss(k, ctx, True, True) if ctx.o is not None else ZERO for k in a.cm_types)
    view = BribeView(scenario.target, bp, cms)
    if view.bp_bribe == 0 and not any(view.cm_bribes):
        view = BribeView(scenario.target, Fraction(1), tuple(Fraction(1) for _ in cms))
    return view


def check_censorship_resistance(scenario: Scenario, rules: Callable = indicated_rules) -> PropertyReport:
    """Rules must produce identical lists and block with bribes scaled by 0 and by 10."""
    view = bribe_view(scenario)
    mempool = tuple(scenario.m0)
    low = rules(mempool, scenario.params, scenario.tfm, view.scaled(0))
    high = rules(mempool, scenario.params, scenario.tfm, view.scaled(10))
    ids = lambda out: (tuple(tuple(t.id for t in il) for il in out[0]), tuple(t.id for t in out[1]))
    if ids(low) == ids(high):
        return PropertyReport("CensorshipResistant", Verdict.HOLDS, None, None, {"outputs": ids(low)})
    return PropertyReport(
        "CensorshipResistant", Verdict.VIOLATED, {"zero": ids(low), "tenfold": ids(high)}, None, {}
    )


# ---------------------------------------------------------------- fairness


def _included_jointly(scenario: Scenario, users: Sequence[Transaction], tid: int) -> tuple[bool, bool]:
    state = _indicated_state(scenario, users)
    listed = any(state.in_list(j, tid) for j in range(1, state.m + 1))
    return listed, state.in_block(tid)


def fairness_witness_bid(scenario: Scenario, t: Transaction):
    """The constructive bid that should lift ``t`` into a list and the block, or None."""
    p, tfm = scenario.params, scenario.tfm
    others = [u for u in scenario.m0]
    l_bp = build_l_bp(others, p)
    l_cm = build_l_cm(others, p)
    unit, s = p.unit, p.s
    mc = p.m * p.c_incl
    if tfm is TfmKind.DOUBLE:
        dbp = (max(p.bp_cost, l_bp.fee_at(p.c_block)) + unit) / s
        dcm = (max(l_cm.fee_at(mc), p.cm_cost) + unit) / s
        return DoubleBid(dcm, dbp, dbp + dcm + p.r)
    if tfm is TfmKind.SINGLE:
        if p.z == 0 and p.mu_cost_cm > 0:
            return None
        by_id = {u.id: u for u in others}

        def c_at(lst, pos):
            if 1 <= pos <= len(lst):
                return by_id[lst.entries[pos - 1][0]].bid.c
            return ZERO

        c = max(p.r + p.mu_cost_bp, c_at(l_bp, p.c_block), c_at(l_cm, mc)) + unit / s
        if p.z > 0:
            c = max(c, p.r + p.mu_cost_bp + p.mu_cost_cm / p.z)
        return SingleBid(c)
    raise ValueError("no constructive witness for the prioritized TFM")


def _top_bid(scenario: Scenario):
    p, tfm = scenario.params, scenario.tfm
    top = max([t.bid.c for t in scenario.m0] + [p.r + p.mu_cost_bp]) + p.unit / p.s
    if tfm is TfmKind.DOUBLE:
        dbp = max([t.bid.delta_bp for t in scenario.m0] + [p.mu_cost_bp]) + p.unit / p.s
        dcm = max([t.bid.delta_cm for t in scenario.m0] + [p.mu_cost_cm]) + p.unit / p.s
        return DoubleBid(dcm, dbp, dcm + dbp + p.r + top)
    if p.z > 0:
        top = max(top, p.r + p.mu_cost_bp + p.mu_cost_cm / p.z)
    return SingleBid(top)


def check_fair_under_congestion(scenario: Scenario) -> PropertyReport:
    """Every excluded user transaction has a bid that wins a list slot and a block slot."""
    p = scenario.params
    if scenario.tfm is TfmKind.SINGLE_PRIORITIZED:
        return check_single_prioritized_unfair(scenario)
    if len(scenario.m0) <= p.c_block:
        return PropertyReport("FairUnderCongestion", Verdict.INCONCLUSIVE, None, None, {"reason": "mempool is block-feasible"})
    state = _indicated_state(scenario, scenario.m0)
    excluded = [t for t in scenario.m0 if not state.in_block(t.id)]
    witnesses, fallbacks, failures = {}, [], []
    for t in excluded:
        idx = scenario.m0.index(t)
        ok = False
        for label, bid in (("constructive", fairness_witness_bid(scenario, t)), ("top", _top_bid(scenario))):
            if bid is None:
                continue
            users = list(scenario.m0)
            users[idx] = replace(t, bid=bid)
            listed, in_block = _included_jointly(scenario, users, t.id)
            if listed and in_block:
                witnesses[t.id] = bid
                if label != "constructive":
                    fallbacks.append(t.id)
                ok = True
                break
            if scenario.tfm is TfmKind.SINGLE and p.z == 0 and p.mu_cost_cm > 0:
                break
        if not ok:
            failures.append(t.id)
    details = {"excluded": [t.id for t in excluded], "fallback_used": fallbacks}
    if failures:
        details["no_witness"] = failures
        return PropertyReport("FairUnderCongestion", Verdict.VIOLATED, None, None, details)
    return PropertyReport("FairUnderCongestion", Verdict.HOLDS, witnesses, None, details)


def check_single_prioritized_unfair(scenario: Scenario, steps: int = 200) -> PropertyReport:
    """Search bids up to ten times the largest fee for joint list and block inclusion."""
    p = scenario.params
    if scenario.tfm is not TfmKind.SINGLE_PRIORITIZED:
        raise ValueError("scenario is not a prioritized single-fee scenario")
    if p.mu_cost_bp == 0:
        return PropertyReport("NotFair", Verdict.INCONCLUSIVE, None, None, {"reason": "mu_cost_bp is zero"})
    if len(scenario.m0) <= p.c_block:
        return PropertyReport("NotFair", Verdict.INCONCLUSIVE, None, None, {"reason": "mempool is block-feasible"})
    top = 10 * max([t.bid.c for t in scenario.m0] + [p.r + p.mu_cost_bp, Fraction(1)])
    grid = {top * k / steps for k in range(steps + 1)}
    for t in scenario.m0:
        c = t.bid.c
        grid |= {c, c + p.unit / p.s}
        if c - p.unit / p.s >= 0:
            grid.add(c - p.unit / p.s)
    grid = sorted(grid)
    state = _indicated_state(scenario, scenario.m0)
    excluded = [t for t in scenario.m0 if not state.in_block(t.id)]
    joint, block_only, list_only = [], 0, 0
    for t in excluded:
        idx = scenario.m0.index(t)
        for c in grid:
            users = list(scenario.m0)
            users[idx] = replace(t, bid=PrioritizedBid(c))
            listed, in_block = _included_jointly(scenario, users, t.id)
            if listed and in_block:
                joint.append((t.id, c))
            elif in_block:
                block_only += 1
            elif listed:
                list_only += 1
    details = {
        "bids_searched": len(grid),
        "max_bid": top,
        "excluded": [t.id for t in excluded],
        "block_only_hits": block_only,
        "list_only_hits": list_only,
    }
    if joint:
        return PropertyReport("NotFair", Verdict.VIOLATED, joint[0], None, details)
    return PropertyReport("NotFair", Verdict.HOLDS, None, None, details)
