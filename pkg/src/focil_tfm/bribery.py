"""Bribe functions, includer typing constraints, beliefs and bribe losses.

A single target transaction ``t0`` is bribed against. Every bribe value is a
function of the user mempool ``M0`` only, so the quantities it needs are
gathered once in a :class:`TargetContext`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

from .core import (
    ZERO,
    GameState,
    OrderedFeeList,
    ScenarioParams,
    Transaction,
    bp_fee,
    build_l_bp,
    build_l_cm,
    ceil_div,
    cm_fee,
    money,
)


@dataclass(frozen=True)
class CM1:
    """Pays the capped amount whenever the includer omits t0.

    ``bonus`` shifts the amount by a fixed offset; it is zero for the
    canonical function and set to one money unit in tightness checks.
    """

    bonus: Fraction = ZERO
    kind = "CM1"

    def __post_init__(self):
        object.__setattr__(self, "bonus", money(self.bonus))


@dataclass(frozen=True)
class CM2:
    """Same amount as CM1, paid only if every other party omits t0 too."""

    bonus: Fraction = ZERO
    kind = "CM2"

    def __post_init__(self):
        object.__setattr__(self, "bonus", money(self.bonus))


@dataclass(frozen=True)
class CM3:
    x: Fraction = ZERO
    kind = "CM3"

    def __post_init__(self):
        object.__setattr__(self, "x", money(self.x))
        if self.x < 0:
            raise ValueError("X must be non-negative")


@dataclass(frozen=True)
class BP1:
    bonus: Fraction = ZERO
    kind = "BP1"

    def __post_init__(self):
        object.__setattr__(self, "bonus", money(self.bonus))


@dataclass(frozen=True)
class FlatCM:
    b: Fraction = ZERO
    kind = "FlatCM"

    def __post_init__(self):
        object.__setattr__(self, "b", money(self.b))
        if self.b < 0:
            raise ValueError("bribe must be non-negative")


@dataclass(frozen=True)
class FlatBP:
    b: Fraction = ZERO
    kind = "FlatBP"

    def __post_init__(self):
        object.__setattr__(self, "b", money(self.b))
        if self.b < 0:
            raise ValueError("bribe must be non-negative")


CMType = Union[CM1, CM2, CM3, FlatCM]
BPType = Union[BP1, FlatBP]
BribeType = Union[CM1, CM2, CM3, BP1, FlatCM, FlatBP]


@dataclass(frozen=True)
class TargetContext:
    """Everything the bribe functions read about t0 and the user mempool."""

    params: ScenarioParams
    target: Transaction
    w: int
    l_bp: OrderedFeeList
    l_cm: OrderedFeeList
    f_bp: Fraction
    f_cm: Fraction
    o_bp: Optional[int]
    o: Optional[int]

    @classmethod
    def build(cls, m0: Sequence[Transaction], target_id: int, params: ScenarioParams) -> "TargetContext":
        by_id = {t.id: t for t in m0}
        if target_id not in by_id:
            raise ValueError(f"target {target_id} is not a user transaction")
        target = by_id[target_id]
        l_bp = build_l_bp(m0, params)
        l_cm = build_l_cm(m0, params)
        return cls(
            params=params,
            target=target,
            w=len(m0),
            l_bp=l_bp,
            l_cm=l_cm,
            f_bp=bp_fee(target.bid, params),
            f_cm=cm_fee(target.bid, params),
            o_bp=l_bp.position(target_id),
            o=l_cm.position(target_id),
        )

    @property
    def congested(self) -> bool:
        return self.w > self.params.c_block

    @property
    def listed_capacity(self) -> int:
        """Number of leading L_CM positions that the indicated lists cover."""
        return min(self.params.m * self.params.c_incl, len(self.l_cm))

    @property
    def in_some_list(self) -> bool:
        return self.o is not None and self.o <= self.listed_capacity

    @property
    def target_order(self) -> int:
        """Order of the includer whose indicated list holds t0."""
        self._require_listed()
        return ceil_div(self.o, self.params.c_incl)

    @property
    def g(self) -> int:
        self._require_listed()
        return self.params.c_incl * ceil_div(self.o, self.params.c_incl) + 1

    @property
    def sum_max(self) -> Fraction:
        cost = self.params.bp_cost
        k = min(self.params.c_block, len(self.l_bp))
        return sum((self.l_bp.fee_at(j) - cost for j in range(1, k + 1)), ZERO)

    def _require_listed(self):
        if self.o is None:
            raise ValueError("t0 is absent from L_CM,c_block")


def bribe_cm_base(ctx: TargetContext) -> Fraction:
    """f_CM - max{f_{g,CM}, mu_CM*s}."""
    return ctx.f_cm - max(ctx.l_cm.fee_at(ctx.g), ctx.params.cm_cost)


def bribe_cm_value(kind: CMType, ctx: TargetContext, all_omitted: bool) -> Fraction:
    """Amount an includer of type ``kind`` would receive for omitting t0."""
    if isinstance(kind, CM1):
        return bribe_cm_base(ctx) + kind.bonus
    if isinstance(kind, CM2):
        return bribe_cm_base(ctx) + kind.bonus if all_omitted else ZERO
    if isinstance(kind, CM3):
        return kind.x
    if isinstance(kind, FlatCM):
        return kind.b
    raise TypeError(f"not an includer bribe type: {kind!r}")


@dataclass(frozen=True)
class BpBribeTerms:
    congested: bool
    value: Fraction
    terms: tuple[tuple[str, Fraction], ...]

    @property
    def binding(self) -> tuple[str, ...]:
        return tuple(name for name, v in self.terms if v == self.value)


def bribe_bp_terms(ctx: TargetContext) -> BpBribeTerms:
    """The block-producer bribe with every candidate term made visible."""
    p = ctx.params
    if ctx.o_bp is None:
        raise ValueError("t0 is absent from L_BP")
    base = ctx.f_bp - p.bp_cost
    if ctx.congested:
        v = ctx.f_bp - max(ctx.l_bp.fee_at(p.c_block + 1), p.bp_cost)
        return BpBribeTerms(True, v, (("replace", v),))
    if ctx.o is None:
        raise ValueError("t0 is absent from L_CM,c_block")
    burn = p.burn
    k1 = p.c_block - ctx.o_bp + 1
    q = ctx.listed_capacity - ctx.o + 1
    y = p.c_block - q + 1
    if p.unique_sender:
        mult1, mult2 = ceil_div(k1, p.m), ceil_div(q, p.m)
    else:
        mult1, mult2 = 1, 1
    t1 = base + burn * (p.c_block - ctx.w + 1)
    t2 = ctx.sum_max
    t3 = base + k1 * p.gamma * ctx.f_bp + mult1 * burn
    t4 = base + p.gamma * q * (ctx.f_cm + max(ctx.l_bp.fee_at(y), p.bp_cost)) + mult2 * burn
    terms = (("fill", t1), ("forfeit", t2), ("push_bp", t3), ("push_cm", t4))
    return BpBribeTerms(False, min(v for _, v in terms), terms)


def bribe_bp_value(ctx: TargetContext) -> Fraction:
    return bribe_bp_terms(ctx).value


def bribe_bp_value_mbic_cap(ctx: TargetContext) -> Fraction:
    """Cap that would apply if the includers could also be adversarial.

    Only defined for the uncongested case; it is never used by the MBBN check.
    """
    if ctx.congested:
        raise ValueError("the cap is stated for the uncongested case only")
    return ctx.f_bp - ctx.params.bp_cost


def bribe_bp_amount(kind: BPType, ctx: TargetContext) -> Fraction:
    if isinstance(kind, BP1):
        return bribe_bp_value(ctx) + kind.bonus
    if isinstance(kind, FlatBP):
        return kind.b
    raise TypeError(f"not a block-producer bribe type: {kind!r}")


@dataclass(frozen=True)
class TypeAssignment:
    bp_type: BPType
    cm_types: tuple[CMType, ...]

    def cm(self, j: int) -> CMType:
        return self.cm_types[j - 1]

    def with_cm(self, j: int, kind: CMType) -> "TypeAssignment":
        types = list(self.cm_types)
        types[j - 1] = kind
        return TypeAssignment(self.bp_type, tuple(types))

    def validate(self, ctx: TargetContext) -> None:
        """Enforce the typing constraints of the standard (non-simplified) game."""
        if len(self.cm_types) != ctx.params.m:
            raise ValueError("need one type per includer")
        if not isinstance(self.bp_type, BP1):
            raise ValueError("the block producer must be of type BP1")
        for j, kind in enumerate(self.cm_types, start=1):
            if not _admissible_kind(j, kind, ctx):
                raise ValueError(f"includer {j} cannot be of type {kind!r}")


def _admissible_kind(j: int, kind: CMType, ctx: TargetContext) -> bool:
    if j == ctx.target_order:
        return isinstance(kind, (CM1, CM2))
    return isinstance(kind, (CM1, CM2, CM3))


def default_x_grid(ctx: TargetContext) -> tuple[Fraction, ...]:
    f = ctx.f_cm
    return tuple(sorted({ZERO, f / 2, f, 2 * f, 10 * f}))


def admissible_cm_types(
    j: int, ctx: TargetContext, x_grid: Optional[Iterable[Fraction]] = None
) -> tuple[CMType, ...]:
    """Types includer ``j`` may have; CM3 is expanded over ``x_grid``."""
    if j == ctx.target_order:
        return (CM1(), CM2())
    grid = default_x_grid(ctx) if x_grid is None else tuple(x_grid)
    return (CM1(), CM2()) + tuple(CM3(x) for x in grid)


def admissible_assignments(ctx: TargetContext, x_grid=None) -> Iterable[TypeAssignment]:
    per = [admissible_cm_types(j, ctx, x_grid) for j in range(1, ctx.params.m + 1)]
    for combo in itertools.product(*per):
        yield TypeAssignment(BP1(), tuple(combo))


@dataclass(frozen=True)
class BeliefCM:
    """Product belief over includer types, one marginal per includer order.

    A party evaluating its own expected utility ignores its own marginal and
    uses its actual type instead.
    """

    marginals: tuple[tuple[tuple[CMType, Fraction], ...], ...]

    def __post_init__(self):
        fixed = []
        for marg in self.marginals:
            entries = tuple((k, money(p)) for k, p in marg)
            if any(p < 0 for _, p in entries):
                raise ValueError("negative probability")
            if sum((p for _, p in entries), ZERO) != 1:
                raise ValueError("each marginal must sum to exactly 1")
            fixed.append(entries)
        object.__setattr__(self, "marginals", tuple(fixed))

    def type_vectors(self, holder: Optional[int], own: Optional[CMType]) -> Iterable[tuple[tuple[CMType, ...], Fraction]]:
        """Yield every (type vector, probability) with the holder pinned to ``own``."""
        per = []
        for j, marg in enumerate(self.marginals, start=1):
            per.append(((own, Fraction(1)),) if j == holder else marg)
        for combo in itertools.product(*per):
            prob = Fraction(1)
            for _, p in combo:
                prob *= p
            if prob:
                yield tuple(k for k, _ in combo), prob


def point_belief(assignment: TypeAssignment) -> BeliefCM:
    return BeliefCM(tuple(((k, Fraction(1)),) for k in assignment.cm_types))


def uniform_belief(ctx: TargetContext, x_grid=None) -> BeliefCM:
    margs = []
    for j in range(1, ctx.params.m + 1):
        kinds = admissible_cm_types(j, ctx, x_grid)
        p = Fraction(1, len(kinds))
        margs.append(tuple((k, p) for k in kinds))
    return BeliefCM(tuple(margs))


def skewed_belief(ctx: TargetContext, x_grid=None) -> BeliefCM:
    """Most weight on the largest admissible bribe for each includer."""
    margs = []
    for j in range(1, ctx.params.m + 1):
        kinds = admissible_cm_types(j, ctx, x_grid)
        n = len(kinds)
        if n == 1:
            margs.append(((kinds[0], Fraction(1)),))
            continue
        rest = Fraction(1, 4 * (n - 1))
        probs = [rest] * (n - 1) + [Fraction(3, 4)]
        margs.append(tuple(zip(kinds, probs)))
    return BeliefCM(tuple(margs))


def standard_beliefs(ctx: TargetContext, assignment: TypeAssignment, x_grid=None) -> tuple[BeliefCM, ...]:
    return (point_belief(assignment), uniform_belief(ctx, x_grid), skewed_belief(ctx, x_grid))


def bribe_loss(
    party: Union[int, str],
    state: GameState,
    assignment: TypeAssignment,
    ctx: TargetContext,
) -> Fraction:
    """Bribe forgone by ``party`` (``"bp"`` or an includer order) in ``state``."""
    t0 = ctx.target.id
    if party == "bp":
        if state.in_block(t0):
            return bribe_bp_amount(assignment.bp_type, ctx)
        return ZERO
    j = int(party)
    if not state.in_list(j, t0):
        return ZERO
    others_omit = not state.in_block(t0) and not any(
        state.in_list(i, t0) for i in range(1, state.m + 1) if i != j
    )
    return bribe_cm_value(assignment.cm(j), ctx, others_omit)
