"""Scenario descriptors: in-memory form, canonical JSON encoding, and a seeded generator."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Any, Optional

from .bribery import (
    BP1,
    CM1,
    CM2,
    CM3,
    BeliefCM,
    FlatBP,
    FlatCM,
    TargetContext,
    TypeAssignment,
    admissible_cm_types,
    standard_beliefs,
)
from .tfm import indicated_bp_allocation, indicated_inclusion_lists
from .core import (
    BID_TYPES,
    DoubleBid,
    ScenarioParams,
    TfmKind,
    Transaction,
    money,
    render_money,
)


class ScenarioError(ValueError):
    """Input problem, reported with the offending field path or line."""


@dataclass(frozen=True)
class StrategySpace:
    """Discretisation of the strategy spaces searched by the equilibrium checks.

    ``grid="spec"`` uses every fee level present in the user mempool, each
    shifted by one money unit either way, plus zero and the cost thresholds.
    ``grid="compact"`` drops the shifted copies.
    """

    grid: str = "spec"
    max_fakes_mempool_bp: Optional[int] = None
    max_fakes_mempool_cm: int = 1
    max_fakes_direct: Optional[int] = None
    fake_kinds: int = 1
    dsic_levels: int = 5
    dsic_profiles: int = 4
    x_grid: Optional[tuple[Fraction, ...]] = None
    budget: int = 5_000_000

    def __post_init__(self):
        if self.grid not in ("spec", "compact"):
            raise ValueError("grid must be 'spec' or 'compact'")
        if self.x_grid is not None:
            object.__setattr__(self, "x_grid", tuple(money(x) for x in self.x_grid))
        for name in ("max_fakes_mempool_bp", "max_fakes_direct"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.fake_kinds not in (1, 2):
            raise ValueError("fake_kinds must be 1 or 2")
        if self.max_fakes_mempool_cm < 0 or self.dsic_levels < 2 or self.dsic_profiles < 1 or self.budget < 1:
            raise ValueError("strategy space bounds out of range")

    def bp_fake_cap(self, params: ScenarioParams) -> int:
        if self.max_fakes_mempool_bp is not None:
            return self.max_fakes_mempool_bp
        return max(params.c_block, params.m * params.c_incl)

    def direct_cap(self, params: ScenarioParams) -> int:
        if self.max_fakes_direct is not None:
            return self.max_fakes_direct
        return params.c_incl


@dataclass(frozen=True)
class Scenario:
    params: ScenarioParams
    tfm: TfmKind
    transactions: tuple[Transaction, ...]
    target: Optional[int] = None
    assignment: Optional[TypeAssignment] = None
    beliefs: tuple[BeliefCM, ...] = ()
    space: StrategySpace = field(default_factory=StrategySpace)
    seed: Optional[int] = None

    def __post_init__(self):
        ids = [t.id for t in self.transactions]
        if len(set(ids)) != len(ids):
            raise ScenarioError("transaction ids must be unique")
        for t in self.transactions:
            if not t.is_user:
                raise ScenarioError("scenario files hold user transactions only")
            if t.id <= 0:
                raise ScenarioError("user transaction ids must be positive")
            if not isinstance(t.bid, BID_TYPES[self.tfm]):
                raise ScenarioError(f"transaction {t.id}: bid does not match TFM {self.tfm.value}")
        if self.target is not None and self.target not in ids:
            raise ScenarioError(f"target {self.target} is not a listed transaction")
        if self.assignment is not None and len(self.assignment.cm_types) != self.params.m:
            raise ScenarioError("assignment needs one type per includer")
        for b in self.beliefs:
            if len(b.marginals) != self.params.m:
                raise ScenarioError("each belief needs one marginal per includer")

    @property
    def m0(self) -> tuple[Transaction, ...]:
        return self.transactions

    def context(self) -> TargetContext:
        if self.target is None:
            raise ScenarioError("scenario has no target transaction")
        return TargetContext.build(self.transactions, self.target, self.params)


# ---------------------------------------------------------------- encoding

_PARAM_KEYS = {
    "m": int,
    "c_block": int,
    "c_incl": int,
    "s": "money",
    "r": "money",
    "gamma": "money",
    "mu_cost_cm": "money",
    "mu_cost_bp": "money",
    "z": "money",
    "conditional": bool,
    "unique_sender": bool,
    "unit": "money",
}

_BID_KEYS = {
    TfmKind.DOUBLE: ("delta_cm", "delta_bp", "c"),
    TfmKind.SINGLE: ("c",),
    TfmKind.SINGLE_PRIORITIZED: ("c",),
}

_TYPE_CLASSES = {"CM1": CM1, "CM2": CM2, "CM3": CM3, "BP1": BP1, "FlatCM": FlatCM, "FlatBP": FlatBP}
_TYPE_FIELD = {"CM1": "bonus", "CM2": "bonus", "CM3": "x", "BP1": "bonus", "FlatCM": "b", "FlatBP": "b"}


def _money_in(value, path: str) -> Fraction:
    if not isinstance(value, str):
        raise ScenarioError(f"{path}: money must be a 'num/den' string, got {value!r}")
    if "/" not in value:
        raise ScenarioError(f"{path}: money must be written as 'num/den', got {value!r}")
    try:
        return money(value)
    except (ValueError, ZeroDivisionError) as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _expect_keys(obj, allowed, required, path: str) -> None:
    if not isinstance(obj, dict):
        raise ScenarioError(f"{path}: expected an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ScenarioError(f"{path}: unknown field(s) {', '.join(unknown)}")
    missing = sorted(set(required) - set(obj))
    if missing:
        raise ScenarioError(f"{path}: missing field(s) {', '.join(missing)}")


def _int_in(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{path}: expected an integer")
    return value


def _bool_in(value, path: str) -> bool:
    if not isinstance(value, bool):
        raise ScenarioError(f"{path}: expected true or false")
    return value


def _type_out(kind) -> dict:
    name = kind.kind
    return {"kind": name, _TYPE_FIELD[name]: render_money(getattr(kind, _TYPE_FIELD[name]))}


def _type_in(obj, path: str):
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ScenarioError(f"{path}: expected a bribe type object with 'kind'")
    name = obj["kind"]
    if name not in _TYPE_CLASSES:
        raise ScenarioError(f"{path}.kind: unknown bribe type {name!r}")
    attr = _TYPE_FIELD[name]
    _expect_keys(obj, ("kind", attr), ("kind",), path)
    amount = _money_in(obj[attr], f"{path}.{attr}") if attr in obj else Fraction(0)
    try:
        return _TYPE_CLASSES[name](amount)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def scenario_to_dict(sc: Scenario) -> dict:
    p = sc.params
    params = {}
    for key, kind in _PARAM_KEYS.items():
        v = getattr(p, key)
        params[key] = render_money(v) if kind == "money" else v
    txs = []
    for t in sc.transactions:
        bid = {k: render_money(getattr(t.bid, k)) for k in _BID_KEYS[sc.tfm]}
        entry = {"id": t.id, "sender": t.sender, "value": render_money(t.value), "bid": bid}
        if t.public_info:
            entry["public_info"] = t.public_info
        txs.append(entry)
    out: dict[str, Any] = {
        "params": params,
        "tfm": sc.tfm.value,
        "transactions": txs,
        "target": sc.target,
        "assignment": None,
        "beliefs": [],
        "space": _space_out(sc.space),
        "seed": sc.seed,
    }
    if sc.assignment is not None:
        out["assignment"] = {
            "bp": _type_out(sc.assignment.bp_type),
            "cm": [_type_out(k) for k in sc.assignment.cm_types],
        }
    for b in sc.beliefs:
        out["beliefs"].append([[{"type": _type_out(k), "p": render_money(pr)} for k, pr in marg] for marg in b.marginals])
    return out


def _space_out(space: StrategySpace) -> dict:
    out = {}
    for f in fields(StrategySpace):
        v = getattr(space, f.name)
        if f.name == "x_grid" and v is not None:
            v = [render_money(x) for x in v]
        out[f.name] = v
    return out


def _space_in(obj, path: str) -> StrategySpace:
    names = [f.name for f in fields(StrategySpace)]
    _expect_keys(obj, names, (), path)
    kwargs = {}
    for name in names:
        if name not in obj:
            continue
        v = obj[name]
        sub = f"{path}.{name}"
        if name == "grid":
            if v not in ("spec", "compact"):
                raise ScenarioError(f"{sub}: expected 'spec' or 'compact'")
        elif name == "x_grid":
            if v is not None:
                if not isinstance(v, list):
                    raise ScenarioError(f"{sub}: expected a list")
                v = tuple(_money_in(x, f"{sub}[{i}]") for i, x in enumerate(v))
        elif v is not None or name not in ("max_fakes_mempool_bp", "max_fakes_direct"):
            v = _int_in(v, sub)
        kwargs[name] = v
    try:
        return StrategySpace(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def scenario_from_dict(obj) -> Scenario:
    _expect_keys(
        obj,
        ("params", "tfm", "transactions", "target", "assignment", "beliefs", "space", "seed"),
        ("params", "tfm", "transactions"),
        "scenario",
    )
    praw = obj["params"]
    _expect_keys(praw, _PARAM_KEYS, ("m", "c_block", "c_incl"), "params")
    kwargs = {}
    for key, kind in _PARAM_KEYS.items():
        if key not in praw:
            continue
        path = f"params.{key}"
        if kind == "money":
            kwargs[key] = _money_in(praw[key], path)
        elif kind is bool:
            kwargs[key] = _bool_in(praw[key], path)
        else:
            kwargs[key] = _int_in(praw[key], path)
    try:
        params = ScenarioParams(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"params: {exc}") from None
    try:
        tfm = TfmKind(obj["tfm"])
    except ValueError:
        raise ScenarioError(f"tfm: unknown mechanism {obj['tfm']!r}") from None
    if not isinstance(obj["transactions"], list):
        raise ScenarioError("transactions: expected a list")
    txs = []
    bid_keys = _BID_KEYS[tfm]
    for i, traw in enumerate(obj["transactions"]):
        path = f"transactions[{i}]"
        _expect_keys(traw, ("id", "sender", "value", "bid", "public_info"), ("id", "sender", "value", "bid"), path)
        _expect_keys(traw["bid"], bid_keys, bid_keys, f"{path}.bid")
        comps = {k: _money_in(traw["bid"][k], f"{path}.bid.{k}") for k in bid_keys}
        if not isinstance(traw["sender"], str):
            raise ScenarioError(f"{path}.sender: expected a string")
        try:
            bid = BID_TYPES[tfm](**comps)
            txs.append(
                Transaction(
                    id=_int_in(traw["id"], f"{path}.id"),
                    sender=traw["sender"],
                    bid=bid,
                    value=_money_in(traw["value"], f"{path}.value"),
                    public_info=str(traw.get("public_info", "")),
                )
            )
        except ValueError as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    target = obj.get("target")
    if target is not None:
        target = _int_in(target, "target")
    assignment = None
    if obj.get("assignment") is not None:
        araw = obj["assignment"]
        _expect_keys(araw, ("bp", "cm"), ("bp", "cm"), "assignment")
        if not isinstance(araw["cm"], list):
            raise ScenarioError("assignment.cm: expected a list")
        assignment = TypeAssignment(
            _type_in(araw["bp"], "assignment.bp"),
            tuple(_type_in(k, f"assignment.cm[{i}]") for i, k in enumerate(araw["cm"])),
        )
    beliefs = []
    for bi, braw in enumerate(obj.get("beliefs") or []):
        if not isinstance(braw, list):
            raise ScenarioError(f"beliefs[{bi}]: expected a list of marginals")
        margs = []
        for mi, mraw in enumerate(braw):
            entries = []
            if not isinstance(mraw, list):
                raise ScenarioError(f"beliefs[{bi}][{mi}]: expected a list")
            for ei, eraw in enumerate(mraw):
                path = f"beliefs[{bi}][{mi}][{ei}]"
                _expect_keys(eraw, ("type", "p"), ("type", "p"), path)
                entries.append((_type_in(eraw["type"], f"{path}.type"), _money_in(eraw["p"], f"{path}.p")))
            margs.append(tuple(entries))
        try:
            beliefs.append(BeliefCM(tuple(margs)))
        except ValueError as exc:
            raise ScenarioError(f"beliefs[{bi}]: {exc}") from None
    space = _space_in(obj["space"], "space") if obj.get("space") is not None else StrategySpace()
    seed = obj.get("seed")
    if seed is not None:
        seed = _int_in(seed, "seed")
    return Scenario(params, tfm, tuple(txs), target, assignment, tuple(beliefs), space, seed)


def render_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), sort_keys=True, indent=2) + "\n"


def parse_scenario(text: str) -> Scenario:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return scenario_from_dict(obj)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# ---------------------------------------------------------------- generator


@dataclass(frozen=True)
class GeneratorKnobs:
    """Size limits for randomly generated scenarios."""

    tfm: Optional[TfmKind] = None
    max_m: int = 3
    max_c_block: int = 4
    max_c_incl: int = 2
    max_w: int = 6
    congested: Optional[bool] = None
    with_target: bool = True
    recommended_bids: bool = False


def _rand_money(rng: random.Random, lo: int, hi: int, den: int = 1) -> Fraction:
    return Fraction(rng.randint(lo * den, hi * den), den)


def _random_bid(rng: random.Random, tfm: TfmKind, params: ScenarioParams, value: Fraction):
    c = min(value, _rand_money(rng, 0, int(value) + 1, 2))
    if tfm is TfmKind.DOUBLE:
        spare = max(c - params.r, Fraction(0))
        dbp = _rand_money(rng, 0, int(spare) + 1, 2)
        dcm = _rand_money(rng, 0, int(spare) + 1, 2)
        return DoubleBid(dcm, dbp, c)
    return BID_TYPES[tfm](c)


def recommended_bid(tfm: TfmKind, params: ScenarioParams, value: Fraction):
    c = min(value, params.r + params.mu_cost_bp)
    if tfm is TfmKind.DOUBLE:
        return DoubleBid(Fraction(0), params.mu_cost_bp, c)
    return BID_TYPES[tfm](c)


def _random_params(rng: random.Random, knobs: GeneratorKnobs, tfm: TfmKind) -> ScenarioParams:
    return ScenarioParams(
        m=rng.randint(1, knobs.max_m),
        c_block=rng.randint(1, knobs.max_c_block),
        c_incl=rng.randint(1, knobs.max_c_incl),
        s=rng.choice([Fraction(1), Fraction(1), Fraction(2), Fraction(1, 2)]),
        r=rng.choice([Fraction(0), Fraction(1), Fraction(1), Fraction(2), Fraction(1, 2)]),
        gamma=rng.choice([Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(1)]),
        mu_cost_cm=rng.choice([Fraction(0), Fraction(1, 2), Fraction(1)]),
        mu_cost_bp=rng.choice([Fraction(0), Fraction(1, 2), Fraction(1)]),
        z=rng.choice([Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)]) if tfm is not TfmKind.DOUBLE else Fraction(1, 2),
        conditional=rng.random() < 0.5,
        unique_sender=rng.random() < 0.5,
        unit=rng.choice([Fraction(1), Fraction(1, 2)]),
    )


def _random_users(rng, tfm, params, w, knobs) -> tuple[Transaction, ...]:
    n_senders = rng.randint(max(1, w // 2), w)
    txs = []
    for i in range(1, w + 1):
        value = _rand_money(rng, 0, 8, 2)
        if knobs.recommended_bids:
            bid = recommended_bid(tfm, params, value)
        else:
            bid = _random_bid(rng, tfm, params, value)
        sender = f"u{rng.randint(1, n_senders)}"
        txs.append(Transaction(id=i, sender=sender, bid=bid, value=value))
    return tuple(txs)


def generate_scenario(seed: int, knobs: GeneratorKnobs = GeneratorKnobs(), max_tries: int = 10_000) -> Scenario:
    """Seed-reproducible random scenario.

    With ``with_target`` the target sits in the indicated block and in the
    indicated list of order ceil(o / c_incl), the
    block producer is BP1 and the includers carry admissible types, so the
    bribes sit exactly at their caps.
    """
    rng = random.Random(seed)
    for _ in range(max_tries):
        tfm = knobs.tfm or rng.choice([TfmKind.DOUBLE, TfmKind.SINGLE])
        params = _random_params(rng, knobs, tfm)
        if knobs.congested is True:
            if params.c_block >= knobs.max_w:
                continue
            w = rng.randint(params.c_block + 1, knobs.max_w)
        elif knobs.congested is False:
            w = rng.randint(1, min(params.c_block, knobs.max_w))
        else:
            w = rng.randint(1, knobs.max_w)
        users = _random_users(rng, tfm, params, w, knobs)
        # the bribe model covers the Double and Single TFMs only
        if not knobs.with_target or tfm is TfmKind.SINGLE_PRIORITIZED:
            return Scenario(params, tfm, users, seed=seed)
        ils = indicated_inclusion_lists(users, params, tfm)
        block = {t.id for t in indicated_bp_allocation(users, ils, params, tfm)}
        candidates = []
        for t in users:
            ctx = TargetContext.build(users, t.id, params)
            if not (ctx.in_some_list and ctx.target_order <= params.m):
                continue
            # sender collisions can push t0 out of the list its position predicts
            if t.id in block and any(u.id == t.id for u in ils[ctx.target_order - 1]):
                candidates.append(ctx)
        if not candidates:
            continue
        ctx = rng.choice(candidates)
        cm_types = []
        for j in range(1, params.m + 1):
            cm_types.append(rng.choice(admissible_cm_types(j, ctx)))
        assignment = TypeAssignment(BP1(), tuple(cm_types))
        beliefs = standard_beliefs(ctx, assignment)
        return Scenario(params, tfm, users, ctx.target.id, assignment, beliefs, StrategySpace(), seed)
    raise ScenarioError("could not generate a scenario within the retry budget")
