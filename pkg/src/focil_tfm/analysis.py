"""Closed-form censorship costs: block-producer minimum bribe, the z-split
optimum, and the fake-free simplified game with its Nash equilibria."""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .bribery import BpBribeTerms, bribe_bp_terms
from .core import ZERO, money, render_money
from .equilibrium import PropertyReport, Verdict
from .scenario import Scenario, ScenarioError, _bool_in, _expect_keys, _int_in, _money_in

# ---------------------------------------------------------------- minimum bribe


def min_bribe_bp(scenario: Scenario) -> Fraction:
    """Smallest block-producer bribe the mechanism is designed to withstand."""
    return bribe_bp_terms(scenario.context()).value


def min_bribe_report(scenario: Scenario) -> BpBribeTerms:
    return bribe_bp_terms(scenario.context())


# ---------------------------------------------------------------- z split


@dataclass(frozen=True)
class ZAnalysis:
    """Bribe needed to exclude t0 in the Single TFM as a function of the committee share z."""

    c_t0: Fraction
    r: Fraction
    m: int
    s: Fraction
    z_star: Fraction

    def f_cm(self, z) -> Fraction:
        return (self.c_t0 - self.r) * self.s * money(z)

    def f_bp(self, z) -> Fraction:
        return (self.c_t0 - self.r) * (1 - money(z)) * self.s

    def objective_at(self, z) -> Fraction:
        return min(self.m * self.f_cm(z), self.r * self.s) + self.f_bp(z)

    @property
    def objective(self) -> Fraction:
        return self.objective_at(self.z_star)


def optimal_z(c_t0, r, m: int, s=1) -> ZAnalysis:
    c_t0, r, s = money(c_t0), money(r), money(s)
    if m < 1:
        raise ValueError("m must be at least 1")
    if s <= 0 or r < 0:
        raise ValueError("need s > 0 and r >= 0")
    if c_t0 < r:
        raise ValueError("c_t0 must be at least r")
    if c_t0 == r:
        z = Fraction(1)
    else:
        z = min((r / m) / (c_t0 - r), Fraction(1))
    return ZAnalysis(c_t0, r, m, s, z)


def z_grid_maximum(analysis: ZAnalysis, step=Fraction(1, 1000)) -> tuple[Fraction, Fraction]:
    """Brute-force (argmax, max) of the objective over z in {0, step, ..., 1}."""
    step = money(step)
    n = int(1 / step)
    best = None
    for k in range(n + 1):
        z = k * step
        v = analysis.objective_at(z)
        if best is None or v > best[1]:
            best = (z, v)
    return best


# ---------------------------------------------------------------- simplified model


@dataclass(frozen=True)
class SimplifiedScenario:
    """Fake-free game around one target: costs are zero, rewards are abstract inputs.

    ``block_reward`` is the producer's total reward with t0 in the block.
    """

    m: int
    c_block: int
    c_incl: int
    w: int
    s: Fraction
    r: Fraction
    f_cm: Fraction
    f_bp: Fraction
    block_reward: Fraction
    conditional: bool
    b1: Fraction
    bj: tuple[Fraction, ...]
    unit: Fraction = Fraction(1)

    def __post_init__(self):
        for name in ("s", "r", "f_cm", "f_bp", "block_reward", "b1", "unit"):
            object.__setattr__(self, name, money(getattr(self, name)))
        object.__setattr__(self, "bj", tuple(money(b) for b in self.bj))
        if self.m < 1 or self.c_block < 1 or self.c_incl < 1 or self.w < 1:
            raise ValueError("m, c_block, c_incl and w must be positive")
        if len(self.bj) != self.m:
            raise ValueError("need one includer bribe per includer")
        if self.s <= 0 or self.unit <= 0:
            raise ValueError("s and unit must be positive")
        if min((self.r, self.f_cm, self.f_bp, self.block_reward, self.b1) + self.bj) < 0:
            raise ValueError("amounts must be non-negative")

    @property
    def fill(self) -> int:
        return max(self.c_block - self.w + 1, 0)

    @property
    def threshold_a(self) -> Fraction:
        return self.f_bp + self.r * self.s * self.fill


class BpAction(str, enum.Enum):
    INCLUDE = "include"
    OMIT_FILL = "omit_fill"
    OMIT_BARE = "omit_bare"


# a producer plan: action when t0 is in no list, action when it is in some list
BpPlan = tuple[BpAction, BpAction]
ALL_PLANS: tuple[BpPlan, ...] = tuple(itertools.product(BpAction, BpAction))


def bp_payoff(sc: SimplifiedScenario, action: BpAction, listed: bool) -> Fraction:
    if action is BpAction.INCLUDE:
        return sc.block_reward
    if action is BpAction.OMIT_FILL:
        approved = not listed or sc.conditional
        cost = sc.f_bp + sc.fill * sc.r * sc.s
    else:
        approved = not listed or (sc.conditional and sc.w > sc.c_block)
        cost = sc.f_bp
    return sc.block_reward - cost + sc.b1 if approved else sc.b1


def _block_has_t0(sc: SimplifiedScenario, action: BpAction) -> bool:
    return action is BpAction.INCLUDE


def includer_payoff(sc: SimplifiedScenario, j: int, includes: tuple[bool, ...], action: BpAction) -> Fraction:
    if not includes[j]:
        return sc.bj[j]
    first = includes.index(True)
    return sc.f_cm if first == j and _block_has_t0(sc, action) else ZERO


@dataclass(frozen=True)
class Profile:
    includes: tuple[bool, ...]
    plan: BpPlan

    @property
    def listed(self) -> bool:
        return any(self.includes)

    @property
    def action(self) -> BpAction:
        return self.plan[1] if self.listed else self.plan[0]

    def t0_in_block(self) -> bool:
        return self.action is BpAction.INCLUDE


def _bp_best(sc: SimplifiedScenario, listed: bool) -> Fraction:
    return max(bp_payoff(sc, a, listed) for a in BpAction)


def is_nash(sc: SimplifiedScenario, prof: Profile) -> bool:
    if bp_payoff(sc, prof.action, prof.listed) < _bp_best(sc, prof.listed):
        return False
    for j in range(sc.m):
        here = includer_payoff(sc, j, prof.includes, prof.action)
        flipped = list(prof.includes)
        flipped[j] = not flipped[j]
        flipped = tuple(flipped)
        alt = Profile(flipped, prof.plan)
        if includer_payoff(sc, j, flipped, alt.action) > here:
            return False
    return True


def plan_weakly_dominated(sc: SimplifiedScenario, plan: BpPlan) -> bool:
    """True if another plan is never worse and sometimes better for the producer."""
    mine = [bp_payoff(sc, plan[k], bool(k)) for k in (0, 1)]
    for other in ALL_PLANS:
        theirs = [bp_payoff(sc, other[k], bool(k)) for k in (0, 1)]
        if all(t >= u for t, u in zip(theirs, mine)) and any(t > u for t, u in zip(theirs, mine)):
            return True
    return False


def all_profiles(sc: SimplifiedScenario):
    for includes in itertools.product((False, True), repeat=sc.m):
        for plan in ALL_PLANS:
            yield Profile(includes, plan)


def nash_equilibria(sc: SimplifiedScenario) -> list[Profile]:
    return [p for p in all_profiles(sc) if is_nash(sc, p)]


@dataclass(frozen=True)
class Predicate:
    name: str
    applicable: bool
    value: bool


@dataclass(frozen=True)
class ThresholdReport:
    predicates: tuple[Predicate, ...]
    threshold_a: Fraction

    def get(self, name: str) -> Predicate:
        for p in self.predicates:
            if p.name == name:
                return p
        raise KeyError(name)


def simplified_thresholds(sc: SimplifiedScenario) -> ThresholdReport:
    """Closed-form predicates; each is marked inapplicable outside its hypotheses."""
    cond = sc.conditional
    u1_ok = not cond and sc.m * sc.c_incl <= sc.c_block
    u2_ok = u1_ok and sc.m * sc.w <= sc.m * sc.c_incl
    preds = (
        Predicate("A", cond, sc.b1 > sc.threshold_a),
        Predicate("B", cond, sc.b1 > sc.f_bp),
        Predicate("C", cond, sc.b1 > sc.f_bp and all(b > sc.f_cm for b in sc.bj)),
        Predicate("U1", u1_ok, sc.b1 < sc.block_reward),
        Predicate("U2", u2_ok, sc.b1 < sc.block_reward and sum(sc.bj, ZERO) < sc.m * sc.f_cm),
    )
    return ThresholdReport(preds, sc.threshold_a)


def enumeration_outcomes(sc: SimplifiedScenario) -> dict[str, bool]:
    """What full enumeration says about each predicate's conclusion."""
    ne = nash_equilibria(sc)
    censor_best = True
    include_listed_best = True
    for includes in itertools.product((False, True), repeat=sc.m):
        listed = any(includes)
        best = _bp_best(sc, listed)
        if bp_payoff(sc, BpAction.INCLUDE, listed) == best:
            censor_best = False
        if listed and bp_payoff(sc, BpAction.INCLUDE, True) < best:
            include_listed_best = False
    credible = [p for p in ne if not plan_weakly_dominated(sc, p.plan)]
    return {
        # censoring is the producer's only best response in every profile
        "A": censor_best,
        "B": any(not any(p.includes) and not p.t0_in_block() for p in ne),
        "C": not any(p.t0_in_block() for p in ne),
        # including a listed t0 is always a best response
        "U1": include_listed_best,
        "U2": not any(not p.t0_in_block() for p in credible),
    }


def _perturbations(sc: SimplifiedScenario) -> list[tuple[str, str, SimplifiedScenario, bool]]:
    """One-unit pushes across each strict inequality, with whether the outcome must flip.

    A flip is only forced where the perturbed inequality is the binding one;
    e.g. lowering B_1 below the predicate-A threshold cannot make inclusion a
    best response if a rejected block already pays more than the block reward.
    """
    u = sc.unit
    out = []
    if sc.conditional:
        b = sc.threshold_a - u
        if b >= 0:
            out.append(("A", "b1=threshold_a-unit", replace_b1(sc, b), sc.block_reward >= b))
        b = sc.f_bp - u
        if b >= 0:
            out.append(("B", "b1=f_bp-unit", replace_b1(sc, b), True))
            if all(x > sc.f_cm for x in sc.bj):
                out.append(("C", "b1=f_bp-unit", replace_b1(sc, b), True))
    else:
        out.append(("U1", "b1=block_reward+unit", replace_b1(sc, sc.block_reward + u), True))
        out.append(("U2", "b1=block_reward+unit", replace_b1(sc, sc.block_reward + u), True))
        raised = SimplifiedScenario(**{**sc.__dict__, "bj": tuple(sc.f_cm + u for _ in sc.bj)})
        out.append(("U2", "bj=f_cm+unit", raised, sc.b1 >= sc.f_bp))
    return out


def replace_b1(sc: SimplifiedScenario, b1) -> SimplifiedScenario:
    return SimplifiedScenario(**{**sc.__dict__, "b1": money(b1)})


def verify_simplified_by_enumeration(sc: SimplifiedScenario, sharpness: bool = True) -> PropertyReport:
    """Check every applicable predicate against full pure-profile enumeration.

    A true predicate must see its conclusion in the enumeration. With
    ``sharpness`` each strict inequality is pushed one unit the other way
    (when the predicate held) and the conclusion must then fail wherever
    that inequality is binding.
    """
    thresholds = simplified_thresholds(sc)
    outcomes = enumeration_outcomes(sc)
    mismatches = []
    table = {}
    for pred in thresholds.predicates:
        table[pred.name] = {"applicable": pred.applicable, "predicate": pred.value, "enumeration": outcomes[pred.name]}
        if pred.applicable and pred.value and not outcomes[pred.name]:
            mismatches.append(pred.name)
    flips = []
    if sharpness:
        for name, how, pert, expected in _perturbations(sc):
            if not thresholds.get(name).value:
                continue
            after_pred = simplified_thresholds(pert).get(name).value
            after = enumeration_outcomes(pert)[name]
            entry = {"predicate": name, "perturbation": how, "predicate_after": after_pred,
                     "enumeration_after": after, "expected_flip": expected}
            flips.append(entry)
            if after_pred or (expected and after):
                mismatches.append(f"{name}:{how}")
    ne = nash_equilibria(sc)
    details = {
        "model": "simplified (no mempool fakes)",
        "predicates": table,
        "threshold_a": thresholds.threshold_a,
        "equilibria": [
            {"includes": list(p.includes), "plan": [a.value for a in p.plan], "t0_in_block": p.t0_in_block()}
            for p in ne
        ],
        "perturbations": flips,
    }
    if mismatches:
        details["mismatches"] = mismatches
        return PropertyReport("SimplifiedConsistency", Verdict.VIOLATED, mismatches, None, details, len(ne))
    return PropertyReport("SimplifiedConsistency", Verdict.HOLDS, None, None, details, len(ne))


def random_simplified(rng, conditional: Optional[bool] = None) -> SimplifiedScenario:
    """Small random simplified scenario with amounts on a half-unit lattice."""
    half = lambda lo, hi: Fraction(rng.randint(2 * lo, 2 * hi), 2)
    m = rng.randint(1, 3)
    c_incl = rng.randint(1, 2)
    c_block = rng.randint(1, 6)
    w = rng.randint(1, 6)
    cond = rng.random() < 0.5 if conditional is None else conditional
    f_bp = half(0, 6)
    f_cm = half(0, 4)
    s = rng.choice([Fraction(1), Fraction(1, 2), Fraction(2)])
    r = half(0, 3)
    block_reward = f_bp + half(0, 10)
    b1 = half(0, 16)
    bj = tuple(half(0, 8) for _ in range(m))
    return SimplifiedScenario(m, c_block, c_incl, w, s, r, f_cm, f_bp, block_reward, cond, b1, bj,
                              rng.choice([Fraction(1), Fraction(1, 2)]))


# ---------------------------------------------------------------- simplified files

_SIMPLE_INTS = ("m", "c_block", "c_incl", "w")
_SIMPLE_MONEY = ("s", "r", "f_cm", "f_bp", "block_reward", "b1", "unit")


def simplified_to_dict(sc: SimplifiedScenario) -> dict:
    out = {k: getattr(sc, k) for k in _SIMPLE_INTS}
    out.update({k: render_money(getattr(sc, k)) for k in _SIMPLE_MONEY})
    out["conditional"] = sc.conditional
    out["bj"] = [render_money(b) for b in sc.bj]
    return out


def simplified_from_dict(obj) -> SimplifiedScenario:
    keys = _SIMPLE_INTS + _SIMPLE_MONEY + ("conditional", "bj")
    _expect_keys(obj, keys, tuple(k for k in keys if k != "unit"), "simplified")
    kw = {k: _int_in(obj[k], k) for k in _SIMPLE_INTS}
    kw.update({k: _money_in(obj[k], k) for k in _SIMPLE_MONEY if k in obj})
    kw["conditional"] = _bool_in(obj["conditional"], "conditional")
    if not isinstance(obj["bj"], list):
        raise ScenarioError("bj: expected a list")
    kw["bj"] = tuple(_money_in(b, f"bj[{i}]") for i, b in enumerate(obj["bj"]))
    try:
        return SimplifiedScenario(**kw)
    except ValueError as exc:
        raise ScenarioError(f"simplified: {exc}") from None


def parse_simplified(text: str) -> SimplifiedScenario:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return simplified_from_dict(obj)


def render_simplified(sc: SimplifiedScenario) -> str:
    return json.dumps(simplified_to_dict(sc), sort_keys=True, indent=2) + "\n"
