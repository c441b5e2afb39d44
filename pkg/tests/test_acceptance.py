"""Acceptance criteria at their stated tolerances; each prints one PASS/FAIL line.

Known model gaps make some criteria fail on purpose; the failing seeds are
listed in the printed line instead of being filtered out of the sample.
"""

import random
import time
from fractions import Fraction as F

import pytest

from focil_tfm.analysis import optimal_z, random_simplified, verify_simplified_by_enumeration, z_grid_maximum
from focil_tfm.bribery import BP1, CM1, TypeAssignment
from focil_tfm.cli import render_report, run_checks
from focil_tfm.core import TfmKind
from focil_tfm.equilibrium import (
    Verdict,
    bribe_view,
    check_censorship_resistance,
    check_dsic,
    check_fair_under_congestion,
    check_mbbn,
    check_mcbn,
    check_mcbn_all_types,
    check_single_prioritized_unfair,
    dsic_preconditions,
    replay_deviation,
)
from focil_tfm.scenario import GeneratorKnobs, generate_scenario, parse_scenario, render_scenario

from _util import bribe_aware_rules

HOLDS, VIOLATED = Verdict.HOLDS, Verdict.VIOLATED

# criteria 2 and 3 share one pre-registered sample
INCENTIVE_SEEDS = range(250)


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} ({detail})")
    return emit


def incentive_sample():
    out = []
    for seed in INCENTIVE_SEEDS:
        sc = generate_scenario(seed)
        if sc.target is not None:
            out.append(sc)
    return out


def test_criterion_1_dsic(say):
    start = time.perf_counter()
    knobs = GeneratorKnobs(recommended_bids=True)
    checked, bad, small_grid, seed = 0, [], [], 0
    while checked < 100:
        sc = generate_scenario(seed, knobs)
        seed += 1
        if sc.tfm is TfmKind.SINGLE_PRIORITIZED or dsic_preconditions(sc) is not None:
            continue
        rep = check_dsic(sc)
        checked += 1
        if rep.verdict is not HOLDS:
            bad.append(sc.seed)
        if (rep.details["grid_size_min"] or 0) < 25:
            small_grid.append(sc.seed)
    elapsed = time.perf_counter() - start
    ok = not bad and not small_grid and elapsed < 60
    say(1, ok, f"{checked} scenarios, beaten at seeds {bad}, grids under 25 at {small_grid}, {elapsed:.1f}s")
    assert ok


def test_criteria_2_and_3_incentives(say):
    start = time.perf_counter()
    sample = incentive_sample()
    assert len(sample) >= 100
    mcbn_bad, mbbn_bad = [], []
    tight_total, untight, replay_bad = 0, [], []
    for sc in sample:
        cm = check_mcbn_all_types(sc)
        bp = check_mbbn(sc)
        if cm.verdict is not HOLDS:
            mcbn_bad.append((sc.seed, cm.verdict.value, cm.utility_delta))
        if bp.verdict is not HOLDS:
            mbbn_bad.append((sc.seed, bp.verdict.value, bp.utility_delta))
        if not sc.params.conditional:
            continue
        ctx = sc.context()
        bumps = (
            ("bp", check_mbbn, TypeAssignment(BP1(sc.params.unit), sc.assignment.cm_types)),
            ("cm", check_mcbn, sc.assignment.with_cm(ctx.target_order, CM1(sc.params.unit))),
        )
        for name, check, assignment in bumps:
            tight_total += 1
            rep = check(sc, assignment)
            if rep.verdict is not VIOLATED:
                untight.append((sc.seed, name))
            elif replay_deviation(sc, rep.witness, assignment) != rep.utility_delta:
                replay_bad.append((sc.seed, name))
    elapsed = time.perf_counter() - start

    fmt = lambda rows: ", ".join(f"{s}:{v}:{d}" for s, v, d in rows) or "none"
    ok2 = not mcbn_bad and not mbbn_bad and elapsed < 600
    say(2, ok2, f"{len(sample)} scenarios, MCBN failures [{fmt(mcbn_bad)}], MBBN failures [{fmt(mbbn_bad)}], {elapsed:.0f}s")
    ok3 = not untight and not replay_bad
    say(3, ok3, f"{tight_total} bumped checks on conditional scenarios, untight {untight}, replay mismatches {replay_bad}")
    assert ok2 and ok3


def test_criterion_4_censorship_resistance(say):
    seeds = range(20)
    bad, control_missed, controls = [], [], 0
    for tfm in (TfmKind.DOUBLE, TfmKind.SINGLE):
        for seed in seeds:
            sc = generate_scenario(seed, GeneratorKnobs(tfm=tfm))
            if check_censorship_resistance(sc).verdict is not HOLDS:
                bad.append((tfm.value, seed))
            # the control only reacts to a positive producer bribe
            if sc.target is not None and bribe_view(sc).bp_bribe > 0:
                controls += 1
                if check_censorship_resistance(sc, bribe_aware_rules).verdict is not VIOLATED:
                    control_missed.append((tfm.value, seed))
    ok = not bad and controls > 0 and not control_missed
    say(4, ok, f"{2 * len(seeds)} scenarios, failures {bad}; negative control run on {controls}, missed {control_missed}")
    assert ok


def test_criterion_5_fairness(say):
    checked, bad, fallback = 0, [], []
    for tfm in (TfmKind.DOUBLE, TfmKind.SINGLE):
        for seed in range(30):
            sc = generate_scenario(seed, GeneratorKnobs(tfm=tfm, congested=True, with_target=False))
            rep = check_fair_under_congestion(sc)
            checked += 1
            if rep.verdict is not HOLDS:
                bad.append((tfm.value, seed))
            elif rep.details["fallback_used"]:
                # the property holds, but only via a bid outside the construction
                fallback.append((tfm.value, seed, rep.details["fallback_used"]))
    sp_checked, sp_bad = 0, []
    for seed in range(40):
        sc = generate_scenario(seed, GeneratorKnobs(tfm=TfmKind.SINGLE_PRIORITIZED, congested=True, with_target=False))
        if sc.params.mu_cost_bp <= 0:
            continue
        rep = check_single_prioritized_unfair(sc)
        sp_checked += 1
        if rep.verdict is not HOLDS:
            sp_bad.append(seed)
    ok = checked >= 50 and not bad and not fallback and sp_checked > 0 and not sp_bad
    say(5, ok, f"{checked} congested scenarios, failures {bad}, construction needed fallback {fallback}; "
               f"{sp_checked} prioritized scenarios, joint inclusion found at {sp_bad}")
    assert ok


def test_criterion_6_z_optimizer(say):
    rng = random.Random(6)
    triples = [(F(1), 4, F(2))]
    while len(triples) < 201:
        r = F(rng.randint(0, 16), 4)
        c = r + F(rng.randint(0, 40), 8)
        triples.append((r, rng.randint(1, 8), c))
    bad = []
    for r, m, c in triples:
        z = optimal_z(c, r, m)
        expected = F(1) if c == r else min((r / m) / (c - r), F(1))
        _, grid_best = z_grid_maximum(z)
        if z.z_star != expected or z.objective < grid_best:
            bad.append((r, m, c))
    worked = optimal_z(2, 1, 4).z_star == F(1, 4)
    ok = not bad and worked
    say(6, ok, f"{len(triples)} triples, mismatches {bad}, worked instance z0=1/4: {worked}")
    assert ok


def test_criterion_7_simplified(say):
    start = time.perf_counter()
    rng = random.Random(7)
    bad, perturbed = [], {True: 0, False: 0}
    for i in range(240):
        sc = random_simplified(rng, conditional=i % 2 == 0)
        rep = verify_simplified_by_enumeration(sc)
        perturbed[sc.conditional] += len(rep.details["perturbations"])
        if rep.verdict is not HOLDS:
            bad.append((i, rep.details.get("mismatches")))
    elapsed = time.perf_counter() - start
    ok = not bad and all(perturbed.values()) and elapsed < 300
    say(7, ok, f"240 scenarios, mismatches {bad}, perturbations conditional={perturbed[True]} "
               f"unconditional={perturbed[False]}, {elapsed:.1f}s")
    assert ok


def test_criterion_8_determinism(say):
    variants = (GeneratorKnobs(), GeneratorKnobs(tfm=TfmKind.SINGLE_PRIORITIZED), GeneratorKnobs(with_target=False))
    not_fixed = []
    for knobs in variants:
        for seed in range(40):
            text = render_scenario(generate_scenario(seed, knobs))
            if render_scenario(parse_scenario(text)) != text or render_scenario(generate_scenario(seed, knobs)) != text:
                not_fixed.append(seed)
    differs = []
    for seed in (2, 3, 5):
        text = render_scenario(generate_scenario(seed))
        a = render_report(run_checks(text, ["mbbn", "mcbn", "censorship", "fair"])[0], None)
        b = render_report(run_checks(text, ["mbbn", "mcbn", "censorship", "fair"])[0], None)
        if a != b:
            differs.append(seed)
    ok = not not_fixed and not differs
    say(8, ok, f"{3 * 40} scenarios round-tripped, fixpoint failures {not_fixed}, report differences {differs}")
    assert ok
