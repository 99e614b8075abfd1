"""Acceptance criteria; each test records one PASS/FAIL line shown in the terminal summary."""

from __future__ import annotations

import json
import time

import numpy as np
import pytest

from bellrand import cli, sdp
from bellrand.npa import chsh_coefficients, max_bell_value
from bellrand.quantum import assemblage_of, singlet_with_visibility
from bellrand.randomness import (
    GuessingProblem,
    Settings,
    certified_bits_with_error,
    di_guessing_probability,
    evaluate_certificate,
    settings_randomness,
)
from bellrand.scenario import Behavior, Scenario, check_no_signaling, from_collins_gisin, to_collins_gisin
from bellrand.statistics import frequencies, sample_counts, split_seeds
from bellrand.steering import SteeringProblem, steering_guessing_probability
from conftest import ACCEPTANCE, POVM_INPUT, V_EXP
from randgen import random_measurement, random_quantum_behavior, random_state
from test_sdp import correlation, trivial, two_blocks

TRINE_SCENARIO = Scenario((2, 2, 2, 3), (2, 2, 2))


def record(n: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {n}: {text}"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


def _cli(capsys, *argv) -> dict:
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    assert code == 0, err
    return json.loads(out)


@pytest.fixture(scope="module")
def reports():
    """CLI reports shared by criteria 3 to 5, filled on first use."""
    return {}


def _report(reports, capsys, key, *argv) -> dict:
    if key not in reports:
        reports[key] = _cli(capsys, *argv)
    return reports[key]


def test_criterion_01_povm_construction(capsys):
    t0 = time.perf_counter()
    doc = _cli(capsys, "verify-povm")
    dt = time.perf_counter() - t0
    ok = doc["max_deviation_from_trine"] <= 1e-10 and doc["max_amplitude_deviation"] <= 1e-10 and dt < 1.0
    record(
        1,
        ok,
        f"trine deviation {doc['max_deviation_from_trine']:.1e}, amplitude deviation "
        f"{doc['max_amplitude_deviation']:.1e} (<= 1e-10), {dt:.2f} s (< 1 s)",
    )


def test_criterion_02_projective_ceiling():
    t0 = time.perf_counter()
    r = settings_randomness(1.0, Settings.chained(3, False), 0, level=2)
    dt = time.perf_counter() - t0
    ok = 0.99 <= r.bits <= 1.0 + 1e-6 and dt < 30.0
    record(2, ok, f"ideal projective R = {r.bits:.6f} in [0.99, 1 + 1e-6], {dt:.1f} s (< 30 s)")


def test_criterion_03_povm_advantage(reports, capsys):
    doc = _report(reports, capsys, "povm", "certify-di", "--visibility", str(V_EXP), "--target-input", "4")
    r = doc["bits"]
    primary = 1.10 <= r <= 1.26
    fallback = 1.03 <= r <= 1.33
    note = "" if primary else " (outside [1.10, 1.26]; fallback window)"
    record(3, primary or fallback, f"POVM R = {r:.4f} in [1.10, 1.26]{note}, report x* = {doc['target_input']}")


def test_criterion_04_projective_baseline(reports, capsys):
    doc = _report(reports, capsys, "proj", "certify-di", "--visibility", str(V_EXP), "--projective-only", "--target-input", "1")
    r = doc["bits"]
    record(4, 0.85 <= r <= 1.01, f"projective R = {r:.4f} in [0.85, 1.01]")


def test_criterion_05_relative_gain(reports, capsys):
    povm = _report(reports, capsys, "povm", "certify-di", "--visibility", str(V_EXP), "--target-input", "4")
    proj = _report(
        reports, capsys, "proj", "certify-di", "--visibility", str(V_EXP), "--projective-only", "--target-input", "1"
    )
    gain = povm["bits"] / proj["bits"] - 1
    record(5, gain >= 0.15, f"R_povm / R_proj - 1 = {gain:.3f} (>= 0.15)")


def test_criterion_06_steering(di_povm_exp, assemblage_exp):
    r = steering_guessing_probability(SteeringProblem(assemblage_exp, POVM_INPUT))
    ok = 1.13 <= r.bits <= 1.41 and r.bits >= di_povm_exp.bits - 1e-6
    record(6, ok, f"steering R = {r.bits:.4f} in [1.13, 1.41], DI R on the same state = {di_povm_exp.bits:.4f}")


def test_criterion_07_locality_zero():
    s = Settings.chained(3, True)
    di = settings_randomness(0.0, s, POVM_INPUT)
    alice, _ = s.measurements()
    st = steering_guessing_probability(SteeringProblem(assemblage_of(singlet_with_visibility(0.0), alice), POVM_INPUT))
    ok = all(abs(r.p_guess - 1.0) <= 1e-6 and abs(r.bits) <= 1e-6 for r in (di, st))
    record(7, ok, f"v = 0: p_guess DI {di.p_guess:.9f}, steering {st.p_guess:.9f}")


def test_criterion_08_solver_oracle():
    chsh = max_bell_value(Scenario((2, 2), (2, 2)), chsh_coefficients(), level=1)
    micro = {
        "trivial": (trivial(), 0.7),
        "correlation": (correlation(), 2.0),
        "two_blocks": (two_blocks(), 3.0),
    }
    errs = {}
    for name, (p, want) in micro.items():
        s = sdp.solve(p, gap_tol=1e-9)
        errs[name] = max(abs(s.primal_obj - want), abs(s.dual_obj - want)) if s.optimal else np.inf
    ok = abs(chsh - 2 * np.sqrt(2)) <= 1e-6 and max(errs.values()) <= 1e-8
    worst = max(errs.values())
    record(8, ok, f"CHSH level 1 = {chsh:.9f} (2 sqrt 2 +- 1e-6), micro-SDP max error {worst:.1e} (<= 1e-8)")


def _random_no_signaling(rng) -> Behavior:
    """Mixture of a quantum behavior, a deterministic local strategy and white noise."""
    q = random_quantum_behavior(rng, TRINE_SCENARIO.alice_outcomes, TRINE_SCENARIO.bob_outcomes).table
    det = np.zeros(TRINE_SCENARIO.shape)
    a = [rng.integers(k) for k in TRINE_SCENARIO.alice_outcomes]
    b = [rng.integers(k) for k in TRINE_SCENARIO.bob_outcomes]
    noise = np.zeros(TRINE_SCENARIO.shape)
    for x, y, i, j in TRINE_SCENARIO.cells():
        det[x, y, i, j] = float(i == a[x] and j == b[y])
        noise[x, y, i, j] = 1.0 / (TRINE_SCENARIO.alice_outcomes[x] * TRINE_SCENARIO.bob_outcomes[y])
    w = rng.dirichlet(np.ones(3))
    return Behavior(TRINE_SCENARIO, w[0] * q + w[1] * det + w[2] * noise)


def test_criterion_09_regularization():
    rng = np.random.default_rng(91)
    worst_trip, worst_ns = 0.0, 0.0
    for _ in range(100):
        b = _random_no_signaling(rng)
        back = from_collins_gisin(to_collins_gisin(b))
        worst_trip = max(worst_trip, float(np.abs(back.table - b.table).max()))
        rep = check_no_signaling(back, 1e-12)
        worst_ns = max(worst_ns, rep.bob_to_alice, rep.alice_to_bob)
    ok = worst_trip <= 1e-12 and worst_ns <= 1e-12
    record(9, ok, f"CG round trip max error {worst_trip:.1e}, no-signaling residual {worst_ns:.1e} (<= 1e-12)")


def test_criterion_10_finite_statistics(behavior_exp, di_povm_exp):
    cert = di_povm_exp.certificate
    within, sig = 0, []
    for seed in split_seeds(10, 100):
        r = certified_bits_with_error(cert, frequencies(sample_counts(behavior_exp, 100_000, seed)))
        within += abs(r.bits - di_povm_exp.bits) <= 3 * r.sigma_bits
        sig.append(r.sigma_bits)
    med = float(np.median(sig))
    # "order 1e-2" pinned as [1e-3, 1e-1)
    scale_ok = 1e-3 <= med < 1e-1
    record(
        10,
        within >= 95 and scale_ok,
        f"{within}/100 seeds within 3 sigma (>= 95); median sigma_bits {med:.3f} (order 1e-2 means [0.001, 0.1))",
    )


def test_criterion_11_properties(behavior_exp_proj, di_proj_exp):
    t0 = time.perf_counter()
    small = ((3, 2), (2, 2))
    rng = np.random.default_rng(111)
    checks = {}

    # hierarchy: level 1 relaxes level 2
    pairs = [(di_guessing_probability(GuessingProblem.from_behavior(behavior_exp_proj, 0, 1)).p_guess, di_proj_exp.p_guess)]
    for _ in range(5):
        b = random_quantum_behavior(rng, *small, rank=1)
        pairs.append(
            tuple(di_guessing_probability(GuessingProblem.from_behavior(b, 0, lv)).p_guess for lv in (1, 2))
        )
    checks["hierarchy"] = all(p1 >= p2 - 1e-6 for p1, p2 in pairs)

    # visibility: R non-decreasing in v
    grid = (0.0, 0.6, 0.8, 0.9, 0.997, 1.0)
    alice, _ = Settings.chained(3, True).measurements()
    curves = [
        [settings_randomness(v, Settings.chained(3, False), 0).bits for v in grid],
        [settings_randomness(v, Settings.chained(3, True), POVM_INPUT).bits for v in grid],
        [
            steering_guessing_probability(SteeringProblem(assemblage_of(singlet_with_visibility(v), alice), POVM_INPUT)).bits
            for v in grid
        ],
    ]
    checks["visibility"] = all(b2 >= b1 - 1e-6 for c in curves for b1, b2 in zip(c, c[1:]))

    # soundness: one certificate bounds 50 other quantum behaviors
    source = random_quantum_behavior(rng, *small, rank=1)
    cert = di_guessing_probability(GuessingProblem.from_behavior(source, 0)).certificate
    sound = True
    sandwich = True
    for _ in range(50):
        b = random_quantum_behavior(rng, *small)
        p = di_guessing_probability(GuessingProblem.from_behavior(b, 0)).p_guess
        sound &= evaluate_certificate(cert, b) >= p - 1e-6
        sandwich &= b.alice_marginal(0, 0).max() - 1e-9 <= p <= 1.0
    checks["soundness"] = bool(sound)

    # sandwich for steering as well
    for _ in range(10):
        rho = random_state(rng)
        meas = [random_measurement(rng, 3), random_measurement(rng, 2)]
        asm = assemblage_of(rho, meas)
        p = steering_guessing_probability(SteeringProblem(asm, 0)).p_guess
        sandwich &= asm.marginals()[0].max() - 1e-9 <= p <= 1.0
    checks["sandwich"] = bool(sandwich)

    dt = time.perf_counter() - t0
    summary = ", ".join(f"{k} {'ok' if v else 'violated'}" for k, v in checks.items())
    record(11, all(checks.values()), f"{summary} ({dt:.0f} s)")
