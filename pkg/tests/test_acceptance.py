"""Acceptance suite: one test and one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -v``; the lines are repeated in the
terminal summary. Reference values are either closed forms or come from the
independent routes in ``oracles.py``.
"""

import math
import time

import numpy as np
import pytest

import oracles
from steerkit import criteria as cr
from steerkit import incompatibility as inc
from steerkit import radius, sdp, states
from steerkit.operators import (
    MeasurementSet,
    assemblage_from_state,
    dichotomic_povm,
    pauli_measurements,
    swap_parties,
    trace_distance,
)

# frozen from oracles.lp_grid_singlet_xz with 10**4 hidden states
WEIGHT_BASELINE = 1.0
ROBUSTNESS_BASELINE = 0.17157287525380527


def random_projective(rng, d, m):
    obs = []
    for _ in range(m):
        u = states.random_unitary(d, rng)
        obs.append(u @ np.diag(np.arange(d, dtype=float)) @ u.conj().T)
    return MeasurementSet.from_observables(obs)


def random_pair(rng, biased):
    biases = rng.uniform(-1, 1, 2) if biased else np.zeros(2)
    vecs = []
    for b in biases:
        v = rng.standard_normal(3)
        vecs.append(v / np.linalg.norm(v) * rng.uniform(0, 1 - abs(b)))
    return inc.QubitDichotomicPair(tuple(biases), np.stack(vecs))


@pytest.fixture(scope="module")
def random_instances():
    # ranks 1..4 in turn; full-rank random states are rarely steerable
    rng = np.random.default_rng(4)
    return [
        assemblage_from_state(states.random_density_matrix(4, rng, 1 + k % 4), random_projective(rng, 2, 2 + k % 2))
        for k in range(200)
    ]


def test_criterion_01_three_pauli_threshold(acceptance, singlet):
    start = time.perf_counter()
    alpha = sdp.critical_alpha(singlet, pauli_measurements("xyz"), tol=1e-5, method="bisection")
    elapsed = time.perf_counter() - start
    ok = abs(alpha - 1 / math.sqrt(3)) <= 1e-4 and elapsed < 10
    assert acceptance(1, ok, f"critical alpha {alpha:.6f} vs 0.577350 in {elapsed:.2f} s")


def test_criterion_02_two_pauli_threshold(acceptance, singlet):
    start = time.perf_counter()
    alpha = sdp.critical_alpha(singlet, pauli_measurements("xz"))
    elapsed = time.perf_counter() - start
    ok = abs(alpha - 1 / math.sqrt(2)) <= 1e-4 and elapsed < 5
    assert acceptance(2, ok, f"critical alpha {alpha:.6f} vs 0.707107 in {elapsed:.2f} s")


def test_criterion_03_joint_measurability(acceptance):
    eta = inc.white_noise_threshold(pauli_measurements("xz"))
    rng = np.random.default_rng(3)
    disagreements = {False: 0, True: 0}
    banded = 0
    for biased in (False, True):
        for _ in range(1000):
            pair = random_pair(rng, biased)
            margin = inc.qubit_pair_margin(pair)
            if abs(margin) < 1e-6:
                banded += 1
                continue
            jm = inc.is_jointly_measurable(pair.measurements())
            disagreements[biased] += (margin >= 0) != jm.jointly_measurable
    ok = abs(eta - 1 / math.sqrt(2)) <= 1e-6 and not any(disagreements.values())
    detail = (
        f"threshold {eta:.9f}; disagreements unbiased {disagreements[False]}/1000, "
        f"biased {disagreements[True]}/1000 ({banded} in band)"
    )
    assert acceptance(3, ok, detail)


def test_criterion_04_steering_incompatibility_equivalence(acceptance, random_instances):
    disagreements = 0
    steerable = 0
    for asm in random_instances:
        v = sdp.lhs_feasibility(asm)
        jm = inc.is_jointly_measurable(inc.normalize_assemblage(asm))
        steerable += v.steerable
        disagreements += v.steerable == jm.jointly_measurable
    ok = disagreements == 0
    assert acceptance(4, ok, f"{disagreements} disagreements on 200 instances ({steerable} steerable)")


def test_criterion_05_strong_duality(acceptance, random_instances, singlet):
    members = [asm.members for asm in random_instances]
    members += [inc.normalize_assemblage(asm).effects for asm in random_instances[:50]]
    members.append(assemblage_from_state(singlet, radius.DirectionSet.from_scheme("dodeca-icosa15").measurements()).members)
    worst_gap, worst_eig = 0.0, 0.0
    for mem in members:
        mu, _, _ = sdp.decomposition_margin(mem)
        coeffs, value, _ = sdp.decomposition_dual(mem)
        m, q = coeffs.shape[:2]
        ineq = sdp.SteeringInequality(sdp.enumerate_strategies(m, q), coeffs)
        worst_gap = max(worst_gap, abs(mu - value))
        worst_eig = min(worst_eig, ineq.min_eigenvalue())
    ok = worst_gap <= 1e-6 and worst_eig >= -1e-8
    assert acceptance(5, ok, f"{len(members)} instances; max gap {worst_gap:.2e}, min certificate eigenvalue {worst_eig:.2e}")


def test_criterion_06_tstate_closed_form(acceptance):
    errors = [abs(radius.tstate_critical_radius(-eta * np.eye(3), n=10**4) - 1 / (2 * eta)) for eta in (0.3, 0.5, 0.8)]
    rng = np.random.default_rng(6)
    scaling = 0.0
    for _ in range(10):
        q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        T = q @ np.diag(rng.uniform(0.1, 1, 3))
        for a in (0.5, 2.0, 3.0):
            scaling = max(scaling, abs(radius.tstate_critical_radius(a * T) - radius.tstate_critical_radius(T) / a))
    ok = max(errors) <= 1e-3 and scaling <= 1e-6
    assert acceptance(6, ok, f"max closed-form error {max(errors):.1e}; max scaling error {scaling:.1e}")


def test_criterion_07_radius_bracket(acceptance, singlet):
    icosa = radius.DirectionSet.from_scheme("icosa6")
    fifteen = radius.DirectionSet.from_scheme("dodeca-icosa15")
    b6 = radius.radius_bracket(singlet, icosa)
    b15 = radius.radius_bracket(singlet, fifteen)
    rng = np.random.default_rng(7)
    contradictions = 0
    verdicts = []
    for _ in range(20):
        p = rng.uniform(0.3, 1.0)
        rho = p * states.random_density_matrix(4, rng, 1) + (1 - p) * np.eye(4) / 4
        for dirs in (icosa, fifteen):
            verdict = radius.radius_bracket(rho, dirs).verdict()
            sdp_verdict = sdp.lhs_feasibility(assemblage_from_state(rho, dirs.measurements())).status
            verdicts.append(verdict)
            contradictions += (verdict, sdp_verdict) in (("steerable", "unsteerable"), ("unsteerable", "steerable"))
    ok = b6.contains(0.5) and b15.width < b6.width and contradictions == 0
    detail = (
        f"icosa6 [{b6.lower:.4f}, {b6.upper:.4f}], dodeca-icosa-15 [{b15.lower:.4f}, {b15.upper:.4f}]; "
        f"{contradictions} contradictions over 40 brackets ({verdicts.count('steerable')} steerable, "
        f"{verdicts.count('unsteerable')} unsteerable)"
    )
    assert acceptance(7, ok, detail)


@pytest.mark.xfail(
    strict=True,
    reason="the listed 0.73434 is not the value of the closed form at d = 3, which is 0.7340137",
)
def test_criterion_08_thresholds_table(acceptance):
    q = lambda f, c, d: states.threshold(states.ThresholdQuery(f, c, d))
    table = [
        ("werner proj d=2", q("werner", "projective", 2), 0.5, 1e-12),
        ("werner proj d=3", q("werner", "projective", 3), 2 / 3, 1e-12),
        ("isotropic proj d=3", q("isotropic", "projective", 3), 5 / 12, 1e-12),
        ("barrett-werner d=2", q("werner", "povm-barrett", 2), 5 / 12, 1e-12),
        ("werner dichotomic d=3", q("werner", "dichotomic", 3), 0.73434, 1e-5),
        ("isotropic dichotomic d=3", q("isotropic", "dichotomic", 3), 1 - 3**-0.5, 1e-12),
    ]
    misses = [f"{name}: {got:.7f} vs {want}" for name, got, want, tol in table if abs(got - want) > tol]
    assert acceptance(8, not misses, "; ".join(misses) or "all six values reproduced")


def test_criterion_08_formula_values():
    # the reproducible part of the table: every closed form against 40-digit evaluation
    q = lambda f, c, d: states.threshold(states.ThresholdQuery(f, c, d))
    assert q("werner", "dichotomic", 3) == pytest.approx(4 * (1 - math.sqrt(2 / 3)), abs=1e-15)
    assert q("werner", "dichotomic", 3) == pytest.approx(0.7340137, abs=1e-7)
    for fam, cls in [("werner", "projective"), ("isotropic", "projective"), ("werner", "povm-barrett"), ("isotropic", "dichotomic")]:
        for d in (2, 3):
            assert q(fam, cls, d) == pytest.approx(oracles.threshold_exact(fam, cls, d), abs=1e-15)


def test_criterion_09_lhs_simulators(acceptance):
    rng = np.random.default_rng(9)

    def distance(sim, exact):
        a = sim.assemblage.members.reshape(-1, sim.assemblage.dim, sim.assemblage.dim)
        b = exact.members.reshape(-1, exact.dim, exact.dim)
        return max(trace_distance(x, y) for x, y in zip(a, b))

    results = {}
    for d in (2, 3):
        ms = random_projective(rng, d, 10)
        eta = states.threshold(states.ThresholdQuery("werner", "projective", d))
        sim = states.lhs_simulate("werner-projective", d, eta, ms, n=10**5)
        results[f"werner-projective d={d}"] = distance(sim, assemblage_from_state(states.werner(d, eta), ms))
    povms = []
    for _ in range(100):
        n = rng.standard_normal(3)
        bias = rng.uniform(-0.5, 0.5)
        povms.append(dichotomic_povm(n / np.linalg.norm(n), bias=bias, length=rng.uniform(0, 1 - abs(bias))))
    ms = MeasurementSet.from_povms(povms)
    eta = states.threshold(states.ThresholdQuery("werner", "povm-barrett", 2))
    sim = states.lhs_simulate("barrett-werner", 2, eta, ms, n=10**5)
    results["barrett-werner d=2"] = distance(sim, assemblage_from_state(states.werner(2, eta), ms))
    ok = max(results.values()) <= 1e-2
    assert acceptance(9, ok, "; ".join(f"{k}: {v:.1e}" for k, v in results.items()))


def test_criterion_10_criteria_battery(acceptance, singlet):
    res = {r.name: r for r in cr.pauli_battery(singlet)}
    expected = {"linear": 3, "three-pauli": 3, "chsh": 2 * math.sqrt(2), "entropic": 0, "ccnr": 2, "lur": 0}
    ok = all(res[k].violated and abs(res[k].value - v) < 1e-9 for k, v in expected.items())
    detail = ", ".join(f"{k} {res[k].value:.4f} vs {res[k].bound:.4f}" for k in expected)
    assert acceptance(10, ok, detail)


def test_criterion_11_gaussian(acceptance):
    both_ways = all(
        cr.gaussian_steering(cr.two_mode_squeezed_vacuum(r), d).steerable for r in (0.1, 0.5, 1.0) for d in ("A->B", "B->A")
    )
    vacuum_free = not any(cr.gaussian_steering(cr.vacuum(), d).steerable for d in ("A->B", "B->A"))
    symmetric = True
    for r in (0.1, 0.5, 1.0):
        for noise in (1.0, 1.5):
            v = cr.two_mode_squeezed_vacuum(r).V * noise
            gc = cr.GaussianCovariance((1, 1), v)
            symmetric &= cr.gaussian_steering(gc).steerable == cr.gaussian_steering(gc.swapped()).steerable
    ok = both_ways and vacuum_free and symmetric
    assert acceptance(11, ok, f"TMSV both ways {both_ways}; vacuum unsteerable {vacuum_free}; swap symmetric {symmetric}")


def test_criterion_12_one_way_consistency(acceptance):
    rho = states.one_way_state(0.6, math.radians(10))
    ms = radius.DirectionSet.from_scheme("icosa6").measurements()
    forward = sdp.lhs_feasibility(assemblage_from_state(rho, ms, (2, 2)))
    backward = sdp.lhs_feasibility(assemblage_from_state(swap_parties(rho, (2, 2)), ms, (2, 2)))
    model = states.one_way_reverse_unsteerable(0.6, math.radians(10))
    ok = forward.steerable and not backward.steerable
    detail = f"A->B {forward.status} (mu {forward.mu:.2e}); B->A {backward.status} (mu {backward.mu:.2e}); reverse model exists {model}"
    assert acceptance(12, ok, detail)


def test_criterion_13_oracle_regression(acceptance, singlet):
    asm = assemblage_from_state(singlet, pauli_measurements("xz"))
    weight = sdp.steering_weight(asm).weight
    robust = sdp.steering_robustness(asm).robustness
    lp_weight = oracles.lp_grid_singlet_xz("weight", n_states=10**4)
    lp_robust = oracles.lp_grid_singlet_xz("robustness", n_states=10**4)
    ok = (
        abs(weight - lp_weight) <= 1e-3
        and abs(robust - lp_robust) <= 1e-3
        and abs(weight - WEIGHT_BASELINE) <= 1e-6
        and abs(robust - ROBUSTNESS_BASELINE) <= 1e-6
    )
    detail = f"weight {weight:.6f} vs LP {lp_weight:.6f}; robustness {robust:.6f} vs LP {lp_robust:.6f}"
    assert acceptance(13, ok, detail)
