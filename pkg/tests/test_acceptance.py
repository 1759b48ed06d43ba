"""Acceptance criteria 1-8, each reported as one PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from avrfopid.avrloop import AvrModel, gpm_metrics, sensitivity_set
from avrfopid.fracops import OustaloupConfig, oustaloup
from avrfopid.moo import (
    MooConfig,
    best_compromise,
    crowding_distance,
    hypervolume,
    nondominated_sort,
    nsga2_run,
)
from avrfopid.objectives import case_spec, margin_objectives
from avrfopid.ratfun import FactoredTF, RationalTF
from avrfopid.sysnorms import h2_norm_lyapunov, h2_norm_quadrature, hinf_norm
from avrfopid.table1 import compare_rows, get_rows

from test_avrloop import random_loop
from test_moo import brute_force_fronts
from test_ratfun import stable_tf

CALIBRATED = AvrModel(ka=170.0)


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, elapsed):
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f} s) {detail}")

    return emit


def rel(a, b):
    return abs(a - b) / abs(b)


def test_criterion_1_norm_oracles(report):
    t0 = time.perf_counter()
    errs = []
    first = RationalTF([1.0], [1.0, 1.0])
    two = RationalTF([1.0], [2.0, 3.0, 1.0])
    res = RationalTF([1.0], [1.0, 1.0, 1.0])  # zeta = 0.5
    errs.append(rel(hinf_norm(first), 1.0))
    for h2 in (h2_norm_quadrature, h2_norm_lyapunov):
        errs.append(rel(h2(first), math.sqrt(0.5)))
        errs.append(rel(h2(two), math.sqrt(1 / 12)))
    errs.append(rel(hinf_norm(res), 2 / math.sqrt(3)))
    rng = np.random.default_rng(2024)
    for _ in range(50):
        h = stable_tf(rng, int(rng.integers(1, 7))).to_rational()
        errs.append(rel(h2_norm_quadrature(h), h2_norm_lyapunov(h)))
    worst = max(errs)
    ok = worst < 1e-6
    report(1, ok, f"worst relative error {worst:.2e} over {len(errs)} checks", time.perf_counter() - t0)
    assert ok


def test_criterion_2_ora_fidelity(report):
    t0 = time.perf_counter()
    cfg = OustaloupConfig(half_order=2)
    w = np.logspace(-2, 2, 401)
    slope_err, phase_err = [], []
    for a in (0.25, 0.5, 0.75):
        resp = oustaloup(a, cfg).freqresp(w)
        slope = np.polyfit(np.log10(w), 20 * np.log10(np.abs(resp)), 1)[0]
        slope_err.append(abs(slope - 20 * a))
        phase_err.append(np.max(np.abs(np.degrees(np.angle(resp)) - 90 * a)))
    ok = max(slope_err) < 1.0 and max(phase_err) <= 5.0
    detail = (
        f"slope error max {max(slope_err):.3f} dB/dec (bound 1); "
        f"phase error max {max(phase_err):.2f} deg (bound 5) at N=2"
    )
    report(2, ok, detail, time.perf_counter() - t0)
    assert ok


def test_criterion_3_loop_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(99)
    m = AvrModel()
    w = np.logspace(-4, 4, 81)
    g, h = m.plant_factored().freqresp(w), m.sensor_factored().freqresp(w)
    worst_t = worst_s = 0.0
    for _ in range(100):
        loop = random_loop(rng, m)
        c = loop.controller.freqresp(w)
        original = c * g / (1 + c * g * h)
        unity = loop.sens.T.freqresp(w)
        worst_t = max(worst_t, np.max(np.abs(unity - original) / np.abs(original)))
        worst_s = max(worst_s, np.max(np.abs(loop.sens.S.freqresp(w) + unity - 1)))
    ok = worst_t < 1e-9 and worst_s < 1e-9
    report(3, ok, f"loop map error {worst_t:.1e}, |S+T-1| {worst_s:.1e} over 100 controllers", time.perf_counter() - t0)
    assert ok


def test_criterion_4_table_reproduction(report):
    t0 = time.perf_counter()
    rows = get_rows(range(1, 7))
    calibrated = compare_rows(rows, CALIBRATED, tol=0.05)
    benchmark = compare_rows(rows, AvrModel(), tol=0.05)
    n_cal = sum(c.passed for c in calibrated)
    n_bench = sum(c.passed for c in benchmark)
    worst = max(calibrated, key=lambda c: c.rel_error)
    ok = n_cal == len(calibrated)
    detail = (
        f"calibrated plant (ka=170): {n_cal}/{len(calibrated)} within 5%, worst "
        f"case {worst.case_id} {worst.structure} {worst.objective} {worst.rel_error:.3f}; "
        f"benchmark plant (ka=10): {n_bench}/{len(benchmark)}, systematic mismatch documented"
    )
    report(4, ok, detail, time.perf_counter() - t0)
    assert ok


def test_criterion_5_nsga2_correctness(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    sort_ok = True
    for _ in range(200):
        n, m = int(rng.integers(1, 101)), int(rng.integers(1, 5))
        F = rng.integers(0, 8, size=(n, m)).astype(float)
        sort_ok &= [sorted(f) for f in nondominated_sort(F)] == brute_force_fronts(F)
    d = crowding_distance(rng.random((10, 3)))
    crowd_ok = np.isinf(d).sum() >= 2 and bool(np.all(d >= 0))
    d = crowding_distance([(0, 2), (1, 1), (2, 0)])
    crowd_ok &= math.isinf(d[0]) and math.isinf(d[2]) and d[1] == 2.0
    spec = case_spec(2, "fopid4")
    cfg = dict(population=16, generations=5, seed=11)
    a = nsga2_run(spec, MooConfig(**cfg, workers=1), CALIBRATED)
    b = nsga2_run(spec, MooConfig(**cfg, workers=8), CALIBRATED)
    det_ok = [(i.genome, i.objectives) for i in a] == [(i.genome, i.objectives) for i in b]
    ok = sort_ok and crowd_ok and det_ok
    detail = f"sort oracle {sort_ok}, crowding rule {crowd_ok}, 1 vs 8 workers identical {det_ok}"
    report(5, ok, detail, time.perf_counter() - t0)
    assert ok


def test_criterion_6_fuzzy_selector(report):
    t0 = time.perf_counter()
    rep = best_compromise([(0.0, 0.2), (0.8, 0.7), (1.0, 1.0), (1.0, 0.0)])
    hand_ok = rep.memberships[0].tolist() == [1.0, 0.8] and rep.selected == 0
    mu = np.array([[1.0, 0.8], [0.2, 0.3]]).sum(axis=1)
    hand_ok &= (mu / mu.sum())[0] == 1.8 / 2.3
    sym = best_compromise([(0.0, 1.0), (1.0, 0.0)])
    hand_ok &= sym.satisfaction.tolist() == [0.5, 0.5] and sym.selected == 0
    hand_ok &= best_compromise([(2.0, 3.0)]).satisfaction.tolist() == [1.0]
    rng = np.random.default_rng(6)
    sum_err, invariant = 0.0, True
    for _ in range(200):
        F = rng.random((int(rng.integers(1, 50)), int(rng.integers(1, 4))))
        r = best_compromise(F)
        sum_err = max(sum_err, abs(r.satisfaction.sum() - 1))
        G = F.copy()
        col = int(rng.integers(F.shape[1]))
        G[:, col] = rng.uniform(0.1, 100) * G[:, col] + rng.uniform(-10, 10)
        invariant &= best_compromise(G).selected == r.selected
    ok = hand_ok and sum_err < 1e-12 and invariant
    detail = f"hand examples {hand_ok}, max |sum-1| {sum_err:.1e}, affine invariance {invariant}"
    report(6, ok, detail, time.perf_counter() - t0)
    assert ok


@pytest.mark.slow
def test_criterion_7_fopid4_dominates_pid(report):
    t0 = time.perf_counter()
    hv = {"pid": [], "fopid4": []}
    for seed in range(5):
        cfg = MooConfig(population=40, generations=60, seed=seed)
        fronts = {}
        for regime in ("pid", "fopid2", "fopid4"):
            front = nsga2_run(case_spec(2, regime), cfg, CALIBRATED)
            fronts[regime] = np.array([i.objectives.values for i in front if i.objectives.feasible])
        ref = 1.1 * np.max(np.vstack(list(fronts.values())), axis=0)
        for regime in hv:
            hv[regime].append(hypervolume(fronts[regime], ref))
    med = {k: float(np.median(v)) for k, v in hv.items()}
    ok = med["fopid4"] > med["pid"]
    detail = f"median hypervolume FOPID4 {med['fopid4']:.3f} vs PID {med['pid']:.3f} (case 2, 5 seeds)"
    report(7, ok, detail, time.perf_counter() - t0)
    assert ok


def test_criterion_8_margins(report):
    t0 = time.perf_counter()
    errs, angle = [], []
    m = gpm_metrics(RationalTF([1.0], [0.0, 1.0]))
    errs.append(rel(m.gain_crossover, 1.0))
    angle.append(abs(math.degrees(m.phase_margin) - 90.0))
    m = gpm_metrics(FactoredTF(8.0, (), (-1.0,) * 3))
    errs += [rel(m.phase_crossover, math.sqrt(3)), rel(m.gain_margin, 1.0)]
    angle.append(abs(math.degrees(m.phase_margin)))
    m = gpm_metrics(FactoredTF(4.0, (), (-1.0,) * 3))
    wgc = math.sqrt(4 ** (2 / 3) - 1)
    errs += [rel(m.gain_crossover, wgc), rel(m.gain_margin, 2.0), rel(m.phase_crossover, math.sqrt(3))]
    angle.append(abs(math.degrees(m.phase_margin) - (180 - 3 * math.degrees(math.atan(wgc)))))
    one = RationalTF.constant(1.0)
    sens = sensitivity_set(RationalTF([1.0], [0.0, 1.0]), one, one)
    gated = margin_objectives(case_spec(11), sens) is None
    ok = max(errs) < 1e-4 and max(angle) < 0.05 and gated
    detail = f"worst relative error {max(errs):.1e}, worst angle {max(angle):.1e} deg, no-crossover loop rejected {gated}"
    report(8, ok, detail, time.perf_counter() - t0)
    assert ok

