"""Acceptance suite: one test per published criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
complete.  Every tolerance is pinned here; seeds are fixed so each statistical
check is a frozen, reproducible draw.
"""

import math
import time

import numpy as np
import pytest

from knudsen_billiard import rng
from knudsen_billiard.core_map import (
    BRANCHES,
    MapParams,
    conjugate_index,
    prob_all,
    tau,
)
from knudsen_billiard.measures import (
    AtomicMeasure,
    ParticleEnsemble,
    atomize_density,
    binned_histogram,
    cesaro,
    distance_to_mu,
    ensemble_step,
    evolve,
    mu_bin_masses,
    mu_cdf,
    uniform_density,
)
from knudsen_billiard.oracle import (
    CellGeometry,
    liouville_pushforward_check,
    validate_m1_m2,
    validation_grid,
)
from knudsen_billiard.skew import enumerate_fibers, skew_step_many, theorem1_check

import reference

PI = math.pi
ALPHA = 0.5
SEED = 0


def _report(num: int, name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {num} [{name}]: {'PASS' if ok else 'FAIL'}  ({detail})")
    assert ok, f"criterion {num} ({name}) failed: {detail}"


def test_criterion_1_ensemble_reproduction():
    # 30000 particles, 45 bins, uniform start, 200 steps:
    # KS to the sine law < 0.02, max per-bin deviation < 0.005, under 10 s
    params = MapParams(ALPHA)
    t0 = time.perf_counter()
    nu0 = atomize_density(uniform_density, bins=45)
    ens = ParticleEnsemble.from_measure(nu0, 30000, seed=SEED)
    for _ in range(200):
        ens = ensemble_step(ens, params)
    hist = binned_histogram(ens, 45)
    _, ks = distance_to_mu(hist)
    elapsed = time.perf_counter() - t0
    max_dev = float(np.abs(hist.masses - mu_bin_masses(45)).max())
    ok = ks < 0.02 and max_dev < 0.005 and elapsed < 10.0
    _report(
        1,
        "ensemble reproduction",
        ok,
        f"ks={ks:.5f}<0.02, max_bin_dev={max_dev:.5f}<0.005, {elapsed:.2f}s<10s",
    )


def test_criterion_2_strong_law_trend():
    # exact evolution from the uniform 45-atom start: TV at 200 < 0.02 and
    # below TV at 10, under 5 s
    params = MapParams(ALPHA)
    t0 = time.perf_counter()
    nus = evolve(atomize_density(uniform_density, bins=45), 200, params)
    tv10, _ = distance_to_mu(binned_histogram(nus[10], 45))
    tv200, _ = distance_to_mu(binned_histogram(nus[200], 45))
    elapsed = time.perf_counter() - t0
    ok = tv200 < 0.02 and tv200 < tv10 and elapsed < 5.0
    _report(
        2,
        "strong-law trend",
        ok,
        f"tv200={tv200:.5f}<0.02, tv10={tv10:.5f}, {elapsed:.2f}s<5s",
    )


def test_criterion_3_weak_law():
    # running average over steps 1..200 beats the raw step-10 distribution
    params = MapParams(ALPHA)
    nus = evolve(AtomicMeasure.point(0.2), 200, params)
    _, ks_avg = distance_to_mu(binned_histogram(cesaro(nus[1:]), 45))
    _, ks_10 = distance_to_mu(binned_histogram(nus[10], 45))
    ok = ks_avg < ks_10
    _report(3, "weak-law check", ok, f"ks_cesaro={ks_avg:.5f} < ks_n10={ks_10:.5f}")


def test_criterion_4_branch_table_oracle():
    # 50-point grids, 1e5 entries per point, both alphas: all z < 4 and
    # zero unclassified exits, under 60 s
    t0 = time.perf_counter()
    details = []
    ok = True
    for alpha in (0.3, 0.5):
        geom = CellGeometry(alpha)
        report = validate_m1_m2(validation_grid(alpha, 50), 100_000, SEED, geom)
        details.append(
            f"alpha={alpha}: max_z={report.max_z:.2f}, "
            f"unclassified={report.unclassified_total}"
        )
        ok = ok and report.passed and report.unclassified_total == 0
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    _report(4, "branch-table oracle", ok, "; ".join(details) + f"; {elapsed:.1f}s<60s")


def test_criterion_5_fiber_product_formula():
    # every word up to length 6 (exhaustive, 5460 per point) at 100 base
    # points: cylinder-fibre length equals the probability product to 1e-12
    params = MapParams(ALPHA)
    base_points = np.linspace(0.0, PI, 102)[1:-1]
    worst = 0.0
    words = 0
    for x in base_points:
        for _, interval, product in enumerate_fibers(float(x), 6, params):
            worst = max(worst, abs(interval.length - product))
            words += 1
    ok = worst < 1e-12 and words == 100 * (4 + 16 + 64 + 256 + 1024 + 4096)
    _report(
        5,
        "fibre product formula",
        ok,
        f"max |length-product|={worst:.2e}<1e-12 over {words} words",
    )


def test_criterion_6_kernel_vs_skew():
    # n = 1..8, 16 dyadic intervals, 1e5 samples: exact kernel iteration and
    # the skew Monte Carlo agree within 4 reported standard errors
    params = MapParams(ALPHA)
    nu = atomize_density(uniform_density, bins=45)
    worst = 0.0
    ok = True
    for n in range(1, 9):
        for j in range(16):
            A = (j * PI / 16, (j + 1) * PI / 16)
            res = theorem1_check(nu, A, n, 100_000, SEED, params)
            if res.stderr > 0:
                worst = max(worst, abs(res.exact - res.estimate) / res.stderr)
            ok = ok and res.within(4.0)
    _report(6, "kernel vs skew", ok, f"worst |exact-estimate|/stderr={worst:.2f}<4")


class TestCriterion7InvarianceSuite:
    def test_partition_of_unity(self):
        worst = 0.0
        for alpha in np.linspace(0.02, PI / 6 - 0.01, 10):
            P = prob_all(np.linspace(0.0, PI, 10_000), MapParams(float(alpha)))
            worst = max(worst, float(np.abs(P.sum(axis=0) - 1.0).max()))
        _report(7, "partition of unity", worst < 1e-12, f"max |sum-1|={worst:.2e}<1e-12")

    def test_mu_invariance_of_kernel(self):
        # quadrature oracle over 64 dyadic intervals
        params = MapParams(ALPHA)
        worst = 0.0
        for j in range(64):
            lo, hi = j * PI / 64, (j + 1) * PI / 64
            got = reference.kernel_mass_under_mu(lo, hi, params)
            worst = max(worst, abs(got - (mu_cdf(hi) - mu_cdf(lo))))
        _report(7, "sine-law invariance of K", worst < 1e-8, f"max dev={worst:.2e}<1e-8")

    def test_product_measure_preserved_by_skew_map(self):
        params = MapParams(ALPHA)
        n, bins = 1_000_000, 32
        y = rng.uniforms(SEED, 0, n)
        x = np.arccos(1.0 - 2.0 * rng.uniforms(SEED, 1, n))
        y2, x2 = skew_step_many(y, x, params)
        counts = np.zeros((bins, bins))
        iy = np.minimum((y2 * bins).astype(int), bins - 1)
        ix = np.minimum((x2 / PI * bins).astype(int), bins - 1)
        np.add.at(counts, (iy, ix), 1)
        expected = np.outer(np.full(bins, 1.0 / bins), mu_bin_masses(bins))
        sigma = np.sqrt(expected * (1 - expected) / n)
        max_z = float((np.abs(counts / n - expected) / sigma).max())
        _report(7, "product measure preserved by S", max_z < 4.0, f"max z={max_z:.2f}<4")

    def test_product_measure_preserved_by_first_return(self):
        report = liouville_pushforward_check(1_000_000, SEED, CellGeometry(ALPHA))
        _report(
            7,
            "product measure preserved by T",
            report.passed,
            f"max z={report.max_z:.2f}<4 over {report.bins}x{report.bins} bins",
        )

    def test_symmetry_conjugations(self):
        params = MapParams(ALPHA)
        t = np.linspace(0.0, PI, 10_000)
        for b in params.breakpoints:
            t = t[np.abs(t - b) > 1e-9]
        P = prob_all(t, params)
        P_ref = prob_all(PI - t, params)
        worst_p = max(
            float(np.abs(P_ref[k - 1] - P[conjugate_index(k) - 1]).max())
            for k in BRANCHES
        )
        full = np.linspace(0.0, PI, 10_000)
        worst_m = max(
            float(
                np.abs(
                    (PI - tau(k, PI - full, params))
                    - tau(conjugate_index(k), full, params)
                ).max()
            )
            for k in BRANCHES
        )
        ok = worst_p < 1e-12 and worst_m < 1e-12
        _report(
            7,
            "reflection conjugations",
            ok,
            f"prob dev={worst_p:.2e}, map dev={worst_m:.2e}, both <1e-12",
        )

    def test_involutions(self):
        a = ALPHA
        maps = {
            1: lambda x: x + 2 * a,
            2: lambda x: -x + 2 * PI - 4 * a,
            3: lambda x: x - 2 * a,
            4: lambda x: -x + 4 * a,
        }
        t = np.linspace(0.0, PI, 10_000)
        worst = max(
            float(np.abs(maps[g](maps[f](t)) - t).max())
            for f, g in ((2, 2), (4, 4), (1, 3), (3, 1))
        )
        _report(7, "branch involutions", worst < 1e-12, f"max dev={worst:.2e}<1e-12")
