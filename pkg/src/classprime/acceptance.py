"""Runnable acceptance checks.

Each criterion is a standalone function returning a CriterionResult; run()
executes a selection and prints one PASS/FAIL line per criterion.  The
bounds and tolerances here are fixed contracts; loosening them is not an
option, a miss is reported as a failure.
"""
from __future__ import annotations

import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import arith, cli, stats
from .classgroup import enumerate_reduced_forms, group_structure
from .qform import validate_discriminant
from .stats import bump_weight, get_weight, indicator_weight


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float


def _fundamental_range(lo: int, hi: int):
    """Fundamental discriminants dv with lo <= dv <= hi, descending from hi."""
    for dv in range(hi, lo - 1, -1):
        if dv < 0 and dv % 4 in (0, 1):
            d = validate_discriminant(dv)
            if d.fundamental:
                yield d


def sample_discriminants(n: int = 20, lo: int = -(10**5), hi: int = -(10**3)) -> list[int]:
    """Deterministic sample: n geometric anchors in [|hi|, |lo|], each moved
    up to the nearest fundamental discriminant (stays inside the range)."""
    out: list[int] = []
    for j in range(n):
        anchor = int(round(abs(hi) * (abs(lo) / abs(hi)) ** (j / (n - 1))))
        dv = -anchor
        while dv <= -3:
            if dv % 4 in (0, 1) and validate_discriminant(dv).fundamental:
                break
            dv += 1
        if dv not in out:
            out.append(dv)
    return out


def criterion_1() -> CriterionResult:
    """h from enumeration == class number formula for all -1e4 < D < -3."""
    t0 = time.perf_counter()
    total = agree = 0
    first_bad = None
    for d in _fundamental_range(-9999, -4):
        g = enumerate_reduced_forms(d)
        est = arith.l_one_chi(d, 100 * -d.value)
        h_formula = round(
            arith.unit_count(d.value) * math.sqrt(-d.value) * est.value / (2 * math.pi)
        )
        total += 1
        if g.h == h_formula:
            agree += 1
        elif first_bad is None:
            first_bad = (d.value, g.h, h_formula)
    dt = time.perf_counter() - t0
    ok = agree == total and dt < 60
    detail = f"{agree}/{total} agree"
    if first_bad:
        detail += f"; first mismatch D={first_bad[0]}: enum {first_bad[1]} vs formula {first_bad[2]}"
    return CriterionResult(1, "class-number cross-check", ok, detail, dt)


def criterion_2() -> CriterionResult:
    """representation_count == dirichlet_r exactly for n <= 5000; split max = 4."""
    t0 = time.perf_counter()
    nmax = 5000
    bad = []
    for dv in (-3, -4, -8, -23, -47, -71, -163):
        d = validate_discriminant(dv)
        counts = arith.representation_counts_upto(nmax, d)
        formula = arith.dirichlet_r_upto(nmax, d)
        if not np.array_equal(counts[1:], formula[1:]):
            n = int(np.nonzero(counts[1:] != formula[1:])[0][0]) + 1
            bad.append(f"D={dv} first mismatch n={n}")
            continue
        if dv < -4:
            split_r = [
                int(counts[p])
                for p in arith.sieve_primes(nmax).tolist()
                if dv % p and arith.kronecker(dv, p) == 1
            ]
            if max(split_r) != 4 or any(r != 4 for r in split_r):
                bad.append(f"D={dv} split r(p) != 4")
    dt = time.perf_counter() - t0
    detail = "7 discriminants, n <= 5000 all exact" if not bad else "; ".join(bad)
    return CriterionResult(2, "Dirichlet formula", not bad and dt < 60, detail, dt)


def _variance_cases():
    dv = -10007
    while not (dv % 4 in (0, 1) and validate_discriminant(dv).fundamental):
        dv += 1
    cases = []
    for disc in (-23, -47, dv):
        for t in (10.0**3, 10.0**4, 10.0**5):
            for w in (bump_weight(), indicator_weight()):
                cases.append((disc, t, w))
    return cases


_report_cache: dict = {}


def _cached_report(dv: int, t: float, w) -> stats.PsiReport:
    key = (dv, t, w.kind)
    if key not in _report_cache:
        g = group_structure(enumerate_reduced_forms(dv))
        _report_cache[key] = stats.variance_report(g, t, w)
    return _report_cache[key]


def criterion_3() -> CriterionResult:
    """Definitional vs spectral variance to 1e-9 relative on the pinned grid."""
    t0 = time.perf_counter()
    worst = 0.0
    fails = []
    for dv, t, w in _variance_cases():
        try:
            rep = _cached_report(dv, t, w)
        except stats.IdentityMismatch as exc:
            fails.append(f"D={dv} T={t:g} {w.kind}: {exc}")
            continue
        scale = max(rep.variance, rep.variance_spectral, 1e-300)
        worst = max(worst, abs(rep.variance - rep.variance_spectral) / scale)
    dt = time.perf_counter() - t0
    ok = not fails and worst <= 1e-9 and dt < 120
    detail = f"18 cases, worst relative gap {worst:.3e}" + (
        "; " + "; ".join(fails) if fails else ""
    )
    return CriterionResult(3, "variance identity", ok, detail, dt)


def criterion_4() -> CriterionResult:
    """Fourier roundtrip psi_chi -> psi_A to 1e-9 relative on the same grid."""
    t0 = time.perf_counter()
    worst = 0.0
    fails = []
    for dv, t, w in _variance_cases():
        try:
            rep = _cached_report(dv, t, w)
        except stats.IdentityMismatch as exc:
            fails.append(f"D={dv} T={t:g} {w.kind}: {exc}")
            continue
        scale = max(1.0, float(np.max(np.abs(rep.psi_by_class))))
        worst = max(worst, rep.roundtrip_error / scale)
    dt = time.perf_counter() - t0
    ok = not fails and worst <= 1e-9
    detail = f"18 cases, worst roundtrip error {worst:.3e}" + (
        "; " + "; ".join(fails) if fails else ""
    )
    return CriterionResult(4, "Fourier round-trip", ok, detail, dt)


def criterion_5() -> CriterionResult:
    """Main term: D=-23, bump, T=1e6, |psi_total/T - 1| <= 0.05."""
    t0 = time.perf_counter()
    g = group_structure(enumerate_reduced_forms(-23))
    rep = stats.variance_report(g, 10.0**6, bump_weight())
    dev = abs(rep.psi_total / rep.t - 1.0)
    dt = time.perf_counter() - t0
    return CriterionResult(
        5,
        "main term",
        dev <= 0.05 and dt < 30,
        f"psi_total/T - 1 = {rep.psi_total / rep.t - 1.0:+.4f}",
        dt,
    )


def criterion_6() -> CriterionResult:
    """Var/(T log^2|D|) <= 10 at T = h^2 log^2|D| over the 20-sample."""
    t0 = time.perf_counter()
    rows = []
    worst = 0.0
    for dv in sample_discriminants():
        g = group_structure(enumerate_reduced_forms(dv))
        t = max(2.0, g.h**2 * math.log(-dv) ** 2)
        rep = stats.variance_report(g, t, bump_weight())
        ratio = rep.variance / (t * math.log(-dv) ** 2)
        rows.append((dv, g.h, ratio))
        worst = max(worst, ratio)
    dt = time.perf_counter() - t0
    ok = worst <= 10 and dt < 300
    return CriterionResult(
        6,
        "GRH-scale variance",
        ok,
        f"{len(rows)} discriminants, worst Var/(T log^2|D|) = {worst:.3f}",
        dt,
    )


def criterion_7() -> CriterionResult:
    """Pinned least primes for D=-23 and the two exceptional counts."""
    t0 = time.perf_counter()
    g = group_structure(enumerate_reduced_forms(-23))
    lp = stats.least_primes(g, 1000)
    expect = {(2, 1, 3): 2, (2, -1, 3): 2, (1, 1, 6): 23}
    got = {tuple(f): lp[i] for i, f in enumerate(g.elements)}
    checks = [
        got == expect,
        stats.exceptional_count(g, 3) == 1,
        stats.exceptional_count(g, 24) == 0,
        stats.exceptional_count_primes(g, 3) == 1,
        stats.exceptional_count_primes(g, 24) == 0,
    ]
    dt = time.perf_counter() - t0
    return CriterionResult(
        7,
        "least-prime table D=-23",
        all(checks),
        f"p_A = {[got[tuple(f)] for f in g.elements]}, R(3)={stats.exceptional_count(g, 3)}, "
        f"R(24)={stats.exceptional_count(g, 24)}",
        dt,
    )


def criterion_8() -> CriterionResult:
    """R(D, h log^2.1|D|) <= 0.1 h and R(D, 100 h^2 log^2|D|) = 0 on the sample."""
    t0 = time.perf_counter()
    fails = []
    worst_frac = 0.0
    for dv in sample_discriminants():
        g = group_structure(enumerate_reduced_forms(dv))
        logd = math.log(-dv)
        x1 = g.h * logd**2.1
        x2 = 100 * g.h**2 * logd**2
        lp, ln, _ = stats._least_sweep(g, x2)
        for tag, vec in (("prime", lp), ("ideal", ln)):
            r1 = stats.count_exceptional(vec, x1)
            r2 = stats.count_exceptional(vec, x2)
            worst_frac = max(worst_frac, r1 / (0.1 * g.h) if g.h else 0.0)
            if r1 > 0.1 * g.h:
                fails.append(f"D={dv} R_{tag}(h log^2.1)={r1} > 0.1h={0.1 * g.h:.1f}")
            if r2 != 0:
                fails.append(f"D={dv} R_{tag}(100 h^2 log^2)={r2} != 0")
    dt = time.perf_counter() - t0
    detail = (
        f"20 discriminants, worst R(X1)/(0.1h) = {worst_frac:.3f}; R(X2) = 0 everywhere"
        if not fails
        else "; ".join(fails[:4])
    )
    return CriterionResult(8, "exceptional decay", not fails and dt < 600, detail, dt)


def criterion_9() -> CriterionResult:
    """p_A >= A and 4AC >= |D| exactly, for every class of every tested D."""
    t0 = time.perf_counter()
    tested = sample_discriminants() + [-3, -4, -8, -23, -47, -71, -163, -10007]
    bad = []
    n_classes = 0
    for dv in tested:
        g = group_structure(enumerate_reduced_forms(dv))
        lp = stats.least_primes(g, 100 * g.h**2 * math.log(-dv) ** 2 + 10)
        for i, f in enumerate(g.elements):
            n_classes += 1
            if 4 * f.a * f.c < -dv:
                bad.append(f"D={dv} class {f}: 4AC < |D|")
            if lp[i] is not None and lp[i] < f.a:
                bad.append(f"D={dv} class {f}: p_A = {lp[i]} < A")
    dt = time.perf_counter() - t0
    return CriterionResult(
        9,
        "structural floor",
        not bad,
        f"{n_classes} classes checked, zero exceptions" if not bad else "; ".join(bad[:4]),
        dt,
    )


def criterion_10() -> CriterionResult:
    """scan [-2000,-3] with 1 thread and 4 threads: byte-identical CSV."""
    t0 = time.perf_counter()
    outs = []
    try:
        for threads in ("1", "4"):
            fd, path = tempfile.mkstemp(suffix=".csv")
            os.close(fd)
            outs.append(path)
            rc = cli.main(
                [
                    "scan",
                    "--range",
                    "-2000",
                    "-3",
                    "--threads",
                    threads,
                    "--out",
                    path,
                ]
            )
            if rc != 0:
                return CriterionResult(
                    10, "scan determinism", False, f"scan exited {rc}", time.perf_counter() - t0
                )
        with open(outs[0], "rb") as fa, open(outs[1], "rb") as fb:
            a, b = fa.read(), fb.read()
        same = a == b
        nrows = a.count(b"\n") - 1
        dt = time.perf_counter() - t0
        return CriterionResult(
            10,
            "scan determinism",
            same,
            f"{nrows} rows, outputs {'identical' if same else 'DIFFER'} ({len(a)} bytes)",
            dt,
        )
    finally:
        for p in outs:
            if os.path.exists(p):
                os.unlink(p)


CRITERIA: list[Callable[[], CriterionResult]] = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
    criterion_10,
]


def run(numbers: Optional[list[int]] = None, stream=None) -> list[CriterionResult]:
    stream = stream or sys.stdout
    results = []
    for i, fn in enumerate(CRITERIA, 1):
        if numbers and i not in numbers:
            continue
        res = fn()
        results.append(res)
        status = "PASS" if res.passed else "FAIL"
        stream.write(
            f"{status} criterion {res.number} ({res.name}): {res.detail} [{res.seconds:.1f}s]\n"
        )
        stream.flush()
    return results
