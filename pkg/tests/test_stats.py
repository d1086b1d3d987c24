import cmath
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from classprime.classgroup import characters, enumerate_reduced_forms, group_structure
from classprime.qform import QuadForm, evaluate
from classprime.stats import (
    IdentityMismatch,
    bump_weight,
    count_exceptional,
    exceptional_count,
    exceptional_count_primes,
    get_weight,
    indicator_weight,
    least_prime_ideal_norms,
    least_primes,
    mellin,
    phi_side_vanishes,
    phi_weight_eval,
    psi_by_char,
    psi_by_class,
    psi_from_chars,
    scan_record,
    variance,
    variance_report,
    weight_eval,
    weight_integral,
)


def _group(d):
    return group_structure(enumerate_reduced_forms(d))


# ---------------------------------------------------------------------------
# weights

def test_weight_supports():
    bw, iw = bump_weight(), indicator_weight()
    assert bw(1.0) == 0.0 and bw(2.0) == 0.0 and bw(0.5) == 0.0 and bw(2.5) == 0.0
    assert bw(1.5) > 0
    assert iw(1.0) == 1.0 and iw(1.999) == 1.0
    assert iw(2.0) == 0.0 and iw(0.999) == 0.0  # half-open [1, 2)


def test_weight_normalization():
    assert weight_integral(bump_weight()) == pytest.approx(1.0, abs=1e-10)
    assert weight_integral(indicator_weight()) == pytest.approx(1.0, abs=1e-12)


def test_bump_value_against_mpmath():
    # independent quadrature of the unnormalized bump
    raw = mpmath.quad(lambda x: mpmath.e ** (-1 / ((x - 1) * (2 - x))), [1, 2])
    c = float(1 / raw)
    bw = bump_weight()
    for x in (1.1, 1.25, 1.5, 1.8, 1.95):
        expect = c * math.exp(-1 / ((x - 1) * (2 - x)))
        assert bw(x) == pytest.approx(expect, rel=1e-9)


def test_get_weight():
    assert get_weight("bump").kind == "bump"
    assert get_weight("indicator").kind == "indicator"
    with pytest.raises(ValueError):
        get_weight("boxcar")


def test_mellin_indicator_closed_form():
    iw = indicator_weight()
    assert mellin(iw, 0.0) == pytest.approx(math.log(2), abs=1e-12)
    assert mellin(iw, 1.0) == pytest.approx(1.0, abs=1e-12)
    s = 0.5 + 2.0j
    assert mellin(iw, s) == pytest.approx((2**s - 1) / s, abs=1e-12)


def test_mellin_bump_against_mpmath():
    bw = bump_weight()
    for s in (0.0, 1.0, 0.5 + 1.0j, 2.0 - 3.0j):
        expect = mpmath.quad(
            lambda x: bw(float(x)) * mpmath.power(x, s - 1), [1, 2]
        )
        got = mellin(bw, s)
        assert abs(got - complex(expect)) < 1e-9


def test_phi_side_vanishes():
    for w in (bump_weight(), indicator_weight()):
        for T in (2.0, 10.0, 1e4):
            assert phi_side_vanishes(w, T)
            assert phi_weight_eval(w, T, 3.0) == 0.0


# ---------------------------------------------------------------------------
# per-class prime sums

def test_psi_hand_oracle_minus23():
    """Window [10, 20] at D = -23, indicator weight, worked out by hand.

    Prime-power ideal norms in [10, 20): 13 (split; conjugates in both
    non-principal classes) and 16 = 2^4 (split 2; c^4 = c, c^-4 = c^-1).
    Everything else in range is inert of odd power or out of window.
    """
    g = _group(-23)
    psi = psi_by_class(g, 10.0, indicator_weight())
    expect = {
        QuadForm(1, 1, 6): 0.0,
        QuadForm(2, -1, 3): math.log(2) + math.log(13),
        QuadForm(2, 1, 3): math.log(2) + math.log(13),
    }
    for i, f in enumerate(g.elements):
        assert psi[i] == pytest.approx(expect[f], abs=1e-12)


def test_psi_empty_window():
    # D = -163: 2 and 3 inert, norm 4 falls outside [2, 4) and bump(2) = 0
    g = _group(-163)
    assert psi_by_class(g, 2.0, indicator_weight())[0] == 0.0
    assert psi_by_class(g, 2.0, bump_weight())[0] == 0.0


def test_psi_bruteforce_oracle():
    """Recompute psi_A directly from prime factorizations with sympy."""
    import sympy

    g = _group(-47)
    T = 50.0
    w = indicator_weight()
    got = psi_by_class(g, T, w)
    dv = -47
    expect = np.zeros(g.h)
    for n in range(int(T), int(2 * T)):  # [T, 2T) for the indicator
        fac = sympy.factorint(n)
        if len(fac) != 1:
            continue
        p, k = next(iter(fac.items()))
        if dv % p == 0:
            chi = 0
        elif p == 2:
            chi = 1 if dv % 8 == 1 else -1
        else:
            chi = sympy.jacobi_symbol(dv, p)
        if chi == -1:
            if k % 2 == 0:
                expect[0] += 2 * math.log(p)
        elif chi == 0:
            # ramified: unique ideal of norm p^k, class = (sqrt class)^k
            i = _ramified_class_power(g, p, k)
            expect[i] += math.log(p)
        else:
            for i in _split_classes_power(g, p, k):
                expect[i] += math.log(p)
    assert np.allclose(got, expect, atol=1e-10)


def _ramified_class_power(g, p, k):
    from classprime.arith import prime_power_class

    entries = prime_power_class(p, k, g)
    assert len(entries) == 1
    return entries[0][0]


def _split_classes_power(g, p, k):
    from classprime.arith import prime_power_class

    entries = prime_power_class(p, k, g)
    assert len(entries) == 2
    return [i for i, _, _ in entries]


def test_psi_split_prime_counted_in_both_conjugates():
    # D = -47, T = 2: window [2, 4) contains the split prime 2 and 3
    g = _group(-47)
    psi = psi_by_class(g, 2.0, indicator_weight())
    i1, i2 = g.index_of(QuadForm(2, 1, 6)), g.index_of(QuadForm(2, -1, 6))
    i3, i4 = g.index_of(QuadForm(3, 1, 4)), g.index_of(QuadForm(3, -1, 4))
    assert psi[i1] == pytest.approx(math.log(2))
    assert psi[i2] == pytest.approx(math.log(2))
    assert psi[i3] == pytest.approx(math.log(3))
    assert psi[i4] == pytest.approx(math.log(3))
    assert psi[0] == 0.0


def test_psi_total_equals_sum_over_norms():
    # trivial-character route equals the plain total
    g = _group(-23)
    for t in (10.0, 100.0, 1000.0):
        psi = psi_by_class(g, t, bump_weight())
        chars = psi_by_char(g, psi)
        assert chars[0].real == pytest.approx(float(np.sum(psi)), rel=1e-12)
        assert abs(chars[0].imag) < 1e-12


# ---------------------------------------------------------------------------
# character transform and variance

@pytest.mark.parametrize("d", [-23, -84, -479, -3299])
def test_char_transform_roundtrip(d):
    g = _group(d)
    rng = np.random.default_rng(7)
    vec = rng.normal(size=g.h)
    back = psi_from_chars(g, psi_by_char(g, vec))
    assert np.allclose(back, vec, atol=1e-10)


def test_psi_by_char_matches_naive():
    g = _group(-479)
    vec = np.random.default_rng(11).normal(size=g.h)
    got = psi_by_char(g, vec)
    chars = characters(g)
    naive = np.array([sum(c.value(i) * vec[i] for i in range(g.h)) for c in chars])
    assert np.allclose(got, naive, atol=1e-9)


@pytest.mark.parametrize("d,t", [(-23, 1000.0), (-84, 500.0), (-479, 300.0)])
def test_variance_identities(d, t):
    g = _group(d)
    rep = variance_report(g, t, bump_weight())
    # definitional: sum over classes of |psi_A - psi/h|^2
    mean = rep.psi_total / g.h
    direct = float(np.sum(np.abs(rep.psi_by_class - mean) ** 2))
    assert rep.variance == pytest.approx(direct, rel=1e-12)
    # spectral: (1/h) sum over nontrivial characters
    spectral = float(np.sum(np.abs(rep.psi_by_char[1:]) ** 2)) / g.h
    assert rep.variance_spectral == pytest.approx(spectral, rel=1e-12)
    assert rep.variance == pytest.approx(rep.variance_spectral, rel=1e-9)
    assert rep.roundtrip_error < 1e-9
    assert variance(g, t, bump_weight()) == rep.variance


def test_variance_zero_for_class_number_one():
    g = _group(-163)
    rep = variance_report(g, 1000.0, bump_weight())
    assert rep.variance == 0.0 and rep.variance_spectral == 0.0
    assert rep.psi_total > 0


def test_variance_lower_bound_from_empty_classes():
    # any class with psi_A = 0 contributes (psi/h)^2 to the variance
    g = _group(-479)
    t = 40.0
    rep = variance_report(g, t, indicator_weight())
    zeros = int(np.sum(rep.psi_by_class == 0.0))
    assert zeros > 0  # small window cannot touch all 25 classes
    assert rep.variance >= zeros * (rep.psi_total / g.h) ** 2 - 1e-9


def test_main_term_at_scale():
    g = _group(-23)
    rep = variance_report(g, 10.0**5, bump_weight())
    assert abs(rep.psi_total / rep.t - 1.0) < 0.05
    assert rep.delta_main_term == pytest.approx(rep.psi_total - rep.t)


def test_report_fields():
    g = _group(-23)
    rep = variance_report(g, 100.0, indicator_weight())
    assert rep.disc == -23 and rep.t == 100.0 and rep.weight == "indicator"
    assert rep.psi_by_class.shape == (3,)
    assert rep.psi_by_char.shape == (3,)


# ---------------------------------------------------------------------------
# least primes and exceptional counts

def test_least_primes_minus23():
    g = _group(-23)
    lp = least_primes(g, 1000)
    by_form = {tuple(f): p for f, p in zip(g.elements, lp)}
    assert by_form == {(1, 1, 6): 23, (2, -1, 3): 2, (2, 1, 3): 2}
    assert least_prime_ideal_norms(g, 1000) == lp  # 23 < 5^2, inert sq loses


def test_least_primes_match_bruteforce_representation():
    # oracle: try every prime and every lattice point, no class-group logic
    import sympy

    for d in (-23, -47, -84):
        g = _group(d)
        want = []
        for f in g.elements:
            best = None
            for p in sympy.primerange(2, 600):
                ylim = math.isqrt(4 * f.a * p // -d) + 1
                found = any(
                    evaluate(f, x, y) == p
                    for y in range(ylim + 1)
                    for x in range(-(math.isqrt(4 * f.c * p // -d) + 1),
                                   math.isqrt(4 * f.c * p // -d) + 2)
                )
                if found:
                    best = p
                    break
            want.append(best)
        assert least_primes(g, 600) == want


def test_least_ideal_norm_uses_inert_squares():
    # principal class of D = -47: least prime is 53 but 2 is split... check
    # a case where an inert square beats every principal prime: D = -56?
    # Use explicit construction: for D = -163 small primes are all inert,
    # so the least ideal norm in the principal class is 4 = 2^2 while the
    # least represented prime is 41.
    g = _group(-163)
    assert least_primes(g, 1000) == [41]
    assert least_prime_ideal_norms(g, 1000) == [4]


def test_least_sweep_capped():
    g = _group(-23)
    lp = least_primes(g, 10)
    # only primes < 10 are found; principal class has none (23 is least)
    assert lp[0] is None
    assert lp[1] == 2 and lp[2] == 2
    assert count_exceptional(lp, 10) == 1


def test_exceptional_counts_minus23():
    g = _group(-23)
    assert exceptional_count(g, 3) == 1
    assert exceptional_count(g, 24) == 0
    assert exceptional_count_primes(g, 3) == 1
    assert exceptional_count_primes(g, 24) == 0
    # X = 23 is strict: norm 23 is NOT in (1, 23)
    assert exceptional_count(g, 23) == 1
    assert exceptional_count(g, 23.5) == 0


def test_exceptional_count_monotone():
    g = _group(-479)
    xs = [2, 5, 20, 100, 500, 2000]
    vals = [exceptional_count(g, x) for x in xs]
    assert vals == sorted(vals, reverse=True)
    assert vals[0] == g.h
    assert vals[-1] == 0
    pvals = [exceptional_count_primes(g, x) for x in xs]
    assert pvals == sorted(pvals, reverse=True)
    assert all(pv >= v for pv, v in zip(pvals, vals))


def test_scan_record():
    g = _group(-84)
    rec = scan_record(g, 200.0)
    assert rec.disc == -84 and rec.h == 4
    assert rec.r_ideal == 0 and rec.r_prime == 0
    assert all(p is not None for p in rec.least_primes)
    assert rec.least_primes == least_primes(g, 200.0)
    assert rec.max_reduced_a == max(f.a for f in g.elements)
    assert not rec.capped and rec.elapsed >= 0


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([-23, -47, -84, -163, -479]), st.floats(2, 400))
def test_ideal_norm_never_exceeds_prime(d, x_cap):
    # prime entries are prime-ideal norms too, so the ideal vector is <=
    g = _group(d)
    lp, ln = least_primes(g, x_cap), least_prime_ideal_norms(g, x_cap)
    for p, n in zip(lp, ln):
        if n is None:
            assert p is None
        elif p is not None:
            assert n <= p
    assert count_exceptional(ln, x_cap) <= count_exceptional(lp, x_cap)


def test_identity_mismatch_is_runtime_error():
    assert issubclass(IdentityMismatch, RuntimeError)
