"""Distribution of prime ideals among ideal classes.

Weighted per-class sums psi_A over prime-power ideal norms in [T, 2T],
their character transform psi_chi, the variance across classes computed
two independent ways (definitional and spectral, which must agree to
1e-9), least representable primes per class, and exceptional-class
counts at a threshold.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from . import arith
from .classgroup import ClassGroup, group_structure
from .qform import _reduce_triple


class IdentityMismatch(RuntimeError):
    """The definitional and spectral variance routes disagree."""


# ---------------------------------------------------------------------------
# weights on [1, 2]

@dataclass(frozen=True)
class Weight:
    kind: str  # "bump" | "indicator"
    normalization: float

    def __call__(self, x: float) -> float:
        return weight_eval(self, x)


_bump_norm: Optional[float] = None


def bump_weight() -> Weight:
    """Smooth bump c*exp(-1/((x-1)(2-x))) on (1,2), normalized to integral 1."""
    global _bump_norm
    if _bump_norm is None:
        raw, err = quad(
            lambda x: math.exp(-1.0 / ((x - 1.0) * (2.0 - x))), 1, 2,
            epsabs=1e-14, limit=200,
        )
        assert err < 1e-12
        _bump_norm = 1.0 / raw
    return Weight("bump", _bump_norm)


def indicator_weight() -> Weight:
    return Weight("indicator", 1.0)


def get_weight(kind: str) -> Weight:
    if kind == "bump":
        return bump_weight()
    if kind == "indicator":
        return indicator_weight()
    raise ValueError(f"unknown weight kind {kind!r}")


def weight_eval(w: Weight, x: float) -> float:
    if w.kind == "indicator":
        return 1.0 if 1.0 <= x < 2.0 else 0.0
    if x <= 1.0 or x >= 2.0:
        return 0.0
    return w.normalization * math.exp(-1.0 / ((x - 1.0) * (2.0 - x)))


def weight_integral(w: Weight) -> float:
    val, _ = quad(lambda x: weight_eval(w, x), 1, 2, epsabs=1e-13, limit=200)
    return val


def mellin(w: Weight, s: complex) -> complex:
    """Mellin transform integral of w(x) x^(s-1) over [1, 2].

    Indicator has the closed form (2^s - 1)/s; the bump is integrated
    numerically with a certified error estimate below 1e-7 (observed
    accuracy is nearer 1e-12 for moderate |s|).
    """
    s = complex(s)
    if w.kind == "indicator":
        if s == 0:
            return complex(math.log(2.0))
        return (2.0**s - 1.0) / s
    re, re_err = quad(
        lambda x: (weight_eval(w, x) * x ** (s - 1)).real, 1, 2,
        epsabs=1e-12, limit=200,
    )
    im, im_err = quad(
        lambda x: (weight_eval(w, x) * x ** (s - 1)).imag, 1, 2,
        epsabs=1e-12, limit=200,
    )
    assert re_err + im_err < 1e-7
    return complex(re, im)


def phi_weight_eval(w: Weight, T: float, x: float) -> float:
    """The reciprocal-side weight (1/x) w(1/(xT)) from the explicit formula."""
    return weight_eval(w, 1.0 / (x * T)) / x


def phi_side_vanishes(w: Weight, T: float, max_norm: int = 512) -> bool:
    """The reciprocal-side sum has empty support over integer norms >= 2.

    Checked by evaluation, not assumed: w lives on [1, 2], so the phi
    argument 1/(nT) < 1 for every norm n >= 1 once T > 1.
    """
    return all(phi_weight_eval(w, T, n) == 0.0 for n in range(2, max_norm))


# ---------------------------------------------------------------------------
# psi sums

def _weval_fn(w: Weight) -> Callable[[float], float]:
    if w.kind == "indicator":
        return lambda x: 1.0 if 1.0 <= x < 2.0 else 0.0
    c = w.normalization
    def f(x: float) -> float:
        if x <= 1.0 or x >= 2.0:
            return 0.0
        return c * math.exp(-1.0 / ((x - 1.0) * (2.0 - x)))
    return f


def psi_by_class(
    g: ClassGroup, T: float, w: Weight, *, sieve_cap: int = arith.SIEVE_CAP_DEFAULT
) -> np.ndarray:
    """Per-class sums psi_A = sum Lambda(n) w(N(n)/T) over prime-power ideals.

    Norm support is [T, 2T]: split and ramified primes in the segment,
    plus prime powers and inert squares from primes up to sqrt(2T).
    Accumulation order is fixed (ascending prime), so results are
    bit-reproducible.
    """
    if T < 2:
        raise ValueError("T must be >= 2")
    d = g.disc.value
    h = g.h
    out = [0.0] * h
    weval = _weval_fn(w)
    logf = math.log
    hi = int(2 * T)
    sq = math.isqrt(hi)
    inv = [g.inverse_idx(i) for i in range(h)]
    idx_of = g._index

    # small primes: all prime powers with norm up to 2T
    for p in arith.sieve_primes(sq, cap=sieve_cap).tolist():
        info = arith.classify_prime(p, g)
        if info.kind == "inert":
            lam = 2.0 * logf(p)
            n = p * p
            while n <= hi:
                wv = weval(n / T)
                if wv:
                    out[0] += lam * wv
                n *= p * p
        elif info.kind == "ramified":
            lam = logf(p)
            c = info.class_index
            n, cur = p, c
            while n <= hi:
                wv = weval(n / T)
                if wv:
                    out[cur] += lam * wv
                n *= p
                cur = g.compose_idx(cur, c)
        else:
            lam = logf(p)
            c = info.class_index
            ci = inv[c]
            n, cur, curi = p, c, ci
            while n <= hi:
                wv = weval(n / T)
                if wv:
                    # two conjugate prime-power ideals, possibly same class
                    out[cur] += lam * wv
                    out[curi] += lam * wv
                n *= p
                cur = g.compose_idx(cur, c)
                curi = g.compose_idx(curi, ci)

    # segment primes: first powers only (higher powers exceed 2T here)
    seg_start = max(sq + 1, int(T))
    for block in arith.iter_prime_blocks(seg_start, hi, cap=sieve_cap):
        for p in block.tolist():
            wv = weval(p / T)
            if wv == 0.0:
                continue
            r = d % p
            if r == 0:
                b = arith.sqrt_disc_mod_4p(d, p)
                idx = idx_of[_reduce_triple(p, b, (b * b - d) // (4 * p))]
                out[idx] += logf(p) * wv
                continue
            if pow(r, (p - 1) >> 1, p) != 1:
                continue  # inert, norm p^2 > 2T
            b = arith._sqrt_residue(r, p)
            if (b - d) & 1:
                b = p - b
            idx = idx_of[_reduce_triple(p, b, (b * b - d) // (4 * p))]
            lw = logf(p) * wv
            out[idx] += lw
            out[inv[idx]] += lw
    return np.array(out)


def psi_by_char(g: ClassGroup, psi_a: Sequence[float]) -> np.ndarray:
    """Character sums psi_chi = sum_A chi(A) psi_A, trivial character first."""
    psi_a = np.asarray(psi_a, dtype=np.float64)
    return np.array([row @ psi_a for row in _char_rows(g)])


def psi_from_chars(g: ClassGroup, psi_chi: Sequence[complex]) -> np.ndarray:
    """Inverse transform psi_A = (1/h) sum_chi conj(chi(A)) psi_chi."""
    psi_chi = np.asarray(psi_chi, dtype=np.complex128)
    acc = np.zeros(g.h, dtype=np.complex128)
    for i, row in enumerate(_char_rows(g)):
        acc += np.conj(row) * psi_chi[i]
    acc /= g.h
    return acc.real


def _char_rows(g: ClassGroup):
    """Rows of the character table, same order as classgroup.characters()."""
    group_structure(g)
    orders = [n for _, n in g.basis]
    lcm = orders[-1] if orders else 1
    roots = np.exp(2j * np.pi * np.arange(lcm) / lcm)
    coords = np.array(g.coords, dtype=np.int64).reshape(g.h, len(orders))
    scale = np.array([lcm // n for n in orders], dtype=np.int64)
    for exps in itertools.product(*(range(n) for n in orders)):
        phases = (coords @ (np.array(exps, dtype=np.int64) * scale)) % lcm
        yield roots[phases]


@dataclass
class PsiReport:
    disc: int
    t: float
    weight: str
    psi_by_class: np.ndarray
    psi_by_char: np.ndarray
    psi_total: float
    variance: float
    variance_spectral: float
    delta_main_term: float
    roundtrip_error: float


def _rel_diff(x: float, y: float) -> float:
    scale = max(abs(x), abs(y))
    if scale == 0:
        return 0.0
    return abs(x - y) / scale


def variance_report(
    g: ClassGroup, T: float, w: Weight, *, sieve_cap: int = arith.SIEVE_CAP_DEFAULT
) -> PsiReport:
    """psi sums plus the variance, computed both ways and cross-checked.

    Definitional: sum_A |psi_A - psi/h|^2.  Spectral: (1/h) * sum over
    nontrivial chi of |psi_chi|^2.  Disagreement beyond 1e-9 relative
    raises IdentityMismatch, as does a failed Fourier roundtrip.
    """
    group_structure(g)
    psa = psi_by_class(g, T, w, sieve_cap=sieve_cap)
    ptot = float(psa.sum())
    h = g.h

    psi_chi = np.empty(h, dtype=np.complex128)
    recon = np.zeros(h, dtype=np.complex128)
    for i, row in enumerate(_char_rows(g)):
        v = complex(row @ psa)
        psi_chi[i] = v
        recon += np.conj(row) * v
    recon /= h

    var_def = float(np.sum((psa - ptot / h) ** 2))
    var_spectral = float(np.sum(np.abs(psi_chi[1:]) ** 2) / h)
    if _rel_diff(var_def, var_spectral) > 1e-9:
        raise IdentityMismatch(
            f"variance mismatch: definitional {var_def!r} vs spectral {var_spectral!r}"
        )
    if abs(complex(psi_chi[0]) - ptot) > 1e-9 * max(1.0, abs(ptot)):
        raise IdentityMismatch("trivial character sum differs from psi_total")
    rt = float(np.max(np.abs(recon.real - psa))) if h else 0.0
    if rt > 1e-9 * max(1.0, float(np.max(np.abs(psa))) if h else 1.0):
        raise IdentityMismatch(f"Fourier roundtrip error {rt}")
    assert phi_side_vanishes(w, T)

    return PsiReport(
        disc=g.disc.value,
        t=T,
        weight=w.kind,
        psi_by_class=psa,
        psi_by_char=psi_chi,
        psi_total=ptot,
        variance=var_def,
        variance_spectral=var_spectral,
        delta_main_term=ptot - T,
        roundtrip_error=rt,
    )


def variance(g: ClassGroup, T: float, w: Weight, **kw) -> float:
    """Cross-class variance of the weighted prime sums (definitional value)."""
    return variance_report(g, T, w, **kw).variance


# ---------------------------------------------------------------------------
# least primes and exceptional classes

def _least_sweep(
    g: ClassGroup, x_cap: float, *, sieve_cap: int = arith.SIEVE_CAP_DEFAULT
) -> tuple[list[Optional[int]], list[Optional[int]], bool]:
    """One ascending sweep over primes p < x_cap.

    Returns (least prime per class, least prime-ideal norm per class,
    capped).  The norm variant differs only at the principal class,
    which inert primes reach with norm p^2.  Stops as soon as every
    class is filled; later primes cannot improve either vector.
    """
    d = g.disc.value
    h = g.h
    least_p: list[Optional[int]] = [None] * h
    filled = 0
    first_inert: Optional[int] = None
    idx_of = g._index
    hi = math.ceil(x_cap) - 1
    capped = hi > sieve_cap
    hi = min(hi, sieve_cap)
    if hi >= 2:
        for block in arith.iter_prime_blocks(2, hi, cap=max(sieve_cap, hi)):
            for p in block.tolist():
                r = d % p
                if r == 0 or p == 2:
                    chi = arith.kronecker(d, p)
                else:
                    chi = 1 if pow(r, (p - 1) >> 1, p) == 1 else -1
                if chi == -1:
                    if first_inert is None:
                        first_inert = p
                    continue
                b = arith.sqrt_disc_mod_4p(d, p)
                idx = idx_of[_reduce_triple(p, b, (b * b - d) // (4 * p))]
                if least_p[idx] is None:
                    least_p[idx] = p
                    filled += 1
                if chi == 1:
                    j = g.inverse_idx(idx)
                    if least_p[j] is None:
                        least_p[j] = p
                        filled += 1
            if filled == h:
                break
    least_norm = list(least_p)
    if first_inert is not None and first_inert * first_inert < x_cap:
        sq = first_inert * first_inert
        if least_norm[0] is None or sq < least_norm[0]:
            least_norm[0] = sq
    return least_p, least_norm, capped


def least_primes(g: ClassGroup, x_cap: float, **kw) -> list[Optional[int]]:
    """Smallest prime 1 < p < x_cap represented by each class (None if capped out)."""
    return _least_sweep(g, x_cap, **kw)[0]


def least_prime_ideal_norms(g: ClassGroup, x_cap: float, **kw) -> list[Optional[int]]:
    """Smallest prime-ideal norm in (1, x_cap) per class; inert squares count."""
    return _least_sweep(g, x_cap, **kw)[1]


def count_exceptional(vec: Sequence[Optional[int]], x: float) -> int:
    """Classes whose least entry is missing or >= x (entries came from a sweep capped at >= x)."""
    return sum(1 for v in vec if v is None or v >= x)


def exceptional_count(g: ClassGroup, x: float, **kw) -> int:
    """R(D, X): classes containing no prime ideal of norm in (1, X)."""
    return count_exceptional(least_prime_ideal_norms(g, x, **kw), x)


def exceptional_count_primes(g: ClassGroup, x: float, **kw) -> int:
    """Rational-prime variant: classes representing no prime 1 < p < X."""
    return count_exceptional(least_primes(g, x, **kw), x)


@dataclass
class ScanRecord:
    disc: int
    h: int
    x_cap: float
    r_ideal: int
    r_prime: int
    least_primes: list[Optional[int]]
    least_ideal_norms: list[Optional[int]]
    max_reduced_a: int
    capped: bool
    elapsed: float = 0.0


def scan_record(
    g: ClassGroup, x_cap: float, *, sieve_cap: int = arith.SIEVE_CAP_DEFAULT
) -> ScanRecord:
    """Least-prime sweep packaged with the exceptional counts at x_cap."""
    t0 = time.perf_counter()
    lp, ln, capped = _least_sweep(g, x_cap, sieve_cap=sieve_cap)
    rec = ScanRecord(
        disc=g.disc.value,
        h=g.h,
        x_cap=x_cap,
        r_ideal=count_exceptional(ln, x_cap),
        r_prime=count_exceptional(lp, x_cap),
        least_primes=lp,
        least_ideal_norms=ln,
        max_reduced_a=max(f.a for f in g.elements),
        capped=capped,
        elapsed=time.perf_counter() - t0,
    )
    return rec
