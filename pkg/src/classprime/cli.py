"""Command line interface.

Subcommands: forms, least-primes, variance, scan, dirichlet-check,
heegner, selftest.  Output goes to stdout (or --out) as CSV or JSON with
identical numeric content; per-class tables are CSV rows, summaries go
to stderr in CSV mode and into the JSON object otherwise.  Exit codes:
0 ok, 2 bad input, 3 internal identity violation, 4 oracle mismatch.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import re
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from . import arith, heegner, stats
from .classgroup import (
    InvalidIdealBasis,
    NotFundamental,
    enumerate_reduced_forms,
    group_structure,
)
from .qform import NotADiscriminant, validate_discriminant
from .stats import IdentityMismatch


class UsageError(ValueError):
    pass


class OracleMismatch(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# scale rules: "1000", "h*log2", "h2*log2", "0.5*h*log2.1", ...

_H_FACTOR = re.compile(r"^h(\d+(?:\.\d+)?)?$")
_LOG_FACTOR = re.compile(r"^log(\d+(?:\.\d+)?)?$")


def parse_scale(rule: str) -> tuple[float, float, float]:
    """Parse a threshold rule into (coefficient, h exponent, log exponent)."""
    coeff, he, le = 1.0, 0.0, 0.0
    seen_sym = False
    for factor in rule.strip().split("*"):
        factor = factor.strip()
        m = _H_FACTOR.match(factor)
        if m:
            he += float(m.group(1) or 1.0)
            seen_sym = True
            continue
        m = _LOG_FACTOR.match(factor)
        if m:
            le += float(m.group(1) or 1.0)
            seen_sym = True
            continue
        try:
            coeff *= float(factor)
        except ValueError:
            raise UsageError(f"cannot parse scale rule factor {factor!r}") from None
    if not seen_sym and coeff <= 0:
        raise UsageError(f"scale rule {rule!r} must be positive")
    return coeff, he, le


def eval_scale(rule: str, h: int, absd: int) -> float:
    coeff, he, le = parse_scale(rule)
    return coeff * h**he * math.log(absd) ** le


# ---------------------------------------------------------------------------
# config file and option resolution

def load_config(path: Optional[str]) -> dict[str, str]:
    conf: dict[str, str] = {}
    if not path:
        return conf
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise UsageError(f"bad config line {line!r}")
                key, _, val = line.partition("=")
                conf[key.strip()] = val.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return conf


def _resolve(args, conf: dict, key: str, default, cast=None):
    # precedence: explicit flag > config file > default
    val = getattr(args, key.replace("-", "_"), None)
    if val is not None:
        return val
    if key in conf:
        raw = conf[key]
        return cast(raw) if cast else raw
    return default


def _resolve_threads(args, conf: dict) -> int:
    if getattr(args, "threads", None) is not None:
        return args.threads
    if "threads" in conf:
        return int(conf["threads"])
    env = os.environ.get("CLASSPRIME_THREADS")
    if env:
        return int(env)
    return 1


def _resolve_rules(args, conf: dict, key: str, default: list[str]) -> list[str]:
    val = getattr(args, key.replace("-", "_"), None)
    if val:
        return list(val)
    if key in conf:
        return [r.strip() for r in conf[key].split(",") if r.strip()]
    return default


# ---------------------------------------------------------------------------
# emission

def fmt_num(v) -> str:
    if v is None:
        return "none@cap"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def emit_rows(rows: list[dict], columns: list[str], out) -> None:
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(fmt_num(row[c]) for c in columns) + "\n")


def emit(payload, rows, columns, fmt: str, out, summary_stream=None) -> None:
    """CSV: table to `out`, summary lines to stderr.  JSON: one object."""
    if fmt == "json":
        json.dump(payload, out, indent=2, default=_json_default)
        out.write("\n")
        return
    emit_rows(rows, columns, out)
    summary = payload.get("summary") if isinstance(payload, dict) else None
    if summary:
        stream = summary_stream if summary_stream is not None else sys.stderr
        for k, v in summary.items():
            stream.write(f"# {k}={fmt_num(v) if not isinstance(v, str) else v}\n")


def _json_default(v):
    if isinstance(v, (bool,)):
        return v
    try:
        import numpy as np

        if isinstance(v, np.integer):
            return int(v)
        if isinstance(v, np.floating):
            return float(v)
        if isinstance(v, np.ndarray):
            return v.tolist()
    except ImportError:
        pass
    raise TypeError(f"not JSON serializable: {type(v)}")


# ---------------------------------------------------------------------------
# subcommands

def cmd_forms(args, conf) -> int:
    d = _require_disc(args, conf)
    g = group_structure(enumerate_reduced_forms(d, strict=False))
    rows = [
        {"class_index": i, "a": f.a, "b": f.b, "c": f.c}
        for i, f in enumerate(g.elements)
    ]
    payload = {
        "d": d.value,
        "h": g.h,
        "fundamental": d.fundamental,
        "orders": list(g.orders()),
        "rows": rows,
        "summary": {"h": g.h, "orders": ";".join(map(str, g.orders()))},
    }
    emit(payload, rows, ["class_index", "a", "b", "c"], args.format, args.out_stream)
    return 0


def cmd_least_primes(args, conf) -> int:
    d = _require_disc(args, conf)
    eps = _resolve(args, conf, "eps", 0.1, float)
    sieve_cap = _resolve(args, conf, "sieve-cap", arith.SIEVE_CAP_DEFAULT, int)
    g = group_structure(enumerate_reduced_forms(d, strict=False))
    absd = -d.value
    x_cap = _rule_value(_resolve(args, conf, "x-cap", "100*h2*log2"), g.h, absd)
    x1 = g.h * math.log(absd) ** (2.0 + eps)
    x2 = g.h**2 * math.log(absd) ** 2
    sweep_cap = max(x_cap, x1, x2)
    lp, ln, capped = stats._least_sweep(g, sweep_cap, sieve_cap=sieve_cap)
    rows = []
    for i, f in enumerate(g.elements):
        p = lp[i] if lp[i] is not None and lp[i] < x_cap else None
        rows.append(
            {
                "class_index": i,
                "a": f.a,
                "b": f.b,
                "c": f.c,
                "heegner_im": heegner.heegner_point(g, i).im,
                "least_prime": p,
                "is_ramified_prime": bool(p is not None and d.value % p == 0),
            }
        )
    present = [r["least_prime"] for r in rows if r["least_prime"] is not None]
    summary = {
        "h": g.h,
        "x_cap": x_cap,
        "max_least_prime": max(present) if len(present) == g.h else None,
        "median_least_prime": statistics.median(present) if present else None,
        "x_h_log_eps": x1,
        "r_prime_at_x_h_log_eps": stats.count_exceptional(lp, x1),
        "r_ideal_at_x_h_log_eps": stats.count_exceptional(ln, x1),
        "x_h2_log2": x2,
        "r_prime_at_x_h2_log2": stats.count_exceptional(lp, x2),
        "r_ideal_at_x_h2_log2": stats.count_exceptional(ln, x2),
        "r_prime_at_x_cap": stats.count_exceptional(lp, x_cap),
        "r_ideal_at_x_cap": stats.count_exceptional(ln, x_cap),
        "capped": capped,
    }
    payload = {"d": d.value, "rows": rows, "summary": summary}
    emit(
        payload,
        rows,
        [
            "class_index",
            "a",
            "b",
            "c",
            "heegner_im",
            "least_prime",
            "is_ramified_prime",
        ],
        args.format,
        args.out_stream,
    )
    return 0


def _rule_value(rule, h: int, absd: int) -> float:
    if isinstance(rule, (int, float)):
        return float(rule)
    return eval_scale(rule, h, absd)


def _require_disc(args, conf):
    dv = _resolve(args, conf, "disc", None, int)
    if dv is None:
        raise UsageError("--disc is required (flag or config)")
    return validate_discriminant(dv)


def cmd_variance(args, conf) -> int:
    d = _require_disc(args, conf)
    t = _resolve(args, conf, "t", None, float)
    if t is None or t < 2:
        raise UsageError("--t must be given and at least 2")
    w = stats.get_weight(_resolve(args, conf, "weight", "bump"))
    sieve_cap = _resolve(args, conf, "sieve-cap", arith.SIEVE_CAP_DEFAULT, int)
    g = group_structure(enumerate_reduced_forms(d, strict=False))
    rep = stats.variance_report(g, t, w, sieve_cap=sieve_cap)
    log2d = math.log(-d.value) ** 2
    row = {
        "d": d.value,
        "h": g.h,
        "t": t,
        "weight": w.kind,
        "psi_total": rep.psi_total,
        "variance": rep.variance,
        "variance_spectral": rep.variance_spectral,
        "var_ratio": rep.variance / (t * log2d),
        "delta_main_term": rep.delta_main_term,
        "main_term_rel": rep.psi_total / t - 1.0,
    }
    payload = {
        "rows": [row],
        "psi_by_class": [float(x) for x in rep.psi_by_class],
        "psi_by_char_abs": [float(abs(z)) for z in rep.psi_by_char],
    }
    emit(payload, [row], list(row.keys()), args.format, args.out_stream)
    return 0


def cmd_dirichlet_check(args, conf) -> int:
    d = _require_disc(args, conf)
    nmax = _resolve(args, conf, "n-max", 5000, int)
    if nmax < 1:
        raise UsageError("--n-max must be >= 1")
    counts = arith.representation_counts_upto(nmax, d)
    formula = arith.dirichlet_r_upto(nmax, d)
    mismatch = None
    for n in range(1, nmax + 1):
        if counts[n] != formula[n]:
            mismatch = n
            break
    max_split_r = 0
    for p in arith.sieve_primes(nmax).tolist():
        if d.value % p and arith.kronecker(d.value, p) == 1:
            max_split_r = max(max_split_r, int(counts[p]))
    row = {
        "d": d.value,
        "n_max": nmax,
        "status": "ok" if mismatch is None else "mismatch",
        "first_mismatch": mismatch if mismatch is not None else "",
        "max_split_r": max_split_r,
        "w_d": arith.unit_count(d.value),
    }
    emit({"rows": [row]}, [row], list(row.keys()), args.format, args.out_stream)
    if mismatch is not None:
        raise OracleMismatch(
            f"representation count and divisor formula differ first at n={mismatch}"
        )
    return 0


def cmd_heegner(args, conf) -> int:
    d = _require_disc(args, conf)
    psi_value = _resolve(args, conf, "psi-value", 1.0, float)
    if psi_value <= 0:
        raise UsageError("--psi-value must be positive")
    sieve_cap = _resolve(args, conf, "sieve-cap", arith.SIEVE_CAP_DEFAULT, int)
    g = group_structure(enumerate_reduced_forms(d, strict=False))
    absd = -d.value
    x_cap = _rule_value(_resolve(args, conf, "x-cap", "100*h2*log2"), g.h, absd)
    l_terms = _resolve(args, conf, "l-terms", max(10**6, 100 * absd), int)
    lp = stats.least_primes(g, x_cap, sieve_cap=sieve_cap)
    rep = heegner.repulsion_report(g, lp)
    est = arith.l_one_chi(d, l_terms)
    pairing, const = heegner.cramer_class_number_pairing(g, psi_value)
    rows = []
    for r, pt in zip(rep.rows, heegner.heegner_points(g)):
        f = g.elements[r.class_index]
        rows.append(
            {
                "class_index": r.class_index,
                "a": f.a,
                "b": f.b,
                "c": f.c,
                "heegner_re": pt.re,
                "heegner_im": pt.im,
                "least_prime": r.least_prime,
                "bound_ok": r.bound_ok,
            }
        )
    summary = {
        "h": g.h,
        "psi_value": psi_value,
        "coefficient_bound_fraction": heegner.coefficient_bound_fraction(g, psi_value),
        "cramer_prediction": heegner.cramer_prediction(g, psi_value, est.value),
        "cramer_h_log_pairing": pairing,
        "pairing_constant": const,
        "l_one": est.value,
        "l_one_tail_bound": est.tail_bound,
        "max_least_prime": rep.max_least_prime,
        "median_least_prime": rep.median_least_prime,
        "argmax_a_class": rep.argmax_a_class,
    }
    payload = {"d": d.value, "rows": rows, "summary": summary}
    emit(
        payload,
        rows,
        [
            "class_index",
            "a",
            "b",
            "c",
            "heegner_re",
            "heegner_im",
            "least_prime",
            "bound_ok",
        ],
        args.format,
        args.out_stream,
    )
    return 0


def _scan_columns(x_rules: list[str]) -> list[str]:
    cols = ["d", "h"]
    for i in range(1, len(x_rules) + 1):
        cols += [f"x{i}", f"r{i}_ideal", f"r{i}_prime"]
    cols += ["max_p", "median_p", "t", "var", "var_ratio"]
    return cols


def _scan_one(dv: int, x_rules, t_rule, w, sieve_cap, h_cap) -> dict:
    d = validate_discriminant(dv)
    g = group_structure(enumerate_reduced_forms(d))
    if g.h > h_cap:
        raise UsageError(f"h = {g.h} exceeds cap {h_cap}")
    absd = -dv
    xs = [eval_scale(r, g.h, absd) for r in x_rules]
    sweep_cap = max(xs) if xs else 2.0
    lp, ln, _ = stats._least_sweep(g, sweep_cap, sieve_cap=sieve_cap)
    t = max(2.0, eval_scale(t_rule, g.h, absd))
    rep = stats.variance_report(g, t, w, sieve_cap=sieve_cap)
    row: dict = {"d": dv, "h": g.h}
    for i, x in enumerate(xs, 1):
        row[f"x{i}"] = x
        row[f"r{i}_ideal"] = stats.count_exceptional(ln, x)
        row[f"r{i}_prime"] = stats.count_exceptional(lp, x)
    present = [p for p in lp if p is not None]
    row["max_p"] = max(present) if len(present) == g.h else None
    row["median_p"] = statistics.median(present) if present else None
    row["t"] = t
    row["var"] = rep.variance
    row["var_ratio"] = rep.variance / (t * math.log(absd) ** 2)
    return row


def cmd_scan(args, conf) -> int:
    rng = _resolve(args, conf, "range", None)
    if rng is None:
        raise UsageError("--range LO HI is required")
    if isinstance(rng, str):
        rng = [int(x) for x in rng.split(",")]
    lo, hi = int(rng[0]), int(rng[1])
    if lo > hi:
        lo, hi = hi, lo
    x_rules = _resolve_rules(args, conf, "x-rule", ["h*log2.1", "h2*log2"])
    t_rule = _resolve(args, conf, "t-rule", "h2*log2")
    w = stats.get_weight(_resolve(args, conf, "weight", "bump"))
    sieve_cap = _resolve(args, conf, "sieve-cap", arith.SIEVE_CAP_DEFAULT, int)
    h_cap = _resolve(args, conf, "h-cap", 10**6, int)
    threads = _resolve_threads(args, conf)
    for r in x_rules + [t_rule]:
        parse_scale(r)  # validate up front -> usage error, not mid-scan
    discs = [
        dv
        for dv in range(hi, lo - 1, -1)  # decreasing D
        if dv < 0 and dv % 4 in (0, 1) and validate_discriminant(dv).fundamental
    ]

    def worker(dv: int):
        return _scan_one(dv, x_rules, t_rule, w, sieve_cap, h_cap)

    rows = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            futures = [(dv, ex.submit(worker, dv)) for dv in discs]
            for dv, fut in futures:
                try:
                    rows.append(fut.result())
                except Exception as exc:  # log and continue, order preserved
                    print(f"scan: D={dv} failed: {exc}", file=sys.stderr)
    else:
        for dv in discs:
            try:
                rows.append(worker(dv))
            except Exception as exc:
                print(f"scan: D={dv} failed: {exc}", file=sys.stderr)
    cols = _scan_columns(x_rules)
    if args.format == "json":
        json.dump(rows, args.out_stream, indent=2, default=_json_default)
        args.out_stream.write("\n")
    else:
        emit_rows(rows, cols, args.out_stream)
    return 0


def cmd_selftest(args, conf) -> int:
    from . import acceptance

    only = getattr(args, "only", None)
    results = acceptance.run(numbers=[int(x) for x in only] if only else None)
    return 0 if all(r.passed for r in results) else 1


# ---------------------------------------------------------------------------
# argument plumbing

def _add_common(sp) -> None:
    sp.add_argument("--format", choices=("csv", "json"), default=None)
    sp.add_argument("--out", default=None)
    sp.add_argument("--config", default=None)
    sp.add_argument("--sieve-cap", type=int, default=None)
    sp.add_argument("--h-cap", type=int, default=None)
    sp.add_argument("--threads", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="classprime",
        description="class groups of imaginary quadratic discriminants and "
        "the distribution of primes among ideal classes",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("forms", help="reduced forms, h, cyclic orders for one D")
    sp.add_argument("--disc", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_forms)

    sp = sub.add_parser("least-primes", help="per-class least primes and R thresholds")
    sp.add_argument("--disc", type=int, default=None)
    sp.add_argument("--x-cap", default=None, help="absolute value or rule like 100*h2*log2")
    sp.add_argument("--eps", type=float, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_least_primes)

    sp = sub.add_parser("variance", help="psi sums and cross-class variance at scale T")
    sp.add_argument("--disc", type=int, default=None)
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--weight", choices=("bump", "indicator"), default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_variance)

    sp = sub.add_parser("scan", help="tabulate h, R, least primes, variance over a range")
    sp.add_argument("--range", type=int, nargs=2, default=None, metavar=("LO", "HI"))
    sp.add_argument("--x-rule", action="append", default=None)
    sp.add_argument("--t-rule", default=None)
    sp.add_argument("--weight", choices=("bump", "indicator"), default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("dirichlet-check", help="representation counts vs divisor formula")
    sp.add_argument("--disc", type=int, default=None)
    sp.add_argument("--n-max", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_dirichlet_check)

    sp = sub.add_parser("heegner", help="CM points, coefficient bounds, repulsion table")
    sp.add_argument("--disc", type=int, default=None)
    sp.add_argument("--psi-value", type=float, default=None)
    sp.add_argument("--x-cap", default=None)
    sp.add_argument("--l-terms", type=int, default=None)
    _add_common(sp)
    sp.set_defaults(func=cmd_heegner)

    sp = sub.add_parser("selftest", help="run the acceptance checks")
    sp.add_argument("--only", action="append", default=None, metavar="N")
    _add_common(sp)
    sp.set_defaults(func=cmd_selftest)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        conf = load_config(getattr(args, "config", None))
        fmt = _resolve(args, conf, "format", "csv")
        if fmt not in ("csv", "json"):
            raise UsageError(f"bad format {fmt!r}")
        args.format = fmt
        out_path = _resolve(args, conf, "out", None)
        if out_path:
            with open(out_path, "w", encoding="utf-8", newline="") as fh:
                args.out_stream = fh
                return args.func(args, conf)
        args.out_stream = sys.stdout
        return args.func(args, conf)
    except (NotADiscriminant, NotFundamental, InvalidIdealBasis, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (arith.LimitTooLarge, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except IdentityMismatch as exc:
        print(f"identity violation: {exc}", file=sys.stderr)
        return 3
    except OracleMismatch as exc:
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
