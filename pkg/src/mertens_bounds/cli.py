"""Command-line entry point.

Exit status: 0 success, 1 a checked inequality failed, 2 bad usage or input.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import approximant as A
from . import explicit_formula as E
from . import sieve as S
from . import squarefree as Q
from . import tightness as Tt
from . import zeta as Z
from ._numerics import fmt, write_csv
from .errors import (
    FormatError, HypothesisViolationError, IncompleteTableError, InvalidParameterError, MertensBoundsError,
    PotentialZeroError, RangeError,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
BOOL_KEYS = {"resume", "long", "deterministic"}
RANGE_FLAGS = {"--range", "--x-range", "--sample", "--scan"}
PLOT_HEADER = ("u", "approx", "target", "diff")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    command: tuple
    options: dict = field(default_factory=dict)
    workers: int = 1
    deterministic: bool = True

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "RunConfig":
        opts = {k: v for k, v in vars(ns).items() if k not in ("handler", "command", "action", "workers", "deterministic", "config")}
        cmd = tuple(c for c in (ns.command, getattr(ns, "action", None)) if c)
        workers = ns.workers if ns.workers is not None else S.default_workers()
        if workers < 1:
            raise UsageError("--workers must be >= 1")
        return cls(cmd, opts, workers, ns.deterministic)


# ---------------------------------------------------------------- argument helpers

def parse_range(text: str, positive: bool = False) -> tuple:
    """``lo:hi:n`` with ``lo <= hi`` and integer ``n >= 1``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range {text!r} must have the form lo:hi:n")
    try:
        lo, hi = float(parts[0]), float(parts[1])
        n = float(parts[2])
    except ValueError:
        raise UsageError(f"range {text!r} has a non-numeric field") from None
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise UsageError(f"range {text!r} must be finite")
    if n != int(n) or n < 1:
        raise UsageError(f"range {text!r}: n must be a positive integer")
    if hi < lo:
        raise UsageError(f"range {text!r}: needs lo <= hi")
    if positive and lo < 1:
        raise UsageError(f"range {text!r}: needs lo >= 1")
    return lo, hi, int(n)


def log_samples(lo: float, hi: float, n: int) -> list:
    """Distinct integers ``floor(x)`` for ``n`` log-spaced ``x`` in ``[lo, hi]``, clipped to ``[ceil(lo), floor(hi)]``."""
    first, last = math.ceil(lo), math.floor(hi)
    if first > last:
        raise UsageError(f"no integer in [{fmt(lo)}, {fmt(hi)}]")
    if n == 1:
        return [first]
    xs = np.exp(np.linspace(math.log(lo), math.log(hi), n))
    return sorted({min(last, max(first, int(math.floor(x)))) for x in xs})


def read_config(path) -> list:
    """Turn a flat ``key = value`` file into command-line tokens."""
    tokens = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if not key or key == "config":
                raise UsageError(f"{path}:{lineno}: invalid key {key!r}")
            if key in BOOL_KEYS:
                flag = value.lower()
                if flag not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                    raise UsageError(f"{path}:{lineno}: {key} needs a boolean value")
                tokens.append(f"--{key}" if flag in ("1", "true", "yes", "on") else f"--no-{key}")
            else:
                tokens.append(f"--{key}={value}")
    return tokens


def _glue_ranges(argv):
    """Attach range values to their flag so ``--range -5:5:100`` is not read as an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in RANGE_FLAGS and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _config_path(argv):
    for i, tok in enumerate(argv):
        if tok == "--config":
            if i + 1 >= len(argv):
                raise UsageError("--config needs a file")
            return argv[i + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _checkpoints_at(path, xs) -> dict:
    table = S.read_checkpoints(path)
    missing = [x for x in xs if x not in table]
    if missing:
        raise UsageError(f"{path} has no checkpoint at x={missing[0]} ({len(missing)} missing); "
                         "sieve with --sample using the same range")
    return table


def _emit_csv(path, header, rows, out):
    if path:
        write_csv(path, header, rows)
    else:
        out.write(",".join(header) + "\n")
        for r in rows:
            out.write(",".join(fmt(v) for v in r) + "\n")


def _report_failures(label, failures, err):
    err.write(f"{label}: {len(failures)} failing sample(s)\n")
    for line in failures:
        err.write(f"  {line}\n")


# ---------------------------------------------------------------- handlers

def cmd_sieve(ns, cfg, out, err):
    points = []
    for text in ns.sample or ():
        points.extend(log_samples(*parse_range(text, positive=True)))
    points = [p for p in points if p <= ns.limit]
    scans = []
    for text in ns.scan or ():
        parts = text.split(":")
        if len(parts) != 3 or parts[0] not in S.KINDS:
            raise UsageError(f"--scan {text!r} must be kind:lo:hi with kind in {', '.join(S.KINDS)}")
        try:
            scans.append((parts[0], int(float(parts[1])), int(float(parts[2]))))
        except ValueError:
            raise UsageError(f"--scan {text!r}: lo and hi must be numbers") from None
    run = S.sieve_pass(ns.limit, stride=ns.stride, points=points, scans=scans, segment=ns.segment,
                       workers=cfg.workers, out_path=ns.out, resume=ns.resume)
    last = run.checkpoints[-1]
    out.write(f"limit={ns.limit} checkpoints={len(run.checkpoints)} M={last.M} m={fmt(last.m)} Q={last.Q} R={fmt(last.R)}\n")
    for s in run.sups:
        where = "left limit at" if s.left_limit else "at"
        out.write(f"sup {s.kind} on [{s.lo}, {s.hi}] = {fmt(s.sup)} {where} x={s.argmax}\n")
    return EXIT_OK


def cmd_zeros(ns, cfg, out, err):
    table = Z.find_zeros(ns.height, step=ns.step)
    Z.export_table(table, ns.out)
    out.write(f"zeros={len(table.zeros)} height={fmt(ns.height)} complete={int(table.complete)}\n")
    if not table.complete:
        err.write(f"zero count {len(table.zeros)} differs from N(T) = {Z.exact_zero_count(ns.height)}\n")
        return EXIT_FAIL
    return EXIT_OK


def cmd_residues(ns, cfg, out, err):
    table = Z.import_zeros(ns.zeros, ns.height)
    table = Z.residues(table)
    Z.export_table(table, ns.out)
    worst = max((z.err for z in table.zeros), default=0.0)
    out.write(f"residues={len(table.zeros)} max_err={fmt(worst)} complete={int(table.complete)}\n")
    return EXIT_OK


def cmd_zeta_scan(ns, cfg, out, err):
    try:
        r = Z.scan_report(ns.T, ns.lo, ns.hi)
    except PotentialZeroError as exc:
        err.write(f"{exc}\n")
        return EXIT_FAIL
    out.write(f"T={fmt(r.T)} sigma=[{fmt(r.sigma_lo)}, {fmt(r.sigma_hi)}] max_inv_zeta={fmt(r.value)} "
              f"argmax={fmt(r.argmax)} surrogate_error={fmt(r.surrogate_error)} direct_error={fmt(r.direct_error)}\n")
    return EXIT_OK


def _certificate_rows(T, sigmas, xs, residues_path, mertens_path, variant):
    table = Z.import_zeros(residues_path)
    if not table.has_residues:
        raise UsageError(f"{residues_path} carries no residues; run the residues command first")
    checkpoints = _checkpoints_at(mertens_path, xs)
    line_max = Z.zeta_line_max(T)
    rows, failures = [], []
    for sigma in sigmas:
        params = A.WeightParams(T, sigma)
        for x in xs:
            c = checkpoints[x]
            observed = c.M if sigma == 0 else c.m
            try:
                ev = E.evaluate_formula(x, sigma, params, table, variant, line_max)
            except HypothesisViolationError as exc:
                failures.append(f"x={x} sigma={fmt(sigma)}: {exc}")
                continue
            row = E.CertificateRow(ev, observed)
            rows.append(row)
            if not row.ok:
                failures.append(f"x={x} sigma={fmt(sigma)} observed={fmt(observed)} predicted={fmt(ev.predicted)} "
                                f"envelope={fmt(ev.envelope)} slack={fmt(row.slack)}")
    return rows, failures


def _variant(c):
    return E.GENERIC if c is None else E.Variant(c)


def cmd_bound(ns, cfg, out, err):
    if ns.sigma not in (0.0, 1.0):
        raise UsageError("--sigma must be 0 or 1")
    xs = log_samples(*parse_range(ns.x_range, positive=True))
    rows, failures = _certificate_rows(ns.T, [ns.sigma], xs, ns.residues, ns.mertens, _variant(ns.squarefree_c))
    _emit_csv(ns.out, E.CERTIFICATE_HEADER, [r.row() for r in rows], out)
    if failures:
        _report_failures("bound", failures, err)
        return EXIT_FAIL
    return EXIT_OK


def cmd_verify(ns, cfg, out, err):
    variant = E.GENERIC if ns.action == "cor-mertens" else E.Variant(ns.c)
    xs = log_samples(*parse_range(ns.x_range, positive=True))
    rows, failures = _certificate_rows(ns.T, [0.0, 1.0], xs, ns.residues, ns.mertens, variant)
    if ns.out:
        write_csv(ns.out, E.CERTIFICATE_HEADER, [r.row() for r in rows])
    for sigma in (0.0, 1.0):
        sub = [r for r in rows if r.evaluation.sigma == sigma]
        if sub:
            worst = min(sub, key=lambda r: r.slack)
            rel = min(r.slack / r.evaluation.envelope for r in sub)
            out.write(f"sigma={fmt(sigma)} samples={len(sub)} min_slack={fmt(worst.slack)} at x={fmt(worst.evaluation.x)} "
                      f"min_relative_slack={fmt(rel)}\n")
    if failures:
        _report_failures(f"verify {ns.action}", failures, err)
        return EXIT_FAIL
    out.write(f"verify {ns.action}: all {len(rows)} samples within the envelope\n")
    return EXIT_OK


def cmd_sqfree_constants(ns, cfg, out, err):
    if ns.q not in Q.SMALL_PRIMES:
        raise UsageError(f"--q must be one of {', '.join(map(str, Q.SMALL_PRIMES))}")
    if ns.q == 13 and not ns.long:
        raise UsageError("q = 13 scans a period of 9.02e8 integers; pass --long to run it")
    r = Q.short_interval_constants(ns.q, workers=cfg.workers)
    out.write(f"c1={r.c1} c2<={r.c2_star} period={r.period}\n")
    pub = r.published_c2
    if pub is not None and pub != r.c2_star:
        out.write(f"published c2={pub} differs from the computed optimum\n")
    return EXIT_OK


def cmd_sqfree_bound(ns, cfg, out, err):
    for cert in Q.preset_bounds(ns.preset, ns.x):
        upper = "" if math.isinf(cert.valid_to) else f", {fmt(cert.valid_to)}]"
        lower = "(" if cert.open_left else "["
        out.write(f"{cert.label}: |R(x)| <= {cert}  on {lower}{fmt(cert.valid_from)}{upper or ', inf)'}\n")
        out.write(f"  value at x={fmt(ns.x)}: {fmt(cert(ns.x))}\n")
    return EXIT_OK


def cmd_sqfree_verify(ns, cfg, out, err):
    xs = log_samples(*parse_range(ns.x_range, positive=True))
    table = _checkpoints_at(ns.mertens, xs)
    checked, failures = 0, []
    for name in sorted(Q.PRESETS):
        for x in xs:
            try:
                certs = Q.preset_bounds(name, x)
            except InvalidParameterError:
                continue
            R = abs(table[x].R)
            for cert in certs:
                if not cert.contains(x):
                    continue
                checked += 1
                if not R <= cert(x):
                    failures.append(f"{name} {cert.label} x={x} |R|={fmt(R)} bound={fmt(cert(x))}")
    out.write(f"sqfree verify: {checked} certificate evaluations on {len(xs)} samples\n")
    if failures:
        _report_failures("sqfree verify", failures, err)
        return EXIT_FAIL
    return EXIT_OK


def cmd_tightness(ns, cfg, out, err):
    if ns.count < 1:
        raise UsageError("--count must be >= 1")
    params = Tt.FejerParams(ns.K, ns.T_plus)
    N_list = Tt.admissible_N(ns.T_plus, ns.count, ns.cap)
    if not N_list:
        raise UsageError(f"no admissible N with x_N <= {fmt(ns.cap)}")
    rep = Tt.tightness_experiment(params, N_list, ns.cap, cfg.workers)
    Tt.write_report(ns.out, rep)
    out.write(f"K={ns.K} T+={fmt(ns.T_plus)} l1={fmt(rep.l1)} TV={fmt(rep.total_variation)} A(1)={fmt(rep.A1)}\n")
    failures = []
    for r in rep.rows:
        out.write(f"N={r.N} x={fmt(r.x)} S/x={fmt(r.ratio)} target={fmt(r.target)} envelope={fmt(r.envelope)}\n")
        if not r.within:
            failures.append(f"N={r.N}: |S/x - target| = {fmt(abs(r.ratio - r.target))} > {fmt(r.envelope)}")
        if not r.harmonic_within:
            failures.append(f"N={r.N}: harmonic deviation {fmt(abs(r.harmonic - r.harmonic_target))} > {fmt(r.harmonic_envelope)}")
    if not rep.envelope_shrinking:
        failures.append("envelope does not shrink with N")
    if failures:
        _report_failures("tightness", failures, err)
        return EXIT_FAIL
    return EXIT_OK


def cmd_approx_plot(ns, cfg, out, err):
    lo, hi, n = parse_range(ns.range)
    if ns.lam == 0:
        raise UsageError("--lambda must be nonzero")
    _emit_csv(ns.out, PLOT_HEADER, A.plot_rows(ns.lam, lo, hi, n), out)
    return EXIT_OK


def cmd_approx_l1(ns, cfg, out, err):
    if ns.lam == 0:
        raise UsageError("--lambda must be nonzero")
    value, tail = A.l1_distance(ns.lam)
    out.write(f"lambda={fmt(ns.lam)} l1={fmt(value)} optimum={fmt(A.l1_min(ns.lam))} tail={fmt(tail)}\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat key=value file; its entries override flags")
    common.add_argument("--workers", type=int, help=f"worker threads (default: ${S.WORKERS_ENV} or 1)")
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True,
                        help="fixed reduction order (default on)")

    root = _Parser(prog="mertens-bounds", description="Explicit bounds for the Mertens function and square-free counts.")
    sub = root.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def leaf(parent, name, handler, help_text):
        p = parent.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(handler=handler)
        return p

    p = leaf(sub, "sieve", cmd_sieve, "Mobius sieve with M, m, Q, R checkpoints")
    p.add_argument("--limit", type=int, required=True)
    p.add_argument("--stride", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--resume", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--segment", type=int, default=S.DEFAULT_SEGMENT)
    p.add_argument("--sample", action="append", metavar="LO:HI:N", help="also checkpoint log-spaced integers")
    p.add_argument("--scan", action="append", metavar="KIND:LO:HI", help=f"exact supremum; KIND in {', '.join(S.KINDS)}")

    p = leaf(sub, "zeros", cmd_zeros, "zeros of zeta on the critical line up to a height")
    p.add_argument("--height", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--step", type=float, default=0.05)

    p = leaf(sub, "residues", cmd_residues, "attach 1/zeta'(rho) to a zero list")
    p.add_argument("--zeros", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--height", type=float, help="height the zero list is complete to")

    p = leaf(sub, "zeta-scan", cmd_zeta_scan, "max of 1/|zeta(sigma+iT)| over a sigma interval")
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)

    p = leaf(sub, "bound", cmd_bound, "certificate CSV for one sigma")
    p.add_argument("--residues", required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--x-range", required=True, metavar="LO:HI:N")
    p.add_argument("--squarefree-c", type=float)
    p.add_argument("--mertens", required=True)
    p.add_argument("--out")

    p = sub.add_parser("verify", help="check a corollary envelope against sieved values")
    vsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, help_text in (("cor-mertens", "generic envelope, sigma in {0, 1}"),
                            ("cor-squarefree", "square-free improved envelope, sigma in {0, 1}")):
        v = leaf(vsub, name, cmd_verify, help_text)
        v.add_argument("--T", type=float, required=True)
        v.add_argument("--x-range", required=True, metavar="LO:HI:N")
        v.add_argument("--mertens", required=True)
        v.add_argument("--residues", required=True)
        v.add_argument("--out")
        if name == "cor-squarefree":
            v.add_argument("--c", type=float, default=0.0134)

    p = sub.add_parser("sqfree", help="square-free counting constants and bounds")
    qsub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    q = leaf(qsub, "constants", cmd_sqfree_constants, "short-interval constants for q-free numbers")
    q.add_argument("--q", type=int, required=True)
    q.add_argument("--long", action=argparse.BooleanOptionalAction, default=False)
    q = leaf(qsub, "bound", cmd_sqfree_bound, "bound on |R(x)| from a preset")
    q.add_argument("--preset", choices=sorted(Q.PRESETS), required=True)
    q.add_argument("--x", type=float, required=True)
    q = leaf(qsub, "verify", cmd_sqfree_verify, "check preset bounds against sieved R(x)")
    q.add_argument("--x-range", required=True, metavar="LO:HI:N")
    q.add_argument("--mertens", required=True)

    p = leaf(sub, "tightness", cmd_tightness, "S(x_N)/x_N against tanh(pi/2T)")
    p.add_argument("--T-plus", type=float, required=True)
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--count", type=int, default=3)
    p.add_argument("--cap", type=float, default=Tt.RANGE_CAP)
    p.add_argument("--out", required=True)

    p = sub.add_parser("approx", help="band-limited approximant data")
    asub = p.add_subparsers(dest="action", required=True, parser_class=_Parser)
    a = leaf(asub, "plot", cmd_approx_plot, "CSV of the approximant and its target")
    a.add_argument("--lambda", dest="lam", type=float, required=True)
    a.add_argument("--range", required=True, metavar="LO:HI:N")
    a.add_argument("--out")
    a = leaf(asub, "l1", cmd_approx_l1, "L1 distance to the target")
    a.add_argument("--lambda", dest="lam", type=float, required=True)
    return root


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    argv = _glue_ranges(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        path = _config_path(argv)
        if path is not None:
            argv = argv + read_config(path)
        try:
            ns = parser.parse_args(argv)
        except SystemExit as exc:  # --help
            return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
        cfg = RunConfig.from_namespace(ns)
        return ns.handler(ns, cfg, out, err)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (InvalidParameterError, FormatError, RangeError, IncompleteTableError) as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        err.write(f"usage error: {exc.filename or ''}: {exc.strerror}\n")
        return EXIT_USAGE
    except MertensBoundsError as exc:
        err.write(f"failed: {exc}\n")
        return EXIT_FAIL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
