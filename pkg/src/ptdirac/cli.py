"""Command-line front end.

Subcommands:
  analytic   closed-form report: coefficients, level energies, verdicts
  verify     self-check battery over both routes (exit 1 on any failure)
  spectrum   truncate, scramble, diagonalize, classify one parameter point
  sweep      CSV of level energies and verdicts over a parameter grid
  critical   analytic phase boundary vs blind numeric bisection
  lll        zero-mode family and its annihilation residuals
  jc         ladder-pair commutator and factorization residuals

Configuration merges three layers, later wins: built-in defaults, a config
file (--config PATH or the PTDIRAC_CONFIG environment variable), then
explicit flags.  Config files hold 'key = value' lines; '#' starts a
comment; unknown keys are rejected.

Exit codes: 0 success, 1 a verification or agreement check failed, 2 bad
input (usage, config, degenerate or unbracketed requests).  Floats are
printed with repr for exact round-tripping; JSON output stores floats as
repr strings.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import re
import sys
from typing import Dict, List, Optional, Sequence, Tuple

from .params import (
    Branch,
    DegenerateCoefficientsError,
    PhaseVerdict,
    PhysParams,
    Valley,
    Vary,
    classify_phase,
    critical_point,
    derive_coeffs,
    level_energy,
    normalizability,
)
from . import opalg
from .opalg import (
    P1T,
    P2T,
    OperatorExpr,
    build_hamiltonian,
    eigen_residual,
    jc_verify,
    lll_annihilation_residual,
    lll_state,
    operator_residual_on_probes,
    pt_commutator_residual,
    pt_eigenfactor,
    standard_probes,
    time_reversal_conjugate,
)
from .spectral import (
    NoTransitionBracketedError,
    build_truncated,
    classify_spectrum,
    dump_matrix,
    eigensolve,
    find_exceptional_point,
    phase_verdict_numeric,
    scramble,
)


class ConfigError(Exception):
    pass


DEFAULTS: Dict[str, object] = {
    "vf": 1.37,
    "lambda": 0.5,
    "k1": 0.02,
    "b0": 100.0,
    "e": 1.0,
    "c": 137.0,
    "hbar": 1.0,
    "n_max": 5,
    "branch": "I",
    "valley": "primary",
    "n_tr": 40,
    "tol": 1e-8,
    "seed": 0,
    "output": None,
    "format": "csv",
}

_CONVERTERS = {
    "vf": float,
    "lambda": float,
    "k1": float,
    "b0": float,
    "e": float,
    "c": float,
    "hbar": float,
    "n_max": int,
    "branch": str,
    "valley": str,
    "n_tr": int,
    "tol": float,
    "seed": int,
    "output": str,
    "format": str,
}


@dataclasses.dataclass
class RunConfig:
    vf: float
    lambda_: float
    k1: float
    b0: float
    e: float
    c: float
    hbar: float
    n_max: int
    branch: Branch
    valley: Valley
    n_tr: int
    tol: float
    seed: int
    output: Optional[str]
    format: str

    def params(self) -> PhysParams:
        return PhysParams(
            v_f=self.vf,
            lam=self.lambda_,
            k1=self.k1,
            b0=self.b0,
            e=self.e,
            c=self.c,
            hbar=self.hbar,
        )


def _read_config_file(path: str) -> Dict[str, object]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from exc
    out: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(
                f"{path}:{lineno}: bad value for {key!r}: {value!r}"
            ) from exc
    return out


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    path = getattr(args, "config", None)
    if path is None:
        env_path = os.environ.get("PTDIRAC_CONFIG")
        if env_path:
            if not os.path.exists(env_path):
                raise ConfigError(
                    f"PTDIRAC_CONFIG points at a missing file: {env_path!r}"
                )
            path = env_path
    if path is not None:
        merged.update(_read_config_file(path))
    for key in DEFAULTS:
        attr = "lambda_" if key == "lambda" else key
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    branch_txt = str(merged["branch"])
    try:
        branch = Branch(branch_txt)
    except ValueError:
        raise ConfigError(f"branch must be 'I' or 'II', got {branch_txt!r}") from None
    valley_txt = str(merged["valley"])
    try:
        valley = Valley(valley_txt)
    except ValueError:
        raise ConfigError(
            f"valley must be 'primary' or 'time_reversed', got {valley_txt!r}"
        ) from None
    fmt = str(merged["format"])
    if fmt not in ("csv", "json", "text"):
        raise ConfigError(f"format must be csv, json or text, got {fmt!r}")
    if int(merged["n_max"]) < 1:
        raise ConfigError("n_max must be at least 1")
    if int(merged["n_tr"]) < 2:
        raise ConfigError("n_tr must be at least 2")
    return RunConfig(
        vf=float(merged["vf"]),
        lambda_=float(merged["lambda"]),
        k1=float(merged["k1"]),
        b0=float(merged["b0"]),
        e=float(merged["e"]),
        c=float(merged["c"]),
        hbar=float(merged["hbar"]),
        n_max=int(merged["n_max"]),
        branch=branch,
        valley=valley,
        n_tr=int(merged["n_tr"]),
        tol=float(merged["tol"]),
        seed=int(merged["seed"]),
        output=None if merged["output"] is None else str(merged["output"]),
        format=fmt,
    )


def _write_output(cfg: RunConfig, text: str) -> None:
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        with open(cfg.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# JSON float policy
# ---------------------------------------------------------------------------

_FLOAT_RE = re.compile(
    r"^[+-]?(?:\d+\.?\d*(?:[eE][+-]?\d+)?|\d*\.\d+(?:[eE][+-]?\d+)?|inf|nan)$"
)


def jsonable(obj):
    """Floats become repr strings so JSON round-trips them bit-exactly."""
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, float):
        return repr(obj)
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def from_jsonable(obj):
    """Inverse of jsonable: float-shaped strings back to floats (values
    only, never keys)."""
    if isinstance(obj, str) and _FLOAT_RE.match(obj):
        return float(obj)
    if isinstance(obj, dict):
        return {k: from_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [from_jsonable(v) for v in obj]
    return obj


# ---------------------------------------------------------------------------
# analytic report
# ---------------------------------------------------------------------------


def build_analytic_report(cfg: RunConfig) -> dict:
    p = cfg.params()
    co = derive_coeffs(p)
    report: dict = {
        "params": {
            "vf": p.v_f,
            "lambda": p.lam,
            "k1": p.k1,
            "b0": p.b0,
            "e": p.e,
            "c": p.c,
            "hbar": p.hbar,
        },
        "derived": {
            "a": float(co.a_coef),
            "b": float(co.b_coef),
            "c1": float(co.c1),
            "c2": float(co.c2),
            "k": float(co.k_coef),
            "d1": None if co.d1_branch_i is None else float(co.d1_branch_i),
            "d2": None if co.d1_branch_ii is None else float(co.d1_branch_ii),
        },
        "branches": {},
        "critical": {},
    }
    for branch in (Branch.I, Branch.II):
        verdict = classify_phase(p, branch)
        try:
            normalizable = normalizability(p, branch)
        except DegenerateCoefficientsError:
            normalizable = None
        levels = []
        for n in range(cfg.n_max):
            plus, minus = level_energy(p, n, branch)
            levels.append(
                {
                    "n": n,
                    "re_E_plus": plus.real,
                    "im_E_plus": plus.imag,
                    "re_E_minus": minus.real,
                    "im_E_minus": minus.imag,
                }
            )
        gap, _ = level_energy(p, 0, branch)
        report["branches"][branch.value] = {
            "verdict": verdict.value,
            "normalizable": normalizable,
            "re_gap": gap.real,
            "im_gap": gap.imag,
            "levels": levels,
        }
    for vary, key in ((Vary.LAMBDA, "lambda"), (Vary.B0, "b0")):
        try:
            report["critical"][key] = critical_point(p, vary)
        except DegenerateCoefficientsError:
            report["critical"][key] = "degenerate"
        except ValueError:
            report["critical"][key] = "undefined"
    return report


def _render_analytic_text(report: dict) -> str:
    lines: List[str] = []
    pr = report["params"]
    lines.append(
        "parameters: vf={vf!r} lambda={lam!r} k1={k1!r} b0={b0!r} "
        "e={e!r} c={c!r} hbar={hbar!r}".format(
            vf=pr["vf"],
            lam=pr["lambda"],
            k1=pr["k1"],
            b0=pr["b0"],
            e=pr["e"],
            c=pr["c"],
            hbar=pr["hbar"],
        )
    )
    de = report["derived"]
    lines.append(
        f"derived: a={de['a']!r} b={de['b']!r} c1={de['c1']!r} c2={de['c2']!r}"
    )
    lines.append(f"         k={de['k']!r} d1={de['d1']!r} d2={de['d2']!r}")
    for name, info in report["branches"].items():
        lines.append(
            f"branch {name}: verdict={info['verdict']} "
            f"normalizable={info['normalizable']} "
            f"gap={info['re_gap']!r}{info['im_gap']:+}j".replace("+0.0j", "")
        )
        for lv in info["levels"]:
            lines.append(
                "  n={n} E+=({rp!r}, {ip!r}) E-=({rm!r}, {im!r})".format(
                    n=lv["n"],
                    rp=lv["re_E_plus"],
                    ip=lv["im_E_plus"],
                    rm=lv["re_E_minus"],
                    im=lv["im_E_minus"],
                )
            )
    crit = report["critical"]
    lines.append(f"critical lambda: {crit['lambda']!r}")
    lines.append(f"critical b0: {crit['b0']!r}")
    return "\n".join(lines) + "\n"


def cmd_analytic(cfg: RunConfig) -> int:
    report = build_analytic_report(cfg)
    if cfg.format == "json":
        text = json.dumps(jsonable(report), indent=2, sort_keys=True) + "\n"
    else:
        text = _render_analytic_text(report)
    _write_output(cfg, text)
    return 0


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------

_VERIFY_TOL = 1e-12
_AGREE_TOL = 1e-8


def _perturbation(mu: float) -> OperatorExpr:
    """Spin-diagonal real potential mu*(z + zbar): breaks the odd-parity
    symmetry and the valley map without touching hermiticity."""
    return (OperatorExpr.mul_z() + OperatorExpr.mul_zbar()).scaled(mu)


def run_verify(cfg: RunConfig, perturb: float = 0.0) -> List[Tuple[str, str, str]]:
    """Battery of cross-checks; returns (name, status, detail) rows where
    status is PASS, FAIL or SKIP."""
    p = cfg.params()
    co = derive_coeffs(p)
    k = float(co.k_coef)
    rows: List[Tuple[str, str, str]] = []

    def record(name: str, ok: bool, detail: str) -> None:
        rows.append((name, "PASS" if ok else "FAIL", detail))

    def skip(name: str, detail: str) -> None:
        rows.append((name, "SKIP", detail))

    h = build_hamiltonian(co, Valley.PRIMARY)
    h_other = build_hamiltonian(co, Valley.TIME_REVERSED)
    if perturb:
        h = h + _perturbation(perturb)
    d_probe = -0.25
    for candidate in (co.d1_branch_i, co.d1_branch_ii):
        if candidate is not None and float(candidate) < 0:
            d_probe = float(candidate)
            break
    probes = standard_probes(d_probe, max_degree=4, random_count=8)

    # primitive algebra
    ident = OperatorExpr.identity()
    pairs = [
        ("[d/dz, z] = 1", OperatorExpr.dz() @ OperatorExpr.mul_z()
         - OperatorExpr.mul_z() @ OperatorExpr.dz(), ident),
        ("[d/dzbar, zbar] = 1", OperatorExpr.dzbar() @ OperatorExpr.mul_zbar()
         - OperatorExpr.mul_zbar() @ OperatorExpr.dzbar(), ident),
        ("[d/dz, zbar] = 0", OperatorExpr.dz() @ OperatorExpr.mul_zbar()
         - OperatorExpr.mul_zbar() @ OperatorExpr.dz(), OperatorExpr([])),
    ]
    worst = max(
        operator_residual_on_probes(x, y, probes) for _, x, y in pairs
    )
    record("primitive commutators", worst <= _VERIFY_TOL, f"residual {worst:.3e}")

    # closed-form eigenstates against the full first-order equation
    for branch in (Branch.I, Branch.II):
        if co.d1(branch) is None:
            skip(
                f"eigenstates branch {branch.value}",
                "degenerate A=0" if branch is Branch.I else "degenerate B=0",
            )
            continue
        worst = 0.0
        for valley in (Valley.PRIMARY, Valley.TIME_REVERSED):
            hv = h if valley is Valley.PRIMARY else h_other
            for n in range(11):
                s = opalg.analytic_state(branch, valley, n, co)
                worst = max(worst, eigen_residual(hv, s, s.energy))
        record(
            f"eigenstates branch {branch.value}",
            worst <= _VERIFY_TOL,
            f"residual {worst:.3e} over n<=10, both valleys",
        )

    # symmetry eigenfactors: present on the real branch, absent on the other
    if k > 0:
        real_branch, broken_branch = Branch.I, Branch.II
    elif k < 0:
        real_branch, broken_branch = Branch.II, Branch.I
    else:
        real_branch = broken_branch = None
    if real_branch is None:
        skip("symmetry eigenfactors", "k = 0 (critical point)")
    else:
        ok = True
        details = []
        if co.d1(real_branch) is not None:
            for n in range(7):
                s = opalg.analytic_state(real_branch, Valley.PRIMARY, n, co)
                for op in (P1T, P2T):
                    if pt_eigenfactor(op, s) is None:
                        ok = False
                        details.append(f"{op.name} factor missing at n={n}")
        else:
            skip("symmetry eigenfactors", "real branch degenerate")
            real_branch = None
        if real_branch is not None:
            if co.d1(broken_branch) is not None:
                for n in range(7):
                    s = opalg.analytic_state(broken_branch, Valley.PRIMARY, n, co)
                    for op in (P1T, P2T):
                        if pt_eigenfactor(op, s) is not None:
                            ok = False
                            details.append(
                                f"unexpected {op.name} factor on broken branch n={n}"
                            )
            record(
                "symmetry eigenfactors",
                ok,
                "; ".join(details) if details else "present/absent as required",
            )

    # symmetry commutators with both valley Hamiltonians
    worst = 0.0
    for hv in (h, h_other):
        for op in (P1T, P2T):
            worst = max(worst, pt_commutator_residual(hv, op, probes))
    record("symmetry commutators", worst <= _VERIFY_TOL, f"residual {worst:.3e}")

    # valley map: T H T^{-1} must equal the other valley Hamiltonian
    mapped = time_reversal_conjugate(h)
    worst = operator_residual_on_probes(mapped, h_other, probes)
    record("valley map", worst <= _VERIFY_TOL, f"residual {worst:.3e}")

    # zero-mode family
    for valley, d_val in (
        (Valley.PRIMARY, co.d1_branch_i),
        (Valley.TIME_REVERSED, co.d1_branch_ii),
    ):
        name = f"zero modes {valley.value}"
        if d_val is None:
            skip(name, "degenerate block coefficient")
            continue
        worst = max(
            lll_annihilation_residual(lll_state(l, co, valley), co, valley)
            for l in range(21)
        )
        record(name, worst <= _VERIFY_TOL, f"residual {worst:.3e} over l<=20")

    # ladder pair
    if k == 0.0:
        skip("ladder pair", "k = 0: normalization undefined")
    else:
        rep = jc_verify(co, degree=30)
        ok = (
            rep.commutator_residual <= _VERIFY_TOL
            and rep.factorization_residual <= _VERIFY_TOL
        )
        record(
            "ladder pair",
            ok,
            f"commutator {rep.commutator_residual:.3e}, "
            f"factorization {rep.factorization_residual:.3e}",
        )

    # numeric route agreement
    for branch in (Branch.I, Branch.II):
        name = f"numeric agreement branch {branch.value}"
        verdict = classify_phase(p, branch)
        if verdict is PhaseVerdict.CRITICAL:
            skip(name, "critical point")
            continue
        if co.d1(branch) is None:
            skip(name, "degenerate block coefficient")
            continue
        try:
            report = phase_verdict_numeric(
                p, branch=branch, valley=cfg.valley, n_tr=cfg.n_tr, seed=cfg.seed
            )
        except DegenerateCoefficientsError:
            skip(name, "degenerate block coefficient")
            continue
        ok = report.verdict is verdict
        worst = 0.0
        for n in range(min(11, len(report.retained_pairs))):
            plus, _ = level_energy(p, n, branch)
            num = report.retained_pairs[n][0]
            worst = max(worst, abs(num - plus) / max(1.0, abs(plus)))
        ok = ok and worst <= _AGREE_TOL
        record(
            name,
            ok,
            f"verdict {report.verdict.value} vs {verdict.value}, "
            f"level error {worst:.3e}",
        )
    return rows


def cmd_verify(cfg: RunConfig, perturb: float) -> int:
    rows = run_verify(cfg, perturb)
    width = max(len(name) for name, _, _ in rows)
    lines = [f"{name:<{width}}  {status:<4}  {detail}" for name, status, detail in rows]
    failed = sum(1 for _, status, _ in rows if status == "FAIL")
    lines.append(
        f"{len(rows)} checks: "
        f"{sum(1 for _, s, _ in rows if s == 'PASS')} passed, "
        f"{failed} failed, "
        f"{sum(1 for _, s, _ in rows if s == 'SKIP')} skipped"
    )
    _write_output(cfg, "\n".join(lines) + "\n")
    return 1 if failed else 0


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------


def cmd_spectrum(cfg: RunConfig, dump_path: Optional[str]) -> int:
    p = cfg.params()
    co = derive_coeffs(p)
    rep = build_truncated(co, cfg.n_tr, cfg.branch, cfg.valley)
    if dump_path is not None:
        with open(dump_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(dump_matrix(rep.matrix))
    scrambled = scramble(rep, cfg.seed)
    result = eigensolve(scrambled.matrix)
    report = classify_spectrum(result.values, cfg.tol, result.residuals)
    payload = {
        "n_tr": cfg.n_tr,
        "branch": cfg.branch.value,
        "valley": cfg.valley.value,
        "verdict": report.verdict.value,
        "n_real": report.n_real,
        "n_complex_pairs": report.n_complex_pairs,
        "discarded_edge_levels": report.discarded_edge_levels,
        "unpaired": len(report.unpaired),
        "max_residual": report.max_residual,
        "levels": [
            {"n": i, "re_E_plus": pair[0].real, "im_E_plus": pair[0].imag}
            for i, pair in enumerate(report.retained_pairs)
        ],
    }
    if cfg.format == "json":
        text = json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n"
    else:
        lines = [
            f"truncation n_tr={cfg.n_tr} branch={cfg.branch.value} "
            f"valley={cfg.valley.value} (scrambled, seed={cfg.seed})",
            f"verdict: {report.verdict.value}",
            f"real eigenvalues kept: {report.n_real}",
            f"complex pairs kept: {report.n_complex_pairs}",
            f"edge levels discarded: {report.discarded_edge_levels}",
            f"unpaired values: {len(report.unpaired)}",
            f"worst eigenpair residual: {report.max_residual!r}",
        ]
        for i, pair in enumerate(report.retained_pairs):
            lines.append(
                f"  n={i} E+=({pair[0].real!r}, {pair[0].imag!r})"
            )
        text = "\n".join(lines) + "\n"
    _write_output(cfg, text)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

_SWEEP_HEADER = [
    "param",
    "n",
    "branch",
    "re_E_plus",
    "im_E_plus",
    "re_E_minus",
    "im_E_minus",
    "re_gap",
    "im_gap",
    "verdict",
]
_NUMERIC_HEADER = ["num_re_E_plus", "num_im_E_plus", "num_verdict"]


def _sweep_grid(lo: float, hi: float, steps: int, log: bool) -> List[float]:
    if steps < 2:
        raise ConfigError("steps must be at least 2")
    if not lo < hi:
        raise ConfigError("require from < to")
    if log:
        if lo <= 0:
            raise ConfigError("log grid requires from > 0")
        la, lb = math.log10(lo), math.log10(hi)
        grid = [10.0 ** (la + i * (lb - la) / (steps - 1)) for i in range(steps)]
    else:
        grid = [lo + i * (hi - lo) / (steps - 1) for i in range(steps)]
    grid[0] = lo
    grid[-1] = hi
    return grid


def cmd_sweep(
    cfg: RunConfig,
    vary: Vary,
    lo: float,
    hi: float,
    steps: int,
    log: bool,
    numeric: bool,
    numeric_every: Optional[int],
) -> int:
    grid = _sweep_grid(lo, hi, steps, log)
    base = cfg.params()
    every = numeric_every if numeric_every is not None else max(1, steps // 10)
    if every < 1:
        raise ConfigError("numeric_every must be at least 1")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = _SWEEP_HEADER + (_NUMERIC_HEADER if numeric else [])
    writer.writerow(header)
    for idx, x in enumerate(grid):
        fields = {"lam": x} if vary is Vary.LAMBDA else {"b0": x}
        p = dataclasses.replace(base, **fields)
        do_numeric = numeric and idx % every == 0
        for branch in (Branch.I, Branch.II):
            verdict = classify_phase(p, branch)
            gap, _ = level_energy(p, 0, branch)
            numeric_levels: Optional[list] = None
            numeric_verdict = ""
            if do_numeric:
                try:
                    report = phase_verdict_numeric(
                        p,
                        branch=branch,
                        valley=cfg.valley,
                        n_tr=cfg.n_tr,
                        seed=cfg.seed,
                        class_tol=cfg.tol,
                    )
                    numeric_levels = list(report.retained_pairs)
                    numeric_verdict = report.verdict.value
                except DegenerateCoefficientsError:
                    numeric_levels = None
                    numeric_verdict = ""
            for n in range(cfg.n_max):
                plus, minus = level_energy(p, n, branch)
                row = [
                    repr(x),
                    n,
                    branch.value,
                    repr(plus.real),
                    repr(plus.imag),
                    repr(minus.real),
                    repr(minus.imag),
                    repr(gap.real),
                    repr(gap.imag),
                    verdict.value,
                ]
                if numeric:
                    if numeric_levels is not None and n < len(numeric_levels):
                        num_plus = numeric_levels[n][0]
                        row += [
                            repr(num_plus.real),
                            repr(num_plus.imag),
                            numeric_verdict,
                        ]
                    else:
                        row += ["", "", numeric_verdict]
                writer.writerow(row)
    _write_output(cfg, buf.getvalue())
    return 0


# ---------------------------------------------------------------------------
# critical
# ---------------------------------------------------------------------------

_CRITICAL_AGREE_TOL = 1e-4


def cmd_critical(
    cfg: RunConfig,
    vary: Vary,
    lo: Optional[float],
    hi: Optional[float],
    bisect_tol: float,
) -> int:
    p = cfg.params()
    try:
        analytic = critical_point(p, vary)
    except (DegenerateCoefficientsError, ValueError) as exc:
        sys.stderr.write(f"analytic critical point unavailable: {exc}\n")
        return 2
    if analytic is None:
        sys.stderr.write(
            "analytic critical point unavailable: no real boundary here\n"
        )
        return 2
    if lo is None:
        lo = 0.5 * analytic
    if hi is None:
        hi = 1.5 * analytic
    try:
        numeric = find_exceptional_point(
            p,
            vary,
            lo,
            hi,
            tol=bisect_tol,
            branch=cfg.branch,
            valley=cfg.valley,
            n_tr=cfg.n_tr,
            seed=cfg.seed,
            class_tol=cfg.tol,
        )
    except (NoTransitionBracketedError, DegenerateCoefficientsError) as exc:
        sys.stderr.write(f"bisection failed: {exc}\n")
        return 2
    diff = abs(numeric - analytic)
    text = (
        f"analytic: {analytic!r}\n"
        f"bisected: {numeric!r}\n"
        f"difference: {diff!r}\n"
    )
    _write_output(cfg, text)
    return 0 if diff <= max(_CRITICAL_AGREE_TOL, bisect_tol) else 1


# ---------------------------------------------------------------------------
# lll / jc
# ---------------------------------------------------------------------------


def cmd_lll(cfg: RunConfig, l_max: int) -> int:
    if l_max < 0:
        raise ConfigError("l_max must be nonnegative")
    co = derive_coeffs(cfg.params())
    valley = cfg.valley
    d = co.d1_branch_i if valley is Valley.PRIMARY else co.d1_branch_ii
    if d is None:
        sys.stderr.write("zero-mode envelope undefined: degenerate coefficients\n")
        return 2
    lines = [f"valley {valley.value}, envelope exponent {float(d)!r}"]
    worst = 0.0
    for l in range(l_max + 1):
        state = lll_state(l, co, valley)
        res = lll_annihilation_residual(state, co, valley)
        worst = max(worst, res)
        lines.append(f"l={l} annihilation residual {res!r}")
    lines.append(f"worst residual {worst!r}")
    if float(d) >= 0:
        lines.append("warning: envelope does not decay; family not normalizable")
    _write_output(cfg, "\n".join(lines) + "\n")
    return 0


def cmd_jc(cfg: RunConfig, degree: int) -> int:
    co = derive_coeffs(cfg.params())
    try:
        rep = jc_verify(co, degree=degree)
    except ValueError as exc:
        sys.stderr.write(f"{exc}\n")
        return 2
    text = (
        f"commutator residual (degree {degree}): {rep.commutator_residual!r}\n"
        f"factorization residual: {rep.factorization_residual!r}\n"
    )
    _write_output(cfg, text)
    return 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a 'key = value' config file")
    common.add_argument("--vf", type=float)
    common.add_argument("--lambda", dest="lambda_", type=float)
    common.add_argument("--k1", type=float)
    common.add_argument("--b0", type=float)
    common.add_argument("--e", type=float)
    common.add_argument("--c", type=float)
    common.add_argument("--hbar", type=float)
    common.add_argument("--n_max", type=int)
    common.add_argument("--branch", choices=["I", "II"])
    common.add_argument(
        "--valley", choices=["primary", "time_reversed"]
    )
    common.add_argument("--n_tr", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--output")
    common.add_argument("--format", choices=["csv", "json", "text"])

    parser = argparse.ArgumentParser(
        prog="ptdirac",
        description="planar two-band model with an imaginary spin-coupling: "
        "closed-form levels, symmetry checks and numeric spectra",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("analytic", parents=[common])

    p_verify = sub.add_parser("verify", parents=[common])
    p_verify.add_argument("--perturb", type=float, default=0.0)

    p_spectrum = sub.add_parser("spectrum", parents=[common])
    p_spectrum.add_argument("--dump_matrix", dest="dump_matrix_path")

    p_sweep = sub.add_parser("sweep", parents=[common])
    p_sweep.add_argument("--vary", choices=["lambda", "b0"], required=True)
    p_sweep.add_argument("--from", dest="sweep_from", type=float, required=True)
    p_sweep.add_argument("--to", dest="sweep_to", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--log", action="store_true")
    p_sweep.add_argument("--numeric", action="store_true")
    p_sweep.add_argument("--numeric_every", type=int)

    p_critical = sub.add_parser("critical", parents=[common])
    p_critical.add_argument("--vary", choices=["lambda", "b0"], required=True)
    p_critical.add_argument("--lo", type=float)
    p_critical.add_argument("--hi", type=float)
    p_critical.add_argument("--bisect_tol", type=float, default=1e-6)

    p_lll = sub.add_parser("lll", parents=[common])
    p_lll.add_argument("--l_max", type=int, default=20)

    p_jc = sub.add_parser("jc", parents=[common])
    p_jc.add_argument("--degree", type=int, default=30)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _resolve_config(args)
        if args.command == "analytic":
            return cmd_analytic(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.perturb)
        if args.command == "spectrum":
            return cmd_spectrum(cfg, args.dump_matrix_path)
        if args.command == "sweep":
            return cmd_sweep(
                cfg,
                Vary(args.vary),
                args.sweep_from,
                args.sweep_to,
                args.steps,
                args.log,
                args.numeric,
                args.numeric_every,
            )
        if args.command == "critical":
            return cmd_critical(cfg, Vary(args.vary), args.lo, args.hi, args.bisect_tol)
        if args.command == "lll":
            return cmd_lll(cfg, args.l_max)
        if args.command == "jc":
            return cmd_jc(cfg, args.degree)
        parser.error(f"unknown command {args.command!r}")
    except ConfigError as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (ValueError, RuntimeError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
