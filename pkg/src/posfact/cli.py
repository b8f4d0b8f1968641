"""Command-line front end.

Every command prints a report (JSON by default) and exits with

    0  success
    2  the computation produced a negative verdict (e.g. not in the class)
    3  the computation was infeasible or hit a domain / certificate error
    4  bad input (unreadable file, malformed matrix, bad parameters)
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import matrix_io
from .calculus import (
    borel_calculus,
    mp_inverse_l2p,
    resolvent_growth_certificate,
    riesz_decomposition,
    sqrt_l2p,
)
from .core import Subspace, Tolerances, eig_general, norm2, pinv
from .dilation import dilate_pos_proj, dilate_proj_proj
from .errors import (
    CertificateError,
    DomainError,
    Infeasible,
    InputError,
    InvalidPerturbation,
    NotInClass,
    NotInvertible,
    NotPSD,
    PosfactError,
)
from .factorization import (
    invertible_factor_pair,
    optimal_pair,
    schur_complement,
    sebestyen_certificate,
    sebestyen_solve,
)
from .lab import EXPERIMENTS, GALLERY, gallery
from .membership import classify_subclass, is_l2p

EXIT_OK, EXIT_NEGATIVE, EXIT_INFEASIBLE, EXIT_INPUT = 0, 2, 3, 4
SCHEMA = 1

FUNCTIONS = {
    "identity": lambda x: x,
    "sqrt": math.sqrt,
    "square": lambda x: x * x,
    "exp": math.exp,
    "log": lambda x: math.log(x) if x > 0 else float("nan"),
    "inv": lambda x: 1.0 / x if x != 0 else float("nan"),
}


class Negative(Exception):
    """Internal signal: the report is complete but the verdict is negative."""


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, InputError):
        return EXIT_INPUT
    if isinstance(exc, NotInClass):
        return EXIT_NEGATIVE
    if isinstance(exc, (Infeasible, DomainError, CertificateError, NotPSD, NotInvertible,
                        InvalidPerturbation, PosfactError)):
        return EXIT_INFEASIBLE
    return EXIT_INPUT


# ---------------------------------------------------------------------------
# report assembly


class Report:
    def __init__(self, command: str, tol: Tolerances):
        self.command = command
        self.tol = tol
        self.digest = hashlib.sha256()
        self.verdicts: dict = {}
        self.witnesses: dict = {}
        self.residuals: dict = {}
        self.extra: dict = {}
        self.t0 = time.perf_counter()

    def feed(self, data: bytes):
        self.digest.update(data)

    def residual(self, name, value, tolerance):
        self.residuals[name] = {"value": _num(value), "tolerance": _num(tolerance),
                                "ok": bool(value <= tolerance)}

    def witness(self, name, M):
        self.witnesses[name] = matrix_io.to_json(M)

    def as_dict(self) -> dict:
        d = {
            "schema": SCHEMA,
            "command": self.command,
            "input_digest": self.digest.hexdigest(),
            "verdicts": self.verdicts,
            "witnesses": self.witnesses,
            "residuals": self.residuals,
            "tolerances": self.tol.as_dict(),
        }
        d.update(self.extra)
        d["runtime_ms"] = (time.perf_counter() - self.t0) * 1e3
        return d


def _num(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    x = float(x)
    if math.isfinite(x):
        return x
    return "inf" if x > 0 else ("-inf" if x < 0 else "nan")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return matrix_io.to_json(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _num(obj.real), "im": _num(obj.imag)}
    if isinstance(obj, (bool, np.bool_, int, np.integer, float, np.floating)):
        return _num(obj)
    if hasattr(obj, "value") and isinstance(getattr(obj, "value"), str):
        return obj.value
    return obj


def _render_text(d: dict) -> str:
    out = []

    def walk(prefix, v):
        if isinstance(v, dict) and {"rows", "cols", "re", "im"} <= set(v):
            M = np.asarray(v["re"]) + 1j * np.asarray(v["im"])
            out.append(f"{prefix}:")
            out.append(matrix_io.dumps(M).rstrip("\n"))
        elif isinstance(v, dict):
            for k, w in v.items():
                walk(f"{prefix}.{k}" if prefix else k, w)
        elif isinstance(v, list) and v and isinstance(v[0], dict):
            for i, w in enumerate(v):
                walk(f"{prefix}[{i}]", w)
        else:
            out.append(f"{prefix}: {v}")

    walk("", d)
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# commands


def _read(path, rep: Report) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    rep.feed(data)
    try:
        return matrix_io.loads(data.decode("utf-8"))
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8 text") from None


def _spectrum_dict(rep_):
    return {
        "clusters": [
            {"eigenvalue": c.eigenvalue, "algebraic_mult": c.algebraic_mult,
             "geometric_mult": c.geometric_mult}
            for c in rep_.clusters
        ],
        "eigvec_cond": rep_.eigvec_cond,
        "diagonalizable": rep_.diagonalizable,
        "spectrum_nonneg": rep_.spectrum_nonneg,
    }


def _analyze_matrix(T, rep: Report, tol: Tolerances) -> int:
    ver = is_l2p(T, tol)
    sub = classify_subclass(T, tol)
    rep.verdicts.update({
        "in_l2p": ver.in_l2p,
        "subclass": sub.subclass.value,
        "confidence": ver.confidence.value,
        "reason": ver.reason,
        "spectrum": _spectrum_dict(ver.spectrum),
    })
    if ver.in_l2p:
        w = ver.witness
        rep.witness("A", w.A)
        rep.witness("B", w.B)
        rep.residual("product", w.residual, tol.tol_eq * norm2(T))
        rep.residual("range_match", w.range_match, tol.tol_angle)
        rep.residual("kernel_match", w.kernel_match, tol.tol_angle)
    return EXIT_OK if ver.in_l2p else EXIT_NEGATIVE


def cmd_analyze(args, rep: Report, tol: Tolerances) -> int:
    if args.batch:
        return _analyze_batch(args, rep, tol)
    if not args.file:
        raise InputError("analyze needs a matrix file or --batch DIR")
    T = _read(args.file, rep)
    return _analyze_matrix(T, rep, tol)


def _analyze_one(path: Path, tol: Tolerances):
    sub = Report("analyze", tol)
    try:
        T = _read(path, sub)
        code = _analyze_matrix(T, sub, tol)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a per-file record
        code = _exit_code(exc)
        sub.verdicts["error"] = {"type": type(exc).__name__, "message": str(exc)}
    d = sub.as_dict()
    d.pop("tolerances")
    d.pop("runtime_ms")
    d.pop("schema")
    d.pop("command")
    d["file"] = path.name
    d["exit_code"] = code
    return d


def _analyze_batch(args, rep: Report, tol: Tolerances) -> int:
    root = Path(args.batch)
    if not root.is_dir():
        raise InputError(f"{root} is not a directory")
    files = sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))
    with ThreadPoolExecutor(max_workers=args.jobs or None) as pool:
        results = list(pool.map(lambda p: _analyze_one(p, tol), files))
    for r in results:
        rep.feed(r["input_digest"].encode())
    rep.extra["results"] = results
    rep.verdicts["files"] = len(results)
    rep.verdicts["in_l2p"] = sum(1 for r in results if r["verdicts"].get("in_l2p"))
    return max([r["exit_code"] for r in results], default=EXIT_OK)


def cmd_factor(args, rep: Report, tol: Tolerances) -> int:
    T = _read(args.file, rep)
    if args.invertible_b:
        f = invertible_factor_pair(T, tol)
        rep.verdicts["kind"] = "invertible_b"
        rep.verdicts["b_min_eigenvalue"] = float(np.linalg.eigvalsh(f.B)[0])
    else:
        f = optimal_pair(T, tol, form=args.form)
        rep.verdicts["kind"] = f"optimal_{args.form}"
    rep.verdicts["optimal"] = f.optimal
    rep.witness("A", f.A)
    rep.witness("B", f.B)
    rep.residual("product", f.residual, tol.tol_eq * norm2(T))
    rep.residual("range_match", f.range_match, tol.tol_angle)
    rep.residual("kernel_match", f.kernel_match, tol.tol_angle)
    return EXIT_OK


def cmd_solve(args, rep: Report, tol: Tolerances) -> int:
    A = _read(args.fileA, rep)
    T = _read(args.fileT, rep)
    X = sebestyen_solve(A, T, tol)
    cert = sebestyen_certificate(A, T, X, tol)
    rep.witness("X", X)
    rep.residual("product", cert["residual"], cert["residual_tol"])
    rep.residual("kernel_angle", cert["kernel_angle"], cert["kernel_angle_tol"])
    rep.residual("schur_complement", cert["schur_complement"], cert["schur_complement_tol"])
    rep.verdicts["solved"] = True
    return EXIT_OK


def cmd_schur(args, rep: Report, tol: Tolerances) -> int:
    B = _read(args.file, rep)
    V = _read(args.subspace, rep)
    if V.shape[0] != B.shape[0]:
        raise InputError(f"subspace vectors have length {V.shape[0]}, B is {B.shape[0]}x{B.shape[0]}")
    S = Subspace.span(V, tol)
    sp = schur_complement(B, S, tol)
    rep.witness("complement", sp.complement)
    rep.witness("compression", sp.compression)
    rep.verdicts["subspace_dim"] = S.dim
    rep.residual("contraction_norm", sp.contraction_norm, 1 + tol.tol_eq)
    rep.residual("sum", norm2(sp.complement + sp.compression - B), tol.tol_eq * norm2(B))
    return EXIT_OK


def cmd_calc(args, rep: Report, tol: Tolerances) -> int:
    T = _read(args.file, rep)
    nT = norm2(T)
    if args.op == "sqrt":
        R = sqrt_l2p(T, tol)
        rep.witness("result", R)
        rep.residual("square", norm2(R @ R - T), tol.tol_eq * nT)
    elif args.op == "pinv":
        ver = is_l2p(T, tol)
        if not ver.in_l2p:
            rep.verdicts["in_l2p"] = False
            rep.verdicts["reason"] = ver.reason
            rep.witness("svd_pinv", pinv(T, tol))
            return EXIT_NEGATIVE
        m = mp_inverse_l2p(T, tol)
        rep.witness("result", m.dagger)
        rep.witness("one_two_inverse", m.one_two_inverse)
        rep.residual("svd_oracle", m.oracle_error, tol.tol_eq * max(norm2(m.dagger), 1.0))
    elif args.op == "fn":
        if args.fn not in FUNCTIONS:
            raise InputError(f"unknown function {args.fn!r}; choose from {sorted(FUNCTIONS)}")
        rep.verdicts["function"] = args.fn
        rep.witness("result", borel_calculus(T, FUNCTIONS[args.fn], tol))
    elif args.op == "riesz":
        rd = riesz_decomposition(T, tol)
        rep.extra["terms"] = [{"eigenvalue": lam, "projection": matrix_io.to_json(Q)}
                              for lam, Q in rd.terms]
        rep.residual("pair_product", rd.optimal_pair_sum.residual, tol.tol_eq * nT)
    elif args.op == "resolvent":
        cert = resolvent_growth_certificate(T, samples=args.samples, seed=args.seed, tol=tol)
        rep.verdicts["kappa"] = cert.kappa
        rep.extra["profile"] = cert.profile
    rep.verdicts["op"] = args.op
    return EXIT_OK


def cmd_dilate(args, rep: Report, tol: Tolerances) -> int:
    T = _read(args.file, rep)
    d = dilate_pos_proj(T, tol) if args.stage == 1 else dilate_proj_proj(T, tol)
    rep.verdicts.update({"stage": d.stage.value, "scale": d.scale,
                         "ambient_dim": int(d.ambient.shape[0])})
    rep.witness("ambient", d.ambient)
    for k, v in d.residuals.items():
        if k == "corner":
            rep.residual(k, v, tol.tol_eq * max(norm2(T), 1e-300))
        elif k in ("range_angle",):
            rep.residual(k, v, tol.tol_angle)
        elif k == "kernel_contained":
            rep.residual(k, v, 0.0)
        else:
            rep.residual(k, v, tol.tol_eq * max(1.0, d.scale))
    return EXIT_OK


def _parse_params(items):
    params = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"parameter {item!r} must look like key=value")
        k, v = item.split("=", 1)
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
    return params


def cmd_gallery(args, rep: Report, tol: Tolerances) -> int:
    params = _parse_params(args.param)
    rep.feed(json.dumps({"name": args.name, "params": params}, sort_keys=True).encode())
    g = gallery(args.name, params, tol)
    rep.witness("matrix", g.matrix)
    for k, M in g.witnesses.items():
        rep.witness(k, M)
    rep.verdicts.update(_jsonable(g.certificates))
    rep.extra["metadata"] = _jsonable(g.metadata)
    return EXIT_OK


def cmd_lab(args, rep: Report, tol: Tolerances) -> int:
    params = _parse_params(args.param)
    if args.dims:
        params["dims"] = [int(x) for x in args.dims.split(",")]
    rep.feed(json.dumps({"experiment": args.experiment, "params": params}, sort_keys=True).encode())
    try:
        res = EXPERIMENTS[args.experiment](tol=tol, **params)
    except TypeError as exc:
        raise InputError(f"bad parameters for {args.experiment}: {exc}") from None
    rep.extra["lab"] = res.to_dict()
    rep.verdicts["summary"] = res.verdicts
    if args.csv:
        Path(args.csv).write_text(res.to_csv(), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _env_float(name, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"environment variable {name}={raw!r} is not a number") from None


def build_parser() -> argparse.ArgumentParser:
    d = Tolerances()
    glob = argparse.ArgumentParser(add_help=False)
    glob.add_argument("--tol-rank", type=float)
    glob.add_argument("--tol-psd", type=float)
    glob.add_argument("--tol-eq", type=float)
    glob.add_argument("--seed", type=int)
    glob.add_argument("--format", choices=["json", "text"])
    glob.add_argument("--out")

    p = argparse.ArgumentParser(
        prog="posfact",
        description="Products of two positive matrices: analysis, factorization, calculus.",
        parents=[glob],
    )
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.set_defaults(tol_rank=None, tol_psd=None, tol_eq=None, seed=None, format=None, out=None)
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    # subcommands accept the global flags too, without clobbering earlier values
    sglob = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    for a in glob._actions:
        sglob.add_argument(*a.option_strings, type=a.type, choices=a.choices)

    a = sub.add_parser("analyze", parents=[sglob], help="spectrum, membership and subclass")
    a.add_argument("file", nargs="?")
    a.add_argument("--batch", metavar="DIR")
    a.add_argument("--jobs", type=int, default=0)
    a.set_defaults(func=cmd_analyze)

    f = sub.add_parser("factor", parents=[sglob], help="optimal or invertible-B pair")
    f.add_argument("file")
    f.add_argument("--invertible-b", action="store_true")
    f.add_argument("--form", choices=["range", "spectral"], default="range")
    f.set_defaults(func=cmd_factor)

    s = sub.add_parser("solve", parents=[sglob], help="positive solution of A X = T")
    s.add_argument("fileA")
    s.add_argument("fileT")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("schur", parents=[sglob], help="Schur complement to a subspace")
    c.add_argument("file")
    c.add_argument("--subspace", required=True, help="matrix whose columns span S")
    c.set_defaults(func=cmd_schur)

    k = sub.add_parser("calc", parents=[sglob], help="square root, pseudo-inverse, f(T), ...")
    k.add_argument("file")
    k.add_argument("--op", choices=["sqrt", "pinv", "fn", "riesz", "resolvent"], required=True)
    k.add_argument("--fn", default="identity", help=f"one of {', '.join(sorted(FUNCTIONS))}")
    k.add_argument("--samples", type=int, default=40)
    k.set_defaults(func=cmd_calc)

    g = sub.add_parser("dilate", parents=[sglob], help="dilation into PosProj or ProjProj")
    g.add_argument("file")
    g.add_argument("--stage", type=int, choices=[1, 2], default=1)
    g.set_defaults(func=cmd_dilate)

    y = sub.add_parser("gallery", parents=[sglob], help="named examples")
    y.add_argument("name", choices=sorted(GALLERY))
    y.add_argument("--param", action="append", metavar="KEY=JSON")
    y.set_defaults(func=cmd_gallery)

    x = sub.add_parser("lab", parents=[sglob], help="dimension sweeps")
    x.add_argument("experiment", choices=sorted(EXPERIMENTS))
    x.add_argument("--dims", help="comma separated dimensions")
    x.add_argument("--param", action="append", metavar="KEY=JSON")
    x.add_argument("--csv", help="also write the metric table as CSV")
    x.set_defaults(func=cmd_lab)
    return p


def _tolerances(args) -> Tolerances:
    d = Tolerances()
    vals = {
        "tol_rank": args.tol_rank if args.tol_rank is not None else _env_float("POSFACT_TOL_RANK", d.tol_rank),
        "tol_psd": args.tol_psd if args.tol_psd is not None else _env_float("POSFACT_TOL_PSD", d.tol_psd),
        "tol_eq": args.tol_eq if args.tol_eq is not None else _env_float("POSFACT_TOL_EQ", d.tol_eq),
    }
    return d.replace(**vals)


def run(argv=None, stdout=None) -> int:
    """Parse ``argv``, run the command, emit the report; return the exit code."""
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    try:
        tol = _tolerances(args)
        if args.seed is None:
            args.seed = int(_env_float("POSFACT_SEED", 0))
        fmt = args.format or os.environ.get("POSFACT_FORMAT", "json")
        if fmt not in ("json", "text"):
            raise InputError(f"unknown format {fmt!r}")
    except InputError as exc:
        print(f"posfact: {exc}", file=sys.stderr)
        return EXIT_INPUT

    rep = Report(args.command, tol)
    try:
        code = args.func(args, rep, tol)
    except Exception as exc:  # noqa: BLE001 - mapped onto exit codes below
        if not isinstance(exc, (PosfactError, ValueError)):
            raise
        code = _exit_code(exc)
        rep.verdicts["error"] = {"type": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, NotInClass):
            rep.verdicts["in_l2p"] = False

    d = _jsonable(rep.as_dict())
    text = json.dumps(d, indent=2, sort_keys=True) + "\n" if fmt == "json" else _render_text(d)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
