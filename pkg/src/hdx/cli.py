"""Command-line driver: ``hdx johnson|grassmann|cayley|cob|selftest``.

Every command prints one JSON report (sorted keys) that embeds its
configuration, the tool version and the wall-clock time.  Exit codes are
0 when every check passes, 1 when a check fails and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import hashlib
import itertools
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .f2core import BitMatrix, BudgetExceeded, rank, rank_of_rows

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2
FORCE_BUDGET = 1 << 62
TIMING_KEY = "wall_clock_s"


class UsageError(ValueError):
    """Bad parameters or input files (exit code 2)."""


# ---------------------------------------------------------------- reports


def _json_default(obj):
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset, tuple)):
        return list(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=_json_default, allow_nan=True) + "\n"


def canonical_digest(report: dict) -> str:
    """SHA-256 of the report without its wall-clock field."""
    body = {k: v for k, v in report.items() if k != TIMING_KEY}
    return hashlib.sha256(dumps(body).encode()).hexdigest()


def _config(args: argparse.Namespace) -> dict:
    skip = {"func", "out"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def parse_rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"expected a rational p/q, got {text!r}") from exc


# --------------------------------------------------------------- johnson


def cmd_johnson(args: argparse.Namespace) -> dict:
    from .coboundary import build_johnson_cone, build_johnson_link_cone, cone_beta_bound
    from .johnson import (
        build_johnson_complex,
        certify_johnson_expansion,
        face_pattern_audit,
        johnson_link,
        johnson_link_complex,
    )

    x = build_johnson_complex(args.n, args.eps, args.k, strict=not args.weak_divisibility)
    out: dict = {"complex": x.to_json(), "vertex_link": johnson_link((0,), x).to_json()}
    ok = out["vertex_link"]["ok"]
    m = min(args.k, 2)
    try:
        audit = face_pattern_audit(x, m)
        out["face_pattern"] = {
            "m": m, "tuples": audit.tuples, "faces": audit.faces, "pattern_matches": audit.pattern_matches,
            "violations": [list(v) for v in audit.violations], "ok": audit.ok,
        }
        ok &= audit.ok
    except BudgetExceeded as exc:
        out["face_pattern"] = {"m": m, "skipped": str(exc)}
    if args.certify:
        rep = certify_johnson_expansion(x)
        out["certify"] = rep.to_json()
        ok &= rep.ok
    if args.cone:
        cones: dict = {}
        w = x.weight
        if w % 4 == 0 and args.n >= 4 * w:
            link = johnson_link_complex(args.n, args.eps, strict=False)
            _, rep = build_johnson_link_cone(link, samples=args.samples, seed=args.seed)
            cones["link"] = rep.to_json()
            cones["link"]["beta_lower_bound"] = cone_beta_bound(rep.area)
            ok &= rep.ok
        if w % 4 == 0 and args.eps <= Fraction(1, 2):
            if (1 << (args.n - 1)) <= args.cone_vertex_limit:
                _, _, rep = build_johnson_cone(args.n, args.eps, x.cayley if args.k >= 2 else None)
                cones["complex"] = rep.to_json()
                cones["complex"]["beta_lower_bound"] = cone_beta_bound(rep.area)
                ok &= rep.ok
            else:
                cones["complex"] = {"skipped": f"{1 << (args.n - 1)} vertices exceed --cone-vertex-limit"}
        if not cones:
            cones["skipped"] = "no cone construction applies at these parameters"
        out["cones"] = cones
    out["ok"] = bool(ok)
    return out


# ------------------------------------------------------------- grassmann


def _sp_poset(args: argparse.Namespace):
    from .grassmann import complete_grassmann
    from .hadamard import sp_operator

    return sp_operator(complete_grassmann(args.n, args.d), args.dprime)


def cmd_grassmann_sp(args: argparse.Namespace) -> dict:
    y = _sp_poset(args)
    ones = sorted(k[0] for k in y.level(1))
    ranks = sorted({rank(BitMatrix.from_key(k, args.n)) for k in ones})
    dim = rank_of_rows(ones)
    return {
        "functions": y.size, "level1": len(ones), "level1_ranks": ranks, "level1_span_dim": dim,
        "ambient_dim": args.n * args.n, "ok": dim == args.n * args.n,
    }


def cmd_grassmann_decompose(args: argparse.Namespace) -> dict:
    from .hadamard import link_decomposition_check

    y = _sp_poset(args)
    if args.link == "W0":
        w: tuple = ()
    elif args.link == "W1":
        w = sorted(y.level(1))[0]
    else:
        raise UsageError("--link must be W0 (the zero space) or W1 (the first 1-dimensional space)")
    rep = link_decomposition_check(y, w)
    return {"w": list(w), "report": rep.to_json(), "ok": rep.ok}


def cmd_grassmann_graphs(args: argparse.Namespace) -> dict:
    from .matrixposet import build_DS, build_R, build_S, build_T
    from .spectral import bipartite_second_singular, second_eigenvalue

    u = BitMatrix.identity(args.l)
    kind = args.kind
    if kind == "T":
        g = build_T(u, args.m)
        deg = g.degrees()
        return {"kind": kind, "vertices": len(g.vertices), "degree": [int(deg.min()), int(deg.max())],
                "lambda": second_eigenvalue(g), "ok": True}
    if kind == "DS":
        b = build_DS(args.i, args.j, args.l, upper=u)
    elif kind == "S":
        b = build_S(args.i, args.j, args.k, args.l, upper=u)
    elif kind == "R":
        b = build_R(args.i, args.j, args.l, upper=u)
    else:
        raise UsageError(f"unknown graph kind {kind!r}")
    dl, dr = b.degrees_left(), b.degrees_right()
    out = {
        "kind": kind, "l": args.l, "i": args.i, "j": args.j, "left": len(b.left), "right": len(b.right),
        "degree_left": [int(dl.min()), int(dl.max())], "degree_right": [int(dr.min()), int(dr.max())],
        "lambda2": bipartite_second_singular(b),
    }
    ok = True
    if kind == "DS" and args.i == 1 and args.j == 1:
        ell = args.l
        size, degree = (2**ell - 1) * 2 ** (ell - 1), (2 ** (ell - 1) - 1) * 2 ** (ell - 2)
        out["expected"] = {"left": size, "degree": degree}
        ok = len(b.left) == size and int(dl.min()) == int(dl.max()) == degree
    out["ok"] = ok
    return out


# ---------------------------------------------------------------- cayley


def cmd_cayley_basify(args: argparse.Namespace) -> dict:
    from .cayley import basify, cayley_from_basification, certify_basification
    from .grassmann import complete_grassmann

    y = complete_grassmann(args.n, args.d)
    b = basify(y)
    x = cayley_from_basification(args.n, b)
    rep = certify_basification(y, x)
    return {
        "faces": {str(i): len(b.level(i)) for i in range(b.dim + 1)},
        "report": rep.to_json(), "ok": rep.ok,
    }


def cmd_cayley_degbound(args: argparse.Namespace) -> dict:
    from .cayley import LabeledLinkGraph, degree_lower_bound

    try:
        text = Path(args.link).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {args.link}: {exc}") from exc
    try:
        link = LabeledLinkGraph.from_tsv(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    rep = degree_lower_bound(link, args.n)
    return {"nice": link.nice, "report": rep.to_json(), "ok": rep.ok}


# ----------------------------------------------------------- coboundary


def cmd_cob_beta(args: argparse.Namespace) -> dict:
    from .cayley import SimplicialComplex
    from .coboundary import brute_force_beta, cone_area, cone_beta_bound, group_by_name, star_cone

    tops = list(itertools.combinations(range(args.vertices), 3))
    x = SimplicialComplex.from_top(tops)
    rep = brute_force_beta(x, group_by_name(args.group))
    area = cone_area(star_cone(x), x)
    bound = cone_beta_bound(area)
    ok = rep.beta is None or rep.beta >= bound
    return {"beta": rep.to_json(), "cone_area": area, "beta_lower_bound": bound, "ok": ok}


def cmd_cob_worked(args: argparse.Namespace) -> dict:
    from .coboundary import van_kampen_assemble, verify_contraction, worked_example

    x, d, inner, cycle = worked_example()
    c = van_kampen_assemble(d, inner, x)
    check = verify_contraction(c, x)
    faces = [inner[i].triangles for i in sorted(inner)]
    return {"faces": faces, "triangles": c.triangles, "moves": len(c.moves), "valid": check.ok,
            "ok": check.ok and c.triangles == sum(faces)}


def cmd_cob_link_cone(args: argparse.Namespace) -> dict:
    from .coboundary import build_johnson_link_cone
    from .johnson import johnson_link_complex

    x = johnson_link_complex(args.n, args.eps, strict=False)
    _, rep = build_johnson_link_cone(x, samples=args.samples, seed=args.seed)
    return {"report": rep.to_json(), "ok": rep.ok}


def cmd_cob_johnson_cone(args: argparse.Namespace) -> dict:
    from .coboundary import build_johnson_cone

    _, _, rep = build_johnson_cone(args.n, args.eps)
    return {"report": rep.to_json(), "ok": rep.ok}


def cmd_cob_matrix_link(args: argparse.Namespace) -> dict:
    from .coboundary import MatrixLinkComplex, matrix_link_contraction_patterns

    rep = matrix_link_contraction_patterns(MatrixLinkComplex(args.n, args.d), args.samples, args.seed)
    return {"report": rep.to_json(), "ok": rep.ok}


# -------------------------------------------------------------- selftest


SELFTEST_RUNS: tuple[tuple[str, ...], ...] = (
    ("johnson", "--n", "8", "--eps", "1/2", "--k", "2"),
    ("grassmann", "graphs", "--kind", "DS", "--l", "3"),
    ("cayley", "basify", "--n", "3", "--d", "2"),
    ("cob", "beta", "--vertices", "4", "--group", "Z2"),
    ("cob", "worked"),
    ("cob", "matrix-link", "--samples", "1", "--seed", "0"),
)


def cmd_selftest(args: argparse.Namespace) -> dict:
    """Run each quick command twice; both runs must pass and agree byte for byte."""
    parser = build_parser()
    results = []
    ok = True
    for argv in SELFTEST_RUNS:
        digests, passed = [], True
        for _ in range(2):
            sub = parser.parse_args(list(argv))
            code, report = _execute(sub)
            passed &= code == EXIT_OK
            digests.append(canonical_digest(report))
        same = digests[0] == digests[1]
        results.append({"argv": list(argv), "passed": passed, "deterministic": same, "digest": digests[0]})
        ok &= passed and same
    return {"runs": results, "ok": ok}


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hdx", description="Certify expansion of small high-dimensional expanders.")
    p.add_argument("--version", action="version", version=f"hdx {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(q: argparse.ArgumentParser) -> None:
        q.add_argument("--out", type=Path, help="directory for report.json")
        q.add_argument("--force", action="store_true", help="lift the enumeration budget")

    j = sub.add_parser("johnson", help="Johnson complex reports")
    common(j)
    j.add_argument("--n", type=int, required=True)
    j.add_argument("--eps", type=parse_rational, required=True)
    j.add_argument("--k", type=int, default=2)
    j.add_argument("--certify", action="store_true", help="links of every dimension and the skeleton")
    j.add_argument("--cone", action="store_true", help="cones and the coboundary bound")
    j.add_argument("--weak-divisibility", action="store_true", help="require only 2^(k-1) | eps*n")
    j.add_argument("--samples", type=int, default=200, help="transported link-cone contractions to replay")
    j.add_argument("--seed", type=int, default=0)
    j.add_argument("--cone-vertex-limit", type=int, default=4096)
    j.set_defaults(func=cmd_johnson)

    g = sub.add_parser("grassmann", help="Grassmann, sparsified and matrix-poset graphs")
    gsub = g.add_subparsers(dest="action", required=True)
    for name, func, helptext in (
        ("sp", cmd_grassmann_sp, "sparsified poset summary"),
        ("decompose", cmd_grassmann_decompose, "link tensor decomposition"),
    ):
        q = gsub.add_parser(name, help=helptext)
        common(q)
        q.add_argument("--n", type=int, default=4)
        q.add_argument("--d", type=int, default=4)
        q.add_argument("--dprime", type=int, default=2)
        if name == "decompose":
            q.add_argument("--link", default="W0")
        q.set_defaults(func=func)
    q = gsub.add_parser("graphs", help="T, R, S and DS graphs below I_l")
    common(q)
    q.add_argument("--kind", choices=("T", "R", "S", "DS"), required=True)
    q.add_argument("--l", type=int, required=True)
    q.add_argument("--i", type=int, default=1)
    q.add_argument("--j", type=int, default=1)
    q.add_argument("--k", type=int, default=0)
    q.add_argument("--m", type=int, default=1)
    q.set_defaults(func=cmd_grassmann_graphs)

    c = sub.add_parser("cayley", help="basification and degree bounds")
    csub = c.add_subparsers(dest="action", required=True)
    q = csub.add_parser("basify")
    common(q)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--d", type=int, required=True)
    q.set_defaults(func=cmd_cayley_basify)
    q = csub.add_parser("degbound")
    common(q)
    q.add_argument("--link", required=True, help="TSV with columns u, v, label")
    q.add_argument("--n", type=int, required=True)
    q.set_defaults(func=cmd_cayley_degbound)

    b = sub.add_parser("cob", help="coboundary constants, contractions and cones")
    bsub = b.add_subparsers(dest="action", required=True)
    q = bsub.add_parser("beta")
    common(q)
    q.add_argument("--vertices", type=int, default=4)
    q.add_argument("--group", default="Z2")
    q.set_defaults(func=cmd_cob_beta)
    q = bsub.add_parser("worked")
    common(q)
    q.set_defaults(func=cmd_cob_worked)
    q = bsub.add_parser("link-cone")
    common(q)
    q.add_argument("--n", type=int, default=16)
    q.add_argument("--eps", type=parse_rational, default=Fraction(1, 4))
    q.add_argument("--samples", type=int, default=200)
    q.add_argument("--seed", type=int, required=True)
    q.set_defaults(func=cmd_cob_link_cone)
    q = bsub.add_parser("johnson-cone")
    common(q)
    q.add_argument("--n", type=int, default=8)
    q.add_argument("--eps", type=parse_rational, default=Fraction(1, 2))
    q.set_defaults(func=cmd_cob_johnson_cone)
    q = bsub.add_parser("matrix-link")
    common(q)
    q.add_argument("--n", type=int, default=17)
    q.add_argument("--d", type=int, default=8)
    q.add_argument("--samples", type=int, default=3)
    q.add_argument("--seed", type=int, required=True)
    q.set_defaults(func=cmd_cob_matrix_link)

    s = sub.add_parser("selftest", help="quick runs, each repeated to check determinism")
    common(s)
    s.set_defaults(func=cmd_selftest)
    return p


def _execute(args: argparse.Namespace) -> tuple[int, dict]:
    saved = os.environ.get("HDX_BUDGET")
    if getattr(args, "force", False):
        os.environ["HDX_BUDGET"] = str(FORCE_BUDGET)
    start = time.perf_counter()
    report: dict = {"config": _config(args), "version": __version__}
    try:
        body = args.func(args)
        report.update(body)
        code = EXIT_OK if body.get("ok", False) else EXIT_FAILED
    except (UsageError, ValueError, BudgetExceeded) as exc:
        report["error"] = {"type": type(exc).__name__, "message": str(exc)}
        report["ok"] = False
        code = EXIT_USAGE
    finally:
        if getattr(args, "force", False):
            if saved is None:
                os.environ.pop("HDX_BUDGET", None)
            else:
                os.environ["HDX_BUDGET"] = saved
    report[TIMING_KEY] = round(time.perf_counter() - start, 3)
    report["exit_code"] = code
    return code, report


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    code, report = _execute(args)
    text = dumps(report)
    sys.stdout.write(text)
    out = getattr(args, "out", None)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text)
    return code


__all__ = [
    "EXIT_FAILED", "EXIT_OK", "EXIT_USAGE", "UsageError",
    "build_parser", "canonical_digest", "dumps", "main", "parse_rational",
]
