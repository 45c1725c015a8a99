"""Command line front end.

Every subcommand reads operators and functions as JSON documents,
validates them before any numerics run, and writes one result JSON file
(contour additionally writes a CSV of quadrature nodes) into the output
directory.  Exit codes: 0 on success, 1 when a mathematical check
fails (certification, a verification verdict, a winding test), 2 on
malformed input.  Result files are byte-identical across repeated runs
with the same inputs: reduction orders are fixed and worker threads
only change scheduling, never accumulation order.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .calculus import (
    apply_primary,
    apply_regularized,
    restrict_to_projection,
    selector_from_points,
    spectral_projection,
)
from .config import RunConfig, validate_schema
from .errors import SpecCalcError, ValidationError
from .fredholm import classify, extended_spectrum, profile
from .geometry import build_contour, default_contour_params, winding_number
from .operators import (
    certify,
    certify_bisectorial,
    excluded_region,
    operator_from_json,
    operator_to_json,
    singular_points,
)
from .verifier import (
    bundled_scenario_names,
    function_from_json,
    load_bundled_scenario,
    run_scenario,
    scenario_from_json,
)

__all__ = ["main"]


class _InputError(Exception):
    """Bad document, file, or argument; maps to exit code 2."""


# ---------------------------------------------------------------------------
# serialization


def _jsonable(x):
    """Recursively convert engine output into JSON-safe structures.

    Complex numbers become [re, im]; non-finite reals become the
    strings "inf"/"-inf"; numpy scalars and arrays are unwrapped.
    """
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        c = complex(x)
        if c.imag == 0.0:
            return _jsonable(c.real)
        return [_jsonable(c.real), _jsonable(c.imag)]
    if isinstance(x, (float, np.floating)):
        f = float(x)
        if math.isnan(f):
            return "nan"
        if math.isinf(f):
            return "inf" if f > 0 else "-inf"
        return f
    return x


def _emit(doc: dict, out_dir: str, name: str) -> Path:
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_jsonable(doc), sort_keys=True, indent=2,
                      allow_nan=False) + "\n"
    path.write_text(text, encoding="utf-8")
    return path


def _load_doc(path: str, kind: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise _InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _InputError(f"{path} is not valid JSON: {exc}") from exc
    issues = validate_schema(doc, kind)
    if issues:
        lines = "\n".join(f"  {p}: {m}" for p, m in issues)
        raise _InputError(f"{path} fails {kind} validation:\n{lines}")
    return doc


def _parse_value(text: str) -> complex | float:
    """Anchor or probe value: 'inf', a float, or a complex like 1+2j."""
    s = text.strip()
    if s == "inf":
        return math.inf
    try:
        return complex(s.replace("i", "j"))
    except ValueError as exc:
        raise _InputError(f"cannot parse value {text!r}") from exc


# ---------------------------------------------------------------------------
# configuration and parallelism


def _resolve_config(args) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = _load_doc(args.config, "config")
    overrides = {}
    for name in ("tol", "max_panel_depth", "nodes_per_panel",
                 "truncation_K", "rank_gap_ratio", "seed", "output_dir"):
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    try:
        return RunConfig(**{**base, **overrides})
    except ValidationError as exc:
        raise _InputError(str(exc)) from exc


def _thread_count() -> int:
    raw = os.environ.get("SPECCALC_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise _InputError(f"SPECCALC_THREADS={raw!r} is not an integer") from exc
    if n < 0:
        raise _InputError("SPECCALC_THREADS must be >= 0 (0 = auto)")
    if n == 0:
        return os.cpu_count() or 1
    return n


def _load_operator(path: str, cfg: RunConfig):
    doc = _load_doc(path, "operator")
    op = operator_from_json(doc)
    if hasattr(op, "truncation_K") and cfg.truncation_K != op.truncation_K:
        from dataclasses import replace
        op = replace(op, truncation_K=cfg.truncation_K)
    return op


# ---------------------------------------------------------------------------
# subcommands


def _cmd_certify(args, cfg: RunConfig, mapper) -> int:
    op = _load_operator(args.op, cfg)
    try:
        report = certify_bisectorial(op)
    except SpecCalcError as exc:
        _emit({"command": "certify", "certified": False, "reason": str(exc)},
              cfg.output_dir, "certify.json")
        print(f"not bisectorial: {exc}", file=sys.stderr)
        return 1
    doc = {"command": "certify", **report.describe(),
           "operator": operator_to_json(op)}
    path = _emit(doc, cfg.output_dir, "certify.json")
    print(f"certified with constant {report.constant:.6g} "
          f"({report.samples} samples) -> {path}")
    return 0


def _cmd_apply(args, cfg: RunConfig, mapper) -> int:
    op = certify(_load_operator(args.op, cfg))
    fn_doc = _load_doc(args.fn, "function")
    fn = function_from_json(fn_doc)
    reg = None
    if args.regularizer:
        reg = function_from_json(_load_doc(args.regularizer, "function"))
    kwargs = dict(
        tol=cfg.tol,
        base_point=args.base_point,
        max_panel_depth=cfg.max_panel_depth,
        nodes_per_panel=cfg.nodes_per_panel,
        mapper=mapper,
    )
    if args.mode == "primary":
        if reg is not None:
            raise _InputError("--regularizer only applies to --mode regularized")
        result = apply_primary(fn, op, **kwargs)
    else:
        result = apply_regularized(fn, op, regularizer=reg, **kwargs)
    doc = {
        "command": "apply",
        "mode": args.mode,
        "function": fn_doc,
        "operator": operator_to_json(result.operator),
        "bounded": result.bounded,
        "regularizer_label": result.regularizer_used.label,
        "quadrature_report": result.quadrature_report,
    }
    path = _emit(doc, cfg.output_dir, "result.json")
    rep = result.quadrature_report or {}
    extra = f", {rep['nodes']} quadrature nodes" if "nodes" in rep else " (exact)"
    print(f"applied {fn.label}{extra} -> {path}")
    return 0


def _cmd_spectrum(args, cfg: RunConfig, mapper) -> int:
    op = certify(_load_operator(args.op, cfg))
    indices = _parse_indices(args.indices)
    parts = {}
    for i in indices:
        parts[str(i)] = extended_spectrum(op, i).describe()
    doc = {"command": "spectrum", "indices": parts,
           "singular_points": [("inf" if math.isinf(abs(complex(d))) else complex(d))
                               for d in singular_points(op)]}
    path = _emit(doc, cfg.output_dir, "spectrum.json")
    for i in indices:
        s = parts[str(i)]
        n = len(s["points"])
        inf = "+inf" if s["includes_infinity"] else ""
        print(f"sigma_{i}: {n} point(s){inf}")
    print(f"-> {path}")
    return 0


def _cmd_classify(args, cfg: RunConfig, mapper) -> int:
    op = certify(_load_operator(args.op, cfg))
    mu = _parse_value(args.mu)
    if isinstance(mu, float) and math.isinf(mu):
        raise _InputError("classify needs a finite probe point")
    prof = profile(op, mu, gap_ratio=cfg.rank_gap_ratio)
    mem = classify(prof)
    doc = {
        "command": "classify",
        "mu": complex(mu),
        "profile": {
            "nul": prof.nul, "defect": prof.defect,
            "ascent": prof.ascent, "descent": prof.descent,
            "range_closed": prof.range_closed,
            "range_complemented": prof.range_complemented,
            "kernel_complemented": prof.kernel_complemented,
        },
        "membership": {str(i): mem.holds(i) for i in range(10)},
    }
    path = _emit(doc, cfg.output_dir, "classify.json")
    print(prof.describe())
    held = [str(i) for i in range(10) if mem.holds(i)]
    print(f"semigroup classes holding: {', '.join(held) if held else 'none'} -> {path}")
    return 0


def _cmd_project(args, cfg: RunConfig, mapper) -> int:
    op = certify(_load_operator(args.op, cfg))
    anchors = [_parse_value(s) for s in args.anchors.split(",") if s.strip()]
    if not anchors:
        raise _InputError("--anchors needs at least one point")
    selector = selector_from_points(anchors)
    res = spectral_projection(
        op, selector, tol=cfg.tol,
        nodes_per_panel=cfg.nodes_per_panel,
        max_panel_depth=cfg.max_panel_depth,
        mapper=mapper,
    )
    restricted = restrict_to_projection(op, res)
    doc = {
        "command": "project",
        "projector": operator_to_json(res.projector),
        "lambda_set": res.lambda_set.describe(),
        "complement_rank_finite": res.complement_rank_finite,
        "restricted_operator": operator_to_json(restricted),
    }
    path = _emit(doc, cfg.output_dir, "project.json")
    n = len(res.lambda_set.points)
    inf = " and infinity" if res.lambda_set.includes_infinity else ""
    print(f"projected onto {n} spectral point(s){inf} -> {path}")
    return 0


def _cmd_verify(args, cfg: RunConfig, mapper) -> int:
    if args.list:
        for name in bundled_scenario_names():
            print(name)
        return 0
    if not args.scenario:
        raise _InputError("verify needs --scenario NAME|PATH (or --list)")
    name = args.scenario
    bundled = {n.removesuffix(".json"): n for n in bundled_scenario_names()}
    if name in bundled or name in bundled.values():
        scn = load_bundled_scenario(name)
    else:
        doc = _load_doc(name, "scenario")
        scn = scenario_from_json(doc)
    outcome = run_scenario(scn, tol=cfg.tol, mapper=mapper)
    report = outcome["report"]
    doc = {
        "command": "verify",
        "name": outcome["name"],
        "ok": outcome["ok"],
        "report": report.describe(),
        "violations": outcome["violations"],
        "mismatches": outcome["mismatches"],
        "observations": outcome["observations"],
        "extras": outcome["extras"],
    }
    path = _emit(doc, cfg.output_dir, "verify.json")
    print(report.table())
    for line in outcome["mismatches"]:
        print(f"mismatch: {line}", file=sys.stderr)
    for line in outcome["observations"]:
        print(f"note: {line}")
    print(f"{'ok' if outcome['ok'] else 'FAILED'} -> {path}")
    return 0 if outcome["ok"] else 1


def _cmd_contour(args, cfg: RunConfig, mapper) -> int:
    op = certify(_load_operator(args.op, cfg))
    phi = 0.0
    if args.fn:
        fn = function_from_json(_load_doc(args.fn, "function"))
        phi = fn.phi
    region = excluded_region(op)
    phi_prime, radii = default_contour_params(region, phi)
    path_obj = build_contour(region, phi_prime, radii,
                             nodes_per_panel=cfg.nodes_per_panel)

    csv_path = Path(cfg.output_dir) / "contour.csv"
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["segment_id", "t", "re", "im", "weight_re", "weight_im"])
        for seg_id, t, z, w in path_obj.quadrature_nodes():
            writer.writerow([seg_id, f"{t:.17g}",
                             f"{z.real:.17g}", f"{z.imag:.17g}",
                             f"{w.real:.17g}", f"{w.imag:.17g}"])

    windings = []
    ok = True
    for z0 in path_obj.interior_samples:
        w = winding_number(path_obj, z0, tol=1e-9)
        good = abs(w - 1.0) <= 1e-6
        ok = ok and good
        windings.append({"point": complex(z0), "winding": w, "expected": 1})
        print(f"winding about {complex(z0):.6g}: {w:.9f} "
              f"{'ok' if good else 'FAIL'}")
    doc = {
        "command": "contour",
        "phi_prime": phi_prime,
        "radii": radii,
        "truncated": path_obj.truncated,
        "outer_radius": path_obj.outer_radius,
        "segments": len(path_obj.segments),
        "windings": windings,
        "ok": ok,
        "csv": csv_path.name,
    }
    out = _emit(doc, cfg.output_dir, "contour.json")
    print(f"{len(path_obj.segments)} segments -> {csv_path}, {out}")
    return 0 if ok else 1


def _parse_indices(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            i = int(part)
        except ValueError as exc:
            raise _InputError(f"bad spectrum index {part!r}") from exc
        if not 0 <= i <= 9:
            raise _InputError(f"spectrum index {i} outside 0..9")
        out.append(i)
    if not out:
        raise _InputError("no spectrum indices given")
    return out


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", dest="output_dir", metavar="DIR",
                        help="output directory (default .)")
    common.add_argument("--config", metavar="PATH",
                        help="JSON file with run configuration")
    common.add_argument("--tol", type=float, help="target tolerance")
    common.add_argument("--nodes-per-panel", dest="nodes_per_panel", type=int)
    common.add_argument("--max-panel-depth", dest="max_panel_depth", type=int)
    common.add_argument("--truncation-K", dest="truncation_K", type=int)
    common.add_argument("--rank-gap-ratio", dest="rank_gap_ratio", type=float)
    common.add_argument("--seed", type=int)

    p = argparse.ArgumentParser(
        prog="speccalc",
        description="Holomorphic functional calculus on bisector regions",
    )
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("certify", parents=[common],
                        help="certify an operator as bisectorial")
    sp.add_argument("--op", required=True, metavar="PATH")
    sp.set_defaults(func=_cmd_certify)

    sp = sub.add_parser("apply", parents=[common],
                        help="compute f(A) and write the result operator")
    sp.add_argument("--op", required=True, metavar="PATH")
    sp.add_argument("--fn", required=True, metavar="PATH")
    sp.add_argument("--mode", choices=["primary", "regularized"],
                    default="regularized")
    sp.add_argument("--regularizer", metavar="PATH")
    sp.add_argument("--base-point", dest="base_point", type=float)
    sp.set_defaults(func=_cmd_apply)

    sp = sub.add_parser("spectrum", parents=[common],
                        help="extended spectra at selected indices")
    sp.add_argument("--op", required=True, metavar="PATH")
    sp.add_argument("--indices", default="0",
                    help="comma separated indices in 0..9 (default 0)")
    sp.set_defaults(func=_cmd_spectrum)

    sp = sub.add_parser("classify", parents=[common],
                        help="semigroup-class profile at a probe point")
    sp.add_argument("--op", required=True, metavar="PATH")
    sp.add_argument("--mu", required=True,
                    help="complex probe point, e.g. '0.5+1j'")
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("project", parents=[common],
                        help="spectral projection onto a clopen part")
    sp.add_argument("--op", required=True, metavar="PATH")
    sp.add_argument("--anchors", required=True,
                    help="comma separated points, e.g. '2j,inf'")
    sp.set_defaults(func=_cmd_project)

    sp = sub.add_parser("verify", parents=[common],
                        help="run a spectral-mapping scenario")
    sp.add_argument("--scenario", metavar="NAME|PATH")
    sp.add_argument("--list", action="store_true",
                    help="list bundled scenarios and exit")
    sp.set_defaults(func=_cmd_verify)

    sp = sub.add_parser("contour", parents=[common],
                        help="emit the integration contour as CSV")
    sp.add_argument("--op", required=True, metavar="PATH")
    sp.add_argument("--fn", metavar="PATH",
                    help="function whose domain angle shapes the contour")
    sp.set_defaults(func=_cmd_contour)
    return p


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        threads = _thread_count()
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return args.func(args, cfg, pool.map)
        return args.func(args, cfg, None)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValidationError as exc:
        for p, m in exc.issues:
            print(f"error: {p}: {m}", file=sys.stderr)
        return 2
    except SpecCalcError as exc:
        print(f"violation: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
