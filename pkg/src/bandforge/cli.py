"""``bandforge`` command line.

Exit codes: 0 success, 2 input error, 3 hypothesis violation, 4 budget
exhausted.  ``BANDFORGE_BUDGET`` overrides every default budget.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .core import BandComplexError, excess, format_fraction, load, total_width
from .gallery import (
    GallerySpec,
    SearchExhausted,
    area_sequence,
    gallery_complex,
    matrix_A,
    matrix_B,
    projective_fixed_widths,
    step_substitution,
    verify_rips_step,
)
from .leaves import CALIBRATED_LADDER, CALIBRATED_RADIUS, RadiusTooSmall, end_statistics
from .rips import free_arcs, imanishi, run_machine
from .spectral import HypothesisViolated, NonConvergence, SubstitutionData, hausdorff_dimension, pf_eigen

EXIT_INPUT, EXIT_HYPOTHESIS, EXIT_BUDGET = 2, 3, 4


class InputError(Exception):
    pass


def _budget(default: int) -> int:
    raw = os.environ.get("BANDFORGE_BUDGET")
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"BANDFORGE_BUDGET must be an integer, got {raw!r}") from None


def _emit(doc, out: Path | None, name: str) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / name).write_text(text)
    sys.stdout.write(text)


def _load_complex(path: str):
    try:
        return load(path)
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except BandComplexError as exc:
        raise InputError(f"{path}: {exc}") from None


def _load_spec(path: str) -> GallerySpec:
    try:
        with open(path) as fh:
            return GallerySpec.from_dict(json.load(fh))
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: bad gallery spec: {exc}") from None


def _pair(text: str) -> tuple[int, int]:
    try:
        m, n = (int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected M,N, got {text!r}") from None
    return m, n


# ---------------------------------------------------------------------------

def cmd_inspect(args) -> int:
    c = _load_complex(args.file)
    report = imanishi(c, budget=_budget(args.budget))
    doc = {
        "total_width": format_fraction(total_width(c)),
        "support_length": format_fraction(c.support_length),
        "excess": format_fraction(excess(c)),
        "balanced": excess(c) == 0,
        "free_arcs": [a.describe() for a in free_arcs(c)],
        "annulus_free": report.annulus_free,
        "compact_leaf_measure": None if report.compact_leaf_measure is None
        else format_fraction(report.compact_leaf_measure),
    }
    if not args.json:
        for key in ("total_width", "support_length", "excess", "balanced", "annulus_free"):
            label = key.replace("_", "-")
            print(f"{label}: {str(doc[key]).lower() if isinstance(doc[key], bool) else doc[key]}")
        print(f"free-arcs: {len(doc['free_arcs'])}")
        for a in doc["free_arcs"]:
            print(f"  {a['component']} ({a['lo']}, {a['hi']}) band {a['band']}")
        return 0
    _emit(doc, None, "inspect.json")
    return 0


def cmd_rips(args) -> int:
    c = _load_complex(args.file)
    steps = args.max_steps if args.max_steps is not None else _budget(1000)
    trace = run_machine(c, args.policy, steps, args.seed)
    summary = {
        "policy": args.policy, "seed": args.seed, "steps": len(trace.steps) - 1,
        "halted": trace.halted,
        "final_support": format_fraction(trace.final.support_length),
        "final_total_width": format_fraction(total_width(trace.final)),
        "excess": format_fraction(excess(trace.final)),
    }
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.jsonl").write_text(trace.to_jsonl())
    else:
        sys.stdout.write(trace.to_jsonl())
    _emit(summary, Path(args.out) if args.out else None, "summary.json")
    return 0


def cmd_ends(args) -> int:
    if args.gallery:
        c = gallery_complex(_load_spec(args.gallery))
    else:
        c = _load_complex(args.file)
    if args.radius is None:
        radius, ladder = CALIBRATED_RADIUS, list(CALIBRATED_LADDER)
    else:
        radius, ladder = args.radius, None
    if args.ladder:
        try:
            ladder = [int(x) for x in args.ladder.split(",")]
        except ValueError:
            raise InputError(f"--ladder expects comma-separated integers, got {args.ladder!r}") from None
    try:
        hist = end_statistics(c, args.samples, radius, args.seed, ladder)
    except RadiusTooSmall as exc:
        raise InputError(str(exc)) from None
    out = Path(args.out) if args.out else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "ends.csv").write_text(hist.to_csv())
        (out / "ends.svg").write_text(hist.to_svg())
    sys.stdout.write(hist.to_csv())
    return 0


def cmd_gallery(args) -> int:
    spec = _load_spec(args.spec) if args.spec else None
    out = Path(args.out) if args.out else None
    doc = {}
    if args.areas:
        if spec is None:
            raise InputError("--areas needs a spec file")
        doc["areas"] = [{
            "k": v.k, "S_k": format_fraction(v.S_k),
            "S_next": None if v.S_next is None else format_fraction(v.S_next),
            "inequality": v.inequality, "certificate": v.certificate,
            "raw_inequality": v.raw_inequality,
        } for v in area_sequence(spec)]
    if args.fixed_point:
        m, n = args.fixed_point
        v = projective_fixed_widths(m, n)
        B = matrix_B(m, n)
        Bv = [sum(B[i][j] * v[j] for j in range(5)) for i in range(5)]
        lam = sum(Bv) / sum(v)
        residual = max(abs(Bv[i] - lam * v[i]) for i in range(5))
        doc["fixed_point"] = {"m": m, "n": n, "widths": [round(float(x), 12) for x in v],
                              "residual": float(residual)}
    if args.verify_step:
        m, n = args.verify_step
        try:
            witness = verify_rips_step(m, n, budget=_budget(200_000))
        except SearchExhausted as exc:
            doc["verify_step"] = {"m": m, "n": n, "status": "exhausted", "detail": str(exc)}
            _emit(doc, out, "gallery.json")
            return EXIT_BUDGET
        doc["verify_step"] = witness.to_dict()
    if not doc:
        raise InputError("nothing to do; pass --areas, --fixed-point or --verify-step")
    _emit(doc, out, "gallery.json")
    return 0


def cmd_spectral(args) -> int:
    if args.mu is not None or args.lam is not None:
        if args.mu is None or args.lam is None:
            raise InputError("--mu and --lambda go together")
        dim = hausdorff_dimension(args.mu, args.lam)
        _emit({"mu": args.mu, "lambda": args.lam, "dimension": round(dim, 12)}, None, "spectral.json")
        return 0
    m, n = args.constant
    lam, _, lam_res = pf_eigen(matrix_B(m, n))
    sub = SubstitutionData.from_matrix(matrix_A(m, n), lam)
    doc = sub.report()
    doc["lambda"] = round(lam, 12)
    doc["lambda_residual"] = lam_res
    doc["m"], doc["n"] = m, n
    if args.derive:
        derived = step_substitution(m, n)
        doc["A_derived"] = derived.A
        doc["A_derived_matches"] = derived.A == matrix_A(m, n)
    if doc["dimension"] is None:
        _emit(doc, None, "spectral.json")
        return EXIT_HYPOTHESIS
    _emit(doc, Path(args.out) if args.out else None, "spectral.json")
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bandforge", description="Unions of bands and the Rips machine.")
    p.add_argument("--version", action="version", version=f"bandforge {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("inspect", help="excess, free arcs and annulus-freeness of a complex")
    s.add_argument("file")
    s.add_argument("--json", action="store_true")
    s.add_argument("--budget", type=int, default=100_000)
    s.set_defaults(func=cmd_inspect)

    s = sub.add_parser("rips", help="run the Rips machine and write a JSON-lines trace")
    s.add_argument("file")
    s.add_argument("--policy", choices=("leftmost", "widest", "random"), default="leftmost")
    s.add_argument("--max-steps", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_rips)

    s = sub.add_parser("ends", help="histogram of finite-scale end counts")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("file", nargs="?")
    src.add_argument("--gallery", help="gallery spec JSON instead of a complex")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--radius", type=int, help=f"leaf-ball radius (default {CALIBRATED_RADIUS})")
    s.add_argument("--ladder", help="inner radii, comma separated")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_ends)

    s = sub.add_parser("gallery", help="area sequence, fixed point and Rips-step witnesses")
    s.add_argument("spec", nargs="?")
    s.add_argument("--areas", action="store_true")
    s.add_argument("--fixed-point", type=_pair, metavar="M,N")
    s.add_argument("--verify-step", type=_pair, metavar="M,N")
    s.add_argument("--out")
    s.set_defaults(func=cmd_gallery)

    s = sub.add_parser("spectral", help="Perron-Frobenius data and Hausdorff dimension")
    s.add_argument("--constant", type=_pair, metavar="M,N", default=(1, 1))
    s.add_argument("--mu", type=float)
    s.add_argument("--lambda", dest="lam", type=float)
    s.add_argument("--derive", action="store_true",
                   help="also read A off a searched collapse schedule")
    s.add_argument("--out")
    s.set_defaults(func=cmd_spectral)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    try:
        return args.func(args)
    except InputError as exc:
        print(f"bandforge: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except HypothesisViolated as exc:
        print(f"bandforge: hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except NonConvergence as exc:
        print(f"bandforge: {exc} (residual {exc.residual})", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
