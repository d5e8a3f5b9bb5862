"""Command-line analysis front end.

Subcommands: jiou (single-pair ratio/loss/gradient), sweep (deviation-grid
CSV), roundtrip (annotation encode/decode check), fit (descent traces and
the seeded suite), nms (suppress a detection CSV), heatmap-demo (render a
seeded synthetic scene).

Exit codes: 0 success, 1 annotation parse failures in roundtrip, 2 malformed
inputs, 3 unwritable output path.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

import numpy as np

from .boxes import (
    HALF_PI,
    OrientedBox,
    canonicalize,
    corner_set_distance,
    corners_to_box,
    decode_corners,
    iter_dota_object_lines,
    parse_dota_record,
)
from .codec import (
    encode_decode_roundtrip,
    encode_targets,
    extract_peaks,
    focal_loss,
    total_loss,
)
from .errors import AnnotationError, InvalidBoxError, OutOfImageError
from .fitting import (
    TRACE_CSV_HEADER,
    default_fit_suite,
    deviation_sweep,
    fit_box,
    fmt9,
    run_fit_suite,
    write_sweep_csv,
)
from .loss import jiou_bar, jiou_gradient
from .oracle import Detection, rotated_nms

DETECTIONS_CSV_HEADER = "cx,cy,r1,r2,phi,score,category"
HEATMAP_CSV_HEADER = "class,cell_y,cell_x,value"


@dataclass(frozen=True)
class CliConfig:
    """Shared knob defaults for every subcommand."""

    n: int = 720
    mu: float = 5.0
    stride: int = 4
    alpha: float = 4.0
    gamma: float = 2.0
    nms_iou: float = 0.1
    seed: int = 42
    degrees: bool = False


class SpecError(ValueError):
    """A command-line value that failed to parse."""


def parse_box_spec(spec: str, degrees: bool = False) -> OrientedBox:
    """Parse "cx,cy,r1,r2,phi" into a box; phi in radians unless degrees."""
    parts = spec.split(",")
    if len(parts) != 5:
        raise SpecError(f"box spec needs 5 comma-separated values, got {spec!r}")
    try:
        cx, cy, r1, r2, phi = (float(p) for p in parts)
    except ValueError:
        raise SpecError(f"non-numeric value in box spec {spec!r}") from None
    if degrees:
        phi = math.radians(phi)
    try:
        return OrientedBox(cx, cy, r1, r2, phi)
    except InvalidBoxError as exc:
        raise SpecError(str(exc)) from None


def _config(args) -> CliConfig:
    return CliConfig(n=args.n, mu=args.mu, stride=args.stride, alpha=args.alpha,
                     gamma=args.gamma, nms_iou=args.nms_iou, seed=args.seed,
                     degrees=args.degrees)


def _emit_angle(phi: float, cfg: CliConfig) -> float:
    return math.degrees(phi) if cfg.degrees else phi


def _open_out(path):
    try:
        return open(path, "w", encoding="utf-8", newline="\n")
    except OSError as exc:
        raise _Unwritable(f"cannot write {path}: {exc}") from None


class _Unwritable(Exception):
    pass


def cmd_jiou(args) -> int:
    cfg = _config(args)
    pred = parse_box_spec(args.pred, cfg.degrees)
    target = parse_box_spec(args.target, cfg.degrees)
    value = jiou_bar(pred, target, cfg.n)
    grad = jiou_gradient(pred, target, cfg.n)
    print(f"ratio {fmt9(value.ratio)}")
    print(f"loss {fmt9(value.loss)}")
    print(f"d_phi {fmt9(grad.d_phi)}")
    print(f"d_r1 {fmt9(grad.d_r1)}")
    print(f"d_r2 {fmt9(grad.d_r2)}")
    return 0


def cmd_sweep(args) -> int:
    cfg = _config(args)
    _open_out(args.out).close()  # fail fast before the sweep runs
    records = deviation_sweep(seed=cfg.seed)
    try:
        write_sweep_csv(records, args.out)
    except OSError as exc:
        raise _Unwritable(f"cannot write {args.out}: {exc}") from None
    print(f"wrote {len(records)} records to {args.out}")
    return 0


def _roundtrip_grid(cells):
    width = max(cx for cx, _ in cells) + 2
    height = max(cy for _, cy in cells) + 2
    return height, width


def cmd_roundtrip(args) -> int:
    cfg = _config(args)
    records = []
    parse_errors = 0
    for lineno, line in iter_dota_object_lines(args.annotations):
        try:
            records.append(parse_dota_record(line, lineno))
        except AnnotationError as exc:
            parse_errors += 1
            print(str(exc), file=sys.stderr)
    print(f"records {len(records) + parse_errors}")
    print(f"parse_errors {parse_errors}")
    if records:
        categories = sorted({cat for _, cat, _ in records})
        class_of = {cat: i for i, cat in enumerate(categories)}
        objects, quads = [], []
        for quad, cat, _ in records:
            box = corners_to_box(quad)
            objects.append((box, class_of[cat]))
            quads.append(quad)
        cells = [(math.floor(b.cx / cfg.stride), math.floor(b.cy / cfg.stride))
                 for b, _ in objects]
        height, width = _roundtrip_grid(cells)
        errors, detections = encode_decode_roundtrip(
            objects, len(categories), height, width, cfg.stride)
        corner_errors = np.full(len(objects), np.nan)
        det_by_cell = {}
        for det in detections:
            cell = (det.category,
                    math.floor(det.box.cx / cfg.stride),
                    math.floor(det.box.cy / cfg.stride))
            det_by_cell[cell] = det
        for i, ((box, cls), quad) in enumerate(zip(objects, quads)):
            det = det_by_cell.get((cls, cells[i][0], cells[i][1]))
            if det is not None:
                corner_errors[i] = corner_set_distance(
                    decode_corners(det.box).corners, quad.corners)
        field_max = errors[~np.isnan(errors).any(axis=1)]
        max_field = float(field_max.max()) if field_max.size else math.nan
        valid_corner = corner_errors[~np.isnan(corner_errors)]
        max_corner = float(valid_corner.max()) if valid_corner.size else math.nan
        per_record = np.where(np.isnan(corner_errors), np.inf, corner_errors)
        failures = int(np.count_nonzero(per_record > 1e-6))
        print(f"max_box_field_error {fmt9(max_field)}")
        print(f"max_corner_error {fmt9(max_corner)}")
        print(f"failures {failures}")
    return 1 if parse_errors else 0


def cmd_fit(args) -> int:
    cfg = _config(args)
    if args.suite:
        cases = default_fit_suite(seed=cfg.seed)
        traces = run_fit_suite(args.loss, cases, n=cfg.n, lr=args.lr,
                               max_iters=args.iters)
        converged = sum(t.converged for t in traces)
        mean_iou = sum(t.final_exact_iou for t in traces) / len(traces)
        print(f"suite_cases {len(traces)}")
        print(f"converged {converged}")
        print(f"mean_final_iou {fmt9(mean_iou)}")
        if args.out:
            with _open_out(args.out) as fh:
                fh.write("case,converged,steps,final_exact_iou\n")
                for i, t in enumerate(traces):
                    fh.write(f"{i},{int(t.converged)},{len(t.steps) - 1},"
                             f"{fmt9(t.final_exact_iou)}\n")
        return 0
    if not args.init or not args.target:
        raise SpecError("fit needs --init and --target (or --suite)")
    init = parse_box_spec(args.init, cfg.degrees)
    target = parse_box_spec(args.target, cfg.degrees)
    trace = fit_box(init, target, args.loss, n=cfg.n, lr=args.lr,
                    max_iters=args.iters)
    print(f"converged {'true' if trace.converged else 'false'}")
    print(f"final_exact_iou {fmt9(trace.final_exact_iou)}")
    print(f"steps {len(trace.steps) - 1}")
    if args.out:
        with _open_out(args.out) as fh:
            fh.write(TRACE_CSV_HEADER + "\n")
            for s in trace.steps:
                fh.write(",".join((
                    str(s.step), fmt9(_emit_angle(s.phi, cfg)), fmt9(s.r1),
                    fmt9(s.r2), fmt9(s.loss), fmt9(s.exact_iou))) + "\n")
    return 0


def parse_detections_csv(path, degrees: bool = False):
    """Read a detections CSV with the fixed header cx,cy,r1,r2,phi,score,category."""
    detections = []
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != DETECTIONS_CSV_HEADER:
        raise AnnotationError(f"expected header {DETECTIONS_CSV_HEADER!r}", 1)
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 7:
            raise AnnotationError(f"expected 7 fields, got {len(parts)}", lineno)
        try:
            cx, cy, r1, r2, phi, score = (float(p) for p in parts[:6])
            category = int(parts[6])
        except ValueError:
            raise AnnotationError(f"non-numeric field in {line!r}", lineno) from None
        if degrees:
            phi = math.radians(phi)
        try:
            detections.append(Detection(OrientedBox(cx, cy, r1, r2, phi), score, category))
        except InvalidBoxError as exc:
            raise AnnotationError(str(exc), lineno) from None
    return detections


def cmd_nms(args) -> int:
    cfg = _config(args)
    detections = parse_detections_csv(args.detections, cfg.degrees)
    kept = rotated_nms(detections, cfg.nms_iou)
    rows = [DETECTIONS_CSV_HEADER]
    for d in kept:
        rows.append(",".join((
            fmt9(d.box.cx), fmt9(d.box.cy), fmt9(d.box.r1), fmt9(d.box.r2),
            fmt9(_emit_angle(d.box.phi, cfg)), fmt9(d.score), str(d.category),
        )))
    print(f"kept {len(kept)} of {len(detections)}")
    if args.out:
        with _open_out(args.out) as fh:
            fh.write("\n".join(rows) + "\n")
    else:
        for row in rows:
            print(row)
    return 0


def _demo_scene(cfg: CliConfig, num_objects: int, num_classes: int,
                height: int, width: int):
    """Seeded random boxes on non-adjacent cells, so every center survives
    peak extraction."""
    rng = np.random.default_rng(cfg.seed)
    lattice_h = (height - 2) // 3
    lattice_w = (width - 2) // 3
    if num_objects > lattice_h * lattice_w:
        raise SpecError(f"{num_objects} objects do not fit a {height}x{width} grid")
    slots = rng.choice(lattice_h * lattice_w, size=num_objects, replace=False)
    objects = []
    for slot in slots:
        cell_y = 1 + 3 * (int(slot) // lattice_w)
        cell_x = 1 + 3 * (int(slot) % lattice_w)
        cx = (cell_x + rng.uniform(0.05, 0.95)) * cfg.stride
        cy = (cell_y + rng.uniform(0.05, 0.95)) * cfg.stride
        r2 = rng.uniform(2.0, 3.0 * cfg.stride)
        r1 = r2 * rng.uniform(1.0, 4.0)
        phi = rng.uniform(-HALF_PI, HALF_PI)
        cls = int(rng.integers(0, num_classes))
        objects.append((canonicalize(OrientedBox(cx, cy, r1, r2, phi)), cls))
    return objects


def cmd_heatmap_demo(args) -> int:
    cfg = _config(args)
    objects = _demo_scene(cfg, args.num_objects, args.classes, args.height, args.width)
    enc = encode_targets(objects, args.classes, args.height, args.width, cfg.stride)
    peaks = extract_peaks(enc.heatmap.values, k=len(objects))
    errors, _ = encode_decode_roundtrip(objects, args.classes, args.height,
                                        args.width, cfg.stride)
    cla = focal_loss(enc.heatmap.values, enc.heatmap, cfg.alpha, cfg.gamma)
    report = total_loss(cla, 0.0, 0.0, cfg.mu)
    print(f"objects {len(objects)}")
    print(f"peaks {len(peaks)}")
    for p in peaks:
        print(f"peak class={p.category} cell=({p.cell_x},{p.cell_y}) score={fmt9(p.score)}")
    print(f"max_field_error {fmt9(float(np.nanmax(errors)) if errors.size else 0.0)}")
    print(f"focal_self {fmt9(report.classification)}")
    print(f"total {fmt9(report.total)}")
    if args.out:
        heat = enc.heatmap.values
        with _open_out(args.out) as fh:
            fh.write(HEATMAP_CSV_HEADER + "\n")
            cs, ys, xs = np.nonzero(heat >= 1e-9)
            for c, y, x in zip(cs, ys, xs):
                fh.write(f"{c},{y},{x},{fmt9(heat[c, y, x])}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, default=720,
                        help="discretization angles (default 720)")
    common.add_argument("--mu", type=float, default=5.0,
                        help="total-loss weight on the polar IoU term (default 5.0)")
    common.add_argument("--stride", type=int, default=4,
                        help="output stride (default 4)")
    common.add_argument("--alpha", type=float, default=4.0,
                        help="focal-loss negative-weight exponent (default 4)")
    common.add_argument("--gamma", type=float, default=2.0,
                        help="focal-loss focusing exponent (default 2)")
    common.add_argument("--nms-iou", type=float, default=0.1, dest="nms_iou",
                        help="NMS suppression threshold (default 0.1)")
    common.add_argument("--seed", type=int, default=42,
                        help="random seed (default 42)")
    common.add_argument("--degrees", action="store_true",
                        help="accept and emit box angles in degrees "
                             "(gradients stay per-radian)")

    parser = argparse.ArgumentParser(
        prog="polarjiou",
        description="Polar IoU loss analysis tools for oriented boxes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("jiou", parents=[common],
                       help="ratio, loss, and gradient for one box pair")
    p.add_argument("--pred", required=True, help="predicted box cx,cy,r1,r2,phi")
    p.add_argument("--target", required=True, help="target box cx,cy,r1,r2,phi")
    p.set_defaults(func=cmd_jiou)

    p = sub.add_parser("sweep", parents=[common],
                       help="deviation sweep over the default grid")
    p.add_argument("--out", default="sweep.csv", help="output CSV path")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("roundtrip", parents=[common],
                       help="encode/decode annotation records and report errors")
    p.add_argument("annotations", help="annotation file path")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("fit", parents=[common],
                       help="gradient-descent fit of one box onto another")
    p.add_argument("--init", help="initial box cx,cy,r1,r2,phi")
    p.add_argument("--target", help="target box cx,cy,r1,r2,phi")
    p.add_argument("--loss", choices=("jiou", "smooth_l1"), default="jiou")
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--iters", type=int, default=500)
    p.add_argument("--suite", action="store_true",
                   help="run the seeded 50-case suite instead of one pair")
    p.add_argument("--out", help="trace (or suite summary) CSV path")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("nms", parents=[common],
                       help="suppress a detections CSV")
    p.add_argument("detections", help=f"CSV with header {DETECTIONS_CSV_HEADER}")
    p.add_argument("--out", help="kept-detections CSV path (default: stdout)")
    p.set_defaults(func=cmd_nms)

    p = sub.add_parser("heatmap-demo", parents=[common],
                       help="render a seeded synthetic scene and report losses")
    p.add_argument("--num-objects", type=int, default=5, dest="num_objects")
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--out", help="heatmap dump CSV path")
    p.set_defaults(func=cmd_heatmap_demo)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SpecError, AnnotationError, InvalidBoxError, OutOfImageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(parser.format_usage(), end="", file=sys.stderr)
        return 2
    except _Unwritable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
