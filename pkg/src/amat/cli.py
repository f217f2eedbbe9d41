"""Command-line interface: compute, invert, eval and binary-mat."""

from __future__ import annotations

import argparse
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .diskgeom import ScaleSet, parse_scales
from .evaluate import detection_score, f_measure, format_scores, recon_score
from .imagecore import RGB, Image, ImageIOError, load_image, load_raw, save_image
from .matfile import MatFileError, read_mat, write_mat
from .pipeline import compute_amat
from .postprocess import DEFAULT_TAU, binary_mat
from .reconstruct import CoverageError, compression_ratio, invert
from .setcover import MatResult, MedialRecord, depth_from_records, radius_map_from_records

DEFAULT_WS = 1e-4
DEFAULT_SCALES = "2:41"
WORKERS_ENV = "AMAT_WORKERS"


class CliError(Exception):
    pass


def _fail(msg: str) -> int:
    print(f"amat: error: {msg}", file=sys.stderr)
    return 1


def _default_output(path: str, suffix: str) -> str:
    return str(Path(path).with_suffix(suffix))


def cmd_compute(args) -> int:
    try:
        radii = parse_scales(args.scales)
        scales = ScaleSet(radii, args.ws)
    except ValueError as exc:
        return _fail(str(exc))
    try:
        img = load_image(args.input)
    except ImageIOError as exc:
        return _fail(str(exc))
    start = time.perf_counter()
    try:
        result = compute_amat(img, scales, smoothing=not args.no_smooth,
                              simplify=not args.no_simplify, tau=args.tau)
    except ValueError as exc:
        return _fail(str(exc))
    elapsed = time.perf_counter() - start
    out = args.output or _default_output(args.input, ".amat")
    try:
        write_mat(result.mat, out)
    except (OSError, ValueError) as exc:
        return _fail(f"cannot write {out}: {exc}")
    m = len(result.mat)
    print(format_scores([
        ("m", m),
        ("compression", compression_ratio(img.height, img.width, m)),
        ("time_s", round(elapsed, 3)),
    ]), end="")
    return 0


def _read_mat(path) -> MatResult:
    if not os.path.isfile(path):
        raise CliError(f"unreadable: {path} does not exist")
    try:
        return read_mat(path)
    except MatFileError as exc:
        raise CliError(f"{exc} ({path})") from exc
    except OSError as exc:
        raise CliError(f"unreadable: {path} ({exc})") from exc


def _invert_mat(mat: MatResult) -> Image:
    background = 0.0 if mat.space == RGB else None
    return invert(mat, background=background).image


def cmd_invert(args) -> int:
    try:
        mat = _read_mat(args.input)
        recon = _invert_mat(mat)
        original = load_image(args.original) if args.original else None
    except (CliError, ImageIOError, CoverageError) as exc:
        return _fail(str(exc))
    out = args.output or _default_output(args.input, ".png")
    try:
        save_image(recon, out)
    except (ImageIOError, OSError) as exc:
        return _fail(str(exc))
    if original is not None:
        try:
            score = recon_score(original, recon)
        except ValueError as exc:
            return _fail(str(exc))
        print(format_scores([("mse", score.mse), ("psnr", score.psnr), ("ssim", score.ssim)]), end="")
    return 0


def _binary_mask(raw: np.ndarray) -> np.ndarray:
    """Foreground mask of a two-valued image; raises CliError otherwise."""
    if raw.ndim == 3:
        if not (raw == raw[:, :, :1]).all():
            raise CliError("not binary: color input")
        raw = raw[:, :, 0]
    values = np.unique(raw)
    if len(values) > 2 or (len(values) == 2 and values[0] != 0):
        raise CliError(f"not binary: {len(values)} distinct values")
    mask = raw > 0
    if not mask.any():
        raise CliError("not binary: empty mask")
    return mask


def _shape_mat(mask: np.ndarray) -> MatResult:
    shape = binary_mat(mask)
    ys, xs = np.nonzero(shape.axis)
    records = [MedialRecord(int(x), int(y), int(shape.radii[y, x]), (1.0, 1.0, 1.0))
               for y, x in zip(ys, xs)]
    h, w = mask.shape
    return MatResult(records=records, depth=depth_from_records(records, h, w),
                     radius_map=radius_map_from_records(records, h, w),
                     scales=ScaleSet(tuple(sorted({r.radius for r in records})), 0.0),
                     height=h, width=w, space=RGB)


def _label_ids(raw: np.ndarray) -> np.ndarray:
    if raw.ndim == 3:
        raw = raw.astype(np.int64)
        return (raw[:, :, 0] << 16) | (raw[:, :, 1] << 8) | raw[:, :, 2]
    return raw.astype(np.int64)


def cmd_binary_mat(args) -> int:
    try:
        raw = load_raw(args.input)
        if args.per_label:
            labels = _label_ids(raw)
            out = Path(args.output or _default_output(args.input, ".amat"))
            for value in np.unique(labels):
                target = out.with_name(f"{out.stem}_{value}{out.suffix}")
                write_mat(_shape_mat(labels == value), target)
                print(target)
        else:
            mat = _shape_mat(_binary_mask(raw))
            write_mat(mat, args.output or _default_output(args.input, ".amat"))
            print(format_scores([("m", len(mat))]), end="")
    except (CliError, ImageIOError) as exc:
        return _fail(str(exc))
    except (OSError, ValueError) as exc:
        return _fail(f"cannot write output: {exc}")
    return 0


# -- eval ---------------------------------------------------------------------

_PRED_SUFFIXES = (".amat", ".png", ".ppm")


def _collect(paths) -> dict[str, Path]:
    found = {}
    for p in map(Path, paths):
        files = sorted(p.iterdir()) if p.is_dir() else [p]
        for f in files:
            if f.is_file() and f.suffix.lower() in _PRED_SUFFIXES:
                found.setdefault(f.stem, f)
    return found


def _gt_files(gt_dir: Path, stem: str) -> list[Path]:
    sub = gt_dir / stem
    if sub.is_dir():
        return sorted(f for f in sub.iterdir() if f.suffix.lower() in (".png", ".ppm"))
    return [f for f in (gt_dir / f"{stem}.png", gt_dir / f"{stem}.ppm") if f.is_file()][:1]


def _gt_stems(gt_dir: Path) -> set[str]:
    stems = set()
    for f in gt_dir.iterdir():
        if f.is_dir() or f.suffix.lower() in (".png", ".ppm"):
            stems.add(f.stem if f.is_file() else f.name)
    return stems


def _skeleton_map(path: Path, from_labels: bool) -> np.ndarray:
    raw = load_raw(path)
    if not from_labels:
        return (raw.reshape(raw.shape[0], raw.shape[1], -1) != 0).any(axis=2)
    labels = _label_ids(raw)
    skel = np.zeros(labels.shape, dtype=bool)
    for value in np.unique(labels):
        skel |= binary_mat(labels == value).axis
    return skel


def _detect_one(task):
    stem, pred, gts, from_labels = task
    if pred.suffix == ".amat":
        predicted = read_mat(pred).axis_mask()
    else:
        predicted = _skeleton_map(pred, False)
    gt_maps = [_skeleton_map(g, from_labels) for g in gts]
    s = detection_score(predicted, gt_maps)
    return stem, {"precision": s.precision, "recall": s.recall, "f": s.f_measure}


def _recon_one(task):
    stem, pred, gts, _ = task
    original = load_image(gts[0])
    if pred.suffix == ".amat":
        mat = read_mat(pred)
        recon = _invert_mat(mat)
        ratio = compression_ratio(mat.height, mat.width, len(mat))
    else:
        recon = load_image(pred)
        ratio = float("nan")
    s = recon_score(original, recon, ratio)
    return stem, {"mse": s.mse, "psnr": s.psnr, "ssim": s.ssim, "compression": s.compression}


def _worker_count(flag: int | None) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise CliError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    return max(1, flag or 1)


def _run_tasks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_guarded(fn, t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_guarded, [fn] * len(tasks), tasks))


def _guarded(fn, task):
    try:
        return fn(task)
    except (ImageIOError, MatFileError, CoverageError, ValueError, OSError) as exc:
        return task[0], exc


def cmd_eval(args) -> int:
    gt_dir = Path(args.gt)
    if not gt_dir.is_dir():
        return _fail(f"unreadable: ground-truth directory {gt_dir} does not exist")
    gt_stems = _gt_stems(gt_dir)
    if not gt_stems:
        return _fail(f"ground-truth directory {gt_dir} is empty")
    preds = _collect(args.pred)
    if not preds:
        return _fail("no predictions found")
    try:
        workers = _worker_count(args.workers)
    except CliError as exc:
        return _fail(str(exc))

    status = 0
    tasks = []
    for stem, pred in sorted(preds.items()):
        gts = _gt_files(gt_dir, stem)
        if not gts:
            print(f"amat: skipped {stem}: no ground truth with that basename", file=sys.stderr)
            status = 1
            continue
        tasks.append((stem, pred, gts, args.gt_labels))
    for stem in sorted(gt_stems - set(preds)):
        print(f"amat: skipped {stem}: no prediction with that basename", file=sys.stderr)
        status = 1

    fn = _detect_one if args.mode == "detection" else _recon_one
    rows = []
    per_image = []
    for stem, result in _run_tasks(fn, tasks, workers):
        if isinstance(result, Exception):
            print(f"amat: skipped {stem}: {result}", file=sys.stderr)
            status = 1
            continue
        per_image.append(result)
        rows.extend((f"{stem}.{k}", v) for k, v in result.items())
    if not per_image:
        return _fail("no image could be scored")

    agg = {k: float(np.mean([r[k] for r in per_image])) for k in per_image[0]}
    if args.mode == "detection":
        agg["f"] = f_measure(agg["precision"], agg["recall"])
    rows.extend((f"aggregate.{k}", v) for k, v in agg.items())
    text = format_scores(rows)
    if args.scores:
        try:
            Path(args.scores).write_text(text)
        except OSError as exc:
            return _fail(f"cannot write {args.scores}: {exc}")
    else:
        print(text, end="")
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="amat", description="Appearance medial axis transform of images.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="compute the medial representation of an image",
                       description="Compute an AMAT (smoothing on, simplify on unless disabled).")
    p.add_argument("input", help="PNG or PPM image")
    p.add_argument("-o", "--output", help="MatFile path (default: input with .amat suffix)")
    p.add_argument("--ws", type=float, default=DEFAULT_WS, help="scale-cost weight (default: %(default)s)")
    p.add_argument("--scales", default=DEFAULT_SCALES, help='radii as "lo:hi" or "a,b,c" (default: %(default)s)')
    p.add_argument("--no-smooth", action="store_true", help="skip edge-preserving smoothing (default: smoothing on)")
    p.add_argument("--no-simplify", action="store_true", help="skip branch grouping and simplification (default: simplify on)")
    p.add_argument("--tau", type=float, default=DEFAULT_TAU, help="branch merge threshold on encoding distance (default: %(default)s)")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("invert", help="reconstruct an image from a MatFile")
    p.add_argument("input", help="MatFile")
    p.add_argument("-o", "--output", help="PNG path (default: input with .png suffix)")
    p.add_argument("--original", help="original image; prints mse, psnr and ssim")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("pred", nargs="+", help="prediction directories or files (.amat or .png)")
    p.add_argument("--gt", required=True, help="ground-truth directory, matched by basename")
    p.add_argument("--mode", choices=("detection", "reconstruction"), default="detection",
                   help="scoring mode (default: %(default)s)")
    p.add_argument("--gt-labels", action="store_true",
                   help="ground truth is label maps, skeletonized per label")
    p.add_argument("--scores", help="score file (default: stdout)")
    p.add_argument("--workers", type=int, default=None,
                   help=f"parallel workers; {WORKERS_ENV} overrides (default: 1)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("binary-mat", help="medial axis of a binary mask")
    p.add_argument("input", help="binary mask PNG, or label map with --per-label")
    p.add_argument("-o", "--output", help="MatFile path (default: input with .amat suffix)")
    p.add_argument("--per-label", action="store_true", help="write one MatFile per label value")
    p.set_defaults(func=cmd_binary_mat)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
