"""Command-line entry points: ``trackflow {track,train,eval,bench,synth}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import run_bench
from .config import SOLVER_CHOICES, ConfigError, RunConfig
from .features import WeightVector
from .io import DataError, read_rows, write_rows
from .learning import TrainLog
from .pipeline import cross_validate, evaluate_rows, track, train_videos
from .solvers import SolverError
from .synth import SCENARIOS, SynthConfig, generate

log = logging.getLogger("trackflow")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    return cfg.override(seed=args.seed, solver=getattr(args, "solver", None))


def _write_json(path, data) -> None:
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def cmd_track(args) -> int:
    cfg = _config(args)
    w = WeightVector.load(args.weights)
    res = track(read_rows(args.detections), w, cfg)
    write_rows(args.output, res.rows)
    print(f"objective {res.objective:.6f}  tracks {res.flow.n_tracks()}  -> {args.output}")
    return EXIT_OK


def _grid(text: str) -> list[float]:
    try:
        grid = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --cv grid {text!r}") from None
    if not grid or any(c <= 0 for c in grid):
        raise UsageError("--cv needs a comma-separated list of positive C values")
    return grid


def cmd_train(args) -> int:
    cfg = _config(args)
    videos = []
    for det_path, gt_path in args.pair:
        videos.append((read_rows(det_path), read_rows(gt_path)))
    if args.cv:
        best_c, report = cross_validate(videos, cfg, _grid(args.cv))
        for c, fold in report["folds"].items():
            print(f"C={c}: fold MOTA {[round(m, 4) for m in fold['mota']]}  mean {fold['mean_mota']:.4f}")
        print(f"selected C={best_c}")
        if args.cv_report:
            _write_json(args.cv_report, report)
        cfg = cfg.override(C=best_c)
    tlog = TrainLog()
    w = train_videos(videos, cfg, tlog)
    w.save(args.output)
    print(f"rounds {len(tlog.objective)}  converged {tlog.converged}  -> {args.output}")
    return EXIT_OK


def cmd_eval(args) -> int:
    report = evaluate_rows(read_rows(args.tracks), read_rows(args.gt))
    Path(args.output).write_text(report.to_json() + "\n")
    print(report.table())
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"bad --sizes {args.sizes!r}") from None
    seed = args.seed if args.seed is not None else (RunConfig.load(args.config).seed if args.config else 0)
    result = run_bench(sizes, seed=seed, oracle_trials=args.oracle_trials)
    _write_json(args.output, result)
    for r in result["runs"]:
        print(f"n={r['nodes']:6d}  ssp {r['time_ssp']:.4f}s  dp1 {r['time_dp1']:.4f}s ({r['time_dp1_cached']:.4f}s cached)"
              f"  dp2 {r['time_dp2']:.4f}s ({r['time_dp2_cached']:.4f}s cached)")
    for name, k in result["time_exponent"].items():
        print(f"{name} time ~ n^{k:.2f}")
    s = result["oracle_summary"]
    if s["median_gap_dp1"] is not None:
        print(f"median gap to oracle: dp1 {s['median_gap_dp1']:.4f}  dp2 {s['median_gap_dp2']:.4f}")
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = _config(args)
    scfg = SynthConfig(n_frames=args.frames, n_objects=args.objects, noise=args.noise, drop=args.drop,
                       clutter=args.clutter, seed=cfg.seed)
    dets, gt = generate(args.scenario, scfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_rows(out / "det.csv", dets)
    write_rows(out / "gt.csv", gt)
    print(f"{len(dets)} detections, {len(gt)} gt boxes -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("-v", "--verbose", action="store_true")

    solver = _Parser(add_help=False)
    solver.add_argument("--solver", choices=SOLVER_CHOICES)

    p = _Parser(prog="trackflow", description="Multi-object tracking with contextual network flows.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("track", parents=[common, solver], help="link detections into tracks")
    s.add_argument("detections")
    s.add_argument("weights")
    s.add_argument("-o", "--output", default="tracks.csv")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("train", parents=[common, solver], help="learn weights from annotated videos")
    s.add_argument("--pair", nargs=2, action="append", required=True, metavar=("DET", "GT"),
                   help="detections and ground truth of one video; repeat per video")
    s.add_argument("--cv", metavar="C1,C2,...", help="leave-one-video-out selection of C over this grid")
    s.add_argument("--cv-report", metavar="PATH", help="write per-fold results as JSON")
    s.add_argument("-o", "--output", default="weights.json")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("eval", parents=[common], help="score tracks against ground truth")
    s.add_argument("tracks")
    s.add_argument("gt")
    s.add_argument("-o", "--output", default="report.json")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("bench", parents=[common], help="time the solvers on synthetic scenes")
    s.add_argument("--sizes", default="25,50,100,200", help="comma-separated frame counts")
    s.add_argument("--oracle-trials", type=int, default=50)
    s.add_argument("-o", "--output", default="bench.json")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("synth", parents=[common], help="generate a synthetic video")
    s.add_argument("scenario", choices=SCENARIOS)
    s.add_argument("--frames", type=int, default=30)
    s.add_argument("--objects", type=int, default=3)
    s.add_argument("--noise", type=float, default=0.0)
    s.add_argument("--drop", type=float, default=0.0)
    s.add_argument("--clutter", type=float, default=0.0)
    s.add_argument("--out-dir", default=".")
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"trackflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"trackflow: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"trackflow: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, SolverError, ValueError, OSError) as exc:
        print(f"trackflow: error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
