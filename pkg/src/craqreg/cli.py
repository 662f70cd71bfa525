"""Command-line interface: register, evaluate, serve.

Exit codes: 0 success, 2 usage/input errors, 3 detection failed,
4 matching failed, 5 estimation failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ESTIMATOR_METHODS, EstimatorConfig, RegistrationConfig
from .errors import ConfigError, RegistrationError
from .evaluation import (
    evaluate_dataset,
    load_annotation,
    load_manifest,
    mae,
    me,
    pair_errors,
    write_evaluation,
)
from .images import load_image
from .pipeline import register, write_bundle

EXIT_USAGE = 2
STAGE_CODES = {"detection": 3, "matching": 4, "estimation": 5}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--patch-size", type=int, default=1024)
    p.add_argument("--max-keypoints", type=int, default=8000)
    p.add_argument("--tau-kp", type=float, default=0.0)
    p.add_argument("--estimator", choices=ESTIMATOR_METHODS, default="ransac")
    p.add_argument("--reproj-thresh", type=float, default=5.0)
    p.add_argument(
        "--resize",
        default="same-width",
        help="same-width | height:<h> | none",
    )
    p.add_argument("--backend", default="junction")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--visualize-matches", action="store_true")


def _config_from_args(args: argparse.Namespace) -> RegistrationConfig:
    cfg = RegistrationConfig(
        patch_size=args.patch_size,
        n_max=args.max_keypoints,
        tau_kp=args.tau_kp,
        resize_policy=args.resize,
        estimator=EstimatorConfig(
            method=args.estimator,
            tau_reproj=args.reproj_thresh,
            seed=args.seed,
        ),
        backend=args.backend,
        visualize_matches=args.visualize_matches,
    )
    cfg.validate()
    return cfg


def _parse_thresholds(text: str, flag: str) -> list[float]:
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise ConfigError(flag, f"expected comma-separated numbers, got {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise ConfigError(flag, "thresholds must be positive numbers")
    return values


def _cmd_register(args: argparse.Namespace) -> int:
    for name in ("reference", "moving"):
        path = Path(getattr(args, name))
        if not path.exists():
            print(f"error: {name} image not found: {path}", file=sys.stderr)
            return EXIT_USAGE
    try:
        cfg = _config_from_args(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        ref = load_image(args.reference)
        mov = load_image(args.moving)
    except Exception as exc:
        print(f"error: cannot decode image: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        out = register(ref, mov, cfg)
    except RegistrationError as exc:
        stage = exc.stage or "pipeline"
        print(f"error: {stage} stage failed: {exc}", file=sys.stderr)
        return STAGE_CODES.get(exc.stage, 1)

    write_bundle(args.out, ref, mov, out, cfg)
    print(f"registered: {out.report.inlier_count}/{out.match_count} inlier matches "
          f"({out.report.method}, {out.report.iterations_run} iterations)")
    print(f"bundle written to {args.out}")

    if args.annotations:
        try:
            ann = load_annotation(args.annotations)
        except Exception as exc:
            print(f"error: bad annotation file: {exc}", file=sys.stderr)
            return EXIT_USAGE
        errs = pair_errors(out.h_original, ann)
        print(f"control points: ME = {me(errs):.3f} px, MAE = {mae(errs):.3f} px "
              f"({len(errs)} pairs)")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    try:
        cfg = _config_from_args(args)
        thr_me = _parse_thresholds(args.thresholds_me, "--thresholds-me")
        thr_mae = _parse_thresholds(args.thresholds_mae, "--thresholds-mae")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        manifest = load_manifest(args.manifest)
    except FileNotFoundError:
        print(f"error: manifest not found: {args.manifest}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"error: bad manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # json decode errors carry line info
        print(f"error: cannot parse manifest: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if not manifest:
        print("error: manifest has no entries", file=sys.stderr)
        return EXIT_USAGE

    try:
        result = evaluate_dataset(manifest, cfg, thr_me, thr_mae)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"error: evaluation failed: {exc}", file=sys.stderr)
        return EXIT_USAGE

    write_evaluation(args.out, result)
    print(result.table_text(), end="")
    print(f"results written to {args.out}")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        data_dir=args.data_dir,
        job_workers=args.job_workers,
        static_dir=args.static_dir,
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="craqreg",
        description="Multi-modal image registration with crack-junction keypoints",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_reg = sub.add_parser("register", help="register one image pair")
    p_reg.add_argument("--reference", required=True)
    p_reg.add_argument("--moving", required=True)
    p_reg.add_argument("--out", required=True)
    _add_config_flags(p_reg)
    p_reg.add_argument("--annotations", help="control points JSON for an ME/MAE summary")
    p_reg.set_defaults(fn=_cmd_register)

    p_eval = sub.add_parser("evaluate", help="success rates on a dataset manifest")
    p_eval.add_argument("--manifest", required=True)
    p_eval.add_argument("--out", required=True)
    _add_config_flags(p_eval)
    p_eval.add_argument("--thresholds-me", default="3,5,7")
    p_eval.add_argument("--thresholds-mae", default="6,8,10")
    p_eval.set_defaults(fn=_cmd_evaluate)

    p_srv = sub.add_parser("serve", help="run the HTTP service")
    p_srv.add_argument("--port", type=int, default=8765)
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--data-dir", default=None)
    p_srv.add_argument("--job-workers", type=int, default=1)
    p_srv.add_argument("--static-dir", default=None, help="serve the built UI from here")
    p_srv.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
