"""Command-line entry point: ``mgnss <command> ...``.

Exit codes: 0 success, 1 runtime or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import io
from .benchmark import run_benchmark
from .degradation import DEGRADATION_KINDS, apply_mask, make_mask, sampling_rate
from .metrics import evaluate
from .pipeline import PipelineConfig, recover
from .synthetic import synthetic_cube

ABLATION_FLAGS = {"full": "full", "coarse": "coarse_only", "fine": "fine_only"}


class UsageError(Exception):
    pass


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def cmd_degrade(args):
    truth = io.load_tensor(args.input)
    try:
        mask = make_mask(args.kind, truth.shape, args.rate, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    io.save_tensor(args.output_tensor, apply_mask(truth, mask))
    io.save_mask(args.output_mask, mask)
    print(f"realized_rate = {sampling_rate(mask)!r}")


def _pipeline_config(args) -> PipelineConfig:
    config = io.load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    if args.ablation is not None:
        overrides["ablation"] = ABLATION_FLAGS[args.ablation]
    for name in ("iters", "seed", "n_jobs"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    return dataclasses.replace(config, **overrides)


def cmd_recover(args):
    observed = io.load_tensor(args.observed)
    mask = io.load_mask(args.mask)
    truth = io.load_tensor(args.truth) if args.truth else None
    config = _pipeline_config(args)
    out, report = recover(observed, mask, config, truth=truth, psnr_mode=args.psnr_mode)
    io.save_tensor(args.output, out)
    text = io.report_to_text(report)
    if args.report:
        Path(args.report).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_metrics(args):
    cand = io.load_tensor(args.candidate)
    ref = io.load_tensor(args.reference)
    q = evaluate(cand, ref, psnr_mode=args.psnr_mode)
    items = {"psnr_db": q.psnr_db, "ssim": q.ssim, "rse": q.rse,
             "per_band_psnr": q.per_band_psnr, "per_band_ssim": q.per_band_ssim}
    sys.stdout.write(io.dump_keyvalues(items))


def cmd_import(args):
    if args.npy:
        data = np.load(args.npy).astype(np.float64)
    else:
        if not args.dims:
            raise UsageError("--raw needs --dims")
        data = io.import_raw(args.raw, _int_list(args.dims), args.dtype, args.order)
    if args.normalize:
        data = data / data.max()
    io.save_tensor(args.output, data)
    print(f"dims = {','.join(map(str, data.shape))}")


def cmd_export_band(args):
    try:
        io.export_band(io.load_tensor(args.input), args.band, args.output)
    except ValueError as exc:
        if isinstance(exc, io.FormatError):
            raise
        raise UsageError(str(exc)) from exc


def cmd_synth(args):
    dims = _int_list(args.dims)
    io.save_tensor(args.output, synthetic_cube(*dims, seed=args.seed))


def cmd_benchmark(args):
    config = io.load_config(args.config) if args.config else PipelineConfig()
    table = run_benchmark(args.truth, args.kinds.split(","), _float_list(args.rates),
                          config, seed=args.seed, psnr_mode=args.psnr_mode)
    if args.json:
        Path(args.json).write_text(table.to_json())
    sys.stdout.write(table.to_text())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mgnss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("degrade", help="simulate pixel or stripe missing")
    p.add_argument("--input", required=True)
    p.add_argument("--output-tensor", required=True)
    p.add_argument("--output-mask", required=True)
    p.add_argument("--kind", choices=DEGRADATION_KINDS, required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("recover", help="run multi-granularity recovery")
    p.add_argument("--observed", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--config")
    p.add_argument("--output", required=True)
    p.add_argument("--report")
    p.add_argument("--ablation", choices=sorted(ABLATION_FLAGS))
    p.add_argument("--truth")
    p.add_argument("--iters", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-jobs", type=int)
    p.add_argument("--psnr-mode", choices=("band", "global"), default="band")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("metrics", help="PSNR / SSIM / RSE of a candidate cube")
    p.add_argument("--candidate", required=True)
    p.add_argument("--reference", required=True)
    p.add_argument("--psnr-mode", choices=("band", "global"), default="band")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("import", help="convert raw floats or .npy to MGT1")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--raw")
    src.add_argument("--npy")
    p.add_argument("--dims", help="comma-separated, e.g. 256,256,31")
    p.add_argument("--dtype", choices=("f4", "f8"), default="f8")
    p.add_argument("--order", choices=("F", "C"), default="F")
    p.add_argument("--normalize", action="store_true", help="divide by the global max")
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("export-band", help="write one band as a PGM image")
    p.add_argument("--input", required=True)
    p.add_argument("--band", type=int, required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_export_band)

    p = sub.add_parser("synth", help="write a synthetic test cube")
    p.add_argument("--output", required=True)
    p.add_argument("--dims", default="30,30,10")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("benchmark", help="degrade/recover/evaluate over scenarios")
    p.add_argument("--truth", required=True)
    p.add_argument("--kinds", default="pixel,stripe")
    p.add_argument("--rates", default="0.01,0.03")
    p.add_argument("--config")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.add_argument("--psnr-mode", choices=("band", "global"), default="band")
    p.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"mgnss {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"mgnss {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
