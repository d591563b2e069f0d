"""Command-line driver.

Subcommands:
  synth      write a seeded synthetic activation dump
  calibrate  fit quantizers to dump files per a JSON config
  quantize   apply stored parameters to a dump (reconstruction + codes)
  evaluate   compare two dumps (error metrics) or mask directories (IoU)
  pipeline   run the built-in network end to end and emit its report

All outputs are deterministic functions of the arguments; errors exit
nonzero with a single diagnostic line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as pio
from .dual_region import DualRegionParams, calibrate_dual_region, encode_tensor, fake_dual_region
from .errors import QuantizationError
from .generate import KINDS as SYNTH_KINDS
from .generate import synth
from .metrics import mask_metrics
from .outlier_groups import (
    GroupedQuantParams,
    ThresholdStrategy,
    calibrate_grouped,
    encode_grouped,
    fake_grouped,
)
from .report import CalibrationReport, HookReport
from .search import SearchSpace, mse_grid_search, percentile_calibrate
from .tensor import Tensor
from .toynet import PRESETS, PipelineConfig, ToyNetWeights, run_pipeline, seeded_inputs
from .uniform import QuantParams, error_stats, fake_quant_array, quantize_array


def _parse_shape(text: str) -> tuple[int, ...]:
    seps = "x" if "x" in text else ","
    try:
        return tuple(int(part) for part in text.split(seps))
    except ValueError:
        raise QuantizationError(f"cannot parse shape {text!r}; use e.g. 64x16") from None


def _cmd_synth(args) -> int:
    t = synth(args.kind, _parse_shape(args.shape), args.seed)
    pio.write_dump(t, args.out)
    print(f"wrote {args.out} shape {'x'.join(map(str, t.shape))}")
    return 0


def _collect_samples(dumps_dir: Path, hook: str) -> list[Tensor]:
    exact = dumps_dir / f"{hook}.dump"
    files = sorted(dumps_dir.glob(f"{hook}__*.dump"))
    if exact.exists():
        files.insert(0, exact)
    if not files:
        raise QuantizationError(f"no dump files for hook {hook!r} in {dumps_dir}")
    return [pio.read_dump(f) for f in files]


def _calibrate_hook(samples: list[Tensor], spec: dict, cfg: dict):
    bits = int(spec.get("bits", cfg.get("bits", 8)))
    space = SearchSpace(
        float(cfg.get("alpha", 0.01)),
        float(cfg.get("beta", 1.2)),
        int(cfg.get("n_candidates", 100)),
    )
    stacked = np.stack([s.array for s in samples])
    kind = spec.get("kind", "uniform")
    if kind == "uniform":
        method = spec.get("method", "mse")
        scheme = spec.get("scheme", "asymmetric")
        signed = bool(spec.get("signed", False))
        if method == "mse":
            return mse_grid_search(stacked, bits, scheme, signed, space)
        if method == "percentile":
            p = float(spec.get("percentile", cfg.get("percentile", 99.9)))
            return percentile_calibrate(stacked, bits, p, scheme, signed)
        raise QuantizationError(f"unknown uniform method {method!r}")
    if kind == "dual_region":
        region = spec.get("region")
        if region not in ("softmax", "gelu"):
            raise QuantizationError("dual_region hooks need region: softmax|gelu")
        return calibrate_dual_region(
            stacked, region, bits, space=space, full_range=bool(spec.get("full_range", True))
        )
    if kind == "outlier_groups":
        strategy = ThresholdStrategy(
            kind=spec.get("strategy", cfg.get("strategy", "mean_3sd")),
            mad_multiplier=float(spec.get("mad_multiplier", 3.0)),
            mean_multiplier=float(spec.get("mean_multiplier", 1.0)),
            confidence_level=float(spec.get("confidence_level", 0.99)),
        )
        return calibrate_grouped(
            stacked, bits, strategy, int(spec.get("max_iters", cfg.get("max_iters", 3))), space
        )
    raise QuantizationError(f"unknown quantizer kind {kind!r}")


def _cmd_calibrate(args) -> int:
    try:
        cfg = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise QuantizationError(f"malformed config: {exc}") from None
    hooks_cfg = cfg.get("hooks")
    if not isinstance(hooks_cfg, dict) or not hooks_cfg:
        raise QuantizationError("config must define a non-empty 'hooks' mapping")
    dumps_dir = Path(args.dumps)
    doc = pio.ParamDoc(meta={"seed": cfg.get("seed"), "bits": cfg.get("bits", 8)})
    reports: dict[str, HookReport] = {}
    for hook, spec in sorted(hooks_cfg.items()):
        samples = _collect_samples(dumps_dir, hook)
        params = _calibrate_hook(samples, spec, cfg)
        doc.hooks[hook] = params
        stacked = np.stack([s.array.astype(np.float64) for s in samples])
        recon = _apply_params(stacked, params)
        reports[hook] = HookReport(*error_stats(stacked, recon))
    pio.emit_params(doc, args.out)
    report = CalibrationReport(hooks=reports, config=cfg, seed=cfg.get("seed"))
    if args.report:
        pio.write_report(report, args.report)
    print(pio.report_to_text(report), end="")
    return 0


def _apply_params(arr: np.ndarray, params) -> np.ndarray:
    if isinstance(params, QuantParams):
        return fake_quant_array(arr, params)
    if isinstance(params, DualRegionParams):
        return fake_dual_region(arr, params)
    if isinstance(params, GroupedQuantParams):
        return fake_grouped(arr, params)
    raise QuantizationError(f"cannot apply {type(params).__name__}")


def _encode_codes(arr: np.ndarray, params) -> np.ndarray:
    if isinstance(params, QuantParams):
        return quantize_array(arr, params)
    if isinstance(params, DualRegionParams):
        return encode_tensor(arr, params)
    if isinstance(params, GroupedQuantParams):
        groups, codes = encode_grouped(arr, params)
        return np.stack([groups, codes.reshape(-1)])
    raise QuantizationError(f"cannot encode with {type(params).__name__}")


def _cmd_quantize(args) -> int:
    doc = pio.parse_params(args.params)
    hooks = doc.hooks
    if args.hook:
        if args.hook not in hooks:
            raise QuantizationError(f"hook {args.hook!r} not in parameter file")
        params = hooks[args.hook]
    elif len(hooks) == 1:
        params = next(iter(hooks.values()))
    else:
        raise QuantizationError(f"--hook required; file defines {sorted(hooks)}")
    t = pio.read_dump(getattr(args, "in"))
    arr = t.array.astype(np.float64)
    recon = _apply_params(arr, params)
    pio.write_dump(Tensor.from_array(recon.astype(np.float32)), args.out)
    codes_path = args.codes or f"{args.out}.codes"
    pio.write_code_dump(_encode_codes(arr, params), codes_path)
    print(f"wrote {args.out} and {codes_path}")
    return 0


def _mask_pairs(a: Path, b: Path) -> tuple[list, list]:
    if a.is_dir() != b.is_dir():
        raise QuantizationError("mask inputs must both be files or both directories")
    if a.is_dir():
        names = sorted(p.name for p in a.glob("*.dump"))
        if not names or names != sorted(p.name for p in b.glob("*.dump")):
            raise QuantizationError("mask directories must hold matching *.dump files")
        return (
            [pio.read_dump(a / n) for n in names],
            [pio.read_dump(b / n) for n in names],
        )
    return [pio.read_dump(a)], [pio.read_dump(b)]


def _cmd_evaluate(args) -> int:
    if args.masks:
        preds, gts = _mask_pairs(Path(args.a), Path(args.b))
        m = mask_metrics(preds, gts)
        payload = {
            "oiou": m.oiou,
            "miou": m.miou,
            "prec_at": {str(k): v for k, v in m.prec_at.items()},
        }
    else:
        ta = pio.read_dump(args.a)
        tb = pio.read_dump(args.b)
        mse, sqnr, cosine = error_stats(ta.array, tb.array)
        payload = {
            "mse": mse,
            "sqnr_db": "inf" if sqnr == float("inf") else ("-inf" if sqnr == float("-inf") else sqnr),
            "cosine": cosine,
        }
    print(json.dumps(payload, indent=2, sort_keys=True))
    return 0


def _cmd_pipeline(args) -> int:
    cfg = PipelineConfig.from_preset(
        args.preset,
        seed=args.seed,
        visual=args.visual,
        text=args.text,
        fusion=args.fusion,
        decoder=args.decoder,
        calibration_size=args.calib_count,
    )
    weights = ToyNetWeights.seeded(args.seed)
    inputs = seeded_inputs(args.seed, args.calib_count, weights.seq, weights.dim)
    plan, report = run_pipeline(inputs, weights, cfg)
    text = pio.report_to_text(report)
    if args.out:
        Path(args.out).write_text(text)
    if args.params_out:
        doc = pio.ParamDoc(
            hooks={name: a.params for name, a in plan.hooks.items()},
            weights=dict(plan.weight_params),
            meta={"preset": args.preset, "seed": args.seed, "decoder_folded": True},
        )
        pio.emit_params(doc, args.params_out)
    print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptqkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a seeded synthetic activation dump")
    p.add_argument("--kind", required=True, choices=SYNTH_KINDS)
    p.add_argument("--shape", required=True, help="e.g. 64x16")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("calibrate", help="fit quantizers to dump files")
    p.add_argument("--config", required=True, help="JSON config with a 'hooks' mapping")
    p.add_argument("--dumps", required=True, help="directory of <hook>.dump / <hook>__N.dump files")
    p.add_argument("--out", required=True, help="parameter file to write")
    p.add_argument("--report", help="optional report file")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("quantize", help="apply stored parameters to a dump")
    p.add_argument("--params", required=True)
    p.add_argument("--in", dest="in", required=True)
    p.add_argument("--out", required=True, help="reconstructed float dump")
    p.add_argument("--codes", help="code dump path (default: <out>.codes)")
    p.add_argument("--hook", help="hook to use when the file defines several")
    p.set_defaults(func=_cmd_quantize)

    p = sub.add_parser("evaluate", help="compare two dumps or mask sets")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--masks", action="store_true", help="treat inputs as binary masks")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("pipeline", help="run the built-in network end to end")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--preset", default="W8A8", choices=sorted(PRESETS))
    p.add_argument("--calib-count", type=int, default=32)
    p.add_argument("--visual", default="dual_region", choices=("rtn", "dual_region"))
    p.add_argument("--text", default="outlier_groups", choices=("rtn", "outlier_groups"))
    p.add_argument("--fusion", default="search", choices=("rtn", "search"))
    p.add_argument("--decoder", default="search", choices=("rtn", "search"))
    p.add_argument("--out", help="write the report here as well as stdout")
    p.add_argument("--params-out", help="write the calibrated parameter file")
    p.set_defaults(func=_cmd_pipeline)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (QuantizationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
