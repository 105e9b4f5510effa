"""Command-line front end: reproducible pipeline experiments with run manifests.

Every file-producing subcommand writes a JSON manifest next to its outputs
recording the exact argv, resolved configuration, seeds, per-image and
aggregate metrics, and per-stage wall-clock timings.  `dmdn rerun
--manifest M` re-executes the recorded command; on the same machine this
reproduces all aggregate metrics bit for bit.

Exit codes: 0 success, 2 argument errors, 3 I/O errors (missing or
malformed files), 4 domain errors (invalid values).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import formats
from .analysis import cpsnr, noise_stats, residual, rmse_table
from .demosaic import DemosaicerId, demosaic
from .denoise import DenoiseConfig, DenoiserId, denoise_cfa, denoise_rgb
from .image import ColorImage, DomainError
from .mosaic import PHASES, CfaImage, mosaick, read_cfa, write_cfa
from .noise import NoiseSpec, add_awgn, derive_seed, poisson_sample
from .optimize import CmaConfig, tune_pipeline
from .pipeline import (
    PRESET_NAMES,
    PipelineParams,
    PipelineSpec,
    preset,
    run_pipeline,
    sweep_k,
)

EXIT_IO = 3
EXIT_DOMAIN = 4

_DEMOSAIC_CHOICES = [m.value for m in DemosaicerId]
_DENOISE_CHOICES = [m.value for m in DenoiserId]


def _load_dataset(directory) -> list[tuple[str, ColorImage]]:
    """Ground-truth images from a flat directory, sorted lexicographically.

    The sorted position fixes each image's index for seed derivation.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {directory}")
    paths = sorted(
        p for p in directory.iterdir() if p.suffix.lower() in (".ppm", ".pfm")
    )
    images = []
    for p in paths:
        img = formats.read_image(p)
        if isinstance(img, ColorImage):
            images.append((p.name, img))
    if not images:
        raise FileNotFoundError(f"no color images (.ppm/.pfm) in {directory}")
    return images


def _read_any(path):
    """Read a color/gray image, or a CFA when a .meta sidecar is present."""
    if Path(str(path) + ".meta").exists():
        return read_cfa(path)
    return formats.read_image(path)


def _write_any(path, img) -> None:
    if isinstance(img, CfaImage):
        write_cfa(path, img)
    else:
        formats.write_image(path, img)


def _map_jobs(fn, items, jobs: int) -> list:
    if jobs <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _write_manifest(out_path: Path, payload: dict) -> Path:
    manifest_path = out_path.with_name(out_path.stem + ".manifest.json")
    manifest_path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n")
    return manifest_path


def _manifest(args, outputs, **extra) -> dict:
    payload = {
        "command": list(getattr(args, "_argv", [])),
        "subcommand": args.command if args.command != "pipeline" else f"pipeline {args.pipeline_command}",
        "config": {
            k: v
            for k, v in vars(args).items()
            if not k.startswith("_") and k not in ("command", "pipeline_command", "func")
            and (isinstance(v, (int, float, str, bool, list)) or v is None)
        },
        "outputs": [str(o) for o in outputs],
    }
    payload.update(extra)
    return payload


def _spec_from_args(args, params: PipelineParams) -> PipelineSpec:
    return PipelineSpec(
        params,
        dn1=DenoiserId(args.dn1),
        dm=DemosaicerId(args.dm),
        dn2=DenoiserId(args.dn2),
        vst=getattr(args, "vst", False),
    )


def _finite_or_none(value: float):
    return value if math.isfinite(value) else None


# ---------------------------------------------------------------- subcommands


def cmd_mosaic(args) -> int:
    img = formats.read_image(args.input)
    if not isinstance(img, ColorImage):
        raise DomainError(f"{args.input}: mosaic needs a color image")
    out = Path(args.out)
    write_cfa(out, mosaick(img, args.phase))
    _write_manifest(out, _manifest(args, [out]))
    return 0


def cmd_noise(args) -> int:
    img = _read_any(args.input)
    t0 = time.perf_counter()
    if args.poisson:
        noisy = poisson_sample(img, args.seed)
    else:
        noisy = add_awgn(img, NoiseSpec(args.sigma, args.seed))
    out = Path(args.out)
    _write_any(out, noisy)
    _write_manifest(
        out,
        _manifest(args, [out], master_seed=args.seed, timings={"noise": time.perf_counter() - t0}),
    )
    return 0


def cmd_demosaic(args) -> int:
    cfa = read_cfa(args.input)
    t0 = time.perf_counter()
    img = demosaic(cfa, args.method)
    out = Path(args.out)
    formats.write_image(out, img)
    _write_manifest(out, _manifest(args, [out], timings={"dm": time.perf_counter() - t0}))
    return 0


def cmd_denoise(args) -> int:
    img = _read_any(args.input)
    cfg = DenoiseConfig(sigma=args.sigma)
    t0 = time.perf_counter()
    if args.cfa:
        if not isinstance(img, CfaImage):
            raise DomainError(f"{args.input}: --cfa requires a CFA input (.meta sidecar)")
        result = denoise_cfa(img, args.method, cfg)
    else:
        if not isinstance(img, ColorImage):
            raise DomainError(f"{args.input}: denoise needs a color image (or --cfa)")
        result = denoise_rgb(img, args.method, cfg)
    out = Path(args.out)
    _write_any(out, result)
    _write_manifest(out, _manifest(args, [out], timings={"dn": time.perf_counter() - t0}))
    return 0


def cmd_pipeline_run(args) -> int:
    v = read_cfa(args.input)
    params = PipelineParams(args.alpha, args.beta, args.sigma1, args.sigma2)
    spec = _spec_from_args(args, params)
    timings: dict = {}
    out_img = run_pipeline(v, spec, timings=timings)
    out = Path(args.out)
    formats.write_image(out, out_img)
    metrics = {}
    if args.truth:
        truth = formats.read_image(args.truth)
        metrics["cpsnr"] = _finite_or_none(cpsnr(out_img, truth))
    _write_manifest(
        out,
        _manifest(
            args,
            [out],
            components={"dn1": args.dn1, "dm": args.dm, "dn2": args.dn2, "vst": spec.vst},
            aggregate_metrics=metrics,
            timings=timings,
        ),
    )
    return 0


def cmd_pipeline_preset(args) -> int:
    params = preset(args.name, args.sigma)
    print(
        json.dumps(
            {
                "alpha": params.alpha,
                "beta": params.beta,
                "sigma1": params.sigma1,
                "sigma2": params.sigma2,
            }
        )
    )
    return 0


def cmd_pipeline_sweep_k(args) -> int:
    dataset = _load_dataset(args.dataset)
    k_list = [float(k) for k in args.k_list.split(",")]
    seeds = {name: derive_seed(args.seed, i) for i, (name, _) in enumerate(dataset)}

    def one(item):
        index, (name, truth) = item
        noisy = add_awgn(mosaick(truth, args.phase), NoiseSpec(args.sigma, seeds[name]))
        return sweep_k(noisy, truth, args.dm, args.dn, args.sigma, k_list)

    t0 = time.perf_counter()
    per_image = _map_jobs(one, list(enumerate(dataset)), args.jobs)
    elapsed = time.perf_counter() - t0
    means = [
        math.fsum(rows[i][1] for rows in per_image) / len(per_image)
        for i in range(len(k_list))
    ]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "mean_cpsnr"])
        for k, value in zip(k_list, means):
            writer.writerow([k, f"{value:.6f}"])
    _write_manifest(
        out,
        _manifest(
            args,
            [out],
            master_seed=args.seed,
            per_image_seeds=seeds,
            per_image_metrics={
                name: {f"cpsnr_k{k:g}": rows[i][1] for i, k in enumerate(k_list)}
                for (name, _), rows in zip(dataset, per_image)
            },
            aggregate_metrics={f"mean_cpsnr_k{k:g}": m for k, m in zip(k_list, means)},
            timings={"sweep": elapsed},
        ),
    )
    return 0


def cmd_tune(args) -> int:
    dataset = _load_dataset(args.dataset)
    images = [img for _, img in dataset]
    spec = _spec_from_args(args, PipelineParams(0.0, 0.0, 0.0, 0.0))
    cfg = CmaConfig(
        dimension=4,
        population=args.population,
        max_evals=args.max_evals,
        seed=args.seed,
    )
    t0 = time.perf_counter()
    result = tune_pipeline(images, args.sigma, spec, cfg, phase=args.phase)
    elapsed = time.perf_counter() - t0

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result_path = out_dir / "tune_result.json"
    alpha, beta, sigma1, sigma2 = (float(x) for x in result.best_params)
    result_path.write_text(
        json.dumps(
            {
                "best_params": {
                    "alpha": alpha,
                    "beta": beta,
                    "sigma1": sigma1,
                    "sigma2": sigma2,
                },
                "best_cpsnr": _finite_or_none(result.best_value),
                "termination": result.termination,
                "evaluations": result.evaluations,
                "generations": result.generations,
            },
            indent=2,
        )
        + "\n"
    )
    trace_path = out_dir / "trace.csv"
    with trace_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_cpsnr", "mean_cpsnr"])
        for gen, (best, mean) in enumerate(result.trace):
            writer.writerow([gen, f"{best:.6f}", f"{mean:.6f}"])
    _write_manifest(
        result_path,
        _manifest(
            args,
            [result_path, trace_path],
            master_seed=args.seed,
            per_image_seeds={name: derive_seed(args.seed, i) for i, (name, _) in enumerate(dataset)},
            aggregate_metrics={"best_cpsnr": _finite_or_none(result.best_value)},
            timings={"tune": elapsed},
        ),
    )
    return 0


def cmd_stats(args) -> int:
    if args.residual:
        res = formats.read_image(args.residual)
        if not isinstance(res, ColorImage):
            raise DomainError("--residual must be a 3-channel image")
    else:
        if not (args.estimate and args.truth):
            raise DomainError("stats needs either --residual or both --estimate and --truth")
        est = formats.read_image(args.estimate)
        truth = formats.read_image(args.truth)
        res = residual(est, truth)
    stats = noise_stats(res, space=args.space, border_crop=args.crop, max_lag=args.lags)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    lag_cols = [f"({s},{t})" for s in range(args.lags + 1) for t in range(args.lags + 1)]
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["table", "channel"] + lag_cols)
        for kind, table in (("covariance", stats.cov), ("correlation", stats.corr)):
            for c, name in enumerate(stats.channels):
                writer.writerow(
                    [kind, name] + [f"{table[c, s, t]:.6f}" for s in range(args.lags + 1) for t in range(args.lags + 1)]
                )
        writer.writerow([])
        writer.writerow(["table", "channel"] + list(stats.channels))
        for kind, table in (("cross_covariance", stats.cross_cov), ("cross_correlation", stats.cross_corr)):
            for c, name in enumerate(stats.channels):
                writer.writerow([kind, name] + [f"{table[c, j]:.6f}" for j in range(3)])
    _write_manifest(
        out,
        _manifest(
            args,
            [out],
            aggregate_metrics={
                "variance": [float(v) for v in stats.variance],
                "sample_count": stats.sample_count,
                "degenerate": list(stats.degenerate),
            },
        ),
    )
    return 0


def cmd_rmse_table(args) -> int:
    dataset = _load_dataset(args.dataset)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    t0 = time.perf_counter()
    rows = rmse_table([img for _, img in dataset], args.method, sigmas, args.seed, phase=args.phase)
    elapsed = time.perf_counter() - t0
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "mean_rmse"])
        for sigma, value in rows:
            writer.writerow([sigma, f"{value:.6f}"])
    _write_manifest(
        out,
        _manifest(
            args,
            [out],
            master_seed=args.seed,
            per_image_seeds={name: derive_seed(args.seed, i) for i, (name, _) in enumerate(dataset)},
            aggregate_metrics={f"rmse_sigma{s:g}": v for s, v in rows},
            timings={"rmse_table": elapsed},
        ),
    )
    return 0


def cmd_eval(args) -> int:
    dataset = _load_dataset(args.dataset)
    sigmas = [float(s) for s in args.sigmas.split(",")]
    seeds = {name: derive_seed(args.seed, i) for i, (name, _) in enumerate(dataset)}

    def run_one(task):
        index, (name, truth), sigma, preset_name = task
        noisy = add_awgn(mosaick(truth, args.phase), NoiseSpec(sigma, seeds[name]))
        spec = _spec_from_args(args, preset(preset_name, sigma))
        timings: dict = {}
        value = cpsnr(run_pipeline(noisy, spec, timings=timings), truth)
        return name, sigma, preset_name, value, timings

    tasks = [
        (i, pair, sigma, preset_name)
        for sigma in sigmas
        for preset_name in PRESET_NAMES
        for i, pair in enumerate(dataset)
    ]
    t0 = time.perf_counter()
    results = _map_jobs(run_one, tasks, args.jobs)
    elapsed = time.perf_counter() - t0

    stage_time: dict = {}
    per_image: dict = {}
    table: dict = {}
    for name, sigma, preset_name, value, timings in results:
        per_image.setdefault(name, {})[f"{preset_name}_sigma{sigma:g}"] = _finite_or_none(value)
        table.setdefault((sigma, preset_name), []).append(value)
        for stage, seconds in timings.items():
            stage_time[stage] = stage_time.get(stage, 0.0) + seconds

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "eval.csv"
    aggregate = {}
    with csv_path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sigma", "method", "alpha", "beta", "sigma1", "sigma2", "mean_cpsnr"])
        for sigma in sigmas:
            for preset_name in PRESET_NAMES:
                params = preset(preset_name, sigma)
                mean_value = math.fsum(table[(sigma, preset_name)]) / len(dataset)
                aggregate[f"{preset_name}_sigma{sigma:g}"] = mean_value
                writer.writerow(
                    [sigma, preset_name, params.alpha, params.beta, params.sigma1, params.sigma2, f"{mean_value:.6f}"]
                )
    _write_manifest(
        csv_path,
        _manifest(
            args,
            [csv_path],
            master_seed=args.seed,
            per_image_seeds=seeds,
            components={"dn1": args.dn1, "dm": args.dm, "dn2": args.dn2},
            per_image_metrics=per_image,
            aggregate_metrics=aggregate,
            timings={"total": elapsed, **stage_time},
        ),
    )
    return 0


def cmd_rerun(args) -> int:
    manifest = json.loads(Path(args.manifest).read_text())
    argv = manifest.get("command")
    if not argv:
        raise DomainError(f"{args.manifest}: manifest has no recorded command")
    return main(argv)


# -------------------------------------------------------------------- parser


def _add_component_flags(parser, with_vst=True):
    parser.add_argument("--dn1", default="dct8", choices=_DENOISE_CHOICES)
    parser.add_argument("--dm", default="ha", choices=_DEMOSAIC_CHOICES)
    parser.add_argument("--dn2", default="dct8", choices=_DENOISE_CHOICES)
    if with_vst:
        parser.add_argument("--vst", action="store_true", help="Anscombe before, inverse after")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmdn", description="Demosaic/denoise pipeline experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mosaic", help="Bayer-sample a color image")
    p.add_argument("--input", required=True)
    p.add_argument("--phase", default="RGGB", choices=PHASES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mosaic)

    p = sub.add_parser("noise", help="add seeded AWGN (or Poisson-sample)")
    p.add_argument("--input", required=True)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--poisson", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_noise)

    p = sub.add_parser("demosaic", help="interpolate RGB from a CFA")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="ha", choices=_DEMOSAIC_CHOICES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_demosaic)

    p = sub.add_parser("denoise", help="denoise a color image (or CFA with --cfa)")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="dct8", choices=_DENOISE_CHOICES)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--cfa", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_denoise)

    pipe = sub.add_parser("pipeline", help="two-stage pipeline operations")
    pipe_sub = pipe.add_subparsers(dest="pipeline_command", required=True)

    p = pipe_sub.add_parser("run", help="run the blended pipeline on a CFA")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--sigma1", type=float, required=True)
    p.add_argument("--sigma2", type=float, required=True)
    _add_component_flags(p)
    p.add_argument("--truth", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline_run)

    p = pipe_sub.add_parser("preset", help="print the parameters of a named preset")
    p.add_argument("--name", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.set_defaults(func=cmd_pipeline_preset)

    p = pipe_sub.add_parser("sweep-k", help="score DM&kDN over a list of k factors")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--dm", default="ha", choices=_DEMOSAIC_CHOICES)
    p.add_argument("--dn", default="dct8", choices=_DENOISE_CHOICES)
    p.add_argument("--k-list", default="1.0,1.1,1.2,1.3,1.4,1.5,1.6,1.7,1.8,1.9")
    p.add_argument("--phase", default="RGGB", choices=PHASES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_pipeline_sweep_k)

    p = sub.add_parser("tune", help="CMA-ES search for pipeline parameters")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigma", type=float, required=True)
    _add_component_flags(p)
    p.add_argument("--phase", default="RGGB", choices=PHASES)
    p.add_argument("--max-evals", type=int, default=3000)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("stats", help="residual noise statistics tables")
    p.add_argument("--residual", default=None)
    p.add_argument("--estimate", default=None)
    p.add_argument("--truth", default=None)
    p.add_argument("--space", default="rgb", choices=["rgb", "yc1c2"])
    p.add_argument("--lags", type=int, default=2)
    p.add_argument("--crop", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("rmse-table", help="mean demosaicing RMSE per noise level")
    p.add_argument("--dataset", required=True)
    p.add_argument("--method", default="ha", choices=_DEMOSAIC_CHOICES)
    p.add_argument("--sigmas", default="1,3,5,10,15,20,30,40,50,60")
    p.add_argument("--phase", default="RGGB", choices=PHASES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rmse_table)

    p = sub.add_parser("eval", help="preset comparison over a dataset and sigma list")
    p.add_argument("--dataset", required=True)
    p.add_argument("--sigmas", default="5,10,20,40,50,60")
    _add_component_flags(p, with_vst=False)
    p.add_argument("--phase", default="RGGB", choices=PHASES)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rerun", help="re-execute the command recorded in a manifest")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_rerun)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args._argv = argv
    try:
        return args.func(args)
    except (FileNotFoundError, formats.ImageFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
