"""Command-line benchmark pipeline.

Subcommands::

    sembench simulate  --config cfg.json [--seed N] [--out DIR]
    sembench restore   --config cfg.json [--method rl|wiener|variational]
    sembench evaluate  --config cfg.json [--losses]
    sembench metrology --config cfg.json
    sembench benchmark --config cfg.json   (all stages in order)

Every stage reads and writes under the configured output directory and
leaves a JSON sidecar next to each artifact recording the exact
parameters and seed that produced it, so any file can be regenerated.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
error.
"""

from __future__ import annotations

import argparse
import csv
import glob
import hashlib
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import losses as losses_mod
from .degrade import (
    DEFAULT_RANGES,
    DegradeParams,
    ParamRanges,
    apply_forward_model,
    sample_params,
)
from .errors import ConfigError, DataError, NumericError
from .image_io import bottom_crop, load_image, save_image
from .losses import LossWeights
from .metrics import psnr, ssim
from .metrology import (
    DEFAULT_PSD_BAND,
    DetectionOptions,
    MetrologyError,
    aggregate_errors,
    compare_reports,
    detect_edges,
    measure,
    psd_summary,
)
from .psf import build_kernel, kernel_size
from .restore import RestoreConfig, TileSpec, richardson_lucy, tiled_apply, variational_restore, wiener
from .seeding import Seed

__all__ = [
    "PipelineConfig",
    "run_simulate",
    "run_restore",
    "run_evaluate",
    "run_metrology",
    "run_benchmark",
    "main",
]

METHODS = ("rl", "wiener", "variational")


@dataclass(frozen=True)
class PipelineConfig:
    """Everything a benchmark run needs, loadable from one JSON file.

    inputs        : list of file paths or glob patterns (clean images)
    out_dir       : output tree root
    seed          : base seed; required unless the run is fully
                    deterministic (fixed_params plus noiseless)
    crop_fraction : bottom_crop fraction applied to every input
    ranges        : sampling intervals for per-image degradation params
    fixed_params  : when set, every image uses these exact params
    noiseless     : skip the noise stage (blur + affine only)
    restore       : classical-baseline settings
    tile          : tile/overlap for large images
    loss_weights  : weights for loss reporting and variational restore
    method        : default restorer (rl | wiener | variational)
    losses        : add loss columns to the evaluation CSV
    metrology     : run the metrology stage inside `benchmark`
    metrology_target    : which set to measure (restored|degraded|clean)
    metrology_reference : reference set for error tables (clean|none)
    export_psd    : write per-image PSD curves as two-column CSVs
    train_size / eval_size / split : protocol split; `split` selects
                    "train" (first train_size inputs after sorting),
                    "eval" (the following eval_size), or "none" (all)
    bit_depth     : bit depth for written images (8 or 16)
    variational_steps / variational_step_size : descent settings
    """

    inputs: tuple = ()
    out_dir: str = "out"
    seed: int | None = None
    crop_fraction: float = 0.0
    ranges: ParamRanges = field(default_factory=lambda: DEFAULT_RANGES)
    fixed_params: DegradeParams | None = None
    noiseless: bool = False
    restore: RestoreConfig = field(default_factory=RestoreConfig)
    tile: TileSpec = field(default_factory=TileSpec)
    loss_weights: LossWeights = field(default_factory=LossWeights)
    method: str = "rl"
    losses: bool = False
    metrology: bool = False
    metrology_target: str = "restored"
    metrology_reference: str = "clean"
    export_psd: bool = False
    train_size: int = 10
    eval_size: int = 100
    split: str = "none"
    bit_depth: int = 8
    variational_steps: int = 50
    variational_step_size: float = 0.1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; expected {METHODS}")
        if self.split not in ("none", "train", "eval"):
            raise ConfigError(f"split must be none|train|eval, got {self.split!r}")
        if self.metrology_target not in ("restored", "degraded", "clean"):
            raise ConfigError(f"bad metrology_target {self.metrology_target!r}")
        if self.metrology_reference not in ("clean", "none"):
            raise ConfigError(f"bad metrology_reference {self.metrology_reference!r}")
        if self.train_size < 1 or self.eval_size < 1:
            raise ConfigError("split sizes must be at least 1")
        if self.bit_depth not in (8, 16):
            raise ConfigError("bit_depth must be 8 or 16")
        if not 0.0 <= self.crop_fraction < 1.0:
            raise ConfigError("crop_fraction must be in [0, 1)")
        stochastic = self.fixed_params is None or not self.noiseless
        if stochastic and self.seed is None:
            raise ConfigError("seed is required when any stage draws randomness")

    _SIMPLE_KEYS = (
        "out_dir",
        "seed",
        "crop_fraction",
        "noiseless",
        "method",
        "losses",
        "metrology",
        "metrology_target",
        "metrology_reference",
        "export_psd",
        "train_size",
        "eval_size",
        "split",
        "bit_depth",
        "variational_steps",
        "variational_step_size",
    )

    @classmethod
    def from_dict(cls, raw: dict) -> "PipelineConfig":
        known = set(cls._SIMPLE_KEYS) | {
            "inputs",
            "ranges",
            "fixed_params",
            "restore",
            "tile",
            "loss_weights",
        }
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = {}
        if "inputs" in raw:
            inputs = raw["inputs"]
            if isinstance(inputs, str):
                inputs = [inputs]
            kw["inputs"] = tuple(str(p) for p in inputs)
        for key in cls._SIMPLE_KEYS:
            if key in raw:
                kw[key] = raw[key]
        try:
            if "ranges" in raw:
                kw["ranges"] = ParamRanges.from_dict(raw["ranges"])
            if raw.get("fixed_params") is not None:
                kw["fixed_params"] = DegradeParams.from_dict(raw["fixed_params"])
            if "restore" in raw:
                kw["restore"] = RestoreConfig.from_dict(raw["restore"])
            if "tile" in raw:
                kw["tile"] = TileSpec.from_dict(raw["tile"])
            if "loss_weights" in raw:
                kw["loss_weights"] = LossWeights.from_dict(raw["loss_weights"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad config value: {exc}") from exc
        return cls(**kw)

    @classmethod
    def from_file(cls, path) -> "PipelineConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {
            "inputs": list(self.inputs),
            "out_dir": self.out_dir,
            "seed": self.seed,
            "crop_fraction": self.crop_fraction,
            "ranges": self.ranges.to_dict(),
            "fixed_params": None if self.fixed_params is None else self.fixed_params.to_dict(),
            "noiseless": self.noiseless,
            "restore": self.restore.to_dict(),
            "tile": self.tile.to_dict(),
            "loss_weights": self.loss_weights.to_dict(),
            "method": self.method,
            "losses": self.losses,
            "metrology": self.metrology,
            "metrology_target": self.metrology_target,
            "metrology_reference": self.metrology_reference,
            "export_psd": self.export_psd,
            "train_size": self.train_size,
            "eval_size": self.eval_size,
            "split": self.split,
            "bit_depth": self.bit_depth,
            "variational_steps": self.variational_steps,
            "variational_step_size": self.variational_step_size,
        }

    def fingerprint(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(text.encode()).hexdigest()[:12]


def _resolve_inputs(config: PipelineConfig):
    paths = []
    for pattern in config.inputs:
        hits = sorted(glob.glob(pattern))
        paths.extend(hits if hits else ([pattern] if os.path.exists(pattern) else []))
    paths = sorted(dict.fromkeys(paths))  # dedupe, keep sorted order
    if config.split == "train":
        paths = paths[: config.train_size]
    elif config.split == "eval":
        paths = paths[config.train_size : config.train_size + config.eval_size]
    if not paths:
        raise ConfigError("input set is empty after resolving globs and split")
    return paths


def _write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise DataError(f"missing manifest or sidecar: {path!r}") from exc


def _fmt(x) -> str:
    if x is None:
        return ""
    return repr(float(x))


def run_simulate(config: PipelineConfig) -> dict:
    """Degrade every input image; write clean/degraded pairs + manifest."""
    paths = _resolve_inputs(config)
    clean_dir = os.path.join(config.out_dir, "clean")
    degr_dir = os.path.join(config.out_dir, "degraded")
    os.makedirs(clean_dir, exist_ok=True)
    os.makedirs(degr_dir, exist_ok=True)
    base_seed = 0 if config.seed is None else config.seed
    entries = []
    for i, src in enumerate(paths):
        try:
            img = load_image(src)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot load input {src!r}: {exc}") from exc
        img = bottom_crop(img, config.crop_fraction)
        if config.fixed_params is not None:
            params = config.fixed_params
        else:
            params = sample_params(config.ranges, Seed(base_seed, i, "params"))
        noise_seed = Seed(base_seed, i, "noise")
        degraded = apply_forward_model(img, params, noise_seed, noiseless=config.noiseless)
        name = f"{i:04d}.png"
        clean_path = os.path.join(clean_dir, name)
        degr_path = os.path.join(degr_dir, name)
        save_image(img, clean_path, config.bit_depth)
        save_image(degraded, degr_path, config.bit_depth)
        sidecar = {
            "index": i,
            "source": src,
            "params": params.to_dict(),
            "seed": noise_seed.to_dict(),
            "noiseless": config.noiseless,
            "crop_fraction": config.crop_fraction,
            "kernel_size": kernel_size(params.psf.r_x, params.psf.r_y),
        }
        _write_json(os.path.join(degr_dir, f"{i:04d}.json"), sidecar)
        entries.append(
            {
                "index": i,
                "source": src,
                "clean": clean_path,
                "degraded": degr_path,
                "params": params.to_dict(),
                "seed": noise_seed.to_dict(),
            }
        )
    manifest = {
        "entries": entries,
        "fingerprint": config.fingerprint(),
        "noiseless": config.noiseless,
    }
    _write_json(os.path.join(config.out_dir, "simulate_manifest.json"), manifest)
    return manifest


def _restorer(config: PipelineConfig, method: str):
    """Build (op, settings-dict) for one restoration method."""
    psf = config.restore.fixed_psf
    kernel = build_kernel(psf)
    settings = {
        "psf": psf.to_dict(),
        "kernel_size": int(kernel.shape[0]),
    }
    if method == "rl":
        settings["iterations"] = config.restore.rl_iterations

        def op(tile):
            return richardson_lucy(tile, kernel, config.restore.rl_iterations)

    elif method == "wiener":
        settings["balance"] = config.restore.wiener_balance

        def op(tile):
            return wiener(tile, kernel, config.restore.wiener_balance)

    elif method == "variational":
        settings["steps"] = config.variational_steps
        settings["step_size"] = config.variational_step_size
        settings["weights"] = config.loss_weights.to_dict()

        def op(tile):
            return variational_restore(
                tile,
                kernel,
                config.loss_weights,
                steps=config.variational_steps,
                step_size=config.variational_step_size,
            )

    else:
        raise ConfigError(f"unknown method {method!r}; expected {METHODS}")
    return op, settings


def run_restore(config: PipelineConfig, method: str | None = None) -> dict:
    """Restore every degraded image listed in the simulate manifest."""
    method = config.method if method is None else method
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; expected {METHODS}")
    sim = _read_json(os.path.join(config.out_dir, "simulate_manifest.json"))
    op, settings = _restorer(config, method)
    out_dir = os.path.join(config.out_dir, "restored", method)
    os.makedirs(out_dir, exist_ok=True)
    entries = []
    for entry in sim["entries"]:
        degraded = load_image(entry["degraded"])
        if max(degraded.shape) > config.tile.tile:
            restored = tiled_apply(degraded, config.tile, op)
        else:
            restored = op(degraded)
        restored = np.clip(restored, 0.0, 1.0)
        name = f"{entry['index']:04d}.png"
        out_path = os.path.join(out_dir, name)
        save_image(restored, out_path, config.bit_depth)
        sidecar = {
            "index": entry["index"],
            "method": method,
            "input": entry["degraded"],
            "settings": settings,
            "tile": config.tile.to_dict(),
            "fingerprint": config.fingerprint(),
        }
        _write_json(os.path.join(out_dir, f"{entry['index']:04d}.json"), sidecar)
        entries.append(
            {
                "index": entry["index"],
                "restored": out_path,
                "degraded": entry["degraded"],
                "clean": entry["clean"],
            }
        )
    manifest = {"method": method, "entries": entries, "fingerprint": config.fingerprint()}
    _write_json(
        os.path.join(config.out_dir, f"restore_manifest_{method}.json"), manifest
    )
    return manifest


def run_evaluate(config: PipelineConfig, method: str | None = None) -> str:
    """Score restored images against their clean references; write a CSV."""
    method = config.method if method is None else method
    sim = _read_json(os.path.join(config.out_dir, "simulate_manifest.json"))
    res = _read_json(os.path.join(config.out_dir, f"restore_manifest_{method}.json"))
    refs = sorted(sim["entries"], key=lambda e: e["index"])
    outs = sorted(res["entries"], key=lambda e: e["index"])
    if len(refs) != len(outs):
        raise DataError(
            f"pairing error: {len(outs)} restored vs {len(refs)} reference images"
        )
    header = ["index", "restored", "reference", "psnr", "ssim"]
    if config.losses:
        header += ["charbonnier", "edge", "tv", "total"]
    rows = []
    sums = np.zeros(len(header) - 3, dtype=np.float64)
    for ref, out in zip(refs, outs):
        clean = load_image(ref["clean"])
        restored = load_image(out["restored"])
        if clean.shape != restored.shape:
            raise DataError(
                f"pairing error at index {ref['index']}: "
                f"shapes {restored.shape} vs {clean.shape}"
            )
        vals = [psnr(restored, clean), ssim(restored, clean)]
        if config.losses:
            w = config.loss_weights
            cv, _ = losses_mod.charbonnier(restored, clean, w.epsilon)
            ev, _ = losses_mod.edge_loss(restored, clean)
            tv, _ = losses_mod.tv_loss(restored)
            vals += [cv, ev, tv, cv + w.lambda_e * ev + w.lambda_tv * tv]
        sums += np.asarray(vals)
        rows.append([str(out["index"]), out["restored"], ref["clean"]] + [_fmt(v) for v in vals])
    means = sums / len(rows)
    rows.append(["mean", "", ""] + [_fmt(v) for v in means])
    csv_path = os.path.join(config.out_dir, f"evaluate_{method}.csv")
    _write_csv(csv_path, header, rows)
    return csv_path


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _measure_file(path, opts):
    try:
        return measure(detect_edges(load_image(path), opts))
    except MetrologyError:
        return None


def run_metrology(config: PipelineConfig, method: str | None = None) -> str:
    """Measure line patterns across a set; optionally compare to references.

    Unmeasurable images are flagged in their CSV row and skipped in the
    aggregates; the run keeps going.
    """
    method = config.method if method is None else method
    opts = DetectionOptions()
    targets, names = _metrology_set(config, method, config.metrology_target)
    header = ["image", "cd", "cd_std", "lwr", "ler", "psd_summary", "flags"]
    rows = []
    reports = []
    for path in targets:
        rep = _measure_file(path, opts)
        reports.append(rep)
        if rep is None:
            rows.append([path, "", "", "", "", "", "unmeasurable"])
        else:
            rows.append(
                [
                    path,
                    _fmt(rep.cd),
                    _fmt(rep.cd_std),
                    _fmt(rep.lwr),
                    _fmt(rep.ler),
                    _fmt(psd_summary(rep)),
                    "",
                ]
            )
    csv_path = os.path.join(config.out_dir, f"metrology_{method}.csv")
    _write_csv(csv_path, header, rows)
    if config.export_psd:
        psd_dir = os.path.join(config.out_dir, "psd", method)
        os.makedirs(psd_dir, exist_ok=True)
        for i, rep in enumerate(reports):
            if rep is None:
                continue
            _write_csv(
                os.path.join(psd_dir, f"{i:04d}.csv"),
                ["frequency", "power"],
                [
                    [_fmt(f), _fmt(p)]
                    for f, p in zip(rep.psd_freq, rep.psd_power)
                ],
            )
    if config.metrology_reference == "clean" and config.metrology_target != "clean":
        ref_paths, _ = _metrology_set(config, method, "clean")
        if len(ref_paths) != len(targets):
            raise DataError(
                f"pairing error: {len(targets)} measured vs {len(ref_paths)} references"
            )
        summaries = []
        err_rows = []
        for path, rep, ref_path in zip(targets, reports, ref_paths):
            ref = _measure_file(ref_path, opts)
            if rep is None or ref is None:
                summaries.append(None)
                err_rows.append([path, "", "", "", "", "", "unmeasurable"])
                continue
            errs = compare_reports(rep, ref, DEFAULT_PSD_BAND)
            summaries.append(errs)
            err_rows.append(
                [path]
                + [_fmt(errs[k]) for k in ("cd", "cd_std", "lwr", "ler", "psd")]
                + [""]
            )
        try:
            agg = aggregate_errors(summaries)
        except MetrologyError:
            agg = None
        if agg is not None:
            err_rows.append(
                [
                    "mae",
                    _fmt(agg["cd_mae"]),
                    _fmt(np.mean([s["cd_std"] for s in summaries if s])),
                    _fmt(np.mean([s["lwr"] for s in summaries if s])),
                    _fmt(np.mean([s["ler"] for s in summaries if s])),
                    _fmt(np.mean([s["psd"] for s in summaries if s])),
                    "",
                ]
            )
        _write_csv(
            os.path.join(config.out_dir, f"metrology_errors_{method}.csv"),
            ["image", "cd", "cd_std", "lwr", "ler", "psd", "flags"],
            err_rows,
        )
        summary = {
            "method": method,
            "band": list(DEFAULT_PSD_BAND),
            "aggregate": agg,
            "measured": sum(1 for s in summaries if s is not None),
            "unmeasurable": sum(1 for s in summaries if s is None),
        }
        _write_json(
            os.path.join(config.out_dir, f"metrology_summary_{method}.json"), summary
        )
    return csv_path


def _metrology_set(config: PipelineConfig, method: str, which: str):
    if which == "restored":
        man = _read_json(
            os.path.join(config.out_dir, f"restore_manifest_{method}.json")
        )
        entries = sorted(man["entries"], key=lambda e: e["index"])
        return [e["restored"] for e in entries], [e["index"] for e in entries]
    man = _read_json(os.path.join(config.out_dir, "simulate_manifest.json"))
    entries = sorted(man["entries"], key=lambda e: e["index"])
    key = "clean" if which == "clean" else "degraded"
    return [e[key] for e in entries], [e["index"] for e in entries]


def run_benchmark(config: PipelineConfig) -> None:
    """simulate -> restore -> evaluate (-> metrology when enabled)."""
    run_simulate(config)
    run_restore(config)
    run_evaluate(config)
    if config.metrology:
        run_metrology(config)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sembench",
        description="Physics-based SEM defocus benchmark: simulate, restore, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("simulate", "degrade input images with the forward model"),
        ("restore", "run a classical restorer over degraded images"),
        ("evaluate", "score restored images against clean references"),
        ("metrology", "measure line patterns and compare against references"),
        ("benchmark", "run all stages in order"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="pipeline config JSON")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--out", default=None, help="override output directory")
        p.add_argument(
            "--method",
            choices=METHODS,
            default=None,
            help="override restoration method",
        )
        if name == "evaluate":
            p.add_argument(
                "--losses",
                action="store_true",
                help="add per-image loss component columns",
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config!r}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {args.config!r} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config root must be a JSON object")
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out is not None:
            raw["out_dir"] = args.out
        if args.method is not None:
            raw["method"] = args.method
        if getattr(args, "losses", False):
            raw["losses"] = True
        config = PipelineConfig.from_dict(raw)
        os.makedirs(config.out_dir, exist_ok=True)
        if args.command == "simulate":
            run_simulate(config)
        elif args.command == "restore":
            run_restore(config)
        elif args.command == "evaluate":
            run_evaluate(config)
        elif args.command == "metrology":
            run_metrology(config)
        else:
            run_benchmark(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, FloatingPointError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
