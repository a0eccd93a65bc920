"""Command line front end: ``sparsehr run | baseline | batch | synth``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import synth as synth_mod
from .ingest import IngestError, load_recording, load_truth, write_recording, write_truth
from .metrics import evaluate, pooled_summary
from .pipeline import (
    RunConfig,
    estimate,
    kept_windows,
    paired,
    passband_peak,
    pmax_region,
    periodogram_spectra,
    joint_spectra,
)
from .preprocess import PipelineConfig, make_windows
from .spectrum import SolverConfig, build_dictionary
from .track import TrackerConfig, run_tracker

TRACE_COLUMNS = ("window_index", "t_start_s", "bpm", "stage", "selected_bin", "flags")


class StageError(RuntimeError):
    """An error raised inside one pipeline stage, tagged with the stage name."""

    def __init__(self, stage, exc):
        super().__init__(f"[{stage}] {exc}")
        self.stage = stage


def _tagged(stage, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (ValueError, IngestError, np.linalg.LinAlgError, OSError) as exc:
        raise StageError(stage, exc) from exc


def write_trace(result, path):
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for w, d in zip(result.windows, result.track.decisions):
            writer.writerow([
                w.window_index,
                repr(float(w.t_start_s)),
                "" if d.bpm is None else repr(float(d.bpm)),
                d.stage_used.value,
                "" if d.selected_bin is None else d.selected_bin,
                "|".join(sorted(d.flags)),
            ])
    return path


def write_errors(window_index, est, ref, path):
    """Per-window estimate, reference and absolute error, for plotting."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["window_index", "bpm_est", "bpm_true", "abs_error"])
        for i, e, r in zip(window_index, est, ref):
            writer.writerow([int(i), repr(float(e)), repr(float(r)), repr(float(abs(e - r)))])
    return path


def read_trace(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_spectra(windows, spectra, path, method="mmv", peaks=None, tracked=None, append=False):
    """Wide CSV: one row per window, lower-half spectrum bins as ``s_0 .. s_{N/2}``."""
    path = Path(path)
    half = spectra[0].n_bins // 2
    with open(path, "a" if append else "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not append:
            writer.writerow(["window_index", "t_start_s", "method", "peak_bin", "tracked_bin"]
                            + [f"s_{k}" for k in range(half + 1)])
        for i, (w, s) in enumerate(zip(windows, spectra)):
            pk = "" if peaks is None or peaks[i] is None else peaks[i]
            tr = "" if tracked is None or tracked[i] is None else tracked[i]
            writer.writerow([w.window_index, repr(float(w.t_start_s)), method, pk, tr]
                            + [f"{v:.10g}" for v in s.s[:half + 1]])
    return path


def run(rec_path, truth_path=None, cfg: RunConfig = RunConfig(), trace_path="trace.csv",
        report_path=None, spectra_path=None, meta=None) -> dict:
    """Estimate one recording and write its artifacts.

    The trace CSV is always written; the report JSON and a per-window error
    CSV only when ground truth is given. Returns a dict with the written paths and the report (or None).
    """
    rec = _tagged("ingest", load_recording, rec_path, meta)
    truth = _tagged("ingest", load_truth, truth_path) if truth_path else None
    result = _tagged("pipeline", estimate, rec, cfg)
    written = {"trace": write_trace(result, trace_path)}
    if spectra_path:
        written["spectra"] = write_spectra(result.windows, result.spectra, spectra_path)
    report = None
    if truth is not None:
        est, ref, idx = _tagged("metrics", paired, result, truth)
        report = _tagged("metrics", evaluate, est, ref)
        written["errors"] = write_errors(idx, est, ref, Path(trace_path).with_suffix(".errors.csv"))
        report_path = Path(report_path or Path(trace_path).with_suffix(".report.json"))
        report_path.write_text(report.to_json(config_hash=cfg.config_hash(), dataset_id=rec.id,
                                              config=cfg.to_dict()) + "\n", encoding="utf-8")
        written["report"] = report_path
    return {"written": written, "report": report, "result": result, "recording": rec}


def run_baseline(rec_path, cfg: RunConfig = RunConfig(), out_path="baseline.csv", meta=None) -> Path:
    """Dump MMV-cleansed and periodogram-cleansed spectra with their picked bins."""
    rec = _tagged("ingest", load_recording, rec_path, meta)
    windows = _tagged("preprocess", make_windows, rec, cfg.pipeline)
    windows = kept_windows(windows, cfg.skip_seconds)
    if not windows:
        raise StageError("preprocess", ValueError("no windows left after skip_seconds"))
    dictionary = build_dictionary(cfg.pipeline.window_samples, cfg.n_grid)
    region = pmax_region(cfg)
    mmv, _ = _tagged("spectrum", joint_spectra, windows, dictionary, cfg.solver, pmax_bins=region)
    pgram = _tagged("spectrum", periodogram_spectra, windows, cfg.n_grid, region)
    for i, (method, spectra) in enumerate((("mmv", mmv), ("periodogram", pgram))):
        tracked = [d.selected_bin for d in run_tracker(spectra, cfg.tracker).decisions]
        peaks = [passband_peak(s, cfg) for s in spectra]
        write_spectra(windows, spectra, out_path, method, peaks, tracked, append=i > 0)
    return Path(out_path)


def _load_manifest(path):
    path = Path(path)
    data = json.loads(path.read_text(encoding="utf-8"))
    entries = data["datasets"] if isinstance(data, dict) else data
    if not entries:
        raise ValueError(f"{path}: manifest lists no datasets")
    base = path.parent
    out = []
    for e in entries:
        item = dict(e)
        for key in ("recording", "truth", "meta"):
            if item.get(key):
                item[key] = str((base / item[key]).resolve()) if not Path(item[key]).is_absolute() else item[key]
        out.append(item)
    return out


def _batch_one(args):
    entry, cfg_dict, out_dir = args
    cfg = RunConfig.from_dict({**cfg_dict, "skip_seconds": float(entry.get("skip_seconds", 0.0))})
    stem = Path(entry["recording"]).stem
    out = run(entry["recording"], entry.get("truth"), cfg,
              trace_path=Path(out_dir) / f"{stem}.trace.csv",
              report_path=Path(out_dir) / f"{stem}.report.json", meta=entry.get("meta"))
    if out["report"] is None:
        return stem, None, None, None
    est, ref, _ = paired(out["result"], load_truth(entry["truth"]))
    return out["recording"].id, out["report"], est, ref


def batch(manifest_path, cfg: RunConfig = RunConfig(), out_dir="batch_out", jobs: int = 1) -> dict:
    """Run every manifest entry and write per-dataset plus aggregate reports."""
    entries = _tagged("batch", _load_manifest, manifest_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    work = [(e, cfg.to_dict(), str(out_dir)) for e in entries]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_batch_one, work))
    else:
        results = []
        for item in work:
            try:
                results.append(_batch_one(item))
            except StageError as exc:
                raise StageError(exc.stage, f"{item[0]['recording']}: {exc}") from exc
    scored = [(i, r, e, t) for i, r, e, t in results if r is not None]
    if not scored:
        raise StageError("batch", ValueError("no manifest entry has ground truth"))
    reports = {i: r for i, r, _, _ in scored}
    summary = pooled_summary(reports, [e for *_, e, _ in scored], [t for *_, t in scored])
    aggregate = {
        "config_hash": cfg.config_hash(),
        "datasets": {i: r.to_dict() for i, r in reports.items()},
        "pooled": summary.pop("pooled").to_dict(),
        **summary,
    }
    (out_dir / "aggregate.json").write_text(json.dumps(aggregate, indent=2) + "\n", encoding="utf-8")
    return aggregate


# --- argument parsing -----------------------------------------------------

_SECTIONS = (("pipeline", PipelineConfig), ("solver", SolverConfig), ("tracker", TrackerConfig))
_DERIVED = {("tracker", "sample_rate_hz")}


def _add_config_flags(parser):
    parser.add_argument("--config", help="JSON file with RunConfig overrides")
    parser.add_argument("--n-grid", type=int, help="spectrum grid size N")
    parser.add_argument("--skip-seconds", type=float, help="drop windows starting before this time")
    parser.add_argument("--pmax-passband-only", action="store_true", default=None,
                        help="take the cleansing maximum over passband bins only")
    for section, cls in _SECTIONS:
        group = parser.add_argument_group(section)
        for f in fields(cls):
            if (section, f.name) in _DERIVED:
                continue
            flag = "--" + f.name.replace("_", "-")
            dest = f"{section}.{f.name}"
            if isinstance(f.default, bool):
                group.add_argument(flag, dest=dest, action="store_true", default=None)
            elif isinstance(f.default, tuple):
                group.add_argument(flag, dest=dest, type=float, nargs=2, metavar=("LO", "HI"))
            else:
                group.add_argument(flag, dest=dest, type=type(f.default))


def config_from_args(args) -> RunConfig:
    base = RunConfig().to_dict()
    if getattr(args, "config", None):
        override = json.loads(Path(args.config).read_text(encoding="utf-8"))
        for key, value in override.items():
            if isinstance(value, dict):
                base.setdefault(key, {}).update(value)
            else:
                base[key] = value
    for key, value in vars(args).items():
        if value is None or "." not in key:
            continue
        section, name = key.split(".", 1)
        base[section][name] = list(value) if isinstance(value, (list, tuple)) else value
    if getattr(args, "n_grid", None) is not None:
        base["n_grid"] = args.n_grid
    if getattr(args, "skip_seconds", None) is not None:
        base["skip_seconds"] = args.skip_seconds
    if getattr(args, "pmax_passband_only", None):
        base["pmax_passband_only"] = True
    base["tracker"].pop("sample_rate_hz", None)
    return RunConfig.from_dict(base)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsehr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="estimate heart rate for one recording")
    p.add_argument("recording")
    p.add_argument("--truth")
    p.add_argument("--meta", help="JSON sidecar (default: recording path with .json suffix)")
    p.add_argument("--trace", default="trace.csv")
    p.add_argument("--report")
    p.add_argument("--spectra", help="also dump cleansed spectra per window")
    _add_config_flags(p)

    p = sub.add_parser("baseline", help="compare MMV and periodogram cleansed spectra")
    p.add_argument("recording")
    p.add_argument("--meta")
    p.add_argument("--out", default="baseline.csv")
    _add_config_flags(p)

    p = sub.add_parser("batch", help="run a manifest of recordings and aggregate")
    p.add_argument("manifest")
    p.add_argument("--out-dir", default="batch_out")
    p.add_argument("--jobs", type=int, default=1)
    _add_config_flags(p)

    p = sub.add_parser("synth", help="write a synthetic recording and its ground truth")
    p.add_argument("--profile", choices=("treadmill", "near-collision", "constant"), default="treadmill")
    p.add_argument("--seed", type=int, help="RNG seed (default: the profile's own)")
    p.add_argument("--bpm", type=float, default=150.0, help="heart rate for the constant profile")
    p.add_argument("--duration", type=float, default=60.0, help="seconds, constant profile only")
    p.add_argument("--noise", type=float, help="noise sigma (default: the profile's own)")
    p.add_argument("--out", default="synthetic.csv")
    p.add_argument("--truth-out")
    return parser


def _synth(args):
    given = {k: v for k, v in (("seed", args.seed), ("noise_sigma", args.noise)) if v is not None}
    if args.profile == "treadmill":
        spec = synth_mod.treadmill_spec(**given)
    elif args.profile == "near-collision":
        spec = synth_mod.near_collision_spec(**given)
    else:
        spec = synth_mod.SynthSpec(duration_s=args.duration, hr_trace_bpm=args.bpm, id="constant", **given)
    rec, truth = synth_mod.generate(spec)
    out = write_recording(rec, args.out)
    truth_out = Path(args.truth_out or Path(args.out).with_name(Path(args.out).stem + "_truth.csv"))
    if truth is not None:
        write_truth(truth, truth_out)
    print(f"wrote {out} ({len(rec)} samples) and {truth_out}")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            _tagged("synth", _synth, args)
            return 0
        cfg = _tagged("config", config_from_args, args)
        if args.command == "run":
            out = run(args.recording, args.truth, cfg, args.trace, args.report, args.spectra, args.meta)
            rep = out["report"]
            msg = f"wrote {out['written']['trace']}"
            if rep is not None:
                msg += f"; Error1 {rep.error1_bpm:.3f} BPM over {rep.window_count} windows"
            print(msg)
        elif args.command == "baseline":
            print(f"wrote {run_baseline(args.recording, cfg, args.out, args.meta)}")
        elif args.command == "batch":
            agg = batch(args.manifest, cfg, args.out_dir, args.jobs)
            pooled = agg["pooled"]
            print(f"{len(agg['datasets'])} datasets; pooled Error1 {pooled['error1_bpm']:.3f} BPM, "
                  f"Pearson {pooled['pearson_r']:.4f}, LOA [{pooled['loa'][0]:.2f}, {pooled['loa'][1]:.2f}]")
    except StageError as exc:
        print(f"sparsehr {args.command}: error {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError) as exc:
        print(f"sparsehr {args.command}: error {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
