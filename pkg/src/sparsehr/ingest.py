"""Recording and ground-truth file I/O.

A recording is a CSV with header ``ppg,ax,ay,az`` (an extra ``ecg`` column is
tolerated and ignored) plus a JSON sidecar ``{"id": ..., "sample_rate_hz": ...}``.
Ground truth is a single-column CSV of per-window BPM values with an optional
``bpm`` header.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

CHANNELS = ("ppg", "ax", "ay", "az")
TRUTH_RANGE_BPM = (20.0, 300.0)


class IngestError(ValueError):
    """Malformed recording, sidecar or ground-truth file."""


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Recording:
    """One PPG channel and three accelerometer axes sampled uniformly."""

    ppg: np.ndarray
    accel_x: np.ndarray
    accel_y: np.ndarray
    accel_z: np.ndarray
    sample_rate_hz: float
    id: str = ""

    def __post_init__(self):
        for name in ("ppg", "accel_x", "accel_y", "accel_z"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        n = self.ppg.size
        if n < 1 or self.ppg.ndim != 1:
            raise ValueError("recording channels must be non-empty 1-D sequences")
        for name in ("accel_x", "accel_y", "accel_z"):
            ch = getattr(self, name)
            if ch.ndim != 1 or ch.size != n:
                raise ValueError(f"channel {name} has length {ch.size}, expected {n}")
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self):
        return self.ppg.size

    @property
    def duration_s(self) -> float:
        return len(self) / self.sample_rate_hz

    def channels(self) -> np.ndarray:
        """Stack as an (n_samples, 4) array: PPG, then accel x/y/z."""
        return np.column_stack([self.ppg, self.accel_x, self.accel_y, self.accel_z])


@dataclass(frozen=True)
class GroundTruthTrace:
    """Reference heart rate, one BPM value per analysis window."""

    bpm_true: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.bpm_true)
        lo, hi = TRUTH_RANGE_BPM
        bad = np.flatnonzero(~((arr > lo) & (arr < hi)))
        if bad.size:
            raise ValueError(
                f"ground truth value {arr[bad[0]]} at index {bad[0]} outside ({lo:g}, {hi:g}) BPM"
            )
        object.__setattr__(self, "bpm_true", arr)

    def __len__(self):
        return self.bpm_true.size


def _read_meta(path: Path, meta) -> dict:
    if meta is None:
        meta = path.with_suffix(".json")
    if isinstance(meta, (str, Path)):
        meta_path = Path(meta)
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except FileNotFoundError as exc:
            raise IngestError(f"{meta_path}: metadata sidecar not found") from exc
        except json.JSONDecodeError as exc:
            raise IngestError(f"{meta_path}: invalid JSON ({exc})") from exc
    if "sample_rate_hz" not in meta:
        raise IngestError("metadata lacks 'sample_rate_hz'")
    try:
        fs = float(meta["sample_rate_hz"])
    except (TypeError, ValueError) as exc:
        raise IngestError(f"sample_rate_hz is not a number: {meta['sample_rate_hz']!r}") from exc
    if not fs > 0:
        raise IngestError(f"sample_rate_hz must be positive, got {fs}")
    return {"id": str(meta.get("id", path.stem)), "sample_rate_hz": fs}


def load_recording(path, meta=None) -> Recording:
    """Read a recording CSV.

    Parameters
    ----------
    path : str or Path
        CSV file with header ``ppg,ax,ay,az`` in any column order; an ``ecg``
        column is ignored.
    meta : dict, str, Path or None
        Either the metadata mapping itself or a path to the JSON sidecar.
        Defaults to ``path`` with a ``.json`` suffix.

    Raises
    ------
    IngestError
        On a missing file or column, a ragged row, a non-numeric cell or an
        empty file. Messages carry the offending row (1-based, header is row 1)
        and column.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"{path}: recording file not found")
    info = _read_meta(path, meta)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise IngestError(f"{path}: empty file")
        header = [h.strip().lower() for h in header]
        missing = [c for c in CHANNELS if c not in header]
        if missing:
            raise IngestError(f"{path}: missing column(s) {', '.join(missing)} in header {header}")
        cols = [header.index(c) for c in CHANNELS]
        rows = []
        for row in reader:
            if not row:
                continue
            line = reader.line_num
            if len(row) != len(header):
                raise IngestError(
                    f"{path}: row {line} has {len(row)} fields, expected {len(header)}"
                )
            values = []
            for c in cols:
                try:
                    values.append(float(row[c]))
                except ValueError:
                    raise IngestError(
                        f"{path}: row {line}, column '{header[c]}': non-numeric value {row[c]!r}"
                    ) from None
            rows.append(values)
    if not rows:
        raise IngestError(f"{path}: no data rows")
    data = np.array(rows)
    return Recording(
        ppg=data[:, 0],
        accel_x=data[:, 1],
        accel_y=data[:, 2],
        accel_z=data[:, 3],
        sample_rate_hz=info["sample_rate_hz"],
        id=info["id"],
    )


def write_recording(rec: Recording, path, sidecar=True) -> Path:
    """Write ``rec`` as CSV (shortest round-trip float repr) plus a JSON sidecar."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CHANNELS)
        for row in rec.channels():
            writer.writerow([repr(float(v)) for v in row])
    if sidecar:
        meta = {"id": rec.id, "sample_rate_hz": rec.sample_rate_hz}
        path.with_suffix(".json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    return path


def load_truth(path) -> GroundTruthTrace:
    """Read one BPM value per line; a leading non-numeric ``bpm`` header is skipped."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise IngestError(f"{path}: ground-truth file not found") from exc
    values = []
    lo, hi = TRUTH_RANGE_BPM
    for lineno, raw in enumerate(text.splitlines(), start=1):
        cell = raw.strip()
        if not cell:
            continue
        if lineno == 1 and cell.lower() == "bpm":
            continue
        try:
            v = float(cell)
        except ValueError:
            raise IngestError(f"{path}: line {lineno}: non-numeric value {cell!r}") from None
        if not (lo < v < hi) or math.isnan(v):
            raise IngestError(f"{path}: line {lineno}: {v} BPM outside ({lo:g}, {hi:g})")
        values.append(v)
    if not values:
        raise IngestError(f"{path}: empty ground truth")
    return GroundTruthTrace(np.array(values))


def write_truth(trace: GroundTruthTrace, path) -> Path:
    path = Path(path)
    lines = ["bpm"] + [repr(float(v)) for v in trace.bpm_true]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def convert_spc2015(sig_mat, bpm_mat, out_csv, ppg_row=1, fs=125.0, rec_id=None):
    """Convert one 2015 Signal Processing Cup training set to this package's format.

    ``sig_mat`` holds a ``sig`` array with rows ECG, PPG1, PPG2, acc x/y/z;
    ``bpm_mat`` holds ``BPM0`` (one value per 8 s window, 2 s step). Writes
    ``out_csv`` with its JSON sidecar and ``<stem>_truth.csv`` next to it.
    """
    from scipy.io import loadmat

    sig = np.asarray(loadmat(sig_mat)["sig"], dtype=float)
    bpm = np.asarray(loadmat(bpm_mat)["BPM0"], dtype=float).ravel()
    out_csv = Path(out_csv)
    rec = Recording(
        ppg=sig[ppg_row],
        accel_x=sig[-3],
        accel_y=sig[-2],
        accel_z=sig[-1],
        sample_rate_hz=fs,
        id=rec_id or out_csv.stem,
    )
    write_recording(rec, out_csv)
    truth_path = out_csv.with_name(out_csv.stem + "_truth.csv")
    write_truth(GroundTruthTrace(bpm), truth_path)
    return out_csv, truth_path
