"""On-disk formats: detection, ground-truth and result CSVs.

Detection CSV
    First line ``frame,x1,y1,x2,y2,score,label,cov=<arity>[,frames=<n>]``
    where arity is ``none``, ``diag4`` (variances of x1, y1, x2, y2) or
    ``full10`` (upper triangle of the 4x4 covariance, row-major). Each row
    holds exactly that many covariance values after the label. ``frames``
    fixes the sequence length so trailing empty frames survive.

Ground-truth CSV
    ``frame,id,x,y,w,h,label,visibility`` with top-left + size boxes. The
    header line is optional when reading.

Results CSV
    MOTChallenge layout ``frame,id,x,y,w,h,score,label,-1,-1`` under a
    header line, ordered by frame then id.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np

from . import geometry
from .motmetrics import GtFrame, GtObject
from .probdet import GaussianBox, symmetrize_psd
from .tracker import FrameDetections, FrameResult, TrackOutput

COV_ARITY = {"none": 0, "diag4": 4, "full10": 10}
DET_COLUMNS = "frame,x1,y1,x2,y2,score,label"
GT_HEADER = "frame,id,x,y,w,h,label,visibility"
RESULTS_HEADER = "frame,id,x,y,w,h,score,label,wx,wy"

_IU = np.triu_indices(4)
MAX_FRAME = 10_000_000  # guards against absurd frame indices allocating huge sequences


class FormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = f"{path}:{line}: " if line is not None else (f"{path}: " if path else "")
        super().__init__(where + message)
        self.line = line


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temp file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_lines(path) -> list[str]:
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise FormatError(f"cannot read file: {e.strerror}", path) from e
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise FormatError("file is not valid UTF-8", path) from e
    return text.splitlines()


def _num(x) -> str:
    return repr(float(x))


def _float(tok: str, path, line: int) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise FormatError(f"not a number: {tok!r}", path, line) from None
    if not np.isfinite(v):
        raise FormatError(f"non-finite value: {tok!r}", path, line)
    return v


def _int(tok: str, path, line: int) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"not an integer: {tok!r}", path, line) from None


def _cov_values(cov, arity: str) -> list[float]:
    if arity == "diag4":
        return list(np.diag(cov))
    if arity == "full10":
        return list(cov[_IU])
    return []


def _cov_from_values(vals, arity: str) -> np.ndarray | None:
    if arity == "none":
        return None
    if arity == "diag4":
        return np.diag(vals)
    cov = np.zeros((4, 4))
    cov[_IU] = vals
    return cov + np.triu(cov, 1).T


def parse_det_header(line: str, path=None) -> tuple[str, int | None]:
    toks = [t.strip() for t in line.split(",")]
    if ",".join(toks[:7]) != DET_COLUMNS:
        raise FormatError(f"detection header must start with {DET_COLUMNS!r}", path, 1)
    arity, frames = None, None
    for tok in toks[7:]:
        key, _, value = tok.partition("=")
        if key == "cov" and value in COV_ARITY:
            arity = value
        elif key == "frames" and value.isascii() and value.isdigit() and int(value) <= MAX_FRAME:
            frames = int(value)
        else:
            raise FormatError(f"bad header token {tok!r}", path, 1)
    if arity is None:
        raise FormatError("header must declare cov=none|diag4|full10", path, 1)
    return arity, frames


def write_detections(path, frames, cov: str = "diag4") -> None:
    """Write a detection sequence. Covariances are stored, never recomputed."""
    if cov not in COV_ARITY:
        raise ValueError(f"unknown covariance arity {cov!r}")
    frames = list(frames)
    n = max((f.frame for f in frames), default=0)
    lines = [f"{DET_COLUMNS},cov={cov},frames={n}"]
    for f in frames:
        for d in f.detections:
            row = [str(f.frame), *(_num(v) for v in d.mean), _num(d.score), str(d.label)]
            if cov != "none":
                if d.cov is None:
                    raise ValueError(f"frame {f.frame}: detection has no covariance for cov={cov}")
                row += [_num(v) for v in _cov_values(d.cov, cov)]
            lines.append(",".join(row))
    atomic_write(path, "\n".join(lines) + "\n")


def load_detections(path) -> list[FrameDetections]:
    """Read a detection CSV into frames ``1..N`` (empty frames included)."""
    lines = read_lines(path)
    if not lines:
        raise FormatError("empty file, expected a header line", path, 1)
    arity, n_frames = parse_det_header(lines[0], path)
    k = COV_ARITY[arity]
    rows: list[tuple[int, GaussianBox]] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        toks = raw.split(",")
        if len(toks) != 7 + k:
            raise FormatError(f"expected {7 + k} fields, got {len(toks)}", path, lineno)
        frame = _int(toks[0], path, lineno)
        if not 1 <= frame <= MAX_FRAME:
            raise FormatError(f"frame {frame} outside [1, {MAX_FRAME}]", path, lineno)
        box = [_float(t, path, lineno) for t in toks[1:5]]
        score = _float(toks[5], path, lineno)
        label = _int(toks[6], path, lineno)
        if not 0.0 <= score <= 1.0:
            raise FormatError(f"score {score} outside [0, 1]", path, lineno)
        if box[2] < box[0] or box[3] < box[1]:
            raise FormatError("box corners are inverted", path, lineno)
        cov = _cov_from_values([_float(t, path, lineno) for t in toks[7:]], arity)
        if cov is not None:
            # exact for symmetric PSD input, so stored values round-trip
            try:
                cov = symmetrize_psd(cov)
            except ValueError as e:
                raise FormatError(str(e), path, lineno) from None
        rows.append((frame, GaussianBox(box, cov, score, label)))
    rows.sort(key=lambda r: r[0])
    last = max([n_frames or 0] + [r[0] for r in rows])
    if n_frames is not None and rows and rows[-1][0] > n_frames:
        raise FormatError(f"row frame {rows[-1][0]} exceeds declared frames={n_frames}", path)
    out = [FrameDetections(i, []) for i in range(1, last + 1)]
    for frame, det in rows:
        out[frame - 1].detections.append(det)
    return out


def write_gt(path, gt) -> None:
    lines = [GT_HEADER]
    for f in gt:
        for o in sorted(f.objects, key=lambda o: o.id):
            x, y, w, h = geometry.tlbr_to_tlwh(o.box)
            lines.append(",".join([str(f.frame), str(o.id), _num(x), _num(y), _num(w), _num(h),
                                   str(o.label), _num(o.visible)]))
    atomic_write(path, "\n".join(lines) + "\n")


def load_gt(path) -> list[GtFrame]:
    """Read ground truth; 6+ columns, label and visibility optional."""
    lines = read_lines(path)
    by_frame: dict[int, list[GtObject]] = {}
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip() or (lineno == 1 and raw.startswith("frame")):
            continue
        toks = raw.split(",")
        if len(toks) < 6:
            raise FormatError(f"expected at least 6 fields, got {len(toks)}", path, lineno)
        frame, oid = _int(toks[0], path, lineno), _int(toks[1], path, lineno)
        x, y, w, h = (_float(t, path, lineno) for t in toks[2:6])
        label = _int(toks[6], path, lineno) if len(toks) > 6 else 0
        vis = _float(toks[7], path, lineno) if len(toks) > 7 else 1.0
        if oid < 1 or frame < 1:
            raise FormatError("frame and id must be >= 1", path, lineno)
        if w <= 0 or h <= 0:
            raise FormatError("box width and height must be positive", path, lineno)
        by_frame.setdefault(frame, []).append(GtObject(oid, geometry.tlwh_to_tlbr([x, y, w, h]), label, vis))
    return [GtFrame(k, by_frame[k]) for k in sorted(by_frame)]


def format_results(results) -> str:
    lines = [RESULTS_HEADER]
    for r in sorted(results, key=lambda r: r.frame):
        for o in sorted(r.outputs, key=lambda o: o.track_id):
            x, y, w, h = geometry.tlbr_to_tlwh(o.box)
            lines.append(f"{r.frame},{o.track_id},{x:.3f},{y:.3f},{w:.3f},{h:.3f},{o.score:.4f},{o.label},-1,-1")
    return "\n".join(lines) + "\n"


def write_results(path, results) -> None:
    atomic_write(path, format_results(results))


def load_results(path) -> list[FrameResult]:
    lines = read_lines(path)
    by_frame: dict[int, list[TrackOutput]] = {}
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip() or (lineno == 1 and raw.startswith("frame")):
            continue
        toks = raw.split(",")
        if len(toks) < 7:
            raise FormatError(f"expected at least 7 fields, got {len(toks)}", path, lineno)
        frame, tid = _int(toks[0], path, lineno), _int(toks[1], path, lineno)
        x, y, w, h, score = (_float(t, path, lineno) for t in toks[2:7])
        label = _int(toks[7], path, lineno) if len(toks) > 7 else 0
        box = geometry.tlwh_to_tlbr([x, y, w, h])
        by_frame.setdefault(frame, []).append(TrackOutput(tid, box, score, label))
    return [FrameResult(k, by_frame[k]) for k in sorted(by_frame)]

