"""HTTP service for human QC review of segmentations.

Single-process FastAPI app. Volumes are read lazily and cached; concurrent
reads are safe and rating writes are serialized through a lock, with the
on-disk ratings file as the append-only source of truth (a restart rebuilds
the latest view from it).

Slice images are served as 8-bit grayscale PNGs windowed to an explicit
(wmin, wmax) or to the volume's robust 1-99 percentile range by default.
Overlays are not baked into the PNG: a JSON sidecar carries per-row
run-length label segments so the client chooses colors and opacity.
"""

from __future__ import annotations

import io
import json
import threading
from pathlib import Path
from typing import Literal

import numpy as np
from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.staticfiles import StaticFiles
from PIL import Image
from pydantic import BaseModel, Field

from .curation import QCRecord, QCStore, append_csv_row, export_csv, import_csv, utc_timestamp
from .manifest import load_manifest
from .nifti import read_nifti
from .volume import LabelMap, Volume

_SCHEMA_PATH = Path(__file__).parent / "data" / "schemas" / "api.schema.json"


class RatingRequest(BaseModel):
    rating: Literal["good", "bad", "unrated"]
    affected_structures: list[str] = Field(default_factory=list)
    rater: str = ""
    note: str = ""


def _slice_2d(data: np.ndarray, axis: int, index: int) -> np.ndarray:
    if axis == 0:
        return data[index, :, :]
    if axis == 1:
        return data[:, index, :]
    return data[:, :, index]


def _window_to_u8(plane: np.ndarray, wmin: float, wmax: float) -> np.ndarray:
    if wmax <= wmin:
        return np.zeros(plane.shape, dtype=np.uint8)
    scaled = np.clip((plane - wmin) / (wmax - wmin), 0.0, 1.0)
    return np.round(scaled * 255.0).astype(np.uint8)


def _rle_segments(plane: np.ndarray) -> list[dict]:
    """Per-row runs of equal nonzero labels: {label, row, start, length}."""
    segments: list[dict] = []
    rows, cols = plane.shape
    for row in range(rows):
        line = plane[row]
        boundaries = np.flatnonzero(np.diff(line)) + 1
        starts = np.concatenate([[0], boundaries])
        ends = np.concatenate([boundaries, [cols]])
        for start, end in zip(starts, ends):
            label = int(line[start])
            if label != 0:
                segments.append(
                    {"label": label, "row": row, "start": int(start), "length": int(end - start)}
                )
    return segments


class _VolumeCache:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._items: dict[str, object] = {}

    def get(self, key: str, loader):
        with self._lock:
            if key not in self._items:
                self._items[key] = loader()
            return self._items[key]


def create_app(
    manifest_path: str | Path,
    ratings_path: str | Path,
    pred_dir: str | Path | None = None,
    pred_pattern: str = "{subject_id}.nii.gz",
    sentinel_scores_path: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    manifest_path = Path(manifest_path)
    ratings_path = Path(ratings_path)
    manifest = load_manifest(manifest_path)
    base_dir = manifest_path.parent

    store = import_csv(ratings_path) if ratings_path.exists() else QCStore()
    write_lock = threading.Lock()
    cache = _VolumeCache()

    sentinel: dict[str, float | None] = {}
    if sentinel_scores_path is not None:
        doc = json.loads(Path(sentinel_scores_path).read_text())
        sentinel = {str(k): v for k, v in doc.get("scores", {}).items()}

    app = FastAPI(title="ulfsynth QC service")

    def _entry(subject_id: str):
        try:
            return manifest.get(subject_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown subject {subject_id!r}")

    def _resolve(path_str: str) -> Path:
        path = Path(path_str)
        return path if path.is_absolute() else base_dir / path

    def _image(subject_id: str) -> Volume:
        entry = _entry(subject_id)
        return cache.get(f"img:{subject_id}", lambda: read_nifti(_resolve(entry.image_path), as_labels=False))

    def _gt_labels(subject_id: str) -> LabelMap:
        entry = _entry(subject_id)
        return cache.get(f"gt:{subject_id}", lambda: read_nifti(_resolve(entry.label_path), as_labels=True))

    def _pred_labels(subject_id: str) -> LabelMap:
        if pred_dir is None:
            raise HTTPException(status_code=404, detail="no prediction directory configured")
        path = Path(pred_dir) / pred_pattern.format(subject_id=subject_id)
        if not path.exists():
            raise HTTPException(status_code=404, detail=f"no prediction for {subject_id!r}")
        return cache.get(f"pred:{subject_id}", lambda: read_nifti(path, as_labels=True))

    def _window(subject_id: str) -> tuple[float, float]:
        vol = _image(subject_id)
        return cache.get(
            f"win:{subject_id}",
            lambda: tuple(float(p) for p in np.percentile(vol.data, [1.0, 99.0])),
        )

    def _check_slice_args(subject_id: str, axis: int, index: int | None) -> int:
        # bad slice coordinates are a client error (400); 422 is reserved for
        # malformed request bodies
        if axis not in (0, 1, 2):
            raise HTTPException(status_code=400, detail="axis must be 0, 1, or 2")
        dims = _image(subject_id).grid.dims
        if index is None:
            index = dims[axis] // 2
        if not 0 <= index < dims[axis]:
            raise HTTPException(
                status_code=400,
                detail=f"index {index} outside [0, {dims[axis]}) for axis {axis}",
            )
        return index

    @app.get("/api/subjects")
    def list_subjects() -> list[dict]:
        out = []
        for subject_id in manifest.subject_ids():
            entry = manifest.get(subject_id)
            latest = store.latest(subject_id)
            out.append(
                {
                    "subject_id": subject_id,
                    "dims": list(_image(subject_id).grid.dims),
                    "qc_status": latest.rating if latest else entry.qc_status,
                    "sentinel_score": sentinel.get(subject_id),
                }
            )
        return out

    @app.get("/api/subjects/{subject_id}/slice")
    def get_slice(
        subject_id: str,
        axis: int = Query(default=1),
        index: int | None = Query(default=None),
        overlay: str = Query(default="none"),
        wmin: float | None = Query(default=None),
        wmax: float | None = Query(default=None),
    ) -> Response:
        index = _check_slice_args(subject_id, axis, index)
        vol = _image(subject_id)
        lo, hi = _window(subject_id)
        if wmin is not None:
            lo = wmin
        if wmax is not None:
            hi = wmax
        plane = _window_to_u8(_slice_2d(vol.data, axis, index), lo, hi)
        buf = io.BytesIO()
        Image.fromarray(plane, mode="L").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/subjects/{subject_id}/slice/overlay")
    def get_slice_overlay(
        subject_id: str,
        axis: int = Query(default=1),
        index: int | None = Query(default=None),
        overlay: str = Query(default="gt"),
    ) -> dict:
        if overlay not in ("none", "gt", "prediction"):
            raise HTTPException(status_code=422, detail="overlay must be none, gt, or prediction")
        index = _check_slice_args(subject_id, axis, index)
        if overlay == "none":
            labels_map: LabelMap | None = None
        elif overlay == "gt":
            labels_map = _gt_labels(subject_id)
        else:
            labels_map = _pred_labels(subject_id)
        if labels_map is None:
            dims = _image(subject_id).grid.dims
            plane_shape = _slice_2d(np.empty(dims, dtype=np.uint8), axis, index).shape
            segments: list[dict] = []
            vocab: dict[str, str] = {}
        else:
            plane = _slice_2d(labels_map.data, axis, index)
            plane_shape = plane.shape
            segments = _rle_segments(plane)
            vocab = {str(k): v for k, v in labels_map.vocabulary.items()}
        return {
            "subject_id": subject_id,
            "axis": axis,
            "index": index,
            "overlay": overlay,
            "shape": list(plane_shape),
            "segments": segments,
            "labels": vocab,
        }

    @app.post("/api/subjects/{subject_id}/rating")
    def post_rating(subject_id: str, body: RatingRequest) -> dict:
        _entry(subject_id)
        record = QCRecord(
            subject_id=subject_id,
            rating=body.rating,
            affected_structures=tuple(body.affected_structures),
            rater=body.rater,
            timestamp=utc_timestamp(),
            note=body.note,
        )
        with write_lock:
            store.add(record)
            append_csv_row(record, ratings_path)
        return {
            "subject_id": record.subject_id,
            "rating": record.rating,
            "affected_structures": list(record.affected_structures),
            "rater": record.rater,
            "timestamp": record.timestamp,
            "note": record.note,
        }

    @app.get("/api/ratings.csv")
    def ratings_csv() -> Response:
        import tempfile

        with write_lock:
            with tempfile.NamedTemporaryFile("w+", suffix=".csv", delete=False) as tmp:
                tmp_path = Path(tmp.name)
        try:
            export_csv(store, tmp_path)
            content = tmp_path.read_text()
        finally:
            tmp_path.unlink(missing_ok=True)
        return Response(content=content, media_type="text/csv")

    @app.get("/api/schema")
    def api_schema() -> dict:
        return json.loads(_SCHEMA_PATH.read_text())

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
