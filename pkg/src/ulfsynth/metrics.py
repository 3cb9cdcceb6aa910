"""Segmentation quality metrics and per-subject evaluation reports.

Five metrics are computed per structure:

* DSC   Dice similarity coefficient, ``2|P & G| / (|P| + |G|)``; defined as
        1.0 when both masks are empty.
* HD    Hausdorff distance: the larger of the two directed maxima between
        the structures' surface voxels, in millimetres.
* HD95  95th percentile (linear interpolation) of the pooled directed
        surface distances.
* ASSD  Average symmetric surface distance: sum of both directed distance
        sets over their total count.
* RVE   Relative volume error ``|V_P - V_G| / V_G``.

Surface voxels are mask voxels with at least one of their six face
neighbours outside the mask, where the volume border counts as outside.
Distances are exact Euclidean distances between voxel centers under the
grid spacing, computed with a distance transform over the opposing surface.

`evaluate` never drops a structure silently: when the ground truth lacks a
structure, all five metrics are reported missing with reason ``gt-empty``;
when only the prediction is empty, DSC (0.0) and RVE (1.0) are reported and
the distance metrics are missing with reason ``pred-empty``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import ndimage

from .errors import ContractError, EmptyStructureError
from .volume import LabelMap

METRIC_NAMES = ("DSC", "HD", "HD95", "ASSD", "RVE")

MISSING_GT = "gt-empty"
MISSING_PRED = "pred-empty"


def _check_pair(pred: LabelMap, gt: LabelMap) -> None:
    if not pred.grid.same_geometry(gt.grid):
        raise ContractError("prediction and ground truth live on different grids")


def dice(pred: LabelMap, gt: LabelMap, label: int) -> float:
    """Dice coefficient for one label; 1.0 when both masks are empty."""
    _check_pair(pred, gt)
    p = pred.data == label
    g = gt.data == label
    p_count = int(p.sum())
    g_count = int(g.sum())
    if p_count + g_count == 0:
        return 1.0
    inter = int(np.logical_and(p, g).sum())
    return 2.0 * inter / (p_count + g_count)


def surface_mask(mask: np.ndarray) -> np.ndarray:
    """Mask voxels with any of their six face neighbours outside the mask.

    The volume border counts as outside, so structures touching the edge
    keep their boundary voxels.
    """
    interior = mask.copy()
    for axis in range(3):
        for shift in (1, -1):
            neighbor = np.zeros_like(mask)
            src = [slice(None)] * 3
            dst = [slice(None)] * 3
            if shift == 1:
                src[axis] = slice(1, None)
                dst[axis] = slice(None, -1)
            else:
                src[axis] = slice(None, -1)
                dst[axis] = slice(1, None)
            neighbor[tuple(dst)] = mask[tuple(src)]
            interior &= neighbor
    return mask & ~interior


@dataclass(frozen=True)
class SurfaceDistanceSet:
    """Directed surface-to-surface distance multisets, in millimetres."""

    pred_to_gt: np.ndarray
    gt_to_pred: np.ndarray

    def pooled(self) -> np.ndarray:
        return np.concatenate([self.pred_to_gt, self.gt_to_pred])


def surface_distances(
    pred: LabelMap,
    gt: LabelMap,
    label: int,
    spacing: tuple[float, float, float] | None = None,
) -> SurfaceDistanceSet:
    """Directed distances between the two structures' surface voxel centers.

    Raises EmptyStructureError naming the empty side when either mask has no
    voxels. `spacing` defaults to the shared grid spacing.
    """
    _check_pair(pred, gt)
    if spacing is None:
        spacing = pred.grid.spacing
    p = pred.data == label
    g = gt.data == label
    p_empty = not p.any()
    g_empty = not g.any()
    if p_empty or g_empty:
        side = "both" if (p_empty and g_empty) else ("pred" if p_empty else "gt")
        raise EmptyStructureError(side, label)

    surf_p = surface_mask(p)
    surf_g = surface_mask(g)
    # Distance from every voxel to the nearest surface voxel of the other side.
    dist_to_g = ndimage.distance_transform_edt(~surf_g, sampling=spacing)
    dist_to_p = ndimage.distance_transform_edt(~surf_p, sampling=spacing)
    return SurfaceDistanceSet(
        pred_to_gt=np.sort(dist_to_g[surf_p]),
        gt_to_pred=np.sort(dist_to_p[surf_g]),
    )


def hausdorff(distances: SurfaceDistanceSet) -> float:
    return float(max(distances.pred_to_gt.max(), distances.gt_to_pred.max()))


def hausdorff95(distances: SurfaceDistanceSet) -> float:
    return float(np.percentile(distances.pooled(), 95))


def assd(distances: SurfaceDistanceSet) -> float:
    total = distances.pred_to_gt.sum() + distances.gt_to_pred.sum()
    count = distances.pred_to_gt.size + distances.gt_to_pred.size
    return float(total / count)


def volume_error(pred: LabelMap, gt: LabelMap, label: int) -> float:
    """Relative volume error; requires a nonempty ground-truth structure."""
    _check_pair(pred, gt)
    g_count = int((gt.data == label).sum())
    if g_count == 0:
        raise EmptyStructureError("gt", label)
    p_count = int((pred.data == label).sum())
    # the voxel-volume factor cancels exactly, so stay in integer counts
    return abs(p_count - g_count) / g_count


@dataclass(frozen=True)
class MetricValue:
    value: float | None
    status: str = "ok"  # "ok" | "missing"
    reason: str = ""

    @classmethod
    def missing(cls, reason: str) -> "MetricValue":
        return cls(value=None, status="missing", reason=reason)


@dataclass(frozen=True)
class MetricsReport:
    """All metric values for one subject, keyed by (label, metric)."""

    subject_id: str
    label_names: Mapping[int, str]
    values: Mapping[tuple[int, str], MetricValue] = field(default_factory=dict)

    def get(self, label: int, metric: str) -> MetricValue:
        return self.values[(label, metric)]

    def labels(self) -> list[int]:
        return sorted({label for label, _ in self.values})

    def rows(self) -> list[dict]:
        out = []
        for label in self.labels():
            for metric in METRIC_NAMES:
                mv = self.values[(label, metric)]
                out.append(
                    {
                        "subject_id": self.subject_id,
                        "label": label,
                        "label_name": self.label_names.get(label, f"label_{label}"),
                        "metric": metric,
                        "value": "" if mv.value is None else repr(mv.value),
                        "status": mv.status,
                        "reason": mv.reason,
                    }
                )
        return out


def evaluate(
    pred: LabelMap,
    gt: LabelMap,
    labels_to_eval: Iterable[int],
    subject_id: str = "",
    label_names: Mapping[int, str] | None = None,
) -> MetricsReport:
    """Compute all five metrics for each requested label."""
    _check_pair(pred, gt)
    labels = [int(l) for l in labels_to_eval]
    if not labels:
        raise ContractError("labels_to_eval must not be empty")
    if label_names is None:
        label_names = dict(gt.vocabulary)

    values: dict[tuple[int, str], MetricValue] = {}
    for label in labels:
        g_empty = not bool((gt.data == label).any())
        p_empty = not bool((pred.data == label).any())
        if g_empty:
            for metric in METRIC_NAMES:
                values[(label, metric)] = MetricValue.missing(MISSING_GT)
            continue
        if p_empty:
            values[(label, "DSC")] = MetricValue(0.0)
            values[(label, "RVE")] = MetricValue(1.0)
            for metric in ("HD", "HD95", "ASSD"):
                values[(label, metric)] = MetricValue.missing(MISSING_PRED)
            continue
        dists = surface_distances(pred, gt, label)
        values[(label, "DSC")] = MetricValue(dice(pred, gt, label))
        values[(label, "HD")] = MetricValue(hausdorff(dists))
        values[(label, "HD95")] = MetricValue(hausdorff95(dists))
        values[(label, "ASSD")] = MetricValue(assd(dists))
        values[(label, "RVE")] = MetricValue(volume_error(pred, gt, label))
    return MetricsReport(subject_id=subject_id, label_names=dict(label_names), values=values)
