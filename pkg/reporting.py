from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import mlflow
import numpy as np
import pandas as pd
from matplotlib import patches

from geom_core import Circle, Ellipse, PointD, Polygon, Sphere, Triangle

FLOAT_FORMAT = "%.17g"
SVG_HASH_SALT = "geoprobe"
PROJECTION_AXES = {"x": (1, 2), "y": (0, 2), "z": (0, 1)}


def to_builtin(value: Any) -> Any:
    """Convert numpy scalars, arrays and points to JSON-ready builtins.

    Non-finite floats become the strings "inf", "-inf" and "nan".
    """
    if isinstance(value, Enum):
        return to_builtin(value.value)
    if isinstance(value, dict):
        return {str(key): to_builtin(val) for key, val in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, PointD):
        return [to_builtin(c) for c in value.coords]
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if value is None or isinstance(value, str):
        return value
    return str(value)


def _dumps(data: Any, indent: Optional[int] = 2) -> str:
    return json.dumps(to_builtin(data), sort_keys=True, indent=indent, allow_nan=False)


@dataclass
class ReportEnvelope:
    tool_version: str
    created_at_utc: str
    config: Dict[str, Any]
    payload: Dict[str, Any]
    exit_code: int
    timing: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "tool_version": self.tool_version,
            "created_at_utc": self.created_at_utc,
            "config": to_builtin(self.config),
            "payload": to_builtin(self.payload),
            "exit_code": self.exit_code,
            "timing": to_builtin(self.timing),
        }

    def to_json(self) -> str:
        return _dumps(self.to_dict()) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportEnvelope":
        data = json.loads(text)
        return cls(
            tool_version=data["tool_version"],
            created_at_utc=data["created_at_utc"],
            config=data["config"],
            payload=data["payload"],
            exit_code=int(data["exit_code"]),
            timing=data.get("timing", {}),
        )

    def payload_json(self) -> str:
        return _dumps(self.payload, indent=None)

    def payload_digest(self) -> str:
        return hashlib.sha256(self.payload_json().encode("utf-8")).hexdigest()


def _ensure_parent(path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def write_json(envelope: ReportEnvelope, path: Path) -> Path:
    path = _ensure_parent(path)
    path.write_text(envelope.to_json(), encoding="utf-8")
    return path


def write_csv(rows: pd.DataFrame, path: Path) -> Path:
    path = _ensure_parent(path)
    rows.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return path


# -- figures -----------------------------------------------------------------


@dataclass
class LocusFigure:
    """Locus samples over their two input shapes, with the fitted circle in red."""

    shapes: Sequence[Any]
    samples: np.ndarray
    fitted_center: Optional[Sequence[float]] = None
    fitted_radius: Optional[float] = None
    excluded: Sequence[PointD] = ()
    projection_axis: str = "z"
    title: str = ""


@dataclass
class SceneFigure:
    triangle: Optional[Triangle] = None
    polygon: Optional[Polygon] = None
    shapes: Sequence[Any] = ()
    points: Sequence[PointD] = ()
    probe: Optional[PointD] = None
    title: str = ""


def _plane(coords: Sequence[float], axis: str) -> Tuple[float, float]:
    if len(coords) == 2:
        return float(coords[0]), float(coords[1])
    i, j = PROJECTION_AXES[axis]
    return float(coords[i]), float(coords[j])


def _draw_shape(ax, shape: Any, axis: str, color: str) -> None:
    if isinstance(shape, Ellipse):
        a, b = shape.semi_axes
        ax.add_patch(
            patches.Ellipse(
                shape.center.coords,
                2.0 * a,
                2.0 * b,
                angle=math.degrees(shape.rotation),
                fill=False,
                edgecolor=color,
                linewidth=1.2,
            )
        )
    elif isinstance(shape, (Circle, Sphere)):
        ax.add_patch(
            patches.Circle(_plane(shape.center.coords, axis), shape.radius, fill=False, edgecolor=color, linewidth=1.2)
        )


def _draw_locus(ax, figure: LocusFigure) -> None:
    axis = figure.projection_axis
    for shape in figure.shapes:
        _draw_shape(ax, shape, axis, "black")
    samples = np.asarray(figure.samples, dtype=float)
    if samples.size:
        projected = np.array([_plane(row, axis) for row in samples])
        ax.scatter(projected[:, 0], projected[:, 1], s=2, color="#4472C4", linewidths=0)
    if figure.fitted_center is not None and figure.fitted_radius is not None:
        ax.add_patch(
            patches.Circle(
                _plane(figure.fitted_center, axis), figure.fitted_radius, fill=False, edgecolor="red", linewidth=1.5
            )
        )
    for point in figure.excluded:
        x, y = _plane(point.coords, axis)
        ax.plot([x], [y], marker="o", markerfacecolor="none", markeredgecolor="black", linestyle="none")
    dims = {len(s.center.coords) for s in figure.shapes}
    if 3 in dims:
        i, j = PROJECTION_AXES[axis]
        ax.set_xlabel("xyz"[i])
        ax.set_ylabel("xyz"[j])
        ax.set_title((figure.title + " " if figure.title else "") + f"(orthographic projection along {axis})")
    elif figure.title:
        ax.set_title(figure.title)


def _draw_scene(ax, figure: SceneFigure) -> None:
    outline = figure.polygon.vertices if figure.polygon is not None else None
    if figure.triangle is not None:
        outline = figure.triangle.vertices
    if outline is not None:
        ax.add_patch(
            patches.Polygon([p.coords for p in outline], closed=True, fill=False, edgecolor="black", linewidth=1.2)
        )
    for shape in figure.shapes:
        _draw_shape(ax, shape, "z", "black")
    if figure.points:
        arr = np.array([_plane(p.coords, "z") for p in figure.points])
        ax.scatter(arr[:, 0], arr[:, 1], s=12, color="#2F5597")
    if figure.probe is not None:
        x, y = _plane(figure.probe.coords, "z")
        ax.plot([x], [y], marker="x", color="red", linestyle="none")
    if figure.title:
        ax.set_title(figure.title)


def emit_svg(figure: LocusFigure | SceneFigure, destination: Path) -> Path:
    """Write a standalone SVG; identical figures give identical bytes."""
    destination = _ensure_parent(destination)
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 6))
        if isinstance(figure, LocusFigure):
            _draw_locus(ax, figure)
        else:
            _draw_scene(ax, figure)
        ax.set_aspect("equal", adjustable="datalim")
        ax.autoscale_view()
        ax.grid(alpha=0.2)
        fig.tight_layout()
        fig.savefig(destination, format="svg", metadata={"Date": None})
        plt.close(fig)
    return destination


# -- tracking ----------------------------------------------------------------


def _metric_items(payload: Dict[str, Any]) -> Dict[str, float]:
    metrics: Dict[str, float] = {}
    sources: Iterable[Tuple[str, Any]] = [
        ("max_residual", payload.get("max_residual")),
        ("mean_residual", payload.get("mean_residual")),
    ]
    extras = payload.get("extras") if payload.get("kind") == "check" else payload.get("summary")
    sources = list(sources) + [(key, value) for key, value in (extras or {}).items()]
    for key, value in sources:
        if isinstance(value, bool) or not isinstance(value, (int, float, np.floating)):
            continue
        if math.isfinite(float(value)):
            metrics[key] = float(value)
    return metrics


def log_run_to_mlflow(
    *,
    envelope: ReportEnvelope,
    artifacts: Sequence[Path],
    experiment_name: str,
    tracking_uri: Optional[str] = None,
    run_name: Optional[str] = None,
) -> str:
    """Log params, numeric payload statistics and written files; returns the MLflow run id."""
    if tracking_uri:
        mlflow.set_tracking_uri(tracking_uri)
    mlflow.set_experiment(experiment_name)
    config = envelope.config
    with mlflow.start_run(run_name=run_name) as run:
        mlflow.log_params(
            {
                "command": config.get("command"),
                "target": config.get("target_id"),
                "seed": config.get("seed"),
                "trials": config.get("trials"),
                "tol": config.get("tol"),
            }
        )
        mlflow.log_metrics(_metric_items(envelope.payload))
        mlflow.set_tags({"exit_code": str(envelope.exit_code), "payload_sha256": envelope.payload_digest()})
        artifact_paths: List[Path] = [Path(p) for p in artifacts if Path(p).exists()]
        for path in artifact_paths:
            mlflow.log_artifact(str(path), artifact_path="reports")
        return run.info.run_id
