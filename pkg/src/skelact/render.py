"""Static renderings: SVG skeleton/detector drawings and report figures.

SVG output is assembled by hand so that the same input always yields the
same bytes; matplotlib is used only for the evaluation figures written next
to the delimited report files.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .detector import PoseDetector
from .metrics import EvalReport
from .skeleton import SkeletonPose, barycenter, from_polar

__all__ = [
    "pose_svg",
    "detector_svg",
    "render_skeleton_svg",
    "save_confusion_figure",
    "save_rates_figure",
]

_CANVAS = 480.0
_MARGIN = 40.0


def _fmt(value: float) -> str:
    return f"{value:.4f}"


def _projector(points: np.ndarray, extra: float = 0.0, flip_y: bool = False):
    """Map data coordinates onto the SVG canvas, preserving aspect ratio."""
    low = points.min(axis=0) - extra
    high = points.max(axis=0) + extra
    span = float(max(high[0] - low[0], high[1] - low[1], 1e-12))
    scale = (_CANVAS - 2.0 * _MARGIN) / span
    center = 0.5 * (low + high)

    def project(p):
        x = _CANVAS / 2.0 + (p[0] - center[0]) * scale
        dy = (p[1] - center[1]) * scale
        y = _CANVAS / 2.0 + (-dy if flip_y else dy)
        return x, y

    return project, scale


def _svg_document(body: list[str]) -> str:
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_CANVAS:.0f}" '
        f'height="{_CANVAS:.0f}" viewBox="0 0 {_CANVAS:.0f} {_CANVAS:.0f}">'
    )
    return "\n".join([head, *body, "</svg>"]) + "\n"


def pose_svg(pose: SkeletonPose, flip_y: bool = True) -> str:
    """Draw bones, joint markers and the reference point of one pose.

    ``flip_y`` treats the data as y-up (mathematical convention); disable it
    for screen-coordinate data that is already y-down.
    """
    project, _ = _projector(pose.positions, flip_y=flip_y)
    body = []
    for a, b in pose.layout.bones:
        xa, ya = project(pose.positions[a])
        xb, yb = project(pose.positions[b])
        body.append(
            f'<line class="bone" x1="{_fmt(xa)}" y1="{_fmt(ya)}" '
            f'x2="{_fmt(xb)}" y2="{_fmt(yb)}" stroke="#3465a4" stroke-width="2"/>'
        )
    for j in range(pose.layout.n_joints):
        x, y = project(pose.positions[j])
        body.append(
            f'<circle class="joint" cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="#cc0000">'
            f"<title>{pose.layout.joint_names[j]}</title></circle>"
        )
    rx, ry = project(barycenter(pose))
    body.append(
        f'<circle class="reference" cx="{_fmt(rx)}" cy="{_fmt(ry)}" r="6" '
        f'fill="none" stroke="#4e9a06" stroke-width="2"/>'
    )
    return _svg_document(body)


def detector_svg(detector: PoseDetector, flip_y: bool = True) -> str:
    """Draw a detector's model joints with their tolerance circles.

    Joint positions are reconstructed from the stored polar coordinates
    about the reference point at the origin; circle radii are the per-joint
    tolerance widths, and zero-weight joints are drawn hollow.
    """
    origin = np.zeros(2)
    points = np.array([from_polar(t.rho, t.phi, origin) for t in detector.tuples])
    max_sigma = max(t.sigma for t in detector.tuples)
    project, scale = _projector(points, extra=max_sigma, flip_y=flip_y)
    body = []
    for a, b in detector.layout.bones:
        xa, ya = project(points[a])
        xb, yb = project(points[b])
        body.append(
            f'<line class="bone" x1="{_fmt(xa)}" y1="{_fmt(ya)}" '
            f'x2="{_fmt(xb)}" y2="{_fmt(yb)}" stroke="#babdb6" stroke-width="1.5"/>'
        )
    for tup in detector.tuples:
        x, y = project(points[tup.joint])
        body.append(
            f'<circle class="tolerance" cx="{_fmt(x)}" cy="{_fmt(y)}" '
            f'r="{_fmt(tup.sigma * scale)}" fill="#729fcf" fill-opacity="0.25" '
            f'stroke="#3465a4" stroke-width="1"/>'
        )
    for tup in detector.tuples:
        x, y = project(points[tup.joint])
        fill = "#cc0000" if tup.weight > 0.0 else "none"
        body.append(
            f'<circle class="joint" cx="{_fmt(x)}" cy="{_fmt(y)}" r="3.5" '
            f'fill="{fill}" stroke="#a40000" stroke-width="1">'
            f"<title>{detector.layout.joint_names[tup.joint]}</title></circle>"
        )
    rx, ry = project(origin)
    body.append(
        f'<circle class="reference" cx="{_fmt(rx)}" cy="{_fmt(ry)}" r="6" '
        f'fill="none" stroke="#4e9a06" stroke-width="2"/>'
    )
    return _svg_document(body)


def render_skeleton_svg(subject, out_path=None, flip_y: bool = True) -> str:
    """Render a pose or a detector; write the SVG when a path is given."""
    if isinstance(subject, SkeletonPose):
        text = pose_svg(subject, flip_y=flip_y)
    elif isinstance(subject, PoseDetector):
        text = detector_svg(subject, flip_y=flip_y)
    else:
        raise TypeError(f"cannot render object of type {type(subject).__name__}")
    if out_path is not None:
        Path(out_path).write_text(text, encoding="utf-8")
    return text


def save_confusion_figure(report: EvalReport, path) -> None:
    """Confusion-matrix heatmap with annotated counts."""
    labels = [str(cls) for cls in report.classes] + ["bg"]
    matrix = np.asarray(report.confusion, dtype=float)
    fig = Figure(figsize=(1.0 + 0.6 * len(labels), 0.8 + 0.6 * len(report.classes)))
    ax = fig.add_subplot(111)
    image = ax.imshow(matrix, cmap="Blues")
    ax.set_xticks(range(len(labels)), labels=labels)
    ax.set_yticks(range(len(report.classes)), labels=[str(c) for c in report.classes])
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    threshold = matrix.max() / 2.0 if matrix.max() > 0 else 0.5
    for i in range(matrix.shape[0]):
        for j in range(matrix.shape[1]):
            ax.text(
                j,
                i,
                str(int(matrix[i, j])),
                ha="center",
                va="center",
                fontsize=8,
                color="white" if matrix[i, j] > threshold else "black",
            )
    fig.colorbar(image, ax=ax, fraction=0.046)
    fig.tight_layout()
    fig.savefig(path, dpi=150)


def save_rates_figure(report: EvalReport, path) -> None:
    """Grouped bars of recognition/error/miss per class."""
    m = len(report.classes)
    x = np.arange(m)
    width = 0.28
    fig = Figure(figsize=(max(4.0, 0.9 * m), 3.2))
    ax = fig.add_subplot(111)
    ax.bar(x - width, report.recognition, width, label="recognition", color="#4e9a06")
    ax.bar(x, report.error, width, label="error", color="#cc0000")
    ax.bar(x + width, report.miss, width, label="miss", color="#555753")
    ax.set_xticks(x, labels=[str(c) for c in report.classes])
    ax.set_ylim(0.0, 1.05)
    ax.set_xlabel("class")
    ax.set_ylabel("rate")
    ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
