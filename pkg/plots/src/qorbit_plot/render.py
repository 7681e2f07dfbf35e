"""Static figures from tracking-run CSV files.

Consumes the trajectory.csv schema published by the qorbit CLI:
`t, f_1..f_M, V, v, purity, bx, by, bz, tbx, tby, tbz` for two-level runs.
Three figure kinds: a 3-d Bloch-sphere trajectory pair (controlled vs
target), control-field time series, and performance-index curves on a log
axis. Input files are never modified; trajectory endpoints are drawn from
the raw first/last rows with no smoothing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

BLOCH_COLUMNS = ("bx", "by", "bz", "tbx", "tby", "tbz")


class RenderError(Exception):
    pass


class MissingColumnsError(RenderError):
    pass


class EmptyTraceError(RenderError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    kind: str
    csv_paths: tuple
    out_path: str
    labels: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in ("bloch3d", "field", "perf"):
            raise RenderError(f"unknown plot kind {self.kind!r}")
        if not self.csv_paths:
            raise RenderError("at least one CSV path is required")
        if self.kind in ("bloch3d", "field") and len(self.csv_paths) != 1:
            raise RenderError(f"{self.kind} takes exactly one CSV")


def load_trace(path) -> np.ndarray:
    """Structured array of one CSV; raises on an empty or headerless file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            if not fh.readline().strip():
                raise EmptyTraceError(f"{path} is empty")
    except OSError as exc:
        raise RenderError(f"cannot read {path}: {exc}") from exc
    try:
        data = np.genfromtxt(path, delimiter=",", names=True)
    except (ValueError, IndexError) as exc:
        raise EmptyTraceError(f"{path} has no readable rows: {exc}") from exc
    if data.dtype.names is None:
        raise EmptyTraceError(f"{path} has no header row")
    data = np.atleast_1d(data)
    if data.size == 0:
        raise EmptyTraceError(f"{path} contains a header but no samples")
    return data


def require_columns(data: np.ndarray, needed, path) -> None:
    have = set(data.dtype.names or ())
    missing = [c for c in needed if c not in have]
    if missing:
        raise MissingColumnsError(f"{path} lacks columns {missing}")


def _draw_sphere(ax) -> None:
    u = np.linspace(0.0, 2.0 * np.pi, 36)
    v = np.linspace(0.0, np.pi, 18)
    x = np.outer(np.cos(u), np.sin(v))
    y = np.outer(np.sin(u), np.sin(v))
    z = np.outer(np.ones_like(u), np.cos(v))
    ax.plot_wireframe(x, y, z, color="lightgray", linewidth=0.3, alpha=0.5)


def _render_bloch3d(spec: PlotSpec, fig) -> None:
    path = spec.csv_paths[0]
    data = load_trace(path)
    require_columns(data, BLOCH_COLUMNS, path)
    ax = fig.add_subplot(projection="3d")
    _draw_sphere(ax)
    bx, by, bz = data["bx"], data["by"], data["bz"]
    tx, ty, tz = data["tbx"], data["tby"], data["tbz"]
    ax.plot(bx, by, bz, color="red", linewidth=1.0, label="controlled")
    ax.plot(tx, ty, tz, color="blue", linewidth=1.0, label="target")
    ax.scatter([bx[0]], [by[0]], [bz[0]], facecolors="none", edgecolors="red", s=45)
    ax.scatter([tx[0]], [ty[0]], [tz[0]], facecolors="none", edgecolors="blue", s=45)
    ax.scatter([bx[-1]], [by[-1]], [bz[-1]], color="red", s=30)
    ax.scatter([tx[-1]], [ty[-1]], [tz[-1]], color="blue", s=30)
    mid = len(bx) // 2
    if mid + 1 < len(bx):
        ax.quiver(
            bx[mid], by[mid], bz[mid],
            bx[mid + 1] - bx[mid], by[mid + 1] - by[mid], bz[mid + 1] - bz[mid],
            color="black", length=0.25, normalize=True, arrow_length_ratio=0.6,
        )
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    ax.set_box_aspect((1, 1, 1))
    ax.legend(loc="upper left")


def _render_field(spec: PlotSpec, fig) -> None:
    path = spec.csv_paths[0]
    data = load_trace(path)
    require_columns(data, ("t",), path)
    field_cols = sorted(
        (c for c in data.dtype.names if c.startswith("f_")),
        key=lambda c: int(c.split("_")[1]),
    )
    if not field_cols:
        raise MissingColumnsError(f"{path} has no f_m columns")
    ax = fig.add_subplot()
    for col in field_cols:
        ax.plot(data["t"], data[col], linewidth=0.8, label=col)
    ax.set_xlabel("t (a.u.)")
    ax.set_ylabel("control field (a.u.)")
    ax.legend()
    ax.grid(True, alpha=0.3)


def _render_perf(spec: PlotSpec, fig) -> None:
    ax = fig.add_subplot()
    labels = list(spec.labels) + [None] * (len(spec.csv_paths) - len(spec.labels))
    for path, label in zip(spec.csv_paths, labels):
        data = load_trace(path)
        require_columns(data, ("t", "v"), path)
        ax.semilogy(data["t"], data["v"], linewidth=0.9, label=label or str(path))
    ax.set_xlabel("t (a.u.)")
    ax.set_ylabel("performance index v")
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)


def render(spec: PlotSpec):
    """Render one figure and write it to spec.out_path; returns the figure."""
    fig = plt.figure(figsize=(6.4, 5.6) if spec.kind == "bloch3d" else (6.4, 4.0))
    try:
        if spec.kind == "bloch3d":
            _render_bloch3d(spec, fig)
        elif spec.kind == "field":
            _render_field(spec, fig)
        else:
            _render_perf(spec, fig)
        fig.tight_layout()
        fig.savefig(spec.out_path, dpi=150)
    except Exception:
        plt.close(fig)
        raise
    return fig
