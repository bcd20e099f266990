"""Render comparison figures from simulation trace CSVs.

Consumes the trace schema written by the `iccbf` CLI:

    t,x_0..,u_0..,v_0..,mu_0..,h,kappa,clf_slack,qp_status,w_h_norm_max

and draws up to three stacked panels: state trajectories, input with the
constraint envelope (taken from the `kappa` column, so the plotter never
re-evaluates the scenario), and the barrier value with the zero line.
Multiple traces overlay with one color per trace; time axes are aligned by
truncating to the shortest trace.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

PANELS = ("state", "input", "barrier")
COLORS = ["tab:blue", "magenta", "orange", "tab:green"]


class SchemaError(ValueError):
    """The CSV does not carry the expected trace columns."""


@dataclass(frozen=True)
class FigureSpec:
    traces: tuple          # 1..4 CSV paths
    panels: tuple          # subset of PANELS, in display order
    out: str
    labels: tuple = ()
    image_format: str = ""          # inferred from `out` when empty
    envelope: str = "symmetric"     # "symmetric" (+/- kappa) or "upper"

    def __post_init__(self):
        if not 1 <= len(self.traces) <= 4:
            raise ValueError("between 1 and 4 traces")
        for p in self.panels:
            if p not in PANELS:
                raise ValueError(f"unknown panel {p!r}")
        if not self.panels:
            raise ValueError("at least one panel")
        if self.envelope not in ("symmetric", "upper"):
            raise ValueError(f"unknown envelope mode {self.envelope!r}")


REQUIRED = ("t", "h", "kappa", "clf_slack", "qp_status", "w_h_norm_max")


def load_trace(path) -> dict:
    """Read one trace CSV into arrays keyed by column group."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header:
            raise SchemaError(f"{path}: empty file")
        idx = {name: i for i, name in enumerate(header)}
        for col in REQUIRED:
            if col not in idx:
                raise SchemaError(f"{path}: missing column {col!r}")
        groups = {}
        for prefix in ("x_", "u_", "v_", "mu_"):
            cols = sorted((c for c in header if c.startswith(prefix)),
                          key=lambda c: int(c[len(prefix):]))
            if not cols:
                raise SchemaError(f"{path}: missing column group {prefix}*")
            groups[prefix] = cols
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")

    def col(name):
        return np.array([float(r[idx[name]]) for r in rows])

    out = {
        "t": col("t"),
        "h": col("h"),
        "kappa": col("kappa"),
        "x": np.column_stack([col(c) for c in groups["x_"]]),
        "u": np.column_stack([col(c) for c in groups["u_"]]),
    }
    return out


def build_figure(spec: FigureSpec):
    """Assemble the figure; returns (figure, axes). render() saves it."""
    traces = [load_trace(p) for p in spec.traces]
    labels = list(spec.labels) + [
        Path(p).stem for p in spec.traces[len(spec.labels):]
    ]
    n_rows = min(tr["t"].shape[0] for tr in traces)
    traces = [{k: v[:n_rows] for k, v in tr.items()} for tr in traces]

    fig, axes = plt.subplots(
        len(spec.panels), 1, figsize=(7.0, 2.6 * len(spec.panels)),
        sharex=True, squeeze=False,
    )
    axes = axes[:, 0]

    for ax, panel in zip(axes, spec.panels):
        if panel == "state":
            for k, tr in enumerate(traces):
                for j in range(tr["x"].shape[1]):
                    suffix = f" x{j}" if tr["x"].shape[1] > 1 else ""
                    ax.plot(tr["t"], tr["x"][:, j], color=COLORS[k],
                            lw=1.4, ls=["-", "--", ":"][j % 3],
                            label=labels[k] + suffix)
            ax.set_ylabel("state")
        elif panel == "input":
            for k, tr in enumerate(traces):
                for j in range(tr["u"].shape[1]):
                    ax.plot(tr["t"], tr["u"][:, j], color=COLORS[k],
                            lw=1.4, label=labels[k])
            kappa = traces[0]["kappa"]
            t = traces[0]["t"]
            ax.plot(t, kappa, color="red", ls="--", lw=1.0, label="bound")
            if spec.envelope == "symmetric":
                ax.plot(t, -kappa, color="red", ls="--", lw=1.0)
            ax.set_ylabel("input")
        else:
            for k, tr in enumerate(traces):
                ax.plot(tr["t"], tr["h"], color=COLORS[k], lw=1.4,
                        label=labels[k])
            ax.axhline(0.0, color="black", lw=0.8)
            ax.set_ylabel("barrier h")
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best", fontsize=8)
    axes[-1].set_xlabel("time [s]")
    fig.tight_layout()
    return fig, axes


def render(spec: FigureSpec) -> Path:
    """Write the figure to spec.out and return the path."""
    fig, _ = build_figure(spec)
    out = Path(spec.out)
    fmt = spec.image_format or out.suffix.lstrip(".") or "png"
    if fmt not in ("png", "svg"):
        raise ValueError(f"unsupported image format {fmt!r}")
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, format=fmt, dpi=150)
    plt.close(fig)
    return out
