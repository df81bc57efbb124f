"""Figure rendering from the CLI's CSV products.

Pure post-processing: every figure is built from CSV files written by the
runner (plus their JSON sidecars when an annotation is available), never by
recomputation.  Rendering overwrites the output file idempotently.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

FIGURE_KINDS = ("slow-manifold", "census-bars", "stable-histogram",
                "interval-cover", "painleve-error")


class SchemaMismatch(ValueError):
    """An input CSV is missing a column the figure needs."""


@dataclass
class FigureJob:
    kind: str
    inputs: list
    output: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}")
        for p in self.inputs:
            if not Path(p).exists():
                raise FileNotFoundError(p)


def _read_csv(path, required):
    with open(path) as fh:
        reader = csv.DictReader(fh)
        cols = reader.fieldnames or []
        for col in required:
            if col not in cols:
                raise SchemaMismatch(f"{path}: missing column {col!r}")
        rows = list(reader)
    if not rows:
        raise SchemaMismatch(f"{path}: no data rows")
    out = {}
    for col in cols:
        vals = [r[col] for r in rows]
        try:
            out[col] = np.array([float(v) for v in vals])
        except ValueError:
            out[col] = np.array(vals)
    return out


def _sidecar(path):
    p = Path(path).with_suffix(".meta.json")
    if p.exists():
        with open(p) as fh:
            return json.load(fh)
    return {}


def render(job: FigureJob) -> str:
    """Render the requested figure; returns the output path."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    try:
        if job.kind == "slow-manifold":
            _slow_manifold(ax, job)
        elif job.kind == "census-bars":
            _census_bars(ax, job)
        elif job.kind == "stable-histogram":
            _stable_histogram(ax, job)
        elif job.kind == "interval-cover":
            _interval_cover(ax, job)
        elif job.kind == "painleve-error":
            _painleve_error(ax, job)
        fig.tight_layout()
        fig.savefig(job.output, dpi=150)
    finally:
        plt.close(fig)
    return job.output


def _slow_manifold(ax, job):
    traj = _read_csv(job.inputs[0], ["u", "x"])
    ax.plot(traj["u"] % (2 * math.pi), traj["x"], ",", color="0.4",
            label="trajectory", rasterized=True)
    if len(job.inputs) > 1:
        sm = _read_csv(job.inputs[1], ["u", "x_branch"])
        order = np.argsort(sm["u"])
        u, xb = sm["u"][order], sm["x_branch"][order]
        ax.plot(u, xb, "C0", lw=1.5, label="branch +")
        ax.plot(u, -xb, "C0", lw=1.5)
        ax.plot(u, 0 * u, "C3", lw=1.0, label="x = 0")
    ax.set_xlabel("u (mod 2pi)")
    ax.set_ylabel("x")
    ax.legend(loc="upper right", fontsize=8)


def _census_bars(ax, job):
    data = _read_csv(job.inputs[0], ["eps", "pos", "spos", "upos_small"])
    n = len(data["eps"])
    idx = np.arange(n)
    w = 0.27
    ax.bar(idx - w, data["pos"], w, label="all")
    ax.bar(idx, data["spos"], w, label="stable")
    ax.bar(idx + w, data["upos_small"], w, label="unstable, small x")
    ax.set_xticks(idx)
    ax.set_xticklabels([format(e, "g") for e in data["eps"]])
    ax.set_xlabel("eps")
    ax.set_ylabel("periodic orbits")
    ax.legend(fontsize=8)


def _stable_histogram(ax, job):
    data = _read_csv(job.inputs[0], ["n_stable", "count"])
    ax.bar(data["n_stable"], data["count"], 0.8, color="C0")
    for x, c in zip(data["n_stable"], data["count"]):
        ax.text(x, c, str(int(c)), ha="center", va="bottom", fontsize=8)
    ax.set_xlabel("stable solutions per sample")
    ax.set_ylabel("outcomes")


def _interval_cover(ax, job):
    data = _read_csv(job.inputs[0], ["n", "f_n"])
    n = data["n"]
    f = data["f_n"]
    ax.plot(f, n, "C0o", ms=4, label="window endpoints")
    if "image_len" in data:
        il = data["image_len"]
        for i in range(len(n)):
            ax.plot([f[i], min(f[i] + il[i], math.pi)], [n[i], n[i]], "C0-",
                    lw=2, alpha=0.7)
            wrapped = f[i] + il[i] - math.pi
            if wrapped > 0:
                ax.plot([0, wrapped], [n[i], n[i]], "C0-", lw=2, alpha=0.7)
    ax.axvline(0.0, color="C3", lw=1, label="closure phase")
    ax.set_xlim(-0.1, math.pi + 0.1)
    ax.set_xlabel("residual phase mod pi")
    ax.set_ylabel("window index n")
    ax.legend(fontsize=8)


def _painleve_error(ax, job):
    data = _read_csv(job.inputs[0], ["delta", "action_error"])
    d = data["delta"]
    e = data["action_error"]
    ax.loglog(d, e, "C0o-", label="action error")
    meta = _sidecar(job.inputs[0]).get("extras", {})
    slope = meta.get("action_error_slope")
    if slope is None and len(d) >= 2:
        slope = float(np.polyfit(np.log(d), np.log(e), 1)[0])
    if slope is not None:
        ref = e[0] * (d / d[0]) ** 0.75
        ax.loglog(d, ref, "0.6", ls="--", label="slope 3/4 reference")
        ax.set_title(f"fitted slope {slope:.2f}")
    ax.set_xlabel("delta")
    ax.set_ylabel("inner action error")
    ax.legend(fontsize=8)
