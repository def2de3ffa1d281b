"""Deterministic writers: CSV with a provenance header, static SVG plots.

Every file starts with a comment line carrying the package version and
the config hash, so reruns of the same config are byte-identical.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import __version__


def header_line(config_sha: str) -> str:
    return f"# critgrad {__version__} config-sha256 {config_sha}\n"


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def write_csv(path, columns, rows, config_sha: str) -> Path:
    """Comma-separated file: header comment, column names, one line per row."""
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(header_line(config_sha))
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
    return path


def write_text(path, text: str, config_sha: str) -> Path:
    path = Path(path)
    path.write_text(header_line(config_sha) + text)
    return path


def _figure():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    matplotlib.rcParams["svg.hashsalt"] = "critgrad"
    matplotlib.rcParams["svg.fonttype"] = "path"
    return plt


def _save(fig, plt, path, config_sha):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None,
                                              "Description": f"critgrad {__version__} config-sha256 {config_sha}"})
    plt.close(fig)
    return Path(path)


def bifurcation_svg(path, segments, folds, terminal, config_sha: str, title: str = "") -> Path:
    """λ against ‖u‖∞ for each segment; folds as circles, flagged ends as crosses.

    ``segments`` is a list of (lambdas, sups, label); ``folds`` and
    ``terminal`` are lists of (λ, sup) points.
    """
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for lam, sup, label in segments:
        ax.plot(lam, sup, "-", lw=1.2, label=label)
    if folds:
        f = np.asarray(folds)
        ax.plot(f[:, 0], f[:, 1], "o", mfc="none", ms=8, label="fold")
    if terminal:
        t = np.asarray(terminal)
        ax.plot(t[:, 0], t[:, 1], "x", ms=8, label="truncated")
    ax.set_xlabel("lambda")
    ax.set_ylabel("sup |u|")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    return _save(fig, plt, path, config_sha)


def constants_svg(path, resolutions, constants, config_sha: str, title: str = "") -> Path:
    """Scatter of empirical constants against mesh resolution (log scale)."""
    plt = _figure()
    fig, ax = plt.subplots(figsize=(6, 4))
    for res, cs in zip(resolutions, constants):
        cs = np.asarray(cs, float)
        ax.plot(np.full(cs.size, res), cs, ".", alpha=0.5)
        ax.plot([res], [cs.min()], "v", color="k")
    ax.set_yscale("log")
    ax.set_xlabel("nodes per axis")
    ax.set_ylabel("empirical constant")
    ax.set_title(title)
    fig.tight_layout()
    return _save(fig, plt, path, config_sha)
