"""Figure rendering for sweep results.

Each map task gets one PNG per figure quantity, written next to the
delimited output.  Rendering is optional and pulls matplotlib lazily
with the non-interactive Agg backend, so headless runs work.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = ["render_figures"]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _col(result, name):
    return result.columns.index(name)


def _map_grid(result, value_col, branch=None, reduce="operating"):
    """Reshape per-root rows into a (omega_f, omega_p) matrix.

    Picks one value per cell: the row with root_index 0 after the solver's
    ordering, or the per-cell combined column which repeats on every row.
    """
    iwf = _col(result, "omega_f_ghz")
    iwp = _col(result, "omega_p_ghz")
    ibr = _col(result, "branch")
    iroot = _col(result, "root_index")
    ival = _col(result, value_col)
    wf = sorted({row[iwf] for row in result.rows})
    wp = sorted({row[iwp] for row in result.rows})
    fi = {v: i for i, v in enumerate(wf)}
    pi = {v: i for i, v in enumerate(wp)}
    grid = np.full((len(wf), len(wp)), np.nan)
    for row in result.rows:
        if branch is not None and row[ibr] != branch:
            continue
        if row[iroot] > 0:
            continue
        v = row[ival]
        if v is None:
            v = math.nan
        grid[fi[row[iwf]], pi[row[iwp]]] = v
    return np.asarray(wf), np.asarray(wp), grid


def _render_map(result, out_dir, value_col, fname, label):
    plt = _pyplot()
    branch = result.metadata.get("branch", "ground")
    pick = None if value_col == "s21_combined_db" else (
        "ground" if branch == "combined" else branch)
    wf, wp, grid = _map_grid(result, value_col, branch=pick)
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    mesh = ax.pcolormesh(wp, wf, grid, shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label=label)
    ax.set_xlabel("pump frequency (GHz)")
    ax.set_ylabel("flux bias frequency (GHz)")
    ax.set_title(f"{result.task}: {label}")
    path = os.path.join(out_dir, fname)
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _render_bistability(result, out_dir):
    plt = _pyplot()
    iwf = _col(result, "omega_f_ghz")
    ipos = _col(result, "possible")
    ipwr = _col(result, "power_onset_dbm")
    ibr = _col(result, "branch")
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    for br in sorted({row[ibr] for row in result.rows}):
        xs = [row[iwf] for row in result.rows
              if row[ibr] == br and row[ipos]]
        ys = [row[ipwr] for row in result.rows
              if row[ibr] == br and row[ipos]]
        if xs:
            ax.plot(xs, ys, ".-", label=br)
    ax.set_xlabel("flux bias frequency (GHz)")
    ax.set_ylabel("onset power (dBm)")
    ax.set_title("bistability onset")
    if ax.get_legend_handles_labels()[0]:
        ax.legend()
    path = os.path.join(out_dir, "bistability_onset.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def _render_spectrum(result, out_dir):
    plt = _pyplot()
    iwf = _col(result, "omega_f_ghz")
    imodel = _col(result, "model")
    istate = _col(result, "state")
    ival = _col(result, "value_ghz")
    fig, ax = plt.subplots(figsize=(7.0, 5.0), constrained_layout=True)
    series = {}
    for row in result.rows:
        series.setdefault((row[imodel], row[istate]), []).append(
            (row[iwf], row[ival]))
    for (model, state), pts in sorted(series.items()):
        pts.sort()
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        style = {"jc": "--", "bs": "-", "linear": ":"}[model]
        ax.plot(xs, ys, style, lw=1.0, label=f"{model} {state}")
    ax.set_xlabel("flux bias frequency (GHz)")
    ax.set_ylabel("level energy / line frequency (GHz)")
    ax.set_title("dressed levels")
    ax.legend(fontsize=6, ncol=2)
    path = os.path.join(out_dir, "spectrum_levels.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def render_figures(result, out_dir):
    """Render the figures for one SweepResult; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    task = result.task
    if task in ("transmission-map", "shr-map"):
        col = ("s21_combined_db"
               if result.metadata.get("branch") == "combined" else "s21_db")
        return [_render_map(result, out_dir, col,
                            f"{task}_s21.png", "|S21|^2 (dB)")]
    if task == "imd":
        paths = [_render_map(result, out_dir, "gain_signal_db",
                             "imd_signal_gain.png", "signal gain (dB)"),
                 _render_map(result, out_dir, "gain_idler_db",
                             "imd_idler_gain.png", "idler gain (dB)")]
        return paths
    if task == "bistability":
        return [_render_bistability(result, out_dir)]
    if task == "spectrum":
        return [_render_spectrum(result, out_dir)]
    return []
