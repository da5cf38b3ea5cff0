"""Parameter sweeps over flux and pump grids, with delimited output.

The map tasks scan a residual over the photon-number grid for every cell
of a (omega_f, omega_p) grid, refine each root by bisection and classify
its stability.  One grid row (fixed omega_f, all omega_p) is the unit of
work: inside a row everything is a numpy batch, and rows go to worker
processes when more than one worker is requested.  Cells are computed
independently with fixed iteration counts, so output bytes do not depend
on the worker count.

Output is CSV (comma, 12 significant digits, '# key value' metadata
lines) or the same content as JSON.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import __version__, response, spectrum, steadystate, superharmonic
from .params import (ConfigError, angular_to_ghz, config_to_dict, derive,
                     drive_to_power, ghz_to_angular, make_drive,
                     power_to_drive)
from .steadystate import (BISECT_ITERS, E_SCAN, DetuningSingularityError,
                          _bisect_many, _p0_eff, _residual,
                          onset_of_bistability, residual_scale,
                          response_coeffs)

__all__ = ["GridSpec", "SweepResult", "run_sweep", "write_csv", "write_json"]

FLOAT_FMT = "%.12g"


@dataclass(frozen=True)
class GridSpec:
    """Inclusive linear axis start:stop:count (lab units, e.g. GHz)."""

    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError("grid count must be >= 1")
        if self.count == 1 and self.start != self.stop:
            raise ConfigError("single-point grid needs start == stop")

    @classmethod
    def parse(cls, text):
        parts = str(text).split(":")
        try:
            if len(parts) == 1:
                v = float(parts[0])
                return cls(v, v, 1)
            if len(parts) == 3:
                return cls(float(parts[0]), float(parts[1]), int(parts[2]))
        except ValueError as exc:
            raise ConfigError(f"bad grid spec {text!r}: {exc}") from exc
        raise ConfigError(f"bad grid spec {text!r}: want start:stop:count")

    def values(self):
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class SweepResult:
    task: str
    metadata: dict
    columns: list
    kinds: str                 # one char per column: f/i/s
    rows: list                 # list of tuples of python values
    diagnostics: int = 0


def _config_sha(config):
    blob = json.dumps(config_to_dict(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _grid_sha(parts):
    blob = json.dumps(parts, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def _fmt(value, kind):
    if value is None:
        return ""
    if kind == "f":
        return FLOAT_FMT % (value,)
    if kind == "i":
        return str(int(value))
    return str(value)


def write_csv(result, stream):
    """Serialize a SweepResult as delimited text with metadata comments."""
    for key, val in result.metadata.items():
        stream.write(f"# {key} {val}\n")
    stream.write(",".join(result.columns) + "\n")
    for row in result.rows:
        stream.write(",".join(_fmt(v, k) for v, k in zip(row, result.kinds)))
        stream.write("\n")


def write_json(result, stream):
    """Same content as the CSV, as one JSON document.

    Numeric cells keep the CSV's 12-digit string form so the two formats
    agree exactly.
    """
    doc = {
        "metadata": result.metadata,
        "columns": list(result.columns),
        "rows": [[_fmt(v, k) for v, k in zip(row, result.kinds)]
                 for row in result.rows],
    }
    json.dump(doc, stream, indent=1)
    stream.write("\n")


# ---------------------------------------------------------------------------
# Batched root finding for one grid row (fixed omega_f, many omega_p)

_MODEL_KEYS = ("delta_pc", "K_c", "gamma_c", "gamma_c4", "P0_eff", "g1sq",
               "T1", "T2", "delta1", "S_p")


def _row_model(derived, branch, delta_pc, delta1, g1sq, s_p):
    n = delta_pc.size
    full = lambda v: np.full(n, v, dtype=float)
    return steadystate._Model(
        delta_pc=np.asarray(delta_pc, dtype=float),
        K_c=full(derived.K_c), gamma_c=full(derived.gamma_c),
        gamma_c4=full(derived.gamma_c4),
        P0_eff=full(_p0_eff(derived.P0, branch)),
        g1sq=np.asarray(g1sq, dtype=float) if np.ndim(g1sq) else full(g1sq),
        T1=full(derived.T1), T2=full(derived.T2),
        delta1=np.asarray(delta1, dtype=float),
        S_p=np.asarray(s_p, dtype=float))


def _row_roots(m):
    """Roots of the residual for every cell of a row.

    m holds per-cell arrays of shape (n_cells,).  Returns flat arrays
    (cell, E, marginal) grouped by cell with ascending E, reproducing the
    scalar path in steadystate._scan_cell bracket for bracket.
    """
    fields = {k: getattr(m, k).reshape(-1, 1) for k in _MODEL_KEYS}
    mg = steadystate._Model(**fields)
    rg = _residual(E_SCAN[np.newaxis, :], mg)          # (n_cells, n_scan)

    cells, es, margs = [], [], []

    flip_cell, flip_idx = np.nonzero(rg[:, :-1] * rg[:, 1:] < 0.0)
    if flip_cell.size:
        sub = steadystate._Model(**{k: v[flip_cell, 0] for k, v in fields.items()})
        found = _bisect_many(E_SCAN[flip_idx], E_SCAN[flip_idx + 1],
                             rg[flip_cell, flip_idx],
                             lambda mid: _residual(mid, sub))
        cells.append(flip_cell)
        es.append(found)
        margs.append(np.zeros(found.size, dtype=bool))

    zero_cell, zero_idx = np.nonzero(rg == 0.0)
    if zero_cell.size:
        cells.append(zero_cell)
        es.append(E_SCAN[zero_idx])
        margs.append(np.zeros(zero_cell.size, dtype=bool))

    tol = 1e-11 * np.maximum(m.S_p, m.gamma_c ** 3)
    inner = np.abs(rg[:, 1:-1])
    graze = ((inner < tol[:, np.newaxis])
             & (rg[:, 1:-1] * rg[:, :-2] > 0.0)
             & (rg[:, 1:-1] * rg[:, 2:] > 0.0)
             & (inner <= np.abs(rg[:, :-2]))
             & (inner <= np.abs(rg[:, 2:])))
    gr_cell, gr_idx = np.nonzero(graze)
    if gr_cell.size:
        cells.append(np.repeat(gr_cell, 2))
        es.append(np.repeat(E_SCAN[gr_idx + 1], 2))
        margs.append(np.ones(2 * gr_cell.size, dtype=bool))

    if not cells:
        return (np.empty(0, dtype=int), np.empty(0), np.empty(0, dtype=bool))
    cell = np.concatenate(cells)
    e = np.concatenate(es)
    marg = np.concatenate(margs)
    order = np.lexsort((e, cell))
    return cell[order], e[order], marg[order]


def _row_states(derived, branch, cell, e, marg, delta_pc, delta1, g1, s_p, n_cells):
    """Fixed-point quantities and stability for a row's roots.

    delta_pc, delta1, s_p are per-cell arrays; g1 is per-root (array) or a
    scalar.  Returns (alpha, stable, marginal, resid, n_roots).
    """
    n_roots = np.bincount(cell, minlength=n_cells)
    d1 = delta1[cell]
    dpc = delta_pc[cell]
    sp = s_p[cell]
    t2 = derived.T2
    p0 = _p0_eff(derived.P0, branch)
    g = g1 if np.ndim(g1) else np.full(e.shape, g1)
    den = 1.0 + (d1 * t2) ** 2 + 4.0 * g * g * derived.T1 * t2 * e
    re = derived.gamma_c + derived.gamma_c4 * e - p0 * g * g * t2 / den
    im = -dpc + derived.K_c * e - p0 * g * g * t2 * t2 * d1 / den
    d = re + 1j * im
    alpha = -1j * np.exp(1j * derived.phi_c1) * np.sqrt(sp) / d
    p_z = p0 * (1.0 + (d1 * t2) ** 2) / den
    p_plus = -1j * g * t2 * np.conj(alpha) * (1.0 - 1j * d1 * t2) * p0 / den
    resid = e * (re * re + im * im) - sp

    if e.size:
        J = response.jacobian_stack(e, alpha, p_z, p_plus, dpc,
                                    derived.gamma_c, derived.K_c,
                                    derived.gamma_c4, derived.T1, derived.T2,
                                    d1, g)
        min_real = np.linalg.eigvals(J).real.min(axis=1)
    else:
        min_real = np.empty(0)
    stable = min_real > 0.0
    marginal = marg | (np.abs(min_real) < steadystate.MARGINAL_EIG_TOL * derived.gamma_c)
    return alpha, stable, marginal, resid, n_roots


def _solve_row(derived, branch, omega_p, power_dbm, shr_order=None):
    """Roots and observables for one row; the shr path swaps in g_n, Delta_n."""
    delta_pc = omega_p - derived.omega_c
    s_p = np.array([power_to_drive(power_dbm, float(w), derived.gamma_c1)
                    for w in omega_p])
    if shr_order is None:
        delta1 = omega_p - derived.omega_a
        m = _row_model(derived, branch, delta_pc, delta1, derived.g1 ** 2, s_p)
        cell, e, marg = _row_roots(m)
        g_root = derived.g1
    else:
        delta1 = np.array([superharmonic.detuning_n(derived, float(w), shr_order)
                           for w in omega_p])
        cells, es, margs = [], [], []
        for c, wp in enumerate(omega_p):
            mc = _row_model(derived, branch, delta_pc[c:c + 1],
                            delta1[c:c + 1], 0.0, s_p[c:c + 1])
            sc = steadystate._Model(**{k: float(getattr(mc, k)[0])
                                       for k in _MODEL_KEYS})
            g_eff = superharmonic.coupling_function(derived, float(wp), shr_order)
            roots, mg = steadystate._scan_cell(sc, g_callable=g_eff)
            cells.extend([c] * len(roots))
            es.extend(roots)
            margs.extend(mg)
        cell = np.asarray(cells, dtype=int)
        e = np.asarray(es, dtype=float)
        marg = np.asarray(margs, dtype=bool)
        g_root = np.array([superharmonic.effective_coupling(
            derived, float(omega_p[c]), shr_order, ev)
            for c, ev in zip(cell, e)])
    d1_roots = delta1
    alpha, stable, marginal, resid, n_roots = _row_states(
        derived, branch, cell, e, marg, delta_pc, d1_roots, g_root, s_p,
        omega_p.size)
    s21sq = 4.0 * derived.gamma_c1 * derived.gamma_c2 * np.abs(alpha) ** 2 / s_p[cell]
    res_ok = np.abs(resid) <= steadystate.RESIDUAL_REL * np.maximum(
        s_p[cell], derived.gamma_c ** 3)
    return {"cell": cell, "e": e, "alpha": alpha, "stable": stable,
            "marginal": marginal, "res_ok": res_ok, "n_roots": n_roots,
            "s21sq": s21sq, "s_p": s_p, "g_root": g_root}


def _pick_operating(cell, e, stable, n_cells):
    """Index of the operating root per cell: smallest stable, else smallest."""
    first = np.full(n_cells, -1, dtype=int)
    if not cell.size:
        return first
    order = np.lexsort((e, ~stable, cell))
    seen = np.zeros(n_cells, dtype=bool)
    for idx in order:
        c = cell[idx]
        if not seen[c]:
            seen[c] = True
            first[c] = idx
    return first


def _db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def _map_row_worker(config, omega_f, omega_p_ghz, power_dbm, branch,
                    shr_order=None, offset=None):
    """Compute every output row for one omega_f line of a map task."""
    derived = derive(config, omega_f)
    omega_p = ghz_to_angular(omega_p_ghz)
    n = omega_p.size
    wf_ghz = angular_to_ghz(omega_f)
    branches = ("ground", "excited") if branch == "combined" else (branch,)

    sol = {br: _solve_row(derived, br, omega_p, power_dbm, shr_order=shr_order)
           for br in branches}

    combined_db = None
    if branch == "combined":
        p_g = 0.5 * (1.0 - derived.P0)
        p_e = 0.5 * (1.0 + derived.P0)
        mix = np.full(n, np.nan)
        sg, se = sol["ground"], sol["excited"]
        ig = _pick_operating(sg["cell"], sg["e"], sg["stable"], n)
        ie = _pick_operating(se["cell"], se["e"], se["stable"], n)
        ok = (ig >= 0) & (ie >= 0)
        mix[ok] = p_g * sg["s21sq"][ig[ok]] + p_e * se["s21sq"][ie[ok]]
        combined_db = _db(mix)

    rows = []
    diagnostics = 0
    for br in branches:
        s = sol[br]
        s21_db = _db(s["s21sq"])
        starts = np.concatenate(([0], np.cumsum(s["n_roots"])))
        gains = None
        if offset is not None:
            gains = _root_gains(derived, br, omega_p, s, offset)
        for c in range(n):
            lo, hi = int(starts[c]), int(starts[c + 1])
            if lo == hi:
                diagnostics += 1
                row = [wf_ghz, float(omega_p_ghz[c]), power_dbm, br, -1, 0,
                       math.nan, 0, 0, 0, math.nan]
                if branch == "combined":
                    row.append(float(combined_db[c]))
                if shr_order is not None:
                    row.extend([shr_order, math.nan, math.nan])
                if offset is not None:
                    row.extend([math.nan, math.nan])
                rows.append(tuple(row))
                continue
            for ridx, k in enumerate(range(lo, hi)):
                row = [wf_ghz, float(omega_p_ghz[c]), power_dbm, br, ridx,
                       hi - lo, float(s["e"][k]), int(s["stable"][k]),
                       int(s["marginal"][k]), int(s["res_ok"][k]),
                       float(s21_db[k])]
                if branch == "combined":
                    row.append(float(combined_db[c]))
                if shr_order is not None:
                    g = s["g_root"][k] if np.ndim(s["g_root"]) else s["g_root"]
                    row.extend([shr_order, angular_to_ghz(float(g)),
                                superharmonic.modulation_index(
                                    derived, float(omega_p[c]), float(s["e"][k]))])
                if offset is not None:
                    row.extend([gains[0][k], gains[1][k]])
                rows.append(tuple(row))
    return rows, diagnostics


def _root_gains(derived, branch, omega_p, sol, offset):
    """Sideband gains in dB for every root of a row (nan where undefined)."""
    n_tot = sol["e"].size
    gs = np.full(n_tot, np.nan)
    gi = np.full(n_tot, np.nan)
    for k in range(n_tot):
        c = int(sol["cell"][k])
        wp = float(omega_p[c])
        drive = make_drive(derived, wp, float(sol["s_p"][c]))
        fp = steadystate.fixed_point_from_E(float(sol["e"][k]), derived, drive,
                                            branch=branch)
        try:
            a, b = response.imd_gains(fp, derived, drive, offset)
        except ValueError:
            continue
        gs[k] = float(_db(a))
        gi[k] = float(_db(b))
    return gs, gi


def _map_columns(branch, task):
    cols = ["omega_f_ghz", "omega_p_ghz", "power_dbm", "branch", "root_index",
            "n_roots", "e_photons", "stable", "marginal", "residual_ok",
            "s21_db"]
    kinds = "fffsiifiiif"
    if branch == "combined":
        cols.append("s21_combined_db")
        kinds += "f"
    if task == "shr-map":
        cols.extend(["shr_order", "g_eff_ghz", "modulation_index"])
        kinds += "iff"
    if task == "imd":
        cols.extend(["gain_signal_db", "gain_idler_db"])
        kinds += "ff"
    return cols, kinds


def _base_metadata(task, config, grid_parts, branch=None, power_dbm=None):
    md = {
        "task": task,
        "config_sha256": _config_sha(config),
        "grid_sha256": _grid_sha(grid_parts),
        "package_version": __version__,
        "scan_points": E_SCAN.size,
        "bisect_iters": BISECT_ITERS,
    }
    if branch is not None:
        md["branch"] = branch
    if power_dbm is not None:
        md["power_dbm"] = FLOAT_FMT % power_dbm
    return md


def _run_rows(worker, row_args, workers):
    if workers <= 1:
        return [worker(*a) for a in row_args]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(worker, *a) for a in row_args]
        return [f.result() for f in futures]


def run_sweep(task, config, *, omega_f_ghz=None, omega_p_ghz=None,
              power_dbm=None, branch="ground", workers=1, shr_order=2,
              signal_offset_khz=100.0, pump_ghz=None, n_max=3,
              model="both"):
    """Run one sweep task and return a SweepResult.

    Map tasks (transmission-map, imd, shr-map) need both frequency grids
    and a finite power; bistability and spectrum run over the flux grid
    alone.  branch is 'ground', 'excited' or 'combined' (thermally
    weighted transmission of the two branches).
    """
    if branch not in ("ground", "excited", "combined"):
        raise ConfigError(f"unknown branch {branch!r}")
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    if task in ("transmission-map", "imd", "shr-map"):
        if omega_f_ghz is None or omega_p_ghz is None:
            raise ConfigError(f"{task} needs omega_f and omega_p grids")
        if power_dbm is None or not math.isfinite(power_dbm):
            raise ConfigError(f"{task} needs a finite power_dbm")
        wf = omega_f_ghz.values()
        wp = omega_p_ghz.values()
        grid_parts = {"task": task,
                      "omega_f": [omega_f_ghz.start, omega_f_ghz.stop, omega_f_ghz.count],
                      "omega_p": [omega_p_ghz.start, omega_p_ghz.stop, omega_p_ghz.count],
                      "power_dbm": power_dbm, "branch": branch}
        md = _base_metadata(task, config, grid_parts, branch, power_dbm)
        shr = shr_order if task == "shr-map" else None
        offset = None
        if task == "shr-map":
            md["shr_order"] = shr_order
        if task == "imd":
            offset = ghz_to_angular(signal_offset_khz * 1e-6)
            md["signal_offset_khz"] = FLOAT_FMT % signal_offset_khz
        row_args = [(config, ghz_to_angular(f), wp, power_dbm, branch, shr,
                     offset) for f in wf]
        results = _run_rows(_map_row_worker, row_args, workers)
        rows = []
        diagnostics = 0
        for r, d in results:
            rows.extend(r)
            diagnostics += d
        if diagnostics:
            md["diagnostics"] = diagnostics
        cols, kinds = _map_columns(branch, task)
        return SweepResult(task, md, cols, kinds, rows, diagnostics)

    if task == "bistability":
        if omega_f_ghz is None:
            raise ConfigError("bistability needs an omega_f grid")
        wf = omega_f_ghz.values()
        grid_parts = {"task": task,
                      "omega_f": [omega_f_ghz.start, omega_f_ghz.stop, omega_f_ghz.count],
                      "pump_ghz": pump_ghz, "branch": branch}
        md = _base_metadata(task, config, grid_parts, branch)
        if pump_ghz is not None:
            md["pump_ghz"] = FLOAT_FMT % pump_ghz
        cols = ["omega_f_ghz", "omega_p_ghz", "branch", "omega0_radns",
                "omega2_radns", "gamma0_radns", "gamma2_radns", "possible",
                "e_onset", "omega0_onset_radns", "sp_onset",
                "power_onset_dbm"]
        kinds = "ffsffffiffff"
        branches = ("ground", "excited") if branch == "combined" else (branch,)
        rows = []
        diagnostics = 0
        for f in wf:
            derived = derive(config, ghz_to_angular(f))
            wp = ghz_to_angular(pump_ghz) if pump_ghz is not None else derived.omega_c
            drive = make_drive(derived, wp, 0.0)
            for br in branches:
                try:
                    coeffs = response_coeffs(derived, drive, branch=br)
                except DetuningSingularityError:
                    diagnostics += 1
                    rows.append((f, angular_to_ghz(wp), br, math.nan, math.nan,
                                 math.nan, math.nan, 0, None, None, None, None))
                    continue
                onset = onset_of_bistability(coeffs)
                if onset.possible:
                    pwr = drive_to_power(onset.S_p_onset, wp, derived.gamma_c1)
                    rows.append((f, angular_to_ghz(wp), br, coeffs.Omega0,
                                 coeffs.Omega2, coeffs.Gamma0, coeffs.Gamma2, 1,
                                 onset.E_onset, onset.Omega0_onset,
                                 onset.S_p_onset, pwr))
                else:
                    rows.append((f, angular_to_ghz(wp), br, coeffs.Omega0,
                                 coeffs.Omega2, coeffs.Gamma0, coeffs.Gamma2, 0,
                                 None, None, None, None))
        if diagnostics:
            md["diagnostics"] = diagnostics
        return SweepResult(task, md, cols, kinds, rows, diagnostics)

    if task == "spectrum":
        if omega_f_ghz is None:
            raise ConfigError("spectrum needs an omega_f grid")
        if model not in ("jc", "bs", "both"):
            raise ConfigError(f"unknown spectrum model {model!r}")
        wf = omega_f_ghz.values()
        grid_parts = {"task": task,
                      "omega_f": [omega_f_ghz.start, omega_f_ghz.stop, omega_f_ghz.count],
                      "n_max": n_max, "model": model}
        md = _base_metadata(task, config, grid_parts)
        md["n_max"] = n_max
        md["model"] = model
        cols = ["omega_f_ghz", "model", "state", "n", "value_ghz"]
        kinds = "fssif"
        rows = []
        diagnostics = 0
        for f in wf:
            derived = derive(config, ghz_to_angular(f))
            if model in ("jc", "both"):
                for lv in spectrum.jc_levels(derived, n_max=n_max):
                    rows.append((f, "jc", lv.label, lv.n,
                                 angular_to_ghz(lv.energy)))
            if model in ("bs", "both"):
                for lv in spectrum.bs_levels(derived, n_max=n_max):
                    rows.append((f, "bs", lv.label, lv.n,
                                 angular_to_ghz(lv.energy)))
            # no dispersive lines near the crossing; the rows just drop out
            try:
                res_g, res_e = spectrum.linear_resonances(derived)
            except ValueError:
                continue
            rows.append((f, "linear", "res_ground", None,
                         angular_to_ghz(res_g)))
            rows.append((f, "linear", "res_excited", None,
                         angular_to_ghz(res_e)))
        if diagnostics:
            md["diagnostics"] = diagnostics
        return SweepResult(task, md, cols, kinds, rows, diagnostics)

    raise ConfigError(f"unknown task {task!r}")
