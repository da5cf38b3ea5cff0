"""Mean-field steady states of the driven cavity coupled to the flux qubit.

Two routes to the photon number E = |alpha|^2:

* a weak-drive cubic model built from the quadratic expansion of the
  qubit back-action (response_coeffs / solve_cubic), which also yields the
  closed-form bistability onset, and
* the full self-consistent solve (solve_selfconsistent) that keeps the
  saturation of the qubit response at all drive strengths.

The self-consistent residual is scanned on a fixed logarithmic grid and
each sign change is refined by bisection; the same array code serves both
the single-point API here and the batched map engine in sweep.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ResponseCoeffs",
    "FixedPoint",
    "Stability",
    "BistabilityOnset",
    "DetuningSingularityError",
    "ScanBoundsError",
    "response_coeffs",
    "solve_cubic",
    "fixed_point_from_E",
    "solve_selfconsistent",
    "classify_stability",
    "onset_of_bistability",
    "residual_scale",
]

# Photon-number scan grid for the self-consistent solve: E = 0 plus a
# 512-point logarithmic grid.  Kept as a module constant so every caller
# sees the identical floats.
E_SCAN = np.concatenate(([0.0], np.logspace(-12.0, 8.0, 512)))

BISECT_ITERS = 47          # halves the ~9.4% bracket to < 1e-13 relative
MARGINAL_EIG_TOL = 1e-9    # |min Re eigenvalue| below this * gamma_c -> marginal
RESIDUAL_REL = 1e-10       # accepted residual relative to max(S_p, gamma_c^3)


class DetuningSingularityError(ValueError):
    """Raised when the dispersive expansion is evaluated at |Delta_1 T2| ~ 0."""


class ScanBoundsError(RuntimeError):
    """Raised when no steady state is found below the photon-number scan cap."""


@dataclass(frozen=True)
class ResponseCoeffs:
    """Quadratic-in-E response model: D(E) = Gamma0+Gamma2*E + i(Omega0+Omega2*E).

    Omega* are detuning-like (rad/ns), Gamma* damping-like; Omega2/Gamma2
    carry rad/ns per photon.  branch records which thermal branch the
    polarization was taken on.
    """

    Omega0: float
    Omega2: float
    Gamma0: float
    Gamma2: float
    branch: str = "ground"


@dataclass
class FixedPoint:
    """One steady-state solution of the mean-field equations.

    E is the intracavity photon number, alpha the field amplitude in the
    pump frame, P_z the polarization and P_plus the qubit coherence.
    stable/marginal are filled by classify_stability; residual is the
    self-consistency defect E*|D(E)|^2 - S_p.
    """

    E: float
    alpha: complex
    P_z: float
    P_plus: complex
    branch: str
    stable: bool | None = None
    marginal: bool | None = None
    residual: float | None = None


@dataclass(frozen=True)
class Stability:
    stable: bool
    marginal: bool
    min_real: float
    eigenvalues: np.ndarray


@dataclass(frozen=True)
class BistabilityOnset:
    """Cusp of the cubic response in the (drive detuning, drive power) plane."""

    possible: bool
    E_onset: float | None
    Omega0_onset: float | None
    S_p_onset: float | None


def _p0_eff(P0, branch):
    if branch == "ground":
        return P0
    if branch == "excited":
        return -P0
    raise ValueError(f"branch must be 'ground' or 'excited', got {branch!r}")


# ---------------------------------------------------------------------------
# Residual model: all quantities the self-consistency condition needs.
# Fields are floats for the scalar API and equal-length arrays in the
# batched map path; every expression below is elementwise.

@dataclass
class _Model:
    delta_pc: object
    K_c: object
    gamma_c: object
    gamma_c4: object
    P0_eff: object
    g1sq: object
    T1: object
    T2: object
    delta1: object
    S_p: object


def _make_model(derived, drive, branch, g_eff=None, delta_eff=None):
    g1 = derived.g1 if g_eff is None else g_eff
    d1 = drive.Delta_1 if delta_eff is None else delta_eff
    return _Model(
        delta_pc=drive.Delta_pc, K_c=derived.K_c, gamma_c=derived.gamma_c,
        gamma_c4=derived.gamma_c4, P0_eff=_p0_eff(derived.P0, branch),
        g1sq=None if callable(g1) else g1 * g1,
        T1=derived.T1, T2=derived.T2, delta1=d1, S_p=drive.S_p), g1


def _d_terms(E, m, g1sq=None):
    """Real and imaginary part of D(E); E may be a float or an array."""
    gsq = m.g1sq if g1sq is None else g1sq
    t2 = m.T2
    den = 1.0 + (m.delta1 * t2) ** 2 + 4.0 * gsq * m.T1 * t2 * E
    ba = m.P0_eff * gsq * t2 / den
    re = m.gamma_c + m.gamma_c4 * E - ba
    im = -m.delta_pc + m.K_c * E - ba * m.delta1 * t2
    return re, im


def _residual(E, m, g1sq=None):
    re, im = _d_terms(E, m, g1sq=g1sq)
    return E * (re * re + im * im) - m.S_p


def residual_scale(S_p, gamma_c):
    """Natural magnitude against which the self-consistency defect is judged."""
    return max(S_p, gamma_c ** 3)


def _bisect_many(a, b, ra, reval):
    """Vector bisection: a, b, ra are arrays; reval maps midpoints to residuals."""
    for _ in range(BISECT_ITERS):
        mid = 0.5 * (a + b)
        rm = reval(mid)
        move_a = (rm < 0.0) == (ra < 0.0)
        a = np.where(move_a, mid, a)
        ra = np.where(move_a, rm, ra)
        b = np.where(move_a, b, mid)
    return 0.5 * (a + b)


def _scan_cell(m, g_callable=None):
    """Roots of the residual for one cell.  Returns (roots, marginal flags)."""
    if g_callable is None:
        rg = _residual(E_SCAN, m)

        def reval(E):
            return _residual(E, m)
    else:
        gsq_grid = np.array([g_callable(E) ** 2 for E in E_SCAN])
        rg = _residual(E_SCAN, m, g1sq=gsq_grid)

        def reval(E):
            gs = np.array([g_callable(v) ** 2 for v in np.atleast_1d(E)])
            return _residual(E, m, g1sq=gs if np.ndim(E) else gs[0])

    roots, flags = [], []
    exact = np.flatnonzero(rg == 0.0)
    flips = np.flatnonzero(rg[:-1] * rg[1:] < 0.0)
    if flips.size:
        a = E_SCAN[flips]
        b = E_SCAN[flips + 1]
        found = _bisect_many(a, b, rg[flips], reval)
        roots.extend(float(v) for v in found)
        flags.extend([False] * found.size)
    for i in exact:
        roots.append(float(E_SCAN[i]))
        flags.append(False)
    # grid-resolved tangencies: the residual grazes zero without changing
    # sign; report the double root as two coincident marginal entries
    tol = 1e-11 * residual_scale(float(np.max(m.S_p)) if np.ndim(m.S_p) else m.S_p,
                                 float(np.max(m.gamma_c)) if np.ndim(m.gamma_c) else m.gamma_c)
    interior = np.arange(1, E_SCAN.size - 1)
    graze = interior[(np.abs(rg[interior]) < tol)
                     & (rg[interior] * rg[interior - 1] > 0.0)
                     & (rg[interior] * rg[interior + 1] > 0.0)
                     & (np.abs(rg[interior]) <= np.abs(rg[interior - 1]))
                     & (np.abs(rg[interior]) <= np.abs(rg[interior + 1]))]
    for i in graze:
        roots.extend([float(E_SCAN[i])] * 2)
        flags.extend([True, True])
    order = np.argsort(roots, kind="stable") if roots else []
    return [roots[i] for i in order], [flags[i] for i in order]


# ---------------------------------------------------------------------------
# Weak-drive quadratic response model

def response_coeffs(derived, drive, branch="ground"):
    """Expansion coefficients of D(E) to first order in photon number.

    Valid in the dispersive regime; raises DetuningSingularityError when
    |Delta_1 * T2| < 1e-6 (the expansion parameters 1/(Delta_1 T_n) blow up).
    """
    d1, T1, T2 = drive.Delta_1, derived.T1, derived.T2
    if abs(d1 * T2) < 1e-6:
        raise DetuningSingularityError(
            "pump too close to the qubit line: |Delta_1*T2| < 1e-6")
    P0 = _p0_eff(derived.P0, branch)
    g1 = derived.g1
    z1 = 1.0 / (d1 * T1)
    z2 = 1.0 / (d1 * T2)
    gsq = g1 * g1
    common = (4.0 * gsq * gsq / d1 ** 3) * P0 / (z1 * (1.0 + z2 * z2) ** 2) * z2
    return ResponseCoeffs(
        Omega0=-drive.Delta_pc - (gsq / d1) * P0 / (1.0 + z2 * z2),
        Omega2=derived.K_c + common,
        Gamma0=derived.gamma_c - (gsq / d1) * z2 * P0 / (1.0 + z2 * z2),
        Gamma2=derived.gamma_c4 + common * z2,
        branch=branch)


def _cubic_f(E, c, S_p):
    om = c.Omega0 + c.Omega2 * E
    ga = c.Gamma0 + c.Gamma2 * E
    return (om * om + ga * ga) * E - S_p


def _cubic_fprime(E, c):
    om = c.Omega0 + c.Omega2 * E
    ga = c.Gamma0 + c.Gamma2 * E
    return om * om + ga * ga + 2.0 * E * (om * c.Omega2 + ga * c.Gamma2)


def solve_cubic(coeffs, S_p):
    """Real non-negative roots of [(Omega0+Omega2 E)^2+(Gamma0+Gamma2 E)^2] E = S_p.

    Closed form (trigonometric for three real roots, Cardano otherwise)
    with a single Newton polish per root.  Roots are ascending; a
    bifurcation double root appears twice.
    """
    if S_p < 0.0:
        raise ValueError("S_p must be non-negative")
    if S_p == 0.0:
        return [0.0]
    c = coeffs
    a3 = c.Omega2 ** 2 + c.Gamma2 ** 2
    a1 = c.Omega0 ** 2 + c.Gamma0 ** 2
    if a3 == 0.0:
        if a1 == 0.0:
            raise ValueError("degenerate response: all coefficients vanish")
        roots = [S_p / a1]
    else:
        a2 = 2.0 * (c.Omega0 * c.Omega2 + c.Gamma0 * c.Gamma2)
        b2, b1, b0 = a2 / a3, a1 / a3, -S_p / a3
        shift = b2 / 3.0
        p = b1 - b2 * shift
        q = b0 + shift * (2.0 * shift * shift - b1)
        disc = -4.0 * p ** 3 - 27.0 * q ** 2
        if disc > 0.0:
            amp = 2.0 * math.sqrt(-p / 3.0)
            arg = 3.0 * q / (p * amp)
            arg = min(1.0, max(-1.0, arg))
            phi = math.acos(arg) / 3.0
            ts = [amp * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in (0, 1, 2)]
        else:
            rad = math.sqrt(max(q * q / 4.0 + p ** 3 / 27.0, 0.0))
            u = -math.copysign(abs(q) / 2.0 + rad, q)
            A = math.copysign(abs(u) ** (1.0 / 3.0), u)
            ts = [A - p / (3.0 * A) if A != 0.0 else 0.0]
        roots = [t - shift for t in ts]
    polished = []
    for e in roots:
        fp = _cubic_fprime(e, c)
        if fp != 0.0:
            # near a multiple root fprime vanishes and the step diverges;
            # keep the closed-form value unless the polish truly improves it
            cand = e - _cubic_f(e, c, S_p) / fp
            if math.isfinite(cand) and abs(_cubic_f(cand, c, S_p)) <= abs(_cubic_f(e, c, S_p)):
                e = cand
        if e < 0.0:
            continue
        polished.append(e)
    polished.sort()
    return polished


def onset_of_bistability(coeffs):
    """Cusp of the cubic response: where two extra roots first appear.

    The fold exists only for Gamma2 < |Omega2|/sqrt(3); at the cusp the
    drive detuning offset Omega0 and strength S_p take the returned
    values and the photon number of the double root is E_onset.
    """
    c = coeffs
    s3 = math.sqrt(3.0)
    if c.Omega2 == 0.0 or not (c.Gamma2 < abs(c.Omega2) / s3):
        return BistabilityOnset(False, None, None, None)
    absO2 = abs(c.Omega2)
    E_o = 2.0 * c.Gamma0 / (s3 * (absO2 - s3 * c.Gamma2))
    Om_o = (-c.Gamma0 * math.copysign(1.0, c.Omega2)
            * (4.0 * c.Gamma2 * absO2 + s3 * (c.Omega2 ** 2 + c.Gamma2 ** 2))
            / (c.Omega2 ** 2 - 3.0 * c.Gamma2 ** 2))
    S_o = (8.0 / (3.0 * s3) * c.Gamma0 ** 3 * (c.Omega2 ** 2 + c.Gamma2 ** 2)
           / (absO2 - s3 * c.Gamma2) ** 3)
    return BistabilityOnset(True, E_o, Om_o, S_o)


# ---------------------------------------------------------------------------
# Fixed-point records

def fixed_point_from_E(E, derived, drive, branch="ground", coeffs=None,
                       g_eff=None, delta_eff=None, phi_c1=None):
    """Assemble the full steady-state record for a photon number E.

    With coeffs given, alpha is taken from the quadratic response model
    (consistent with solve_cubic roots: |alpha|^2 = E exactly there);
    otherwise the full saturating back-action defines D(E).  g_eff and
    delta_eff substitute the drive-dressed coupling and detuning.
    """
    m, g1 = _make_model(derived, drive, branch, g_eff=g_eff, delta_eff=delta_eff)
    g1v = g1(E) if callable(g1) else g1
    if coeffs is not None:
        d = complex(coeffs.Gamma0 + coeffs.Gamma2 * E,
                    coeffs.Omega0 + coeffs.Omega2 * E)
    else:
        re, im = _d_terms(E, m, g1sq=None if not callable(g1) else g1v * g1v)
        d = complex(re, im)
    phase = cmath.exp(1j * (phi_c1 if phi_c1 is not None else derived.phi_c1))
    alpha = -1j * phase * math.sqrt(drive.S_p) / d
    t2 = m.T2
    den = 1.0 + (m.delta1 * t2) ** 2 + 4.0 * g1v * g1v * m.T1 * t2 * E
    P_z = m.P0_eff * (1.0 + (m.delta1 * t2) ** 2) / den
    P_plus = -1j * g1v * t2 * alpha.conjugate() * (1.0 - 1j * m.delta1 * t2) * m.P0_eff / den
    resid = float(_residual(E, m, g1sq=None if not callable(g1) else g1v * g1v))
    return FixedPoint(E=E, alpha=alpha, P_z=P_z, P_plus=P_plus,
                      branch=branch, residual=resid)


def solve_selfconsistent(derived, drive, branch="ground", g_eff=None,
                         delta_eff=None, classify=True):
    """All steady-state photon numbers at this working point and drive.

    Scans the residual E*|D(E)|^2 - S_p on the fixed logarithmic grid,
    refines each sign change by bisection and returns ascending
    FixedPoint records (stability classified unless classify=False).
    Raises ScanBoundsError if no root exists below the grid cap, which
    signals an unphysically strong drive.
    """
    if drive.S_p == 0.0:
        fp = fixed_point_from_E(0.0, derived, drive, branch,
                                g_eff=g_eff, delta_eff=delta_eff)
        if classify:
            _classify_into(fp, derived, drive, g_eff, delta_eff)
        return [fp]
    m, g1 = _make_model(derived, drive, branch, g_eff=g_eff, delta_eff=delta_eff)
    roots, marginal = _scan_cell(m, g_callable=g1 if callable(g1) else None)
    if not roots:
        raise ScanBoundsError(
            f"no steady state with E <= {E_SCAN[-1]:.3g} photons; "
            "drive strength outside the model's range")
    out = []
    for e, marg in zip(roots, marginal):
        fp = fixed_point_from_E(e, derived, drive, branch,
                                g_eff=g_eff, delta_eff=delta_eff)
        if classify:
            _classify_into(fp, derived, drive, g_eff, delta_eff)
        if marg:
            fp.marginal = True
        out.append(fp)
    return out


def _classify_into(fp, derived, drive, g_eff=None, delta_eff=None):
    st = classify_stability(fp, derived, drive, g_eff=g_eff, delta_eff=delta_eff)
    fp.stable = st.stable
    fp.marginal = st.marginal


def classify_stability(fp, derived, drive, g_eff=None, delta_eff=None):
    """Linear stability of a fixed point from the fluctuation spectrum.

    Stable iff every eigenvalue of the drift matrix has positive real
    part; marginal when the smallest real part sits within
    MARGINAL_EIG_TOL * gamma_c of zero.
    """
    from . import response
    J = response.jacobian(fp, derived, drive, g_eff=g_eff, delta_eff=delta_eff)
    eig = np.linalg.eigvals(J)
    min_real = float(eig.real.min())
    marginal = abs(min_real) < MARGINAL_EIG_TOL * derived.gamma_c
    return Stability(stable=bool(min_real > 0.0), marginal=bool(marginal),
                     min_real=min_real, eigenvalues=eig)
