"""Linear response around a mean-field fixed point.

The fluctuation drift matrix (jacobian), the susceptibility matrix that
inverts it at a probe frequency, the pump-tone transmission, and the
intermodulation gains seen by a weak sideband riding on the pump.

Basis ordering for all 5x5 matrices: (a, a^dag, sigma_z, sigma_+,
sigma_+^dag) fluctuations in the frame rotating at the pump.  The drift
matrix J is defined so that d(dv)/dt = -J dv; a fixed point is stable
when every eigenvalue of J has positive real part.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

__all__ = [
    "jacobian",
    "jacobian_stack",
    "invert_small",
    "susceptibility",
    "cavity_susceptibility_closed",
    "transmission",
    "imd_gains",
]

CONDITION_LIMIT = 1e14


def _resolve_g(fp, derived, g_eff):
    if g_eff is None:
        return derived.g1
    if callable(g_eff):
        return g_eff(fp.E)
    return g_eff


def jacobian_stack(E, alpha, P_z, P_plus, delta_pc, gamma_c, K_c, gamma_c4,
                   T1, T2, delta1, g1):
    """Drift matrices for a batch of fixed points; returns (M, 5, 5).

    All arguments broadcast against each other along the leading axis.
    """
    E, alpha, P_z, P_plus, delta_pc, gamma_c, K_c, gamma_c4, T1, T2, delta1, g1 = (
        np.broadcast_arrays(np.asarray(E, dtype=float), np.asarray(alpha, dtype=complex),
                            P_z, P_plus, delta_pc, gamma_c, K_c, gamma_c4,
                            T1, T2, delta1, g1))
    M = E.shape[0] if E.ndim else 1
    W = -1j * delta_pc + gamma_c + 2.0 * (1j * K_c + gamma_c4) * E
    V = (1j * K_c + gamma_c4) * alpha * alpha
    ig = 1j * g1
    J = np.zeros((M, 5, 5), dtype=complex)
    J[:, 0, 0] = W
    J[:, 0, 1] = V
    J[:, 0, 4] = ig
    J[:, 1, 0] = np.conj(V)
    J[:, 1, 1] = np.conj(W)
    J[:, 1, 3] = -ig
    J[:, 2, 0] = 2.0 * ig * P_plus
    J[:, 2, 1] = -2.0 * ig * np.conj(P_plus)
    J[:, 2, 2] = 1.0 / T1
    J[:, 2, 3] = 2.0 * ig * alpha
    J[:, 2, 4] = -2.0 * ig * np.conj(alpha)
    J[:, 3, 1] = ig * P_z
    J[:, 3, 2] = ig * np.conj(alpha)
    J[:, 3, 3] = 1.0 / T2 + 1j * delta1
    J[:, 4, 0] = -ig * P_z
    J[:, 4, 2] = -ig * alpha
    J[:, 4, 4] = 1.0 / T2 - 1j * delta1
    return J


def jacobian(fp, derived, drive, g_eff=None, delta_eff=None):
    """Drift matrix of the fluctuations around one fixed point."""
    g1 = _resolve_g(fp, derived, g_eff)
    d1 = drive.Delta_1 if delta_eff is None else delta_eff
    return jacobian_stack(
        np.atleast_1d(fp.E), np.atleast_1d(fp.alpha), fp.P_z, fp.P_plus,
        drive.Delta_pc, derived.gamma_c, derived.K_c, derived.gamma_c4,
        derived.T1, derived.T2, d1, g1)[0]


# ---------------------------------------------------------------------------
# Small dense inversion: partial-pivot LU plus one step of iterative
# refinement.  The drift matrices reach condition numbers ~1e6 near
# bifurcations and the refinement step keeps the inverse defect at the
# rounding floor there.

def _lu_factor(M):
    A = np.array(M, dtype=complex)
    n = A.shape[0]
    piv = np.arange(n)
    for k in range(n - 1):
        p = k + int(np.argmax(np.abs(A[k:, k])))
        if A[p, k] == 0.0:
            raise ValueError("matrix is singular")
        if p != k:
            A[[k, p]] = A[[p, k]]
            piv[[k, p]] = piv[[p, k]]
        A[k + 1:, k] /= A[k, k]
        A[k + 1:, k + 1:] -= np.outer(A[k + 1:, k], A[k, k + 1:])
    if A[n - 1, n - 1] == 0.0:
        raise ValueError("matrix is singular")
    return A, piv


def _lu_solve(A, piv, B):
    n = A.shape[0]
    X = np.array(B[piv], dtype=complex)
    for k in range(n - 1):
        X[k + 1:] -= np.multiply.outer(A[k + 1:, k], X[k])
    for k in range(n - 1, -1, -1):
        if k + 1 < n:
            X[k] -= A[k, k + 1:] @ X[k + 1:]
        X[k] /= A[k, k]
    return X


def invert_small(M):
    """Inverse of a small dense matrix (LU with one refinement pass)."""
    lu, piv = _lu_factor(M)
    eye = np.eye(M.shape[0], dtype=complex)
    X = _lu_solve(lu, piv, eye)
    X += _lu_solve(lu, piv, eye - M @ X)
    return X


def _norm1(M):
    return float(np.max(np.sum(np.abs(M), axis=0)))


def susceptibility(fp, derived, drive, omega, g_eff=None, delta_eff=None):
    """Fluctuation susceptibility chi(omega) = (J - i*omega)^-1.

    omega is the sideband offset from the pump in rad/ns.  Raises
    ValueError when the system matrix is numerically unusable
    (1-norm condition estimate above 1e14).
    """
    J = jacobian(fp, derived, drive, g_eff=g_eff, delta_eff=delta_eff)
    M = J - 1j * omega * np.eye(5, dtype=complex)
    chi = invert_small(M)
    if _norm1(M) * _norm1(chi) > CONDITION_LIMIT:
        raise ValueError("susceptibility is ill-conditioned at this frequency")
    return chi


def cavity_susceptibility_closed(fp, derived, drive, omega):
    """Closed-form 2x2 cavity block of chi(omega) for a decoupled qubit.

    Exact when g1 = 0: the cavity fluctuations close on themselves and
    (J_cc - i*omega) inverts analytically.  Used as a limit check for the
    full matrix route.
    """
    E = fp.E
    W = -1j * drive.Delta_pc + derived.gamma_c + 2.0 * (1j * derived.K_c + derived.gamma_c4) * E
    V = (1j * derived.K_c + derived.gamma_c4) * fp.alpha * fp.alpha
    a = W - 1j * omega
    d = np.conj(W) - 1j * omega
    det = a * d - V * np.conj(V)
    return np.array([[d, -V], [-np.conj(V), a]], dtype=complex) / det


def transmission(fp, derived, drive):
    """Pump-tone field transmission S21 = out port 2 / in port 1.

    |S21|^2 = 4*gamma_c1*gamma_c2*E/S_p.  The ratio is undefined without a
    pump, so zero drive is rejected; probe the linear regime with a small
    finite S_p instead.
    """
    if drive.S_p <= 0.0:
        raise ValueError("transmission undefined at zero drive (S_p = 0)")
    pre = -1j * math.sqrt(2.0 * derived.gamma_c2) * cmath.exp(-1j * derived.phi_c2)
    b_in = math.sqrt(drive.S_p / (2.0 * derived.gamma_c1))
    return pre * fp.alpha / b_in


def imd_gains(fp, derived, drive, omega, g_eff=None, delta_eff=None):
    """Sideband power gains (signal, idler) at offset omega from the pump.

    A weak tone enters port 1 at omega_p + omega; the transmitted power at
    the same frequency defines the signal gain and the mixing product at
    omega_p - omega the idler gain.  Both are normalized to the input
    power, so a bare cavity gives G_signal = |S21(omega_p+omega)|^2 and
    G_idler = 0.
    """
    chi = susceptibility(fp, derived, drive, omega,
                         g_eff=g_eff, delta_eff=delta_eff)
    scale = 2.0 * math.sqrt(derived.gamma_c1 * derived.gamma_c2)
    g_signal = abs(scale * chi[0, 0]) ** 2
    g_idler = abs(scale * chi[1, 0]) ** 2
    return g_signal, g_idler
