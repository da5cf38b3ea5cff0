"""Steady states on the higher-order qubit resonances omega_a ~ n*omega_p.

A strong pump modulates the qubit bias through the longitudinal part of
the coupling; the modulation index grows with the intracavity amplitude
and redistributes the transverse coupling over harmonics of the pump.
The n-th harmonic channel sees an effective coupling g_n(E) carrying a
Bessel factor and the detuning Delta_n = n*omega_p - omega_a; with those
substitutions the steady-state equations keep their usual form and the
primary-resonance machinery solves them.
"""

from __future__ import annotations

import math
import warnings

from . import specfun, steadystate
from .params import DriveConfig

__all__ = [
    "modulation_index",
    "effective_coupling",
    "coupling_function",
    "detuning_n",
    "backaction",
    "solve_shr",
]

BESSEL_ARG_SOFT_MAX = 30.0   # beyond this the asymptotic regime needs care


def _check_order(n):
    if not isinstance(n, int) or isinstance(n, bool):
        raise TypeError("harmonic order n must be an int")
    # specfun caps Bessel orders at 64
    if n < 1 or n > 65:
        raise ValueError("harmonic order n must be in 1..65")


def modulation_index(derived, omega_p, E):
    """Drive-induced phase modulation index of the qubit bias.

    x = 4 g1 omega_f sqrt(E) / (omega_p * omega_Delta); omega_Delta enters
    through sin(theta) = omega_Delta/omega_a kept inside g1.
    """
    if E < 0.0:
        raise ValueError("photon number must be non-negative")
    w_delta = derived.omega_a * derived.sin_theta
    return 4.0 * derived.g1 * derived.omega_f * math.sqrt(E) / (omega_p * w_delta)


def effective_coupling(derived, omega_p, n, E):
    """Transverse coupling into the n-th harmonic channel at photon number E."""
    _check_order(n)
    x = modulation_index(derived, omega_p, E)
    return derived.g1 * specfun.bessel_j(1 - n, x)


def coupling_function(derived, omega_p, n):
    """E -> g_n(E) closure for the self-consistent solver."""
    _check_order(n)

    def g_eff(E):
        return effective_coupling(derived, omega_p, n, E)

    return g_eff


def detuning_n(derived, omega_p, n):
    """Detuning of the n-th harmonic of the pump from the qubit line."""
    _check_order(n)
    return n * omega_p - derived.omega_a


def backaction(derived, omega_p, n, E, branch="ground"):
    """Complex qubit back-action on the cavity in the n-th channel.

    Upsilon_n = g_n^2 T2 (i - Delta_n T2) / (1 + Delta_n^2 T2^2
    + 4 g_n^2 T1 T2 E); it enters the cavity denominator as
    i * Upsilon_n * P0.  Saturation caps |Upsilon_n| at 1/(4 T1 E) once
    4 g_n^2 T1 T2 E dominates the denominator.
    """
    gn = effective_coupling(derived, omega_p, n, E)
    t2 = derived.T2
    dn = detuning_n(derived, omega_p, n)
    den = 1.0 + (dn * t2) ** 2 + 4.0 * gn * gn * derived.T1 * t2 * E
    return gn * gn * t2 * (1j - dn * t2) / den


def solve_shr(derived, omega_p, S_p, n, branch="ground", classify=True):
    """Steady states in the n-th harmonic channel at this pump.

    The cavity keeps its detuning omega_p - omega_c while the qubit runs
    at Delta_n; n = 1 recovers the primary resonance up to the Bessel
    dressing of g1, which tends to 1 at weak drive.  Stability comes from
    the primary-form drift matrix with (g_n, Delta_n) substituted, which
    ignores the harmonic structure of the fluctuations; treat marginal
    verdicts with care.
    """
    _check_order(n)
    drive = DriveConfig(omega_p=omega_p, S_p=S_p,
                        Delta_pc=omega_p - derived.omega_c,
                        Delta_1=omega_p - derived.omega_a)
    g_eff = coupling_function(derived, omega_p, n)
    d_n = detuning_n(derived, omega_p, n)
    fps = steadystate.solve_selfconsistent(
        derived, drive, branch=branch, g_eff=g_eff, delta_eff=d_n,
        classify=classify)
    worst = max(modulation_index(derived, omega_p, fp.E) for fp in fps)
    if worst > BESSEL_ARG_SOFT_MAX:
        warnings.warn("modulation index beyond the validated Bessel range: "
                      f"x = {worst:.3g}", stacklevel=2)
    return fps
