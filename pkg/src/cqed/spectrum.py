"""Dressed-state energies of the undriven cavity-qubit system.

Energies are reported with hbar = 1, i.e. in rad/ns, measured from the
mean of the two lowest bare levels.  Two models: the rotating-wave ladder
(jc_levels) and the same ladder with the leading counter-rotating and
longitudinal corrections (bs_levels).  linear_resonances gives the
closed-form dispersive cavity lines the two qubit states produce.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

__all__ = ["Level", "jc_levels", "bs_levels", "linear_resonances"]

BS_DOMAIN_RATIO = 0.2        # warn when g1/(omega_c+omega_a) exceeds this
DISPERSIVE_RATIO = 0.3       # linear_resonances refuses beyond g1/|Delta| = 0.3


@dataclass(frozen=True)
class Level:
    """One dressed level: label like 'g', '0-', '2+'; energy in rad/ns."""

    label: str
    n: int | None
    sign: int
    energy: float


def _pair_labels(n):
    return f"{n}-", f"{n}+"


def jc_levels(derived, n_max=3):
    """Rotating-wave dressed ladder up to the n_max photon doublet.

    Ground state at Delta/2 with Delta = omega_c - omega_a; the n-th
    doublet sits at omega_c*(n+1) +- omega_n/2 with
    omega_n = sqrt(Delta^2 + 4 g1^2 (n+1)).
    """
    wc, wa, g1 = derived.omega_c, derived.omega_a, derived.g1
    delta = wc - wa
    out = [Level("g", None, 0, 0.5 * delta)]
    for n in range(n_max + 1):
        wn = math.sqrt(delta * delta + 4.0 * g1 * g1 * (n + 1))
        lo, hi = _pair_labels(n)
        out.append(Level(lo, n, -1, wc * (n + 1) - 0.5 * wn))
        out.append(Level(hi, n, +1, wc * (n + 1) + 0.5 * wn))
    return out


def bs_levels(derived, n_max=3):
    """Dressed ladder including the leading counter-rotating corrections.

    The shift omega_BS = g1^2/(omega_c+omega_a) tilts the photon ladder by
    -+omega_BS per photon on the two branches, and the longitudinal part of
    the coupling adds the global offset
    omega_BS0 = -g1^2 (1/(omega_c+omega_a) + cot(theta)^2/omega_c).
    Accurate to O(g1^4/Delta^3); warns outside its domain.
    """
    wc, wa, g1 = derived.omega_c, derived.omega_a, derived.g1
    if g1 / (wc + wa) > BS_DOMAIN_RATIO:
        warnings.warn("counter-rotating correction pushed beyond its domain: "
                      f"g1/(omega_c+omega_a) = {g1 / (wc + wa):.3g}",
                      stacklevel=2)
    delta = wc - wa
    w_bs = g1 * g1 / (wc + wa)
    cot = derived.cos_theta / derived.sin_theta
    w_bs0 = -g1 * g1 * (1.0 / (wc + wa) + cot * cot / wc)
    out = [Level("g", None, 0, 0.5 * delta + w_bs0)]
    for n in range(n_max + 1):
        half = math.sqrt(0.25 * delta * delta + (n + 1) * g1 * g1)
        lo, hi = _pair_labels(n)
        out.append(Level(lo, n, -1, (n + 1) * (wc - w_bs) - half + w_bs0))
        out.append(Level(hi, n, +1, (n + 1) * (wc + w_bs) + half + w_bs0))
    return out


def linear_resonances(derived):
    """Cavity line positions for the qubit frozen in either state.

    Returns (ground, excited) in rad/ns:
    omega_c + g1^2/Delta + sign(Delta)*omega_BS and its mirror.  Valid in
    the dispersive regime; raises ValueError when g1/|Delta| > 0.3.
    """
    wc, wa, g1 = derived.omega_c, derived.omega_a, derived.g1
    delta = wc - wa
    if delta == 0.0 or g1 / abs(delta) > DISPERSIVE_RATIO:
        raise ValueError("dispersive expansion invalid: g1/|Delta| too large")
    w_bs = g1 * g1 / (wc + wa)
    s = math.copysign(1.0, delta)
    chi = g1 * g1 / delta
    return wc + chi + s * w_bs, wc - chi - s * w_bs
