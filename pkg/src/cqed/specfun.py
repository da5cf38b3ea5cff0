"""Regular cylindrical Bessel functions J_l for the drive-dressed coupling.

Self-contained double precision implementation: an ascending power series
where it is free of cancellation and Miller's downward recurrence with
normalization by the Neumann sum elsewhere.  Covers integer orders
|l| <= 64 with absolute error <= 1e-12 for |x| <= 50.
"""

from __future__ import annotations

import math

__all__ = ["bessel_j", "MAX_ORDER"]

MAX_ORDER = 64


def _series(l, x):
    # sum_k (-1)^k (x/2)^(l+2k) / (k! (k+l)!), l >= 0.  Used only where the
    # terms decrease from k = 0 on (x <= 2 sqrt(l+1)), so there is no
    # cancellation and the result is correct to rounding.
    half = 0.5 * x
    # leading term (x/2)^l / l!
    term = 1.0
    for k in range(1, l + 1):
        term *= half / k
    total = term
    k = 0
    x2 = -half * half
    while True:
        k += 1
        term *= x2 / (k * (k + l))
        new = total + term
        if new == total:
            return total
        total = new
        if k > 400:
            return total


def _miller(l, x):
    # Downward recurrence J_{k-1} = (2k/x) J_k - J_{k+1} from a start order
    # well above both l and x, normalized with J_0 + 2 sum J_{2m} = 1.
    m_start = int(x + 1.5 * max(l, x) ** 0.5) + l + 24
    if m_start % 2:
        m_start += 1
    jp = 0.0
    jc = 1e-300
    target = 0.0
    norm = 0.0
    for k in range(m_start, 0, -1):
        jm = (2.0 * k / x) * jc - jp
        jp = jc
        jc = jm
        if k - 1 == l:
            target = jc
        if (k - 1) % 2 == 0:
            norm += 2.0 * jc
        if abs(jc) > 1e250:
            jc *= 1e-250
            jp *= 1e-250
            norm *= 1e-250
            target *= 1e-250
    norm -= jc   # the k=0 term enters once, not twice
    return target / norm


def bessel_j(l, x):
    """J_l(x) for integer l with |l| <= 64.

    Uses the parity identities J_{-l}(x) = (-1)^l J_l(x) and
    J_l(-x) = (-1)^l J_l(x) to reduce to l >= 0, x >= 0.
    """
    if not isinstance(l, (int,)):
        if isinstance(l, float) and l.is_integer():
            l = int(l)
        else:
            raise ValueError("order l must be an integer")
    if abs(l) > MAX_ORDER:
        raise ValueError(f"order |l| <= {MAX_ORDER} supported, got {l}")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("argument x must be finite")

    sign = 1.0
    if l < 0:
        l = -l
        if l % 2:
            sign = -sign
    if x < 0.0:
        x = -x
        if l % 2:
            sign = -sign

    if x == 0.0:
        return sign * (1.0 if l == 0 else 0.0)
    if x <= 2.0 * math.sqrt(l + 1.0):
        return sign * _series(l, x)
    return sign * _miller(l, x)
