"""Device parameters, unit handling and derived quantities.

Internal unit system: angular frequencies and rates in rad/ns, times in ns,
temperatures in kelvin.  Photon number is dimensionless, so the drive
strength S_p carries photons*rad^2/ns^2.  Config files use lab units
(GHz, kHz, mK, us, dBm) and are converted on load; every key is explicit
about its unit in its name.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = [
    "ConfigError",
    "PhysicalConfig",
    "DerivedParams",
    "DriveConfig",
    "bose_occupation",
    "thermal_polarization",
    "derive",
    "make_drive",
    "power_to_drive",
    "drive_to_power",
    "flux_to_omega_f",
    "load_config",
    "config_from_dict",
    "config_to_dict",
    "ghz_to_angular",
    "angular_to_ghz",
]

# CODATA / SI defined values
HBAR = 1.054571817e-34          # J s
PLANCK = 6.62607015e-34         # J s
KBOLTZ = 1.380649e-23           # J / K
ECHARGE = 1.602176634e-19       # C
PHI0 = PLANCK / (2.0 * ECHARGE)  # magnetic flux quantum, Wb

TWO_PI = 2.0 * math.pi


def ghz_to_angular(f_ghz):
    """Ordinary frequency in GHz -> angular frequency in rad/ns."""
    return TWO_PI * f_ghz


def angular_to_ghz(omega):
    """Angular frequency in rad/ns -> ordinary frequency in GHz."""
    return omega / TWO_PI


class ConfigError(ValueError):
    """Raised for malformed or unphysical configuration input."""


@dataclass(frozen=True)
class T1Law:
    """Empirical flux dependence T1 = base * (1 + slope * |omega_f|).

    base is in ns, slope in ns/(rad/ns); omega_f enters in rad/ns.
    """

    base: float
    slope: float

    def evaluate(self, omega_f):
        return self.base * (1.0 + self.slope * abs(omega_f))


@dataclass(frozen=True)
class T2Law:
    """Empirical dephasing law 1/T2 = rate * (1 + slope * |omega_f| / omega_a).

    rate is in 1/ns; the flux term is dimensionless.
    """

    rate: float
    slope: float

    def evaluate(self, omega_f, omega_a):
        return 1.0 / (self.rate * (1.0 + self.slope * abs(omega_f) / omega_a))


@dataclass(frozen=True)
class PhysicalConfig:
    """Fixed device parameters in internal units (rad/ns, ns, K).

    Cavity: bare frequency omega_c, Kerr coefficient K_c (rad/ns per photon),
    loss rates gamma_c1..c3 for the two ports and internal loss, nonlinear
    loss gamma_c4 (rad/ns per photon), port phases phi_c1..c4.

    Qubit: gap omega_Delta, bare coupling g, bath temperature, and either
    the pair of bath rates (gamma_q1, gamma_q2) or empirical T1/T2 flux laws.
    When both are present the laws win.
    """

    omega_c: float
    omega_Delta: float
    g: float
    gamma_c1: float
    gamma_c2: float
    temperature: float
    K_c: float = 0.0
    gamma_c3: float = 0.0
    gamma_c4: float = 0.0
    phi_c1: float = 0.0
    phi_c2: float = 0.0
    phi_c3: float = 0.0
    phi_c4: float = 0.0
    gamma_q1: float | None = None
    gamma_q2: float | None = None
    t1_law: T1Law | None = None
    t2_law: T2Law | None = None

    def __post_init__(self):
        if not (self.omega_c > 0.0):
            raise ConfigError("omega_c must be positive")
        if not (self.omega_Delta > 0.0):
            raise ConfigError("omega_Delta must be positive")
        if self.g < 0.0:
            raise ConfigError("g must be non-negative")
        if not (self.gamma_c1 > 0.0) or not (self.gamma_c2 > 0.0):
            raise ConfigError("port rates gamma_c1, gamma_c2 must be positive")
        if self.gamma_c3 < 0.0 or self.gamma_c4 < 0.0 or self.K_c < 0.0:
            raise ConfigError("gamma_c3, gamma_c4 and K_c must be non-negative")
        if not (self.temperature > 0.0):
            raise ConfigError("temperature must be positive")
        has_rates = self.gamma_q1 is not None and self.gamma_q2 is not None
        has_laws = self.t1_law is not None and self.t2_law is not None
        if not has_rates and not has_laws:
            raise ConfigError(
                "qubit lifetimes undefined: provide gamma_q1/gamma_q2 or t1_law/t2_law")
        if self.gamma_q1 is not None and not (self.gamma_q1 > 0.0):
            raise ConfigError("gamma_q1 must be positive")
        if self.gamma_q2 is not None and self.gamma_q2 < 0.0:
            raise ConfigError("gamma_q2 must be non-negative")


@dataclass(frozen=True)
class DerivedParams:
    """Flux-dependent working point quantities produced by derive().

    Also carries the cavity constants the solvers need (copied from the
    config) so downstream code works from this one record.
    """

    omega_c: float      # copied from the config for convenience
    omega_f: float      # flux-tunable qubit energy bias, rad/ns
    omega_a: float      # qubit splitting sqrt(omega_f^2 + omega_Delta^2)
    theta: float        # mixing angle, tan(theta) = omega_Delta / omega_f
    sin_theta: float
    cos_theta: float
    beta_f: float       # coupling suppression sqrt(1 + (omega_f/omega_Delta)^2)
    g1: float           # transverse coupling g * sin(theta) = g / beta_f
    n0: float           # thermal photon occupation at omega_a
    P0: float           # equilibrium polarization -1/(2 n0 + 1)
    T1: float           # energy relaxation time, ns
    T2: float           # coherence time, ns
    gamma_c: float      # total linear cavity loss gamma_c1+c2+c3
    K_c: float
    gamma_c4: float
    gamma_c1: float
    gamma_c2: float
    phi_c1: float
    phi_c2: float


@dataclass(frozen=True)
class DriveConfig:
    """Pump tone: frequency, strength and the derived detunings."""

    omega_p: float      # pump frequency, rad/ns
    S_p: float          # drive strength 2*gamma_c1*|b_in|^2
    Delta_pc: float     # omega_p - omega_c
    Delta_1: float      # omega_p - omega_a

    def __post_init__(self):
        if self.S_p < 0.0:
            raise ConfigError("S_p must be non-negative")


def bose_occupation(omega, temperature):
    """Thermal occupation 1/(exp(hbar*omega/kB*T) - 1) for omega in rad/ns."""
    if omega <= 0.0:
        raise ConfigError("bose_occupation needs omega > 0")
    x = HBAR * omega * 1e9 / (KBOLTZ * temperature)
    if x > 700.0:
        # expm1 would overflow; the occupation is exp(-x) to this precision
        return math.exp(-x)
    return 1.0 / math.expm1(x)


def thermal_polarization(n0):
    """Equilibrium qubit polarization P0 = -1/(2 n0 + 1).

    P0 -> -1 at zero temperature and -> 0- for n0 -> infinity; always in
    [-1, 0).
    """
    if n0 < 0.0:
        raise ConfigError("n0 must be non-negative")
    return -1.0 / (2.0 * n0 + 1.0)


def derive(config, omega_f):
    """Evaluate the flux-dependent working point at energy bias omega_f.

    Returns a DerivedParams record with the qubit splitting, mixing angle,
    transverse coupling, thermal polarization and the T1/T2 pair.  The
    occupation n0 is evaluated at the qubit splitting omega_a.
    """
    if not math.isfinite(omega_f):
        raise ConfigError("omega_f must be finite")
    w_d = config.omega_Delta
    omega_a = math.hypot(omega_f, w_d)
    theta = math.atan2(w_d, omega_f)
    sin_t = w_d / omega_a
    cos_t = omega_f / omega_a
    beta_f = math.sqrt(1.0 + (omega_f / w_d) ** 2)
    g1 = config.g * sin_t

    n0 = bose_occupation(omega_a, config.temperature)
    P0 = thermal_polarization(n0)

    if config.t1_law is not None:
        T1 = config.t1_law.evaluate(omega_f)
    else:
        T1 = -P0 / config.gamma_q1
    if config.t2_law is not None:
        T2 = config.t2_law.evaluate(omega_f, omega_a)
    else:
        T2 = -P0 / (0.5 * config.gamma_q1 + config.gamma_q2)

    gamma_c = config.gamma_c1 + config.gamma_c2 + config.gamma_c3
    return DerivedParams(
        omega_c=config.omega_c, omega_f=omega_f, omega_a=omega_a,
        theta=theta, sin_theta=sin_t, cos_theta=cos_t, beta_f=beta_f,
        g1=g1, n0=n0, P0=P0, T1=T1, T2=T2, gamma_c=gamma_c,
        K_c=config.K_c, gamma_c4=config.gamma_c4,
        gamma_c1=config.gamma_c1, gamma_c2=config.gamma_c2,
        phi_c1=config.phi_c1, phi_c2=config.phi_c2)


def make_drive(derived, omega_p, S_p):
    """Build a DriveConfig with detunings consistent with the working point."""
    return DriveConfig(
        omega_p=omega_p, S_p=S_p,
        Delta_pc=omega_p - derived.omega_c,
        Delta_1=omega_p - derived.omega_a)


def power_to_drive(power_dbm, omega_p, gamma_c1):
    """Input power in dBm -> drive strength S_p = 2*gamma_c1*|b_in|^2.

    The incoming photon flux is |b_in|^2 = P / (hbar * omega_p), converted
    to photons/ns; omega_p is in rad/ns.  -inf dBm maps to S_p = 0.
    """
    if power_dbm == -math.inf:
        return 0.0
    watts = 1e-3 * 10.0 ** (power_dbm / 10.0)
    flux = watts / (HBAR * omega_p * 1e18)   # photons per ns
    return 2.0 * gamma_c1 * flux


def drive_to_power(S_p, omega_p, gamma_c1):
    """Inverse of power_to_drive; returns dBm (-inf for S_p = 0)."""
    if S_p < 0.0:
        raise ConfigError("S_p must be non-negative")
    if S_p == 0.0:
        return -math.inf
    watts = S_p / (2.0 * gamma_c1) * HBAR * omega_p * 1e18
    return 10.0 * math.log10(watts * 1e3)


def flux_to_omega_f(phi_ratio, i_cc):
    """Energy bias from external flux: omega_f = 2 I_cc Phi0 (phi - 1/2) / hbar.

    phi_ratio is the external flux in units of Phi0, i_cc the circulating
    current in amperes.  Result is in rad/ns; antisymmetric around the
    half-flux symmetry point.
    """
    if i_cc <= 0.0:
        raise ConfigError("circulating current must be positive")
    return 2.0 * i_cc * PHI0 / HBAR * (phi_ratio - 0.5) * 1e-9


# ---------------------------------------------------------------------------
# JSON config handling.  All frequencies in config files are ordinary
# frequencies (value = omega / 2 pi); times are in the unit named by the key.

def _get(d, key, default=None, required=False):
    if key in d:
        return d[key]
    if required:
        raise ConfigError(f"missing config key '{key}'")
    return default


def config_from_dict(data):
    """Build a PhysicalConfig from a parsed JSON document."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    dev = _get(data, "device", required=True)
    if not isinstance(dev, dict):
        raise ConfigError("'device' must be an object")

    def freq(key, unit, default=None, required=False):
        v = _get(dev, key, default=default, required=required)
        if v is None:
            return None
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"config key '{key}' must be a finite number")
        return ghz_to_angular(float(v) * unit)

    t1_law = None
    if "t1_law" in dev:
        law = dev["t1_law"]
        try:
            t1_law = T1Law(base=float(law["base_us"]) * 1e3,
                           slope=float(law["slope_ns"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad t1_law: {exc}") from exc
    t2_law = None
    if "t2_law" in dev:
        law = dev["t2_law"]
        try:
            t2_law = T2Law(rate=float(law["base_mhz"]) * 1e-3,
                           slope=float(law["slope"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad t2_law: {exc}") from exc

    def rate_mhz(key):
        v = _get(dev, key)
        if v is None:
            return None
        if not isinstance(v, (int, float)) or not math.isfinite(v):
            raise ConfigError(f"config key '{key}' must be a finite number")
        return float(v) * 1e-3   # MHz rate -> 1/ns

    temp_mk = _get(dev, "temperature_mk", required=True)
    if not isinstance(temp_mk, (int, float)) or not temp_mk > 0:
        raise ConfigError("temperature_mk must be a positive number")

    try:
        return PhysicalConfig(
            omega_c=freq("omega_c_ghz", 1.0, required=True),
            omega_Delta=freq("omega_delta_ghz", 1.0, required=True),
            g=freq("g_ghz", 1.0, required=True),
            K_c=freq("kerr_khz", 1e-6, default=0.0),
            gamma_c1=freq("gamma_c1_khz", 1e-6, required=True),
            gamma_c2=freq("gamma_c2_khz", 1e-6, required=True),
            gamma_c3=freq("gamma_c3_khz", 1e-6, default=0.0),
            gamma_c4=freq("gamma_c4_khz", 1e-6, default=0.0),
            phi_c1=float(_get(dev, "phi_c1_rad", 0.0)),
            phi_c2=float(_get(dev, "phi_c2_rad", 0.0)),
            phi_c3=float(_get(dev, "phi_c3_rad", 0.0)),
            phi_c4=float(_get(dev, "phi_c4_rad", 0.0)),
            temperature=float(temp_mk) * 1e-3,
            gamma_q1=rate_mhz("gamma_q1_mhz"),
            gamma_q2=rate_mhz("gamma_q2_mhz"),
            t1_law=t1_law,
            t2_law=t2_law,
        )
    except TypeError as exc:
        raise ConfigError(f"bad device block: {exc}") from exc


def config_to_dict(config):
    """Serialize a PhysicalConfig back to the JSON layout (lab units)."""
    dev = {
        "omega_c_ghz": angular_to_ghz(config.omega_c),
        "omega_delta_ghz": angular_to_ghz(config.omega_Delta),
        "g_ghz": angular_to_ghz(config.g),
        "kerr_khz": angular_to_ghz(config.K_c) * 1e6,
        "gamma_c1_khz": angular_to_ghz(config.gamma_c1) * 1e6,
        "gamma_c2_khz": angular_to_ghz(config.gamma_c2) * 1e6,
        "gamma_c3_khz": angular_to_ghz(config.gamma_c3) * 1e6,
        "gamma_c4_khz": angular_to_ghz(config.gamma_c4) * 1e6,
        "phi_c1_rad": config.phi_c1,
        "phi_c2_rad": config.phi_c2,
        "phi_c3_rad": config.phi_c3,
        "phi_c4_rad": config.phi_c4,
        "temperature_mk": config.temperature * 1e3,
    }
    if config.gamma_q1 is not None:
        dev["gamma_q1_mhz"] = config.gamma_q1 * 1e3
    if config.gamma_q2 is not None:
        dev["gamma_q2_mhz"] = config.gamma_q2 * 1e3
    if config.t1_law is not None:
        dev["t1_law"] = {"base_us": config.t1_law.base * 1e-3,
                         "slope_ns": config.t1_law.slope}
    if config.t2_law is not None:
        dev["t2_law"] = {"base_mhz": config.t2_law.rate * 1e3,
                         "slope": config.t2_law.slope}
    return {"device": dev}


def load_config(path):
    """Read a device JSON file and return a PhysicalConfig."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return config_from_dict(data)
