"""Shared fixtures: the measured device, two working points, and a
synthetic fast-decay device for time-domain oracle checks."""

import math
import pathlib

import pytest

from cqed import params

REPO = pathlib.Path(__file__).resolve().parent.parent
DEVICE_JSON = REPO / "configs" / "device.json"


@pytest.fixture(scope="session")
def device():
    return params.load_config(DEVICE_JSON)


@pytest.fixture(scope="session")
def crossing_derived(device):
    # flux bias where the qubit meets the cavity: omega_a = omega_c
    omega_f = math.sqrt(device.omega_c ** 2 - device.omega_Delta ** 2)
    return params.derive(device, omega_f)


@pytest.fixture(scope="session")
def detuned_derived(device):
    # dispersive working point used for the gain measurements
    return params.derive(device, params.ghz_to_angular(8.1))


@pytest.fixture(scope="session")
def fast_device():
    # decay times of tens of ns so mean-field trajectories settle quickly
    # enough for direct RK4 integration in tests
    return params.PhysicalConfig(
        omega_c=41.0,
        omega_Delta=8.0,
        g=0.05,
        gamma_c1=0.010,
        gamma_c2=0.012,
        temperature=0.023,
        gamma_q1=0.020,
        gamma_q2=0.010,
    )


@pytest.fixture(scope="session")
def fast_derived(fast_device):
    omega_f = math.sqrt(fast_device.omega_c ** 2 - fast_device.omega_Delta ** 2)
    return params.derive(fast_device, omega_f)
