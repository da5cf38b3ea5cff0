"""Mean-field simulator for a flux qubit strongly coupled to a cavity.

Modules:

* params: device configuration, units, thermal equilibrium, flux tuning
* specfun: integer-order Bessel functions used by the harmonic channels
* steadystate: cubic and self-consistent photon-number solvers
* response: fluctuation drift matrix, susceptibility, transmission, IMD
* spectrum: dressed-level ladders and dispersive cavity lines
* superharmonic: steady states on the omega_a ~ n*omega_p resonances
* sweep: grid scans with delimited output (CSV/JSON)
* cli: the `cqed` command line tool
"""

__version__ = "0.1.0"
