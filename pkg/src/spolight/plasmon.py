"""Surface plasmon parameters of a prism / metal film / dielectric stack.

Inputs are single-frequency material constants, so there is no material
dispersion model. Lengths at the interface are in nanometres, times in
seconds, rates in s^-1, angles in degrees. Wave numbers are given in units
of the vacuum wave number ``omega0 / c``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

from .errors import DomainError

SPEED_OF_LIGHT = 2.99792458e8  # m/s

# Gold at 633 nm on a glass prism, exit medium air.
GOLD_HENE = dict(
    lambda0=633.0,
    eps1=2.25,
    epsR=25.82,
    epsI=1.63,
    eps3=1.0,
    d=45.0,
    Ly=25_000.0,
    rel_linewidth=0.018,
)

DEFAULT_MU_OVER_OMEGA0 = 0.032

# Published transverse-mode estimate. It is close to 2400 * 63 = 151200, i.e.
# pi*A/(z1*lambda0) without the factor pi; kept next to the formula value.
REFERENCE_TRANSVERSE_MODES = 152_000
# Lower bound on the plasmon area quoted with it, in units of lambda0^2.
REFERENCE_PLASMON_AREA_WL2 = 2400.0

# Calibration used to put the dimensionless interaction time at 5.
CALIBRATED_SIGMA = 1.0 / REFERENCE_TRANSVERSE_MODES
CALIBRATED_DECAY_RATE = 1e13  # s^-1, a 100 fs lifetime
CALIBRATED_INTERACTION_TIME = 76e-9  # s, 12.5 ns resolution + 63.5 ns dead time


@dataclass(frozen=True)
class OpticalConfig:
    """Kretschmann stack: prism (1) / metal film (2) / exit medium (3).

    The metal permittivity is ``-epsR + 1j * epsI``.
    """

    lambda0: float = GOLD_HENE["lambda0"]
    eps1: float = GOLD_HENE["eps1"]
    epsR: float = GOLD_HENE["epsR"]
    epsI: float = GOLD_HENE["epsI"]
    eps3: float = GOLD_HENE["eps3"]
    d: float = GOLD_HENE["d"]
    Ly: float = GOLD_HENE["Ly"]
    rel_linewidth: float = GOLD_HENE["rel_linewidth"]

    def __post_init__(self) -> None:
        if not self.lambda0 > 0:
            raise DomainError(f"lambda0 must be > 0, got {self.lambda0}")
        if not self.d > 0:
            raise DomainError(f"film thickness d must be > 0, got {self.d}")
        if not self.Ly > 0:
            raise DomainError(f"spot extent Ly must be > 0, got {self.Ly}")
        if not self.eps3 > 0:
            raise DomainError(f"eps3 must be > 0, got {self.eps3}")
        if not self.eps1 > self.eps3:
            raise DomainError(
                f"total internal reflection needs eps1 > eps3 (got {self.eps1} <= {self.eps3})"
            )
        if not self.epsR > 1:
            raise DomainError(f"epsR must exceed 1, got {self.epsR}")
        if not self.epsI > 0:
            raise DomainError(f"epsI must be > 0, got {self.epsI}")
        if not self.rel_linewidth >= 0:
            raise DomainError(f"rel_linewidth must be >= 0, got {self.rel_linewidth}")

    @property
    def eps2(self) -> complex:
        return complex(-self.epsR, self.epsI)


@dataclass(frozen=True)
class PlasmonDerived:
    ksp_re: float
    ksp_im: float
    k2z_re: float
    k2z_im: float
    Lsp: float  # nm
    delta2: float  # nm
    theta_t: float  # deg
    theta_c: float  # deg
    Asp: float  # nm^2
    Mtr: float
    sigma: float
    delta_nu: float  # s^-1
    mu: float  # s^-1
    tau_s: float  # s
    tau_c: float  # s

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


UNITS = {
    "ksp_re": "omega0/c",
    "ksp_im": "omega0/c",
    "k2z_re": "omega0/c",
    "k2z_im": "omega0/c",
    "Lsp": "nm",
    "delta2": "nm",
    "theta_t": "deg",
    "theta_c": "deg",
    "Asp": "nm^2",
    "Mtr": "1",
    "sigma": "1",
    "delta_nu": "s^-1",
    "mu": "s^-1",
    "tau_s": "s",
    "tau_c": "s",
}


def transverse_mode_count(area: float, z1: float, lambda0: float) -> float:
    """Number of transverse modes ``pi * area / (z1 * lambda0)`` seen through an
    aperture of ``area`` by a source at depth ``z1``.

    With ``z1 = lambda0`` this is the half-space count ``pi * area / lambda0**2``.
    Note :data:`REFERENCE_TRANSVERSE_MODES` is smaller by a factor pi for the
    gold parameters.
    """
    for name, v in (("area", area), ("z1", z1), ("lambda0", lambda0)):
        if not v > 0:
            raise DomainError(f"{name} must be > 0, got {v}")
    return math.pi * area / (z1 * lambda0)


def exact_dispersion(eps2: complex, eps3: float) -> complex:
    """Interface plasmon wave number ``sqrt(eps2 eps3 / (eps2 + eps3))`` in units
    of ``omega / c`` (principal root)."""
    denom = eps2 + eps3
    if abs(denom) < 1e-12:
        raise DomainError("eps2 + eps3 vanishes; no bound interface mode")
    return cmath.sqrt(eps2 * eps3 / denom)


def scaled_interaction_time(sigma: float, mu: float, tau: float) -> float:
    """Dimensionless interaction time ``sigma * mu * tau``."""
    for name, v in (("sigma", sigma), ("mu", mu), ("tau", tau)):
        if v < 0:
            raise DomainError(f"{name} must be >= 0, got {v}")
    return mu * tau * sigma


def derive_plasmon_parameters(
    cfg: OpticalConfig,
    mu_over_omega0: float = DEFAULT_MU_OVER_OMEGA0,
    convention: str = "angular",
) -> PlasmonDerived:
    """Derived plasmon quantities from first-order expansions in ``1/(epsR - 1)``.

    Parameters
    ----------
    cfg : OpticalConfig
    mu_over_omega0 : float
        Relaxation rate of the surface current in units of the carrier
        frequency.
    convention : {"angular", "ordinary"}
        Whether ``mu_over_omega0`` multiplies ``2 pi c / lambda0`` (angular)
        or ``c / lambda0``.
    """
    if not mu_over_omega0 > 0:
        raise DomainError(f"mu_over_omega0 must be > 0, got {mu_over_omega0}")
    if convention not in ("angular", "ordinary"):
        raise DomainError(f"convention must be 'angular' or 'ordinary', got {convention!r}")
    if cfg.epsR <= 1:
        raise DomainError("epsR must exceed 1")
    if cfg.eps3 >= cfg.eps1:
        raise DomainError("eps3 must be smaller than eps1")

    er1 = cfg.epsR - 1.0
    ksp_re = 1.0 + 1.0 / (2.0 * er1)
    ksp_im = cfg.epsI / (2.0 * er1**2)
    root = math.sqrt(er1)
    k2z_re = root
    k2z_im = root * cfg.epsI / (2.0 * er1)

    lam = cfg.lambda0
    Lsp = er1**2 * lam / (2.0 * math.pi * cfg.epsI)
    delta2 = lam / (4.0 * math.pi * root)

    n1 = math.sqrt(cfg.eps1)
    theta_t = math.degrees(math.asin(math.sqrt(cfg.eps3 / cfg.eps1)))
    if ksp_re >= n1:
        raise DomainError("plasmon wave number exceeds prism index; resonance not reachable")
    theta_c = math.degrees(math.asin(ksp_re / n1))

    Asp = Lsp * cfg.Ly
    Mtr = transverse_mode_count(Asp, delta2, lam)

    lam_m = lam * 1e-9
    nu0 = SPEED_OF_LIGHT / lam_m
    delta_nu = cfg.rel_linewidth * nu0
    carrier = 2.0 * math.pi * nu0 if convention == "angular" else nu0
    mu = mu_over_omega0 * carrier
    tau_s = 1.0 / mu
    return PlasmonDerived(
        ksp_re=ksp_re,
        ksp_im=ksp_im,
        k2z_re=k2z_re,
        k2z_im=k2z_im,
        Lsp=Lsp,
        delta2=delta2,
        theta_t=theta_t,
        theta_c=theta_c,
        Asp=Asp,
        Mtr=Mtr,
        sigma=min(1.0, 1.0 / Mtr),
        delta_nu=delta_nu,
        mu=mu,
        tau_s=tau_s,
        tau_c=tau_s / 2.0,
    )
