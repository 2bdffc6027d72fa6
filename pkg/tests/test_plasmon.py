import cmath
import math

import pytest

from spolight.errors import DomainError
from spolight.plasmon import (
    CALIBRATED_DECAY_RATE,
    CALIBRATED_INTERACTION_TIME,
    CALIBRATED_SIGMA,
    REFERENCE_PLASMON_AREA_WL2,
    REFERENCE_TRANSVERSE_MODES,
    UNITS,
    OpticalConfig,
    derive_plasmon_parameters,
    exact_dispersion,
    scaled_interaction_time,
    transverse_mode_count,
)


@pytest.fixture(scope="module")
def gold():
    return derive_plasmon_parameters(OpticalConfig())


def test_gold_lengths(gold):
    assert gold.Lsp == pytest.approx(38_000, rel=0.02)
    assert gold.Lsp / 633 == pytest.approx(60, rel=0.02)
    assert gold.delta2 == pytest.approx(10, rel=0.05)
    assert 633 / gold.delta2 == pytest.approx(63, rel=0.01)


def test_gold_angles(gold):
    assert gold.theta_t == pytest.approx(41.8, abs=0.1)
    assert gold.theta_c == pytest.approx(42.8, abs=0.1)
    assert gold.theta_c > gold.theta_t


def test_gold_linewidth_and_wavenumber(gold):
    assert gold.delta_nu == pytest.approx(8.526e12, rel=0.005)
    assert round(gold.ksp_re, 4) == 1.0201


def test_lifetimes(gold):
    assert gold.tau_s * gold.mu == pytest.approx(1.0, rel=1e-15)
    assert gold.tau_c == gold.tau_s / 2


def test_mode_count_and_sigma(gold):
    assert gold.Mtr == pytest.approx(math.pi * gold.Asp / (gold.delta2 * 633.0), rel=1e-14)
    assert gold.sigma == pytest.approx(1 / gold.Mtr, rel=1e-15)
    assert 0 < gold.sigma <= 1
    assert gold.Lsp > 633.0


def test_frequency_convention():
    ang = derive_plasmon_parameters(OpticalConfig(), convention="angular")
    ordn = derive_plasmon_parameters(OpticalConfig(), convention="ordinary")
    assert ang.mu / ordn.mu == pytest.approx(2 * math.pi, rel=1e-14)
    with pytest.raises(DomainError):
        derive_plasmon_parameters(OpticalConfig(), convention="cyclic")


def test_domain_errors():
    with pytest.raises(DomainError):
        OpticalConfig(epsR=1.0)
    with pytest.raises(DomainError):
        OpticalConfig(eps3=2.25)
    with pytest.raises(DomainError):
        OpticalConfig(lambda0=0)
    with pytest.raises(DomainError):
        derive_plasmon_parameters(OpticalConfig(), mu_over_omega0=0)


def test_exact_dispersion():
    assert exact_dispersion(-2.0, 1.0) == pytest.approx(math.sqrt(2), rel=1e-15)
    assert exact_dispersion(-25.82, 1.0).real == pytest.approx(math.sqrt(25.82 / 24.82), rel=1e-14)
    assert round(exact_dispersion(-25.82, 1.0).real, 5) == 1.01995
    with pytest.raises(DomainError):
        exact_dispersion(-1.0, 1.0)


def test_expansion_agrees_with_exact(gold):
    k = exact_dispersion(complex(-25.82, 1.63), 1.0)
    assert abs(k.real - 1.0201) / 1.0201 < 1e-3
    assert abs(k.real - gold.ksp_re) / gold.ksp_re < 5e-3


def test_transverse_mode_count():
    assert transverse_mode_count(633.0**2, 633.0, 633.0) == pytest.approx(math.pi)
    lam = 633.0
    v = transverse_mode_count(REFERENCE_PLASMON_AREA_WL2 * lam**2, lam / 63, lam)
    assert v == pytest.approx(4.75e5, rel=0.01)
    assert REFERENCE_TRANSVERSE_MODES == 152_000
    assert v / REFERENCE_TRANSVERSE_MODES == pytest.approx(math.pi, rel=0.01)
    with pytest.raises(DomainError):
        transverse_mode_count(0, 1, 1)


def test_scaled_interaction_time():
    assert scaled_interaction_time(CALIBRATED_SIGMA, CALIBRATED_DECAY_RATE, CALIBRATED_INTERACTION_TIME) == 5.0
    assert scaled_interaction_time(0.5, 1e13, 0.0) == 0.0
    assert scaled_interaction_time(1.0, 3.0, 1.0) == 3.0


def test_monotonicity():
    base = OpticalConfig()
    d0 = derive_plasmon_parameters(base)
    hi_r = derive_plasmon_parameters(OpticalConfig(epsR=30.0))
    hi_i = derive_plasmon_parameters(OpticalConfig(epsI=2.0))
    assert hi_r.Lsp > d0.Lsp and hi_i.Lsp < d0.Lsp
    assert hi_r.delta2 < d0.delta2


def test_units_cover_fields(gold):
    assert set(UNITS) == set(gold.as_dict())


def test_silver_like_config_consistent():
    cfg = OpticalConfig(epsR=18.0, epsI=0.5)
    d = derive_plasmon_parameters(cfg)
    k = exact_dispersion(cfg.eps2, cfg.eps3)
    assert abs(k.real - d.ksp_re) / d.ksp_re < 5e-3
    assert cmath.isfinite(k)
