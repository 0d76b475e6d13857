"""Two-factor Gaussian short-rate engine."""

from ._core import (
    DiscountCurve,
    DomainError,
    G2Params,
    InputError,
    NumericError,
    PremiumSpec,
    bond_price,
    calibrate_p,
    calibrate_q,
    expected_rate_p,
    expected_rate_q,
    integrated_variance,
    mc_bond_check,
    price_swaption,
    project,
    rp_x,
    rp_y,
    simulate,
)

__all__ = [
    "DiscountCurve",
    "DomainError",
    "G2Params",
    "InputError",
    "NumericError",
    "PremiumSpec",
    "bond_price",
    "calibrate_p",
    "calibrate_q",
    "expected_rate_p",
    "expected_rate_q",
    "integrated_variance",
    "mc_bond_check",
    "price_swaption",
    "project",
    "rp_x",
    "rp_y",
    "simulate",
]
