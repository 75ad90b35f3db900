"""Grant-free uplink link adaptation simulator."""

from ._gfla import (
    REPORTED_CLDI_DOWNLINK_BPS,
    ConfigError,
    DecodeError,
    DomainError,
    bessel_j0,
    bit_error_prob,
    correlation_coefficient,
    cw_min,
    from_half,
    mu,
    normalize_config,
    omega,
    overhead,
    packet_loss_prob,
    packets_per_tti,
    run,
    to_half,
    update_buffer,
    verify,
    weight_counts,
)

__all__ = [
    "REPORTED_CLDI_DOWNLINK_BPS",
    "ConfigError",
    "DecodeError",
    "DomainError",
    "bessel_j0",
    "bit_error_prob",
    "correlation_coefficient",
    "cw_min",
    "from_half",
    "mu",
    "normalize_config",
    "omega",
    "overhead",
    "packet_loss_prob",
    "packets_per_tti",
    "run",
    "to_half",
    "update_buffer",
    "verify",
    "weight_counts",
]
