"""Key rates for multi-user continuous-variable QKD over a broadcast channel.

A single sender distributes one arm of an EPR source through a fiber
feeder and a passive splitter tree to N receivers; every receiver
heterodynes.  The package builds the network's Gaussian state, scores
each user's key rate against collective attacks, brackets the total
between worst-case and best-case limits, and re-estimates everything
from finite samples.
"""
from .channels import (
    ChannelParams,
    DetectorParams,
    NetworkScenario,
    build_network_state,
    fiber_transmittance,
    reduce_to_two_user,
)
from .estimator import (
    QuadratureSamples,
    estimate_covariance,
    keyrate_from_samples,
    load_samples,
    sample_outcomes,
    save_samples,
)
from .gaussian import (
    GaussianSystem,
    NumericalDegeneracyError,
    UnphysicalStateError,
    von_neumann_entropy,
)
from .keyrate import (
    KeyRateReport,
    OptimalModulation,
    UserRate,
    bits_per_second,
    key_rate_user,
    lower_limit,
    network_report,
    optimize_modulation_variance,
    upper_limit_joint,
    upper_limit_p2p,
)
from .presets import ideal_network, practical_network, testbed_network

__version__ = "0.1.0"

__all__ = [
    "ChannelParams",
    "DetectorParams",
    "GaussianSystem",
    "KeyRateReport",
    "NetworkScenario",
    "NumericalDegeneracyError",
    "OptimalModulation",
    "QuadratureSamples",
    "UnphysicalStateError",
    "UserRate",
    "bits_per_second",
    "build_network_state",
    "estimate_covariance",
    "fiber_transmittance",
    "ideal_network",
    "key_rate_user",
    "keyrate_from_samples",
    "load_samples",
    "lower_limit",
    "network_report",
    "optimize_modulation_variance",
    "practical_network",
    "reduce_to_two_user",
    "sample_outcomes",
    "save_samples",
    "testbed_network",
    "upper_limit_joint",
    "upper_limit_p2p",
    "von_neumann_entropy",
]
