"""Ready-made scenarios used by the command line, scripts and tests."""
from __future__ import annotations

from .channels import DetectorParams, NetworkScenario


def ideal_network(
    n_users: int, feeder_km: float, v_mod: float = 1e4
) -> NetworkScenario:
    """Lossless-hardware network: perfect reconciliation and detectors."""
    return NetworkScenario(
        n_users=n_users,
        source_variance=v_mod + 1.0,
        feeder_km=feeder_km,
        beta=1.0,
    )


def practical_network(
    n_users: int, feeder_km: float, v_mod: float = 4.0
) -> NetworkScenario:
    """Deployment-grade parameters for all users.

    beta 0.956, 0.05 SNU channel-input noise, detectors with 0.6
    efficiency and 0.1 SNU electronic noise, 0.2 dB/km fiber.
    """
    return NetworkScenario(
        n_users=n_users,
        source_variance=v_mod + 1.0,
        feeder_km=feeder_km,
        excess_noise=0.05,
        detectors=DetectorParams(efficiency=0.6, electronic_noise=0.1),
        beta=0.956,
    )


def testbed_network(
    extra_drop_loss_db: float = 0.0, placement: str = "drop"
) -> NetworkScenario:
    """Two-user metropolitan testbed: 25 km feeder, even split, 5 km drops.

    Per-user channel-input noise 0.085 / 0.103 SNU, detector
    efficiencies 0.502 / 0.485 (electronic noise folded in via one-time
    calibration), beta 0.96, source variance 5.3 SNU.
    extra_drop_loss_db adds unbudgeted per-branch loss (connectors,
    splitter excess) as extra drop fiber.
    """
    alpha = 0.2
    return NetworkScenario.from_channel_referred_noise(
        (0.085, 0.103),
        placement=placement,
        n_users=2,
        source_variance=5.3,
        feeder_km=25.0,
        drop_km=5.0 + extra_drop_loss_db / alpha,
        alpha_db_per_km=alpha,
        detectors=(
            DetectorParams(efficiency=0.502),
            DetectorParams(efficiency=0.485),
        ),
        beta=0.96,
    )
