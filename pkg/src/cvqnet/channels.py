"""Fibre channels, the broadcast splitter tree, and network assembly.

A network scenario is: an EPR source of variance V at Alice, a shared
feeder fibre, a 1-to-N splitter tree with chosen power ratios, one drop
fibre per user, and one trusted detector per user.  Excess noise is
referenced to the input of the channel it belongs to (feeder noise at
the feeder input, drop noise at the drop input) and is given in SNU.

Detectors with efficiency eta_d and electronic noise v_ele are modelled,
after one-time shot-noise calibration, as a beam splitter of
transmittance eta_D = eta_d / (1 + v_ele) whose ancilla output is kept
as a trusted mode.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .gaussian import (
    GaussianSystem,
    attach_vacuum,
    beam_splitter,
    bob_label,
    det_label,
    epr_state,
)

RATIO_SUM_TOL = 1e-9


class UnsupportedReductionError(ValueError):
    """The requested two-user reduction is not exact for this scenario."""


@dataclass(frozen=True)
class ChannelParams:
    """One-mode thermal-loss channel (transmittance, input-referred noise)."""

    transmittance: float
    excess_noise: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.transmittance <= 1.0:
            raise ValueError(f"transmittance must be in (0, 1], got {self.transmittance}")
        if self.excess_noise < 0.0:
            raise ValueError(f"excess noise must be >= 0, got {self.excess_noise}")

    def compose(self, after: "ChannelParams") -> "ChannelParams":
        """This channel followed by another; noise stays input-referred."""
        t = self.transmittance * after.transmittance
        eps = self.excess_noise + after.excess_noise / self.transmittance
        return ChannelParams(t, eps)


@dataclass(frozen=True)
class DetectorParams:
    """Heterodyne detector: quantum efficiency and electronic noise (SNU)."""

    efficiency: float = 1.0
    electronic_noise: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        if self.electronic_noise < 0.0:
            raise ValueError(
                f"electronic noise must be >= 0, got {self.electronic_noise}"
            )

    @property
    def effective_transmittance(self) -> float:
        return self.efficiency / (1.0 + self.electronic_noise)


def fiber_transmittance(length_km: float, alpha_db_per_km: float = 0.2) -> float:
    """Power transmittance of a fibre span, 10^(-alpha L / 10)."""
    if length_km < 0.0 or alpha_db_per_km < 0.0:
        raise ValueError("fibre length and loss coefficient must be >= 0")
    return 10.0 ** (-alpha_db_per_km * length_km / 10.0)


def _as_tuple(value, n: int, name: str) -> tuple[float, ...]:
    if np.isscalar(value):
        return tuple(float(value) for _ in range(n))
    out = tuple(float(v) for v in value)
    if len(out) != n:
        raise ValueError(f"{name} needs one entry per user, got {len(out)} for {n}")
    return out


@dataclass(frozen=True)
class NetworkScenario:
    """Full description of one broadcast network.

    drop_km, drop_excess_noise, ratios and detectors accept scalars (or a
    single DetectorParams) and are expanded to one entry per user; ratios
    default to the uniform split 1/N.
    """

    n_users: int
    source_variance: float
    feeder_km: float = 0.0
    alpha_db_per_km: float = 0.2
    excess_noise: float = 0.0
    drop_km: tuple[float, ...] | float = 0.0
    drop_excess_noise: tuple[float, ...] | float = 0.0
    ratios: tuple[float, ...] | None = None
    detectors: tuple[DetectorParams, ...] | DetectorParams = DetectorParams()
    beta: float = 1.0

    def __post_init__(self):
        n = self.n_users
        if n < 1:
            raise ValueError("need at least one user")
        if self.source_variance < 1.0:
            raise ValueError("source variance must be >= 1 SNU")
        if self.feeder_km < 0.0 or self.alpha_db_per_km < 0.0:
            raise ValueError("fibre parameters must be >= 0")
        if self.excess_noise < 0.0:
            raise ValueError("feeder excess noise must be >= 0")
        if not 0.0 < self.beta <= 1.0:
            raise ValueError("reconciliation efficiency must be in (0, 1]")
        object.__setattr__(self, "drop_km", _as_tuple(self.drop_km, n, "drop_km"))
        object.__setattr__(
            self,
            "drop_excess_noise",
            _as_tuple(self.drop_excess_noise, n, "drop_excess_noise"),
        )
        if any(v < 0.0 for v in self.drop_km):
            raise ValueError("drop lengths must be >= 0")
        if any(v < 0.0 for v in self.drop_excess_noise):
            raise ValueError("drop excess noise must be >= 0")
        ratios = self.ratios
        if ratios is None:
            ratios = tuple(1.0 / n for _ in range(n))
        else:
            ratios = tuple(float(r) for r in ratios)
        if len(ratios) != n:
            raise ValueError("need one splitting ratio per user")
        if any(r <= 0.0 for r in ratios):
            raise ValueError("splitting ratios must be > 0")
        if abs(sum(ratios) - 1.0) > RATIO_SUM_TOL:
            raise ValueError(f"splitting ratios sum to {sum(ratios)}, expected 1")
        object.__setattr__(self, "ratios", ratios)
        dets = self.detectors
        if isinstance(dets, DetectorParams):
            dets = tuple(dets for _ in range(n))
        else:
            dets = tuple(dets)
        if len(dets) != n:
            raise ValueError("need one detector per user")
        object.__setattr__(self, "detectors", dets)

    @property
    def modulation_variance(self) -> float:
        return self.source_variance - 1.0

    @property
    def feeder(self) -> ChannelParams:
        return ChannelParams(
            fiber_transmittance(self.feeder_km, self.alpha_db_per_km),
            self.excess_noise,
        )

    def drop(self, user: int) -> ChannelParams:
        self._check_user(user)
        return ChannelParams(
            fiber_transmittance(self.drop_km[user - 1], self.alpha_db_per_km),
            self.drop_excess_noise[user - 1],
        )

    def _check_user(self, user: int) -> None:
        if not 1 <= user <= self.n_users:
            raise ValueError(f"user {user} out of range 1..{self.n_users}")

    def is_symmetric(self) -> bool:
        """Uniform split with identical drops and detectors."""
        return (
            len(set(self.ratios)) == 1
            and len(set(self.drop_km)) == 1
            and len(set(self.drop_excess_noise)) == 1
            and len(set(self.detectors)) == 1
        )

    def with_modulation_variance(self, v_mod: float) -> "NetworkScenario":
        return dataclasses.replace(self, source_variance=1.0 + v_mod)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkScenario":
        data = dict(data)
        dets = data.get("detectors")
        if isinstance(dets, dict):
            data["detectors"] = DetectorParams(**dets)
        elif isinstance(dets, (list, tuple)):
            data["detectors"] = tuple(
                d if isinstance(d, DetectorParams) else DetectorParams(**d)
                for d in dets
            )
        return cls(**data)

    @classmethod
    def from_channel_referred_noise(
        cls,
        user_excess_noise,
        *,
        placement: str = "drop",
        **kwargs,
    ) -> "NetworkScenario":
        """Scenario from per-user excess noise quoted at the feeder input.

        Deployments usually report one excess-noise figure per user,
        referred to the channel (feeder) input.  placement="drop" moves
        each figure into that user's drop channel (scaled by the signal
        transmittance up to the drop input) so every per-user equivalent
        channel reproduces its quoted noise exactly; placement="feeder"
        puts the mean figure on the shared feeder instead.
        """
        probe = cls(excess_noise=0.0, drop_excess_noise=0.0, **kwargs)
        eps = _as_tuple(user_excess_noise, probe.n_users, "user_excess_noise")
        if placement == "drop":
            t_f = probe.feeder.transmittance
            drop_eps = tuple(
                e * t_f * r for e, r in zip(eps, probe.ratios)
            )
            return dataclasses.replace(probe, drop_excess_noise=drop_eps)
        if placement == "feeder":
            return dataclasses.replace(probe, excess_noise=sum(eps) / len(eps))
        raise ValueError(f"placement must be 'drop' or 'feeder', got {placement!r}")


def thermal_loss_channel(
    sys: GaussianSystem, label: str, transmittance: float, excess_noise: float = 0.0
) -> GaussianSystem:
    """Apply a thermal-loss channel to one labelled mode.

    Diagonal block V -> T(V + eps) + (1 - T); every cross block touching
    the mode scales by sqrt(T).
    """
    ChannelParams(transmittance, excess_noise)  # reuse the validation
    m = sys.mode_index(label)
    cm = sys.cm.copy()
    q = [2 * m, 2 * m + 1]
    root = math.sqrt(transmittance)
    cm[q, :] *= root
    cm[:, q] *= root
    add = transmittance * excess_noise + 1.0 - transmittance
    cm[q[0], q[0]] += add
    cm[q[1], q[1]] += add
    return GaussianSystem(cm, sys.labels)


def apply_channel(sys: GaussianSystem, label: str, chan: ChannelParams) -> GaussianSystem:
    return thermal_loss_channel(sys, label, chan.transmittance, chan.excess_noise)


def splitter_chain(ratios) -> list[float]:
    """Beam-splitter transmittances realising the given power ratios.

    Splitter i keeps eta_i of the trunk and peels off branch i; for the
    uniform split this is eta_i = 1 - 1/(N - i + 1).
    """
    ratios = [float(r) for r in ratios]
    if any(r < 0.0 for r in ratios) or abs(sum(ratios) - 1.0) > RATIO_SUM_TOL:
        raise ValueError("ratios must be >= 0 and sum to 1")
    etas = []
    remaining = 1.0
    for r in ratios[:-1]:
        etas.append(1.0 - r / remaining)
        remaining -= r
    return etas


def _fresh_aux_labels(sys: GaussianSystem, count: int) -> list[str]:
    used = set(sys.labels)
    out, k = [], 0
    while len(out) < count:
        cand = f"aux{k}"
        if cand not in used:
            out.append(cand)
        k += 1
    return out


def broadcast(sys: GaussianSystem, label: str, ratios) -> GaussianSystem:
    """Split one labelled mode into N outputs labelled bob1..bobN.

    Branch i carries the fraction ratios[i-1] of the input signal; the
    final trunk output becomes bobN.
    """
    n = len(ratios)
    if n == 1:
        if abs(ratios[0] - 1.0) > RATIO_SUM_TOL:
            raise ValueError("single-output broadcast must have ratio 1")
        return sys.relabeled({label: bob_label(1)})
    etas = splitter_chain(ratios)
    anc = _fresh_aux_labels(sys, n - 1)
    out = sys
    for lab in anc:
        out = attach_vacuum(out, lab)
    for k, eta in enumerate(etas):
        out = beam_splitter(out, anc[k], label, eta)
    mapping = {lab: bob_label(k + 1) for k, lab in enumerate(anc)}
    mapping[label] = bob_label(n)
    return out.relabeled(mapping)


def detector_channel(
    sys: GaussianSystem, label: str, det: DetectorParams
) -> GaussianSystem:
    """Model one user's detector as a trusted beam splitter.

    The bob mode passes a splitter of transmittance eta_D against vacuum;
    the ancilla is retained and labelled det<i> for bob<i>.
    """
    if not label.startswith("bob"):
        raise ValueError(f"detector_channel expects a bob mode, got {label!r}")
    dlab = det_label(int(label[3:]))
    out = attach_vacuum(sys, dlab)
    return beam_splitter(out, label, dlab, det.effective_transmittance)


def equivalent_channel_reduction(
    eta: float, chan_a: ChannelParams, chan_b: ChannelParams
) -> ChannelParams:
    """Collapse two sibling branches into one equivalent channel.

    A splitter routes eta of the parent into channel a and 1-eta into
    channel b; the merged branch seen by a receiver that recombines both
    outputs is a thermal-loss channel with

        T  = eta T_a + (1-eta) T_b
        eps = (eta T_a^2 eps_a + (1-eta) T_b^2 eps_b) / T^2
    """
    if not 0.0 < eta < 1.0:
        raise ValueError(f"splitting fraction must be in (0, 1), got {eta}")
    t = eta * chan_a.transmittance + (1.0 - eta) * chan_b.transmittance
    eps = (
        eta * chan_a.transmittance**2 * chan_a.excess_noise
        + (1.0 - eta) * chan_b.transmittance**2 * chan_b.excess_noise
    ) / t**2
    return ChannelParams(t, eps)


def decoupling_transmittance(eta: float, t_a: float, t_b: float) -> float:
    """Splitter setting that empties one output of the recombined pair.

    Mixing the two post-channel siblings (weights eta and 1-eta through
    channels t_a, t_b) on a splitter of this transmittance leaves all of
    the parent signal in one output; the other is signal-free.
    """
    return (1.0 - eta) * t_b / (eta * t_a + (1.0 - eta) * t_b)


def merged_rest_channel(
    scn: NetworkScenario, user: int
) -> tuple[float, ChannelParams]:
    """Total ratio and equivalent drop channel of everyone but `user`."""
    scn._check_user(user)
    rest = [j for j in range(1, scn.n_users + 1) if j != user]
    if not rest:
        raise UnsupportedReductionError("single-user scenario has no rest group")
    weight = scn.ratios[rest[0] - 1]
    chan = scn.drop(rest[0])
    for j in rest[1:]:
        r = scn.ratios[j - 1]
        chan = equivalent_channel_reduction(
            weight / (weight + r), chan, scn.drop(j)
        )
        weight += r
    return weight, chan


def reduce_to_two_user(scn: NetworkScenario, user: int) -> NetworkScenario:
    """Equivalent two-user scenario: `user` first, merged rest second.

    Exact only when the rest group is homogeneous enough to decouple:
    equal detectors and equal T*eps across the rest drops (always true
    for noiseless drops).  Raises UnsupportedReductionError otherwise.
    """
    scn._check_user(user)
    if scn.n_users < 2:
        raise UnsupportedReductionError("nothing to reduce for a single user")
    if scn.n_users == 2:
        order = [user, 3 - user]
        return dataclasses.replace(
            scn,
            drop_km=tuple(scn.drop_km[j - 1] for j in order),
            drop_excess_noise=tuple(scn.drop_excess_noise[j - 1] for j in order),
            ratios=tuple(scn.ratios[j - 1] for j in order),
            detectors=tuple(scn.detectors[j - 1] for j in order),
        )
    rest = [j for j in range(1, scn.n_users + 1) if j != user]
    rest_dets = {scn.detectors[j - 1] for j in rest}
    if len(rest_dets) > 1:
        raise UnsupportedReductionError("rest users have unequal detectors")
    teps = [scn.drop(j).transmittance * scn.drop(j).excess_noise for j in rest]
    if max(teps) - min(teps) > 1e-12:
        raise UnsupportedReductionError(
            "rest drops have unequal T*eps; their junk modes stay correlated"
        )
    weight, chan = merged_rest_channel(scn, user)
    if scn.alpha_db_per_km == 0.0:
        if chan.transmittance < 1.0 - 1e-12:
            raise UnsupportedReductionError("lossy merged drop but alpha = 0")
        rest_km = 0.0
    else:
        rest_km = -10.0 * math.log10(chan.transmittance) / scn.alpha_db_per_km
    return dataclasses.replace(
        scn,
        n_users=2,
        drop_km=(scn.drop_km[user - 1], rest_km),
        drop_excess_noise=(scn.drop_excess_noise[user - 1], chan.excess_noise),
        ratios=(scn.ratios[user - 1], weight),
        detectors=(scn.detectors[user - 1], rest_dets.pop()),
    )


def build_network_state(scn: NetworkScenario) -> GaussianSystem:
    """Covariance matrix of the whole network before any measurement.

    Mode order: alice, bob1..bobN, det1..detN.  Bob modes are the
    post-detector signal modes each user heterodynes; det modes are the
    trusted detector ancillas.
    """
    sys = epr_state(scn.source_variance, ("alice", "aux"))
    sys = apply_channel(sys, "aux", scn.feeder)
    sys = broadcast(sys, "aux", scn.ratios)
    for i in range(1, scn.n_users + 1):
        sys = apply_channel(sys, bob_label(i), scn.drop(i))
        sys = detector_channel(sys, bob_label(i), scn.detectors[i - 1])
    order = (
        ["alice"]
        + [bob_label(i) for i in range(1, scn.n_users + 1)]
        + [det_label(i) for i in range(1, scn.n_users + 1)]
    )
    return sys.reordered(order)


def point_to_point_state(
    chan: ChannelParams, source_variance: float, det: DetectorParams
) -> GaussianSystem:
    """Single-user link: EPR source, one channel, one trusted detector."""
    sys = epr_state(source_variance, ("alice", "bob1"))
    sys = apply_channel(sys, "bob1", chan)
    sys = detector_channel(sys, "bob1", det)
    return sys
