"""Secret-key rates for the broadcast network, reverse reconciliation.

Every user heterodynes their post-detector mode; Alice heterodynes her
EPR arm.  Against collective attacks the rate of user i is

    K_i = beta I(a:b_i) - I(b_i:b_rest) - S(b_i:E | b_rest)

where the middle term removes the information the other (untrusted)
users' published outcomes already carry about b_i and the last is Eve's
conditional Holevo information.  Eve purifies everything outside the
trusted stations, so her entropy is the entropy of the legitimate system
itself; detector ancillas are trusted and stay on the legitimate side.

Classical outcome statistics: heterodyne outcomes of measured modes are
jointly Gaussian with covariance (gamma + I)/2 over the measured blocks.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .channels import (
    ChannelParams,
    NetworkScenario,
    build_network_state,
    equivalent_channel_reduction,
    merged_rest_channel,
    point_to_point_state,
)
from .gaussian import (
    PHYSICALITY_TOL,
    GaussianSystem,
    NumericalDegeneracyError,
    bob_label,
    heterodyne_condition,
    von_neumann_entropy,
)

LN2 = math.log(2.0)


def user_numbers(sys: GaussianSystem) -> list[int]:
    return sorted(
        int(m.group(1)) for lab in sys.labels if (m := re.match(r"^bob(\d+)$", lab))
    )


@dataclass(frozen=True)
class OutcomeCovariance:
    """Classical covariance of heterodyne outcomes of the listed modes."""

    sigma: np.ndarray
    modes: tuple[str, ...]

    def rows(self, labels) -> np.ndarray:
        idx = []
        for lab in labels:
            try:
                m = self.modes.index(lab)
            except ValueError:
                raise ValueError(f"{lab!r} is not a measured mode") from None
            idx.extend((2 * m, 2 * m + 1))
        return np.array(idx)


def outcome_covariance(sys: GaussianSystem, measured) -> OutcomeCovariance:
    measured = list(measured)
    if len(set(measured)) != len(measured) or not measured:
        raise ValueError("measured labels must be non-empty and distinct")
    idx = [sys.mode_index(lab) for lab in measured]
    q = np.concatenate([[2 * i, 2 * i + 1] for i in idx])
    sigma = 0.5 * (sys.cm[np.ix_(q, q)] + np.eye(2 * len(measured)))
    return OutcomeCovariance(sigma, tuple(measured))


def _logdet(mat: np.ndarray) -> float:
    sign, val = np.linalg.slogdet(mat)
    if sign <= 0 or not np.isfinite(val):
        raise NumericalDegeneracyError("outcome covariance block is singular")
    return val


def gaussian_mutual_information(
    oc: OutcomeCovariance, part_a, part_b
) -> float:
    """I(A:B) in bits, 0.5 log2 (det S_A det S_B / det S_AB)."""
    ia, ib = oc.rows(part_a), oc.rows(part_b)
    if set(ia) & set(ib):
        raise ValueError("mutual-information parts overlap")
    iab = np.concatenate([ia, ib])
    s = oc.sigma
    val = _logdet(s[np.ix_(ia, ia)]) + _logdet(s[np.ix_(ib, ib)]) - _logdet(
        s[np.ix_(iab, iab)]
    )
    return 0.5 * val / LN2


def per_quadrature_mutual_information(
    oc: OutcomeCovariance, part_a, part_b
) -> float:
    """Same MI computed separately on x and p outcome rows.

    Agrees with gaussian_mutual_information whenever the x-p cross
    blocks vanish, as they do for this protocol family.
    """
    ia, ib = oc.rows(part_a), oc.rows(part_b)
    total = 0.0
    for off in (0, 1):
        ja, jb = ia[off::2], ib[off::2]
        jab = np.concatenate([ja, jb])
        s = oc.sigma
        total += 0.5 * (
            _logdet(s[np.ix_(ja, ja)])
            + _logdet(s[np.ix_(jb, jb)])
            - _logdet(s[np.ix_(jab, jab)])
        )
    return total / LN2


def _condition_on(sys: GaussianSystem, labels) -> GaussianSystem:
    out = sys
    for lab in labels:
        out = heterodyne_condition(out, lab)
    return out


def holevo_conditional(
    sys: GaussianSystem, user: int, tol: float = PHYSICALITY_TOL
) -> float:
    """S(b_i : E | b_rest) for collective attacks, in bits.

    Both entropies are taken after conditioning on the other users'
    heterodyne outcomes: first of the remaining legitimate system
    (alice, bob i, all trusted detector modes), then after additionally
    conditioning on bob i's own outcome.  tol widens the vacuum-limit
    band for statistically estimated states.
    """
    users = user_numbers(sys)
    if user not in users:
        raise ValueError(f"no user {user} in {sys.labels}")
    rest = [bob_label(j) for j in users if j != user]
    given_rest = _condition_on(sys, rest)
    s_joint = von_neumann_entropy(given_rest, tol)
    s_given_i = von_neumann_entropy(
        heterodyne_condition(given_rest, bob_label(user)), tol
    )
    return s_joint - s_given_i


@dataclass(frozen=True)
class UserRate:
    """Per-user rate decomposition, all terms in bits per pulse."""

    user: int
    mi_alice: float
    mi_rest: float
    holevo: float
    beta: float

    @property
    def k_raw(self) -> float:
        return self.beta * self.mi_alice - self.mi_rest - self.holevo

    @property
    def k_clamped(self) -> float:
        return max(0.0, self.k_raw)


def key_rate_user(
    sys: GaussianSystem, user: int, beta: float, tol: float = PHYSICALITY_TOL
) -> UserRate:
    """Rate of one user against collective attacks, possibly negative."""
    if not 0.0 < beta <= 1.0:
        raise ValueError("reconciliation efficiency must be in (0, 1]")
    users = user_numbers(sys)
    if user not in users:
        raise ValueError(f"no user {user} in {sys.labels}")
    bobs = [bob_label(j) for j in users]
    target = bob_label(user)
    rest = [b for b in bobs if b != target]
    oc = outcome_covariance(sys, ["alice"] + bobs)
    mi_alice = gaussian_mutual_information(oc, ["alice"], [target])
    mi_rest = gaussian_mutual_information(oc, [target], rest) if rest else 0.0
    hol = holevo_conditional(sys, user, tol)
    return UserRate(user=user, mi_alice=mi_alice, mi_rest=mi_rest, holevo=hol, beta=beta)


def upper_limit_joint(
    sys: GaussianSystem, beta: float, tol: float = PHYSICALITY_TOL
) -> float:
    """Best-case rate of co-located users processing all outcomes jointly.

    beta I(a : b_1..b_N) - [S(E) - S(E | all outcomes)], with S(E) equal
    to the entropy of the legitimate system by purity of the global
    state.
    """
    bobs = [bob_label(j) for j in user_numbers(sys)]
    if not bobs:
        raise ValueError("state contains no bob modes")
    oc = outcome_covariance(sys, ["alice"] + bobs)
    mi = gaussian_mutual_information(oc, ["alice"], bobs)
    holevo = von_neumann_entropy(sys, tol) - von_neumann_entropy(
        _condition_on(sys, bobs), tol
    )
    return beta * mi - holevo


def _total_broadcast_channel(scn: NetworkScenario) -> ChannelParams:
    """Equivalent channel of the whole splitter tree plus drops."""
    if scn.n_users == 1:
        return scn.drop(1)
    weight, chan = merged_rest_channel(scn, scn.n_users)
    r_last = scn.ratios[scn.n_users - 1]
    return equivalent_channel_reduction(
        weight / (weight + r_last), chan, scn.drop(scn.n_users)
    )


def upper_limit_p2p(scn: NetworkScenario, beta: float | None = None) -> float:
    """Upper limit via the feeder-equivalent point-to-point link.

    Co-located users can undo the (unitary) splitter tree, which turns
    the network into a single link through the feeder composed with the
    recombined drop channel; evaluated with user 1's detector.
    """
    beta = scn.beta if beta is None else beta
    chan = scn.feeder.compose(_total_broadcast_channel(scn))
    sys = point_to_point_state(chan, scn.source_variance, scn.detectors[0])
    return key_rate_user(sys, 1, beta).k_raw


def lower_limit(scn: NetworkScenario, user: int, beta: float | None = None) -> float:
    """Worst-case rate of one user: every other user sides with Eve.

    The splitter tree then counts as loss; user i sees a point-to-point
    link of transmittance T r_i T'_i with all noise attributed to Eve.
    """
    beta = scn.beta if beta is None else beta
    scn._check_user(user)
    chan = (
        scn.feeder
        .compose(ChannelParams(scn.ratios[user - 1]))
        .compose(scn.drop(user))
    )
    sys = point_to_point_state(chan, scn.source_variance, scn.detectors[user - 1])
    return key_rate_user(sys, 1, beta).k_raw


@dataclass(frozen=True)
class KeyRateReport:
    """Network totals plus the per-user decomposition."""

    users: tuple[UserRate, ...]
    k_tot: float
    k_ub: float
    k_ub_p2p: float | None = None
    k_lb: float | None = None

    @property
    def ratio(self) -> float:
        if self.k_ub <= 0.0:
            return math.nan
        return self.k_tot / self.k_ub


def key_rate_total(
    sys: GaussianSystem,
    beta: float,
    scn: NetworkScenario | None = None,
    assume_symmetric: bool = False,
    tol: float = PHYSICALITY_TOL,
) -> KeyRateReport:
    """Sum of clamped per-user rates plus both limits.

    assume_symmetric evaluates user 1 only and replicates it, which is
    exact for uniform scenarios with identical drops and detectors.
    """
    users = user_numbers(sys)
    if not users:
        raise ValueError("state contains no bob modes")
    if assume_symmetric:
        first = key_rate_user(sys, users[0], beta, tol)
        rates = tuple(
            UserRate(
                user=u,
                mi_alice=first.mi_alice,
                mi_rest=first.mi_rest,
                holevo=first.holevo,
                beta=beta,
            )
            for u in users
        )
    else:
        rates = tuple(key_rate_user(sys, u, beta, tol) for u in users)
    k_tot = sum(r.k_clamped for r in rates)
    k_ub = upper_limit_joint(sys, beta, tol)
    k_ub_p2p = upper_limit_p2p(scn, beta) if scn is not None else None
    k_lb = (
        min(lower_limit(scn, u, beta) for u in users) if scn is not None else None
    )
    return KeyRateReport(
        users=rates, k_tot=k_tot, k_ub=k_ub, k_ub_p2p=k_ub_p2p, k_lb=k_lb
    )


def network_report(scn: NetworkScenario, beta: float | None = None) -> KeyRateReport:
    """Build the scenario's state and report all rates and limits."""
    beta = scn.beta if beta is None else beta
    sys = build_network_state(scn)
    return key_rate_total(
        sys,
        beta,
        scn=scn,
        assume_symmetric=scn.is_symmetric() and scn.n_users > 1,
    )


@dataclass(frozen=True)
class OptimalModulation:
    v_mod: float
    k_tot: float
    saturated: bool


INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def optimize_modulation_variance(
    scn: NetworkScenario,
    bounds: tuple[float, float] = (0.1, 100.0),
    tol: float = 1e-3,
) -> OptimalModulation:
    """Golden-section maximiser of K_tot over the modulation variance.

    Converges to absolute tolerance `tol` (SNU).  If the maximum sits on
    the upper bound (rate still rising there), returns the bound itself
    with saturated=True.
    """
    lo, hi = bounds
    if not 0.0 < lo < hi:
        raise ValueError(f"need 0 < lo < hi, got {bounds}")

    def objective(v_mod: float) -> float:
        return network_report(scn.with_modulation_variance(v_mod)).k_tot

    a, b = lo, hi
    c, d = b - INVPHI * (b - a), a + INVPHI * (b - a)
    fc, fd = objective(c), objective(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - INVPHI * (b - a)
            fc = objective(c)
        else:
            a, c, fc = c, d, fd
            d = a + INVPHI * (b - a)
            fd = objective(d)
    x = 0.5 * (a + b)
    fx = objective(x)
    f_hi = objective(hi)
    if f_hi >= fx:
        return OptimalModulation(v_mod=hi, k_tot=f_hi, saturated=True)
    return OptimalModulation(v_mod=x, k_tot=fx, saturated=False)


def bits_per_second(
    rate_bits_per_pulse: float, baud_hz: float, overhead: float = 0.0
) -> float:
    """Convert a per-pulse rate to bit/s at the given symbol rate.

    overhead is the fraction of symbols spent on parameter estimation
    and other protocol duties rather than key.
    """
    if baud_hz <= 0.0:
        raise ValueError("symbol rate must be > 0")
    if not 0.0 <= overhead <= 1.0:
        raise ValueError("overhead must be in [0, 1]")
    return rate_bits_per_pulse * baud_hz * (1.0 - overhead)
