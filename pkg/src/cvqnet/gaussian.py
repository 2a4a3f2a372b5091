"""Gaussian states as covariance matrices, in shot-noise units.

A state of n modes is a real symmetric 2n x 2n covariance matrix in the
quadrature ordering (x1, p1, x2, p2, ...), normalised so that the vacuum
has variance 1 on every quadrature.  Every mode carries a role label
("alice", "bob<i>", "det<i>" or "aux") so that higher layers can address
modes by role instead of position.

All operations are pure functions: they validate their inputs, never
mutate, and return fresh GaussianSystem instances.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

# Pauli-Z on one mode; appears in two-mode-squeezed cross blocks.
Z2 = np.diag([1.0, -1.0])
I2 = np.eye(2)

# Tolerances shared across the module.
SYMMETRY_RTOL = 1e-9
PHYSICALITY_TOL = 1e-7

_LABEL_RE = re.compile(r"^(alice|aux\d*|bob([1-9]\d*)|det([1-9]\d*))$")


class UnphysicalStateError(ValueError):
    """A covariance matrix violates the uncertainty bound nu >= 1."""


class NumericalDegeneracyError(ArithmeticError):
    """A matrix needed by a conditioning or log-det step is singular."""


def bob_label(i: int) -> str:
    return f"bob{i}"


def det_label(i: int) -> str:
    return f"det{i}"


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form, [[0, 1], [-1, 0]] per mode."""
    omega1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
    out = np.zeros((2 * n_modes, 2 * n_modes))
    for k in range(n_modes):
        out[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = omega1
    return out


def _check_label(label: str) -> None:
    if not _LABEL_RE.match(label):
        raise ValueError(f"unrecognised mode label {label!r}")


@dataclass(frozen=True)
class GaussianSystem:
    """Covariance matrix plus one role label per mode.

    The constructor enforces shape, symmetry (relative tolerance 1e-9)
    and label sanity; physicality is checked where it is consumed, by
    symplectic_eigenvalues.
    """

    cm: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        cm = np.asarray(self.cm, dtype=float)
        object.__setattr__(self, "cm", cm)
        object.__setattr__(self, "labels", tuple(self.labels))
        n = len(self.labels)
        if cm.shape != (2 * n, 2 * n):
            raise ValueError(
                f"covariance shape {cm.shape} does not match {n} labelled modes"
            )
        if not np.all(np.isfinite(cm)):
            raise ValueError("covariance matrix contains non-finite entries")
        scale = max(1.0, float(np.max(np.abs(cm))))
        if np.max(np.abs(cm - cm.T)) > SYMMETRY_RTOL * scale:
            raise ValueError("covariance matrix is not symmetric")
        for lab in self.labels:
            _check_label(lab)
        seen = [lab for lab in self.labels if lab != "aux"]
        if len(seen) != len(set(seen)):
            raise ValueError(f"duplicate role labels in {self.labels}")

    @property
    def n_modes(self) -> int:
        return len(self.labels)

    def mode_index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValueError(f"no mode labelled {label!r} in {self.labels}") from None

    def bob_indices(self) -> list[int]:
        """Positions of bob modes, sorted by user number."""
        pairs = []
        for pos, lab in enumerate(self.labels):
            m = re.match(r"^bob(\d+)$", lab)
            if m:
                pairs.append((int(m.group(1)), pos))
        return [pos for _, pos in sorted(pairs)]

    def detector_indices(self) -> list[int]:
        pairs = []
        for pos, lab in enumerate(self.labels):
            m = re.match(r"^det(\d+)$", lab)
            if m:
                pairs.append((int(m.group(1)), pos))
        return [pos for _, pos in sorted(pairs)]

    def block(self, i: int, j: int) -> np.ndarray:
        """2x2 covariance block between modes i and j."""
        return self.cm[2 * i : 2 * i + 2, 2 * j : 2 * j + 2].copy()

    def relabeled(self, mapping: dict[str, str]) -> "GaussianSystem":
        labels = tuple(mapping.get(lab, lab) for lab in self.labels)
        return GaussianSystem(self.cm.copy(), labels)

    def reordered(self, order: list[str]) -> "GaussianSystem":
        """Permute modes into the given label order (must be exhaustive)."""
        if sorted(order) != sorted(self.labels):
            raise ValueError("reorder list must name every mode exactly once")
        idx = [self.mode_index(lab) for lab in order]
        q = np.concatenate([[2 * i, 2 * i + 1] for i in idx])
        return GaussianSystem(self.cm[np.ix_(q, q)], tuple(order))

    def is_physical(self, tol: float = PHYSICALITY_TOL) -> bool:
        omega = symplectic_form(self.n_modes)
        nu = np.abs(np.linalg.eigvals(1j * omega @ self.cm))
        return bool(np.min(nu) >= 1.0 - tol)


@dataclass(frozen=True)
class SymplecticMap:
    """A linear symplectic transformation S, applied as S cm S^T."""

    s: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        object.__setattr__(self, "s", s)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] % 2:
            raise ValueError(f"symplectic matrix has invalid shape {s.shape}")
        omega = symplectic_form(s.shape[0] // 2)
        if np.max(np.abs(s @ omega @ s.T - omega)) > 1e-9:
            raise ValueError("matrix does not preserve the symplectic form")

    @property
    def n_modes(self) -> int:
        return self.s.shape[0] // 2

    def apply(self, sys: GaussianSystem) -> GaussianSystem:
        if sys.n_modes != self.n_modes:
            raise ValueError("mode-count mismatch between map and state")
        cm = self.s @ sys.cm @ self.s.T
        return GaussianSystem(0.5 * (cm + cm.T), sys.labels)


def vacuum_state(n_modes: int, labels: tuple[str, ...] | None = None) -> GaussianSystem:
    """n-mode vacuum, identity covariance."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    if labels is None:
        labels = tuple("aux" for _ in range(n_modes))
    return GaussianSystem(np.eye(2 * n_modes), labels)


def thermal_state(variance: float, label: str = "aux") -> GaussianSystem:
    """Single mode with quadrature variance V >= 1."""
    if variance < 1.0:
        raise ValueError(f"thermal variance must be >= 1, got {variance}")
    return GaussianSystem(variance * np.eye(2), (label,))


def epr_state(
    variance: float, labels: tuple[str, str] = ("alice", "aux")
) -> GaussianSystem:
    """Two-mode squeezed vacuum with quadrature variance V per arm.

    Diagonal blocks V*I2, off-diagonal blocks sqrt(V^2-1)*diag(1,-1);
    V = 1 gives the two-mode vacuum.
    """
    if variance < 1.0:
        raise ValueError(f"EPR variance must be >= 1, got {variance}")
    c = math.sqrt(variance * variance - 1.0)
    cm = np.block([[variance * I2, c * Z2], [c * Z2, variance * I2]])
    return GaussianSystem(cm, labels)


def attach_vacuum(sys: GaussianSystem, label: str = "aux") -> GaussianSystem:
    """Append one uncorrelated vacuum mode at the end."""
    n = sys.n_modes
    cm = np.eye(2 * n + 2)
    cm[: 2 * n, : 2 * n] = sys.cm
    return GaussianSystem(cm, sys.labels + (label,))


def beam_splitter_matrix(
    n_modes: int, i: int, j: int, transmittance: float
) -> SymplecticMap:
    """Symplectic of a beam splitter between modes i and j.

    Mode i keeps +sqrt(eta) of itself and gains +sqrt(1-eta) of mode j;
    mode j keeps +sqrt(eta) and gains -sqrt(1-eta) of mode i.
    """
    if not 0.0 <= transmittance <= 1.0:
        raise ValueError(f"transmittance must lie in [0, 1], got {transmittance}")
    if i == j or not (0 <= i < n_modes and 0 <= j < n_modes):
        raise ValueError(f"invalid mode pair ({i}, {j}) for {n_modes} modes")
    t = math.sqrt(transmittance)
    r = math.sqrt(1.0 - transmittance)
    s = np.eye(2 * n_modes)
    si, sj = slice(2 * i, 2 * i + 2), slice(2 * j, 2 * j + 2)
    s[si, si] = t * I2
    s[si, sj] = r * I2
    s[sj, si] = -r * I2
    s[sj, sj] = t * I2
    return SymplecticMap(s)


def beam_splitter(
    sys: GaussianSystem, label_i: str, label_j: str, transmittance: float
) -> GaussianSystem:
    """Mix two labelled modes on a beam splitter of given transmittance."""
    i = sys.mode_index(label_i)
    j = sys.mode_index(label_j)
    return beam_splitter_matrix(sys.n_modes, i, j, transmittance).apply(sys)


def partial_trace(sys: GaussianSystem, keep: list[str]) -> GaussianSystem:
    """Restrict to the named modes (order as given)."""
    if len(keep) == 0:
        raise ValueError("must keep at least one mode")
    idx = [sys.mode_index(lab) for lab in keep]
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate labels in keep list")
    q = np.concatenate([[2 * i, 2 * i + 1] for i in idx])
    return GaussianSystem(sys.cm[np.ix_(q, q)], tuple(keep))


def _split_indices(n_modes: int, measured: int) -> tuple[np.ndarray, np.ndarray]:
    rest = [m for m in range(n_modes) if m != measured]
    qr = np.concatenate([[2 * m, 2 * m + 1] for m in rest])
    qm = np.array([2 * measured, 2 * measured + 1])
    return qr, qm


def heterodyne_condition(sys: GaussianSystem, label: str) -> GaussianSystem:
    """Remaining state after a heterodyne measurement of one mode.

    Gaussian conditioning: gamma_R - sigma (gamma_m + I)^-1 sigma^T.
    The outcome itself does not enter; heterodyne statistics live in
    keyrate.outcome_covariance.
    """
    if sys.n_modes < 2:
        raise ValueError("cannot condition away the only mode")
    m = sys.mode_index(label)
    qr, qm = _split_indices(sys.n_modes, m)
    gm = sys.cm[np.ix_(qm, qm)] + I2
    sigma = sys.cm[np.ix_(qr, qm)]
    if np.linalg.cond(gm) > 1e12:
        raise NumericalDegeneracyError("heterodyne conditioning matrix is singular")
    out = sys.cm[np.ix_(qr, qr)] - sigma @ np.linalg.inv(gm) @ sigma.T
    labels = tuple(lab for k, lab in enumerate(sys.labels) if k != m)
    return GaussianSystem(0.5 * (out + out.T), labels)


def homodyne_condition(
    sys: GaussianSystem, label: str, quadrature: str = "x"
) -> GaussianSystem:
    """Remaining state after homodyning one quadrature of one mode.

    Uses the pseudo-inverse form gamma_R - sigma (X gamma_m X)^+ sigma^T
    with X the projector onto the measured quadrature.
    """
    if quadrature not in ("x", "p"):
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    if sys.n_modes < 2:
        raise ValueError("cannot condition away the only mode")
    m = sys.mode_index(label)
    qr, qm = _split_indices(sys.n_modes, m)
    x = np.diag([1.0, 0.0]) if quadrature == "x" else np.diag([0.0, 1.0])
    gm = x @ sys.cm[np.ix_(qm, qm)] @ x
    v = gm[0, 0] if quadrature == "x" else gm[1, 1]
    if v <= 1e-12:
        raise NumericalDegeneracyError(
            f"measured quadrature variance {v} too small to condition on"
        )
    sigma = sys.cm[np.ix_(qr, qm)]
    out = sys.cm[np.ix_(qr, qr)] - sigma @ np.linalg.pinv(gm) @ sigma.T
    labels = tuple(lab for k, lab in enumerate(sys.labels) if k != m)
    return GaussianSystem(0.5 * (out + out.T), labels)


def symplectic_eigenvalues(
    sys: GaussianSystem, tol: float = PHYSICALITY_TOL
) -> np.ndarray:
    """Symplectic spectrum, ascending, one value per mode.

    Computed as the magnitudes of the eigenvalues of i*Omega*cm, which
    come in equal pairs; pairs are averaged.  Values inside the band
    [1 - tol, 1) are clamped to exactly 1; anything lower raises
    UnphysicalStateError.  The default tol absorbs roundoff only;
    statistically estimated states warrant a wider band.
    """
    omega = symplectic_form(sys.n_modes)
    mags = np.sort(np.abs(np.linalg.eigvals(1j * omega @ sys.cm)))
    nu = 0.5 * (mags[0::2] + mags[1::2])
    low = float(np.min(nu))
    if low < 1.0 - tol:
        raise UnphysicalStateError(
            f"symplectic eigenvalue {low} below the vacuum limit"
        )
    return np.where(nu < 1.0, 1.0, nu)


def entropy_g(x: float) -> float:
    """g(x) = (x+1) log2 (x+1) - x log2 x, the thermal-mode entropy."""
    if x < 1e-12:
        return 0.0
    return (x + 1.0) * math.log2(x + 1.0) - x * math.log2(x)


def von_neumann_entropy(sys: GaussianSystem, tol: float = PHYSICALITY_TOL) -> float:
    """Entropy in bits, sum of g((nu - 1)/2) over the symplectic spectrum."""
    return float(
        sum(entropy_g(0.5 * (nu - 1.0)) for nu in symplectic_eigenvalues(sys, tol))
    )
