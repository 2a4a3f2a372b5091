"""Synthetic raw data and covariance estimation.

Generates heterodyne outcome records for a network scenario, converts
between the modulation frame (what a transmitter logs) and the
entanglement-equivalent heterodyne frame, and reconstructs the full
covariance matrix, trusted detector modes included, from finite samples.
"""
from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .channels import NetworkScenario, build_network_state
from .gaussian import GaussianSystem, bob_label, det_label
from .keyrate import KeyRateReport, key_rate_total, outcome_covariance

SAMPLE_SCHEMA = "cvqnet-samples-v1"

HETERODYNE_FRAME = "heterodyne"
MODULATION_FRAME = "modulation"


def sample_columns(n_users: int) -> tuple[str, ...]:
    cols = ["a_x", "a_p"]
    for i in range(1, n_users + 1):
        cols += [f"b{i}_x", f"b{i}_p"]
    return tuple(cols)


@dataclass(frozen=True)
class QuadratureSamples:
    """Raw heterodyne records, one row per symbol.

    Column order is ``a_x, a_p, b1_x, b1_p, ...``.  ``alice_frame`` says
    whether the first two columns hold heterodyne outcomes of the
    entanglement-equivalent source or transmitter modulation data.
    """

    data: np.ndarray
    scenario: NetworkScenario
    seed: int | None = None
    alice_frame: str = HETERODYNE_FRAME

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        want = 2 * (1 + self.scenario.n_users)
        if data.ndim != 2 or data.shape[1] != want:
            raise ValueError(
                f"expected an (M, {want}) sample array, got {data.shape}"
            )
        if data.shape[0] < 1:
            raise ValueError("need at least one sample row")
        if not np.isfinite(data).all():
            raise ValueError("samples must be finite")
        if self.alice_frame not in (HETERODYNE_FRAME, MODULATION_FRAME):
            raise ValueError(f"unknown alice_frame {self.alice_frame!r}")

    @property
    def n_samples(self) -> int:
        return self.data.shape[0]

    @property
    def columns(self) -> tuple[str, ...]:
        return sample_columns(self.scenario.n_users)


def outcome_sigma(scn: NetworkScenario) -> np.ndarray:
    """Covariance of the (alice, bob1..bobN) heterodyne outcome vector."""
    sys = build_network_state(scn)
    measured = ["alice"] + [bob_label(i) for i in range(1, scn.n_users + 1)]
    return outcome_covariance(sys, measured).sigma


def sample_outcomes(
    scn: NetworkScenario, m: int, seed: int | None = None
) -> QuadratureSamples:
    """Draw ``m`` independent symbols of every party's heterodyne data."""
    if m < 1:
        raise ValueError(f"sample count must be >= 1, got {m}")
    sigma = outcome_sigma(scn)
    chol = np.linalg.cholesky(sigma)
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((m, sigma.shape[0])) @ chol.T
    return QuadratureSamples(data, scn, seed=seed)


def modulation_scale(v: float) -> float:
    """Source-replacement factor between modulation data and outcomes."""
    if v <= 1.0:
        raise ValueError(f"source variance must exceed 1, got {v}")
    return float(np.sqrt(2.0 * (v - 1.0) / (v + 1.0)))


def source_replacement(a_data: np.ndarray, v: float) -> np.ndarray:
    """Map transmitter modulation data to equivalent heterodyne outcomes."""
    return np.asarray(a_data, dtype=float) / modulation_scale(v)


def to_modulation_frame(samples: QuadratureSamples) -> QuadratureSamples:
    if samples.alice_frame == MODULATION_FRAME:
        return samples
    scale = modulation_scale(samples.scenario.source_variance)
    data = samples.data.copy()
    data[:, :2] *= scale
    return replace(samples, data=data, alice_frame=MODULATION_FRAME)


def to_heterodyne_frame(samples: QuadratureSamples) -> QuadratureSamples:
    if samples.alice_frame == HETERODYNE_FRAME:
        return samples
    data = samples.data.copy()
    data[:, :2] = source_replacement(data[:, :2], samples.scenario.source_variance)
    return replace(samples, data=data, alice_frame=HETERODYNE_FRAME)


def outcome_stderr(sigma: np.ndarray, m: int) -> np.ndarray:
    """Standard error of each raw second-moment estimate at sample size m."""
    d = np.diag(sigma)
    return np.sqrt((np.outer(d, d) + sigma**2) / m)


def empirical_sigma(samples: QuadratureSamples) -> np.ndarray:
    """Raw second moments; the model mean is zero, so none is subtracted."""
    hetero = to_heterodyne_frame(samples)
    return hetero.data.T @ hetero.data / hetero.n_samples


def system_from_sigma(sigma: np.ndarray, scn: NetworkScenario) -> GaussianSystem:
    """Rebuild the full state, detector modes included, from outcome moments.

    Inverts the heterodyne map on the measured modes, backs the trusted
    splitter out of every bob block, and synthesizes the detector rows the
    splitter model implies.  Finite-sample noise can make the result
    mildly unphysical; it is returned as is.
    """
    n = scn.n_users
    dim = 2 * (1 + n)
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape != (dim, dim):
        raise ValueError(f"expected a {dim}x{dim} outcome covariance")
    gm = 2.0 * sigma - np.eye(dim)

    etas = [scn.detectors[i].effective_transmittance for i in range(n)]
    labels = (
        ["alice"]
        + [bob_label(i) for i in range(1, n + 1)]
        + [det_label(i) for i in range(1, n + 1)]
    )
    full = np.zeros((2 * (1 + 2 * n), 2 * (1 + 2 * n)))
    i2 = np.eye(2)

    def blk(mat, i, j):
        return mat[2 * i: 2 * i + 2, 2 * j: 2 * j + 2]

    def put(i, j, val):
        full[2 * i: 2 * i + 2, 2 * j: 2 * j + 2] = val
        full[2 * j: 2 * j + 2, 2 * i: 2 * i + 2] = np.asarray(val).T

    put(0, 0, blk(gm, 0, 0))
    # pre-detector bob blocks, then measured and ancilla rows from the model
    pre = []
    for i in range(n):
        eta = etas[i]
        pre.append((blk(gm, 1 + i, 1 + i) - (1.0 - eta) * i2) / eta)
    for i in range(n):
        eta = etas[i]
        b, d = 1 + i, 1 + n + i
        put(b, b, blk(gm, b, b))
        put(d, d, (1.0 - eta) * pre[i] + eta * i2)
        put(b, d, np.sqrt(eta * (1.0 - eta)) * (i2 - pre[i]))
        put(0, b, blk(gm, 0, b))
        put(0, d, -np.sqrt((1.0 - eta) / eta) * blk(gm, 0, b))
        for j in range(i + 1, n):
            etj = etas[j]
            bj, dj = 1 + j, 1 + n + j
            cross = blk(gm, b, bj)
            pre_cross = cross / np.sqrt(eta * etj)
            put(b, bj, cross)
            put(d, dj, np.sqrt((1.0 - eta) * (1.0 - etj)) * pre_cross)
            put(b, dj, -np.sqrt(eta * (1.0 - etj)) * pre_cross)
            put(d, bj, -np.sqrt((1.0 - eta) * etj) * pre_cross)

    full = 0.5 * (full + full.T)
    return GaussianSystem(full, tuple(labels))


def statistical_tolerance(sigma: np.ndarray, m: int, etas) -> float:
    """Vacuum-band slack justified by sampling noise at sample size m.

    Reconstructed entries carry twice the raw-moment error (gamma = 2
    sigma - 1), the detector back-out divides by eta, and the smallest
    symplectic eigenvalue of the near-pure global state accumulates the
    correlated perturbation across the synthesized blocks at roughly
    operator-norm scale, observed up to ~6 entry sigmas at small m.
    """
    return 8.0 * float(outcome_stderr(sigma, m).max()) / min(etas)


def _detector_transmittances(scn: NetworkScenario) -> list[float]:
    return [scn.detectors[i].effective_transmittance for i in range(scn.n_users)]


def estimate_covariance(samples: QuadratureSamples) -> GaussianSystem:
    """Finite-sample covariance reconstruction for the full trusted state.

    Warns, without rejecting, when the result is unphysical beyond what
    sampling noise explains.
    """
    sigma = empirical_sigma(samples)
    out = system_from_sigma(sigma, samples.scenario)
    tol = statistical_tolerance(
        sigma, samples.n_samples, _detector_transmittances(samples.scenario)
    )
    if not out.is_physical(tol):
        warnings.warn(
            "reconstructed covariance matrix is unphysical beyond the "
            "sampling-noise band; treat derived quantities with care",
            stacklevel=2,
        )
    return out


def keyrate_from_samples(
    samples: QuadratureSamples, beta: float | None = None
) -> KeyRateReport:
    """Estimation pipeline end to end: samples to key-rate report.

    Entropies are evaluated with the vacuum-limit band widened to the
    sampling-noise tolerance, so slightly unphysical estimates still
    yield rates instead of raising.
    """
    scn = samples.scenario
    sigma = empirical_sigma(samples)
    sys = system_from_sigma(sigma, scn)
    tol = statistical_tolerance(sigma, samples.n_samples, _detector_transmittances(scn))
    return key_rate_total(
        sys, scn.beta if beta is None else beta, scn=scn, tol=max(tol, 1e-7)
    )


def save_samples(
    samples: QuadratureSamples, path: str | Path, *, timestamp: bool = True
) -> None:
    """Write one CSV row per symbol plus a JSON metadata sidecar."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        fh.write(f"# schema: {SAMPLE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(samples.columns)
        for row in samples.data:
            writer.writerow([f"{v:.17g}" for v in row])
    meta = {
        "schema": SAMPLE_SCHEMA,
        "scenario": samples.scenario.as_dict(),
        "seed": samples.seed,
        "n_samples": samples.n_samples,
        "alice_frame": samples.alice_frame,
    }
    if timestamp:
        meta["created"] = datetime.now(timezone.utc).isoformat()
    sidecar_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def load_samples(path: str | Path) -> QuadratureSamples:
    path = Path(path)
    meta = json.loads(sidecar_path(path).read_text())
    if meta.get("schema") != SAMPLE_SCHEMA:
        raise ValueError(f"unsupported sample schema {meta.get('schema')!r}")
    scn = NetworkScenario.from_dict(meta["scenario"])
    with path.open() as fh:
        rows = [line for line in fh if not line.startswith("#")]
    data = np.loadtxt(rows, delimiter=",", skiprows=1)
    if data.ndim == 1:
        data = data[None, :]
    return QuadratureSamples(
        data, scn, seed=meta.get("seed"), alice_frame=meta["alice_frame"]
    )


def sidecar_path(path: str | Path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".meta.json")
