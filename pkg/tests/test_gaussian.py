"""Covariance-matrix core: frozen values, independent oracles, invariants."""

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from cvqnet.gaussian import (
    GaussianSystem,
    NumericalDegeneracyError,
    SymplecticMap,
    UnphysicalStateError,
    attach_vacuum,
    beam_splitter,
    beam_splitter_matrix,
    entropy_g,
    epr_state,
    heterodyne_condition,
    homodyne_condition,
    partial_trace,
    symplectic_eigenvalues,
    symplectic_form,
    thermal_state,
    vacuum_state,
    von_neumann_entropy,
)

# Frozen with mpmath at 30 digits: g((5.3-1)/2) and sqrt(5.3^2 - 1).
ENTROPY_THERMAL_5P3 = 2.840034441527864
EPR_CROSS_5P3 = 5.204805471869242


def quad_idx(modes):
    return np.concatenate([[2 * m, 2 * m + 1] for m in modes])


def oracle_spectrum(cm):
    """Symplectic spectrum via scipy on Omega@cm (eigenvalues +-i nu)."""
    n = cm.shape[0] // 2
    ev = scipy.linalg.eigvals(symplectic_form(n) @ cm)
    nus = np.sort(np.abs(ev.imag))
    return 0.5 * (nus[0::2] + nus[1::2])


def oracle_entropy(cm):
    return sum(entropy_g(0.5 * (nu - 1.0)) for nu in oracle_spectrum(cm))


def oracle_joint_heterodyne(cm, keep, measured):
    """Condition on several modes in one Schur complement."""
    qk, qm = quad_idx(keep), quad_idx(measured)
    gm = cm[np.ix_(qm, qm)] + np.eye(len(qm))
    sig = cm[np.ix_(qk, qm)]
    return cm[np.ix_(qk, qk)] - sig @ np.linalg.inv(gm) @ sig.T


def random_mixed_system(rng, n_modes):
    """Random physical state from thermals stirred by beam splitters."""
    labels = tuple(f"aux{k}" for k in range(n_modes))
    cm = np.diag(np.repeat(rng.uniform(1.0, 6.0, n_modes), 2))
    sys = GaussianSystem(cm, labels)
    for _ in range(2 * n_modes):
        i, j = rng.choice(n_modes, size=2, replace=False)
        sys = beam_splitter(sys, labels[i], labels[j], rng.uniform(0.05, 0.95))
    return sys


def random_pure_system(rng, n_pairs):
    """Random pure state: EPR pairs stirred by beam splitters."""
    sys = epr_state(rng.uniform(1.0, 8.0), ("aux0", "aux1"))
    for k in range(1, n_pairs):
        extra = epr_state(rng.uniform(1.0, 8.0), (f"aux{2*k}", f"aux{2*k+1}"))
        cm = scipy.linalg.block_diag(sys.cm, extra.cm)
        sys = GaussianSystem(cm, sys.labels + extra.labels)
    labels = sys.labels
    for _ in range(3 * n_pairs):
        i, j = rng.choice(len(labels), size=2, replace=False)
        sys = beam_splitter(sys, labels[i], labels[j], rng.uniform(0.05, 0.95))
    return sys


def test_vacuum_is_identity():
    sys = vacuum_state(3)
    assert np.array_equal(sys.cm, np.eye(6))
    assert von_neumann_entropy(sys) == 0.0
    assert np.allclose(symplectic_eigenvalues(sys), 1.0)


def test_epr_blocks():
    sys = epr_state(5.3)
    assert np.allclose(sys.block(0, 0), 5.3 * np.eye(2))
    assert np.allclose(sys.block(0, 1), np.diag([EPR_CROSS_5P3, -EPR_CROSS_5P3]))
    assert np.allclose(symplectic_eigenvalues(sys), [1.0, 1.0])
    assert epr_state(1.0).cm == pytest.approx(np.eye(4))


def test_epr_below_vacuum_rejected():
    with pytest.raises(ValueError):
        epr_state(0.9)
    with pytest.raises(ValueError):
        thermal_state(0.5)


def test_beam_splitter_identity_and_vacuum():
    sys = attach_vacuum(epr_state(3.0), "aux2")
    out = beam_splitter(sys, "aux", "aux2", 1.0)
    assert np.allclose(out.cm, sys.cm)
    vac = beam_splitter(vacuum_state(2, ("aux1", "aux2")), "aux1", "aux2", 0.37)
    assert np.allclose(vac.cm, np.eye(4), atol=1e-14)


def test_beam_splitter_mixes_epr_arm():
    sys = attach_vacuum(epr_state(2.0), "aux2")
    out = beam_splitter(sys, "aux", "aux2", 0.5)
    assert np.allclose(out.block(1, 1), 1.5 * np.eye(2))
    assert np.allclose(out.block(2, 2), 1.5 * np.eye(2))


def test_beam_splitter_bad_arguments():
    sys = vacuum_state(2, ("aux1", "aux2"))
    with pytest.raises(ValueError):
        beam_splitter(sys, "aux1", "aux2", 1.2)
    with pytest.raises(ValueError):
        beam_splitter(sys, "aux1", "aux1", 0.5)
    with pytest.raises(ValueError):
        beam_splitter(sys, "aux1", "aux3", 0.5)


def test_partial_trace_of_epr_is_thermal():
    sys = epr_state(4.0)
    arm = partial_trace(sys, ["alice"])
    assert np.allclose(arm.cm, 4.0 * np.eye(2))
    assert arm.labels == ("alice",)


def test_heterodyne_product_state_unchanged():
    sys = GaussianSystem(np.diag([3.0, 3.0, 2.0, 2.0]), ("aux1", "aux2"))
    out = heterodyne_condition(sys, "aux2")
    assert np.allclose(out.cm, 3.0 * np.eye(2))


def test_heterodyne_epr_arm_gives_vacuum():
    for v in (1.0, 2.5, 10.0, 1e4):
        out = heterodyne_condition(epr_state(v), "aux")
        assert np.max(np.abs(out.cm - np.eye(2))) < 1e-10


def test_heterodyne_order_independent():
    rng = np.random.default_rng(7)
    sys = random_mixed_system(rng, 4)
    a = heterodyne_condition(heterodyne_condition(sys, "aux1"), "aux3")
    b = heterodyne_condition(heterodyne_condition(sys, "aux3"), "aux1")
    assert np.allclose(a.cm, b.cm, atol=1e-12)
    assert a.labels == b.labels


def test_sequential_matches_joint_conditioning():
    rng = np.random.default_rng(21)
    sys = random_mixed_system(rng, 5)
    seq = heterodyne_condition(heterodyne_condition(sys, "aux0"), "aux2")
    joint = oracle_joint_heterodyne(sys.cm, [1, 3, 4], [0, 2])
    assert np.allclose(seq.cm, joint, atol=1e-11)


def test_homodyne_epr_arm():
    out = homodyne_condition(epr_state(5.0), "aux", "x")
    assert np.allclose(out.cm, np.diag([0.2, 5.0]))
    out = homodyne_condition(epr_state(5.0), "aux", "p")
    assert np.allclose(out.cm, np.diag([5.0, 0.2]))


def test_homodyne_degenerate_quadrature():
    cm = scipy.linalg.block_diag(np.diag([1e-13, 1e13]), np.eye(2))
    sys = GaussianSystem(cm, ("aux1", "aux2"))
    with pytest.raises(NumericalDegeneracyError):
        homodyne_condition(sys, "aux1", "x")


def test_spectrum_thermal_and_entropy_value():
    sys = thermal_state(5.3)
    assert symplectic_eigenvalues(sys) == pytest.approx([5.3])
    assert von_neumann_entropy(sys) == pytest.approx(ENTROPY_THERMAL_5P3, abs=1e-12)


def test_spectrum_clamps_roundoff_below_one():
    eps = 5e-8  # inside the clamp band
    sys = GaussianSystem((1.0 - eps) * np.eye(2), ("aux",))
    assert symplectic_eigenvalues(sys) == pytest.approx([1.0])
    assert von_neumann_entropy(sys) == 0.0


def test_spectrum_rejects_unphysical():
    sys = GaussianSystem(0.5 * np.eye(2), ("aux",))
    with pytest.raises(UnphysicalStateError):
        symplectic_eigenvalues(sys)
    assert not sys.is_physical()


def test_entropy_matches_oracle_on_random_states():
    rng = np.random.default_rng(3)
    for n in (2, 3, 5):
        sys = random_mixed_system(rng, n)
        assert von_neumann_entropy(sys) == pytest.approx(
            oracle_entropy(sys.cm), abs=1e-9
        )


def test_entropy_g_limits():
    assert entropy_g(0.0) == 0.0
    assert entropy_g(1e-13) == 0.0
    # reference point: g(1) = 2
    assert entropy_g(1.0) == pytest.approx(2.0)


def test_constructor_validation():
    with pytest.raises(ValueError):
        GaussianSystem(np.eye(3), ("aux",))
    with pytest.raises(ValueError):
        GaussianSystem(np.array([[1.0, 0.5], [0.4, 1.0]]), ("aux",))
    with pytest.raises(ValueError):
        GaussianSystem(np.eye(4), ("bob1", "bob1"))
    with pytest.raises(ValueError):
        GaussianSystem(np.eye(2), ("carol",))
    with pytest.raises(ValueError):
        GaussianSystem(np.full((2, 2), np.nan), ("aux",))


def test_symplectic_map_validation():
    with pytest.raises(ValueError):
        SymplecticMap(np.diag([2.0, 1.0]))  # squeezer missing its partner scaling
    SymplecticMap(np.diag([2.0, 0.5]))  # proper single-mode squeezer passes


def test_reordered_and_relabeled():
    sys = attach_vacuum(epr_state(3.0, ("alice", "bob1")), "det1")
    out = sys.reordered(["det1", "alice", "bob1"])
    assert out.labels == ("det1", "alice", "bob1")
    assert np.allclose(out.block(1, 2), sys.block(0, 1))
    ren = sys.relabeled({"bob1": "bob2"})
    assert ren.labels == ("alice", "bob2", "det1")
    with pytest.raises(ValueError):
        sys.reordered(["alice", "bob1"])


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.integers(2, 5),
    eta=st.floats(0.0, 1.0),
)
def test_beam_splitter_preserves_spectrum(seed, n, eta):
    """Passive two-mode mixing never changes the symplectic spectrum."""
    rng = np.random.default_rng(seed)
    sys = random_mixed_system(rng, n)
    i, j = rng.choice(n, size=2, replace=False)
    out = beam_splitter(sys, sys.labels[i], sys.labels[j], eta)
    before = symplectic_eigenvalues(sys)
    after = symplectic_eigenvalues(out)
    assert np.max(np.abs(np.sort(before) - np.sort(after))) < 1e-8


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_pairs=st.integers(1, 3))
def test_purification_entropy_split(seed, n_pairs):
    """For a pure global state, both halves of any cut have equal entropy."""
    rng = np.random.default_rng(seed)
    sys = random_pure_system(rng, n_pairs)
    labels = list(sys.labels)
    k = int(rng.integers(1, len(labels)))
    part = list(rng.choice(labels, size=k, replace=False))
    rest = [lab for lab in labels if lab not in part]
    sa = von_neumann_entropy(partial_trace(sys, part))
    sb = von_neumann_entropy(partial_trace(sys, rest))
    assert sa == pytest.approx(sb, abs=1e-8)


@settings(max_examples=40, deadline=None)
@given(v=st.floats(1.0, 1e4), seed=st.integers(0, 2**32 - 1))
def test_heterodyne_epr_vacuum_property(v, seed):
    out = heterodyne_condition(epr_state(v), "aux")
    assert np.max(np.abs(out.cm - np.eye(2))) < 1e-10
