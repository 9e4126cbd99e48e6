"""Tests for the dense Hamiltonian builders.

The strongest oracle here is an independent second-quantization
construction: full tensor-product Fock space of the molecular and four
atomic modes, ladder operators multiplied as matrices, then restricted
to the pair sector.  The builders must reproduce it entry by entry.
"""

import math

import numpy as np
import pytest

from mlzlab.core import ModelParams, SingularityProximityError
from mlzlab import model as md

RNG = np.random.default_rng(42)


def comm(a, b):
    return a @ b - b @ a


def rel_comm_norm(a, b):
    return np.linalg.norm(comm(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


class TestDO3:
    def test_matrix_layout(self):
        g, beta, eps, t = 1.3, 2.0, 0.7, 0.4
        h = md.do3_hamiltonian(g, beta, eps, t)
        expected = np.array([
            [beta * t, g, g],
            [g, -eps, 0.0],
            [g, 0.0, eps],
        ])
        np.testing.assert_allclose(h, expected, atol=0)

    def test_tau_scales_parallel_splitting(self):
        h = md.do3_hamiltonian(1.0, 2.0, 0.5, 0.0, tau=3.0)
        assert h[1, 1] == -1.5 and h[2, 2] == 1.5

    def test_hermitian_and_trace(self):
        for _ in range(10):
            g, beta, eps = RNG.uniform(0.1, 3, 3)
            t = RNG.uniform(-5, 5)
            h = md.do3_hamiltonian(g, beta, eps, t)
            np.testing.assert_allclose(h, h.T, atol=1e-14)
            assert np.trace(h) == pytest.approx(beta * t, rel=1e-14)

    def test_spectrum_at_origin(self):
        # eigensolver oracle: t = 0, eps = 0 gives {-sqrt(2) g, 0, +sqrt(2) g}
        g = 0.9
        evals = np.linalg.eigvalsh(md.do3_hamiltonian(g, 1.0, 0.0, 0.0))
        np.testing.assert_allclose(
            evals, [-math.sqrt(2) * g, 0.0, math.sqrt(2) * g], atol=1e-14
        )


class TestDO3Partner:
    def test_commutes_with_base(self):
        for _ in range(100):
            g, beta, eps = RNG.uniform(0.1, 3, 3)
            t = RNG.uniform(-5, 5)
            tau = RNG.choice([-1, 1]) * RNG.uniform(0.2, 5)
            h = md.do3_hamiltonian(g, beta, eps, t, tau)
            hp = md.do3_partner(g, beta, eps, t, tau)
            assert rel_comm_norm(h, hp) < 1e-13

    def test_mixed_derivatives_match(self):
        spec = md.do3_spec(1.2, 0.8, 0.6)
        part = md.do3_partner_spec(1.2, 0.8, 0.6)
        a = spec.dmat_dtau(0.3, 2.0)
        b = part.dmat_dt(0.3, 2.0)
        np.testing.assert_allclose(a, b, atol=0)
        np.testing.assert_allclose(np.diag(a), [0.0, -0.6, 0.6], atol=0)

    def test_diagonal_at_reference_point(self):
        # t = 0, tau = 1: corrected partner diagonal (eps^2/beta - g^2/beta, 0, 0);
        # the published matrix prints (-eps) in the last slot but fails to commute
        g, beta, eps = 1.1, 2.5, 0.4
        hp = md.do3_partner(g, beta, eps, 0.0, 1.0)
        np.testing.assert_allclose(
            np.diag(hp), [(eps**2 - g**2) / beta, 0.0, 0.0], atol=1e-15
        )
        assert hp[0, 1] == pytest.approx(eps * g / beta)
        assert hp[0, 2] == pytest.approx(-eps * g / beta)
        assert hp[1, 2] == pytest.approx(-(g**2) / beta)

    def test_tau_pole_guard(self):
        with pytest.raises(SingularityProximityError):
            md.do3_partner(1.0, 1.0, 1.0, 0.5, 1e-9)


class TestLZ2:
    def test_layout(self):
        h = md.lz2_spec(2.0, 0.7).materialize(1.5)
        np.testing.assert_allclose(h, [[3.0, 0.7], [0.7, 0.0]], atol=0)


class TestTCSingle:
    def test_single_molecule_reduces_to_two_level(self):
        p = ModelParams(N=1, g=0.8, beta=2.0)
        h = md.tc_single_hamiltonian(p, 0.7)
        np.testing.assert_allclose(h, [[1.4, 0.8], [0.8, 0.0]], atol=1e-15)

    def test_couplings(self):
        p = ModelParams(N=5, g=1.1, beta=1.0)
        h = md.tc_single_hamiltonian(p, 0.0)
        for m in range(5):
            assert h[m + 1, m] == pytest.approx(1.1 * (m + 1) * math.sqrt(5 - m))

    def test_consistency_with_two_channel_edge(self):
        # single-channel coupling <m+1|H|m> must match the two-channel
        # channel-1 coupling at n2 = 0 under m = n1 - 1
        p = ModelParams(N=4, g=0.9, beta=1.0, epsilon=0.0)
        h1 = md.tc_single_hamiltonian(p, 0.0)
        h2 = md.tc_two_channel_hamiltonian(p, 0.0)
        labels = md.two_channel_labels(4)
        idx = {lab: i for i, lab in enumerate(labels)}
        for n1 in range(1, 5):
            a = h2[idx[(n1 - 1, 0)], idx[(n1, 0)]]
            b = h1[n1 - 1, n1]
            assert a == pytest.approx(b, rel=1e-15)

    def test_spectrum_symmetric_at_t_zero(self):
        # off-diagonal-only matrix has a chiral spectrum
        p = ModelParams(N=3, g=1.0, beta=1.0)
        evals = np.sort(np.linalg.eigvalsh(md.tc_single_hamiltonian(p, 0.0)))
        np.testing.assert_allclose(evals, -evals[::-1], atol=1e-12)

    def test_dimension(self):
        assert md.tc_single_spec(ModelParams(N=8, g=1.0, beta=1.0)).dim == 9


def fock_oracle_two_channel(N, g, beta, eps, t, tau):
    """Independent second-quantization construction of the two-channel model.

    Builds ladder matrices on the truncated five-mode tensor Fock space,
    assembles beta t Psi+Psi + sum_k tau eps_k q_k/2 + g(Psi+ a_k b_k + h.c.)
    with eps_{1,2} = -/+ eps, then restricts to the pair-sector basis.
    """
    cut = N + 1
    a = np.diag(np.sqrt(np.arange(1, cut)), 1)
    eye = np.eye(cut)

    def kron5(ops):
        out = ops[0]
        for op in ops[1:]:
            out = np.kron(out, op)
        return out

    mol = kron5([a, eye, eye, eye, eye])
    a1 = kron5([eye, a, eye, eye, eye])
    b1 = kron5([eye, eye, a, eye, eye])
    a2 = kron5([eye, eye, eye, a, eye])
    b2 = kron5([eye, eye, eye, eye, a])

    num = lambda op: op.conj().T @ op
    h = beta * t * num(mol)
    h += tau * (-eps) * 0.5 * (num(a1) + num(b1))
    h += tau * (+eps) * 0.5 * (num(a2) + num(b2))
    cpl = mol.conj().T @ (a1 @ b1 + a2 @ b2)
    h += g * (cpl + cpl.conj().T)

    labels = md.two_channel_labels(N)
    vecs = []
    for (n1, n2) in labels:
        occ = (N - n1 - n2, n1, n1, n2, n2)
        iflat = 0
        for o in occ:
            iflat = iflat * cut + o
        v = np.zeros(cut**5)
        v[iflat] = 1.0
        vecs.append(v)
    basis = np.array(vecs).T
    return basis.T @ h @ basis


class TestTCTwoChannel:
    def test_against_fock_space_oracle(self):
        N, g, beta, eps, t, tau = 2, 0.9, 1.7, 0.6, 0.8, 1.0
        built = md.tc_two_channel_hamiltonian(ModelParams(N=N, g=g, beta=beta, epsilon=eps), t)
        oracle = fock_oracle_two_channel(N, g, beta, eps, t, tau)
        assert built.shape == (6, 6)
        np.testing.assert_allclose(built, oracle, atol=1e-12)

    def test_against_fock_space_oracle_scaled_tau(self):
        N, g, beta, eps, t, tau = 2, 1.2, 0.9, 0.4, -0.5, 2.5
        p = ModelParams(N=N, g=g, beta=beta, epsilon=eps)
        built = md.tc_two_channel_spec(p).materialize(t, tau)
        oracle = fock_oracle_two_channel(N, g, beta, eps, t, tau)
        np.testing.assert_allclose(built, oracle, atol=1e-12)

    def test_swap_symmetry_at_zero_splitting(self):
        # eps = 0: exchanging the two channels commutes with H, so the
        # symmetric subspace is dynamically closed
        p = ModelParams(N=3, g=1.0, beta=1.0, epsilon=0.0)
        h = md.tc_two_channel_hamiltonian(p, 0.37)
        labels = md.two_channel_labels(3)
        idx = {lab: i for i, lab in enumerate(labels)}
        swap = np.zeros((len(labels), len(labels)))
        for (n1, n2), i in idx.items():
            swap[idx[(n2, n1)], i] = 1.0
        np.testing.assert_allclose(comm(h, swap), 0.0, atol=1e-13)

    def test_particle_conservation_audit(self):
        p = ModelParams(N=4, g=1.0, beta=1.0, epsilon=0.3)
        spec = md.tc_two_channel_spec(p)
        labels = spec.basis_labels
        V = spec.V0
        for i, (n1, n2) in enumerate(labels):
            for j, (m1, m2) in enumerate(labels):
                if V[i, j] != 0.0:
                    assert abs((n1 + n2) - (m1 + m2)) == 1

    def test_dimension_formula(self):
        for N in (1, 2, 5, 9):
            spec = md.tc_two_channel_spec(ModelParams(N=N, g=1.0, beta=1.0))
            assert spec.dim == (N + 1) * (N + 2) // 2


class TestTCTwoChannelPartner:
    @pytest.mark.parametrize("N", [1, 2, 4])
    def test_commutes_with_base(self, N):
        p = ModelParams(N=N, g=0.8, beta=1.3, epsilon=0.5)
        h_spec = md.tc_two_channel_spec(p)
        hp_spec = md.tc_two_channel_partner_spec(p)
        for _ in range(10):
            t = RNG.uniform(-4, 4)
            tau = RNG.uniform(0.3, 4)
            r = rel_comm_norm(h_spec.materialize(t, tau), hp_spec.materialize(t, tau))
            assert r < 1e-12

    def test_mixed_derivative_identity(self):
        p = ModelParams(N=3, g=1.0, beta=2.0, epsilon=0.7)
        h_spec = md.tc_two_channel_spec(p)
        hp_spec = md.tc_two_channel_partner_spec(p)
        a = h_spec.dmat_dtau(1.1, 0.9)
        b = hp_spec.dmat_dt(1.1, 0.9)
        np.testing.assert_allclose(a, b, atol=0)
        expected = np.array([p.epsilon * (n2 - n1) for n1, n2 in h_spec.basis_labels])
        np.testing.assert_allclose(np.diag(a), expected, atol=0)

    def test_reduces_to_three_state_partner_up_to_identity(self):
        # N = 1 two-channel pair basis is the three-state crossing model;
        # the partners agree up to a multiple of the identity
        g, beta, eps, t, tau = 1.3, 0.7, 0.9, 1.7, 2.1
        p = ModelParams(N=1, g=g, beta=beta, epsilon=eps)
        hp2 = md.tc_two_channel_partner(p, t, tau)
        # reorder (0,0), (0,1), (1,0) -> molecular, channel-1, channel-2
        labels = md.two_channel_labels(1)
        order = [labels.index((0, 0)), labels.index((1, 0)), labels.index((0, 1))]
        hp2 = hp2[np.ix_(order, order)]
        hp3 = md.do3_partner(g, beta, eps, t, tau)
        diff = hp2 - hp3
        np.testing.assert_allclose(diff, diff[0, 0] * np.eye(3), atol=1e-13)


class TestHeffThermalization:
    def test_tridiagonal_hermitian(self):
        h = md.heff_thermalization(6, 1.0, 2.0, 0.5, 0.3)
        np.testing.assert_allclose(h, h.T, atol=0)
        for i in range(7):
            for j in range(7):
                if abs(i - j) > 1:
                    assert h[i, j] == 0.0

    def test_two_pair_sector_spectrum(self):
        # n = 1, eps = 0: matrix -(g^2/(beta t)) [[1, 1], [1, 1]]
        g, beta, t = 1.2, 2.0, 0.7
        evals = np.linalg.eigvalsh(md.heff_thermalization(1, g, beta, 0.0, t))
        c = g * g / (beta * t)
        np.testing.assert_allclose(evals, [-2 * c, 0.0], atol=1e-13)

    def test_early_time_ground_state_is_flat(self):
        n, g, beta, eps, t = 8, 1.0, 2.0, 0.5, 1e-6
        h = md.heff_thermalization(n, g, beta, eps, t)
        evals, evecs = np.linalg.eigh(h)
        ground = evecs[:, 0] * np.sign(evecs[0, 0])
        np.testing.assert_allclose(ground, np.full(n + 1, 1 / math.sqrt(n + 1)), atol=1e-5)
        assert evals[0] == pytest.approx(-g * g * n * (n + 1) / (beta * t), rel=1e-4)

    def test_t_pole_guard(self):
        with pytest.raises(SingularityProximityError):
            md.heff_thermalization(3, 1.0, 1.0, 1.0, 0.0)

    def test_dimension(self):
        assert md.heff_thermalization_spec(12, 1.0, 1.0, 0.0).dim == 13


class TestHeff2:
    def test_layout(self):
        h = md.heff2_hamiltonian(0.4, 0.9, 2.0)
        np.testing.assert_allclose(h, [[-0.4, -0.45], [-0.45, 0.4]], atol=1e-15)

    def test_zero_coupling_is_diagonal(self):
        h = md.heff2_hamiltonian(0.4, 0.0, 2.0)
        np.testing.assert_allclose(h, np.diag([-0.4, 0.4]), atol=0)


class TestHermiticityEverywhere:
    def test_all_builders(self):
        p = ModelParams(N=4, g=1.1, beta=0.9, epsilon=0.6)
        specs = [
            md.do3_spec(1.1, 0.9, 0.6),
            md.do3_partner_spec(1.1, 0.9, 0.6),
            md.lz2_spec(0.9, 1.4),
            md.decaying_coupling_spec(0.6, 1.2),
            md.tc_single_spec(p),
            md.tc_two_channel_spec(p),
            md.tc_two_channel_partner_spec(p),
            md.heff_thermalization_spec(5, 1.1, 0.9, 0.6),
        ]
        for spec in specs:
            h = spec.materialize(1.7, 0.8)
            np.testing.assert_allclose(h, h.conj().T, atol=1e-14)


class TestDumpFormat:
    def test_round_trip(self):
        p = ModelParams(N=3, g=1.0, beta=2.0, epsilon=0.4)
        spec = md.tc_two_channel_spec(p)
        text = md.dump_matrix(spec, 0.7, 1.0)
        meta, mat = md.parse_matrix_dump(text)
        assert meta["kind"] == "TCTwoChannel"
        assert int(meta["dim"]) == spec.dim
        np.testing.assert_array_equal(mat, spec.materialize(0.7, 1.0).astype(complex))

    def test_dump_is_deterministic(self):
        spec = md.do3_spec(1.0, 2.0, 0.3)
        assert md.dump_matrix(spec, 0.5) == md.dump_matrix(spec, 0.5)
