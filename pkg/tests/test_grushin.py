from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dense_toeplitz
from toeplab.errors import NeumannDivergence, OnSpectrum
from toeplab.grushin import (
    alpha,
    assemble_grushin_problem,
    circulant_log_abs_det,
    effective_det_factorization,
    grushin_blocks,
    perturbed_effective,
    phi,
    psi,
    singular_values_E_pm,
)
from toeplab.linalg import lu_log_abs_det
from toeplab.operators import OperatorSpec, build_circulant, kernel_K_N
from toeplab.randmat import SeededStream, sample_gaussian_matrix
from toeplab.symbol import LaurentSymbol


def probe_with_alpha(spec, rng, minimum=0.1, box=3.0):
    while True:
        z = complex(*rng.uniform(-box, box, 2))
        if alpha(spec, z) >= minimum:
            return z


# ---------------------------------------------------------------- the bordered problem

def test_smallest_problem(shift):
    spec = OperatorSpec(shift, 3)
    prob = assemble_grushin_problem(spec, 0.5)
    assert prob.R_plus_minus.shape == (1, 1)
    expected = np.roll(np.eye(4), 1, axis=0) - 0.5 * np.eye(4)
    perm = prob.permutation
    assert np.array_equal(prob.assembled(), expected[np.ix_(perm, perm)])


def test_reassembly_reproduces_circulant(five_term):
    spec = OperatorSpec(five_term, 17)
    z = 0.3 - 1j
    prob = assemble_grushin_problem(spec, z)
    C = build_circulant(spec) - z * np.eye(spec.n_tilde)
    inv = np.argsort(prob.permutation)
    assert np.array_equal(prob.assembled()[np.ix_(inv, inv)], C)
    assert np.array_equal(prob.P, dense_toeplitz(dict(five_term.coeffs), 17) - z * np.eye(17))


def test_border_rank(three_term):
    prob = assemble_grushin_problem(OperatorSpec(three_term, 16), 1 + 1j)
    assert np.linalg.matrix_rank(prob.R_plus) == 4
    assert np.linalg.matrix_rank(prob.R_minus) == 4


# ---------------------------------------------------------------- inverse blocks

def test_blocks_invert_bordered_matrix(five_term):
    spec = OperatorSpec(five_term, 20)
    z = 0.5 + 0.5j
    prob = assemble_grushin_problem(spec, z)
    blocks = grushin_blocks(spec, z)
    assert np.max(np.abs(blocks.assembled() @ prob.assembled() - np.eye(spec.n_tilde))) <= 1e-8


def test_blocks_match_dense_inverse(three_term, rng):
    spec = OperatorSpec(three_term, 40)
    z = probe_with_alpha(spec, rng)
    perm = np.concatenate([spec.I, spec.J])
    C = build_circulant(spec) - z * np.eye(spec.n_tilde)
    ref = np.linalg.inv(C)[np.ix_(perm, perm)]
    assert np.max(np.abs(grushin_blocks(spec, z).assembled() - ref)) <= 1e-8


def test_one_by_one_effective_block(shift):
    spec = OperatorSpec(shift, 8)
    blocks = grushin_blocks(spec, 2)
    assert blocks.E_minus_plus.shape == (1, 1)
    assert blocks.E_minus_plus[0, 0] == pytest.approx(kernel_K_N(spec, 2, 0), abs=1e-15)


def test_inverse_norm_is_reciprocal_distance(five_term, rng):
    spec = OperatorSpec(five_term, 30)
    z = probe_with_alpha(spec, rng)
    norm = np.linalg.norm(grushin_blocks(spec, z).assembled(), 2)
    assert norm == pytest.approx(1 / alpha(spec, z), rel=1e-6)


def test_blocks_on_spectrum(shift):
    with pytest.raises(OnSpectrum):
        grushin_blocks(OperatorSpec(shift, 3), 1.0)


def test_effective_block_converges_in_N(three_term):
    z = 0.3 + 2.6j
    ref = grushin_blocks(OperatorSpec(three_term, 4096), z).E_minus_plus
    errs = [np.max(np.abs(grushin_blocks(OperatorSpec(three_term, N), z).E_minus_plus - ref))
            for N in (32, 64, 128)]
    assert errs[1] <= 0.5 * errs[0] and errs[2] <= 0.5 * errs[1]


# ---------------------------------------------------------------- determinant identity

def test_triangular_determinant(shift):
    fac = effective_det_factorization(OperatorSpec(shift, 8), 2)
    assert fac.lhs == pytest.approx(8 * math.log(2), abs=1e-12)
    assert fac.error <= 1e-9


def test_three_term_identity(three_term):
    fac = effective_det_factorization(OperatorSpec(three_term, 32), 1 + 1j)
    assert fac.error <= 1e-8 * max(1, abs(fac.lhs))


def test_five_term_identity_random_points(five_term, rng):
    spec = OperatorSpec(five_term, 64)
    for _ in range(20):
        z = probe_with_alpha(spec, rng, box=6.0)
        fac = effective_det_factorization(spec, z)
        assert fac.error <= 1e-8 * max(1, abs(fac.lhs))


def test_identity_with_perturbation(three_term):
    spec = OperatorSpec(three_term, 32)
    Q = sample_gaussian_matrix(32, SeededStream(3, 0))
    z = 1 + 1j
    fac = effective_det_factorization(spec, z, Q, 1e-6)
    assert fac.error <= 1e-8 * max(1, abs(fac.lhs))
    assert fac.neumann_term != 0.0


def test_identity_without_correction_term_at_tiny_delta(three_term):
    spec = OperatorSpec(three_term, 32)
    Q = sample_gaussian_matrix(32, SeededStream(3, 1))
    z = 1 + 1j
    eff = perturbed_effective(spec, z, Q, 1e-10)
    lhs = lu_log_abs_det(dense_toeplitz(dict(three_term.coeffs), 32) + 1e-10 * Q - z * np.eye(32))
    rhs = circulant_log_abs_det(spec, z) + lu_log_abs_det(eff.E_minus_plus_delta)
    assert lhs == pytest.approx(rhs, abs=1e-7)


def test_extended_precision_for_ill_conditioned_case(three_term):
    # z = 0 has winding 1: the effective block's condition number grows with N
    spec = OperatorSpec(three_term, 100)
    assert effective_det_factorization(spec, 0.0).dps is None
    fac = effective_det_factorization(spec, 0.0, cond_limit=100.0)
    assert fac.dps is not None
    assert fac.error <= 1e-8 * max(1, abs(fac.lhs))
    forced = effective_det_factorization(spec, 0.0, precision="double")
    assert forced.dps is None


def test_precision_option_validated(shift):
    with pytest.raises(ValueError):
        effective_det_factorization(OperatorSpec(shift, 8), 2, precision="quad")


def test_extended_and_double_agree_when_well_conditioned(five_term):
    spec = OperatorSpec(five_term, 24)
    z = 8.0 + 1j
    a = effective_det_factorization(spec, z, precision="double")
    b = effective_det_factorization(spec, z, precision="extended")
    assert a.lhs == pytest.approx(b.lhs, abs=1e-9)
    assert a.rhs == pytest.approx(b.rhs, abs=1e-9)


# ---------------------------------------------------------------- perturbed effective matrix

def test_zero_delta_is_unchanged(three_term):
    spec = OperatorSpec(three_term, 20)
    blocks = grushin_blocks(spec, 1 + 1j)
    eff = perturbed_effective(spec, 1 + 1j, np.ones((20, 20)), 0.0, blocks)
    assert np.array_equal(eff.E_minus_plus_delta, blocks.E_minus_plus)


def test_neumann_precondition(three_term):
    spec = OperatorSpec(three_term, 20)
    with pytest.raises(NeumannDivergence):
        perturbed_effective(spec, 1 + 1j, np.ones((20, 20)), 1.0)


def test_exact_matches_dense_schur_complement(three_term):
    spec = OperatorSpec(three_term, 24)
    z = 1 + 1j
    Q = sample_gaussian_matrix(24, SeededStream(9, 0))
    delta = 1e-3
    eff = perturbed_effective(spec, z, Q, delta)
    prob = assemble_grushin_problem(spec, z)
    bordered = prob.assembled().copy()
    bordered[:24, :24] += delta * Q
    ref = np.linalg.inv(bordered)[24:, 24:]
    assert np.max(np.abs(eff.E_minus_plus_delta - ref)) <= 1e-10


@given(st.integers(0, 10**6))
@settings(max_examples=20, deadline=None)
def test_first_order_remainder_is_quadratic(seed):
    sym = LaurentSymbol.from_coeffs({1: 2j, -2: 1.0, -3: 0.7})
    spec = OperatorSpec(sym, 32)
    z = 1 + 1j
    Q = sample_gaussian_matrix(32, SeededStream(seed, 0))
    delta = 1e-6
    blocks = grushin_blocks(spec, z)
    eff = perturbed_effective(spec, z, Q, delta, blocks)
    normQ = np.linalg.norm(Q, 2)
    bound = (delta * normQ) ** 2 * np.linalg.norm(blocks.E_minus, 2) * np.linalg.norm(blocks.E_plus, 2) \
        * np.linalg.norm(blocks.E, 2)
    err = np.linalg.norm(eff.E_minus_plus_delta - eff.first_order, 2)
    assert err <= 2 * bound
    assert eff.diagnostics["bound_holds"]


# ---------------------------------------------------------------- singular values and weights

def test_singular_values_bounded_by_inverse_alpha(five_term, rng):
    spec = OperatorSpec(five_term, 48)
    z = probe_with_alpha(spec, rng)
    s_plus, s_minus = singular_values_E_pm(grushin_blocks(spec, z))
    assert np.all(s_plus <= 1 / alpha(spec, z) + 1e-8)
    assert np.all(s_minus <= 1 / alpha(spec, z) + 1e-8)
    assert np.all(np.diff(s_plus) <= 0)


def test_singular_values_uniform_in_N(three_term):
    z = 0.3 + 2.6j
    mins = [singular_values_E_pm(grushin_blocks(OperatorSpec(three_term, N), z))[0].min()
            for N in (32, 64, 128, 256)]
    assert max(mins) / min(mins) < 2


def test_E_plus_injective(three_term):
    s_plus, _ = singular_values_E_pm(grushin_blocks(OperatorSpec(three_term, 40), 1 + 1j))
    assert s_plus.size == 4 and s_plus[-1] > 1e-10 * s_plus[0]


def test_phi_roots_of_unity(shift):
    spec = OperatorSpec(shift, 3)
    assert phi(spec, 2) == pytest.approx(math.log(15) / 3, abs=1e-14)
    assert alpha(spec, 2) == pytest.approx(1.0)


def test_psi_offset(five_term):
    spec = OperatorSpec(five_term, 50)
    assert psi(spec, 7, 2.5) - phi(spec, 7) == pytest.approx(2.5 * math.log(50) / 50, abs=1e-14)


def test_phi_on_spectrum(shift):
    with pytest.raises(OnSpectrum):
        phi(OperatorSpec(shift, 3), 1.0)
