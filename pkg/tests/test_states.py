import json

import numpy as np
import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from sepmoments.hssampler import block_rng, sample_batch
from sepmoments.states import (
    DensityMatrix,
    Field,
    InvalidDensityMatrix,
    OutOfRange,
    bell_state,
    det,
    diff_maximizer,
    diff_statistic,
    family_diff,
    family_matrix,
    family_state,
    is_separable,
    maximally_mixed,
    partial_transpose,
    partial_transpose_array,
    partial_transpose_quaternion,
    pt_eigenvalues,
)


def pt_by_loops(m):
    out = np.empty_like(m)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    out[2 * a + b, 2 * c + d] = m[2 * a + d, 2 * c + b]
    return out


def test_partial_transpose_examples():
    m = np.arange(16).reshape(4, 4)
    expected = np.array([[0, 4, 2, 6],
                         [1, 5, 3, 7],
                         [8, 12, 10, 14],
                         [9, 13, 11, 15]])
    assert (partial_transpose_array(m) == expected).all()
    assert (pt_by_loops(m) == expected).all()
    pt = partial_transpose(bell_state())
    assert pt.re[1, 2] == pt.re[2, 1] == mpq(1, 2)
    assert pt.re[0, 3] == 0


@settings(max_examples=30)
@given(st.integers(0, 2 ** 32))
def test_partial_transpose_involution(seed):
    rho = sample_batch(Field.COMPLEX, block_rng(seed, 0), 40)
    pt = partial_transpose_array(rho)
    assert np.array_equal(partial_transpose_array(pt), rho)
    assert np.allclose(pt, pt.conj().swapaxes(-1, -2))
    assert np.allclose(np.trace(pt, axis1=-2, axis2=-1), 1)
    assert np.array_equal(pt[7], pt_by_loops(rho[7]))


def test_determinant_examples():
    assert det(maximally_mixed()) == mpq(1, 256)
    assert det(partial_transpose(maximally_mixed())) == mpq(1, 256)
    assert diff_statistic(maximally_mixed()) == 0
    bell = bell_state()
    assert det(bell) == 0
    assert det(partial_transpose(bell)) == mpq(-1, 16)
    assert not is_separable(bell)
    assert is_separable(maximally_mixed())
    assert diff_statistic(diff_maximizer()) == mpq(1, 432)
    assert is_separable(diff_maximizer())


def test_exact_and_float_determinants_agree():
    rho = family_state(mpq(1, 5))
    flt = DensityMatrix.from_array(rho.to_array())
    assert abs(det(flt) - float(det(rho))) < 1e-15
    assert abs(diff_statistic(flt) - float(diff_statistic(rho))) < 1e-15


def test_complex_exact_state():
    # off-diagonal imaginary coherence between |01> and |10>
    q, c = mpq(1, 4), mpq(1, 8)
    re = [[q if i == j else 0 for j in range(4)] for i in range(4)]
    im = [[0] * 4 for _ in range(4)]
    im[1][2], im[2][1] = c, -c
    rho = DensityMatrix.from_rationals(re, im)
    assert rho.field is Field.COMPLEX
    assert det(rho) == q * q * (q * q - c * c)
    assert abs(float(det(rho)) - np.linalg.det(rho.to_array()).real) < 1e-15
    pt = partial_transpose(rho)
    assert float(det(pt)) == pytest.approx(np.linalg.det(pt_by_loops(rho.to_array())).real, abs=1e-15)


@pytest.mark.parametrize("s", [0, mpq(1, 10), mpq(1, 3), mpq(1, 2)])
def test_family_diff(s):
    m = DensityMatrix.from_rationals(family_matrix(s), check=False)
    assert diff_statistic(m) == family_diff(s) == s * s * (2 * s - 1) / 4


def test_family_examples():
    assert family_diff(mpq(1, 3)) == mpq(-1, 108)
    assert family_diff(mpq(1, 2)) == 0
    assert not is_separable(family_state(mpq(1, 10)))
    assert is_separable(family_state(0))


def test_family_psd_grid():
    for i in range(101):
        s = mpq(i, 300)
        rho = family_state(s)
        assert rho.is_psd()
        assert -mpq(1, 108) <= diff_statistic(rho) <= 0


def test_family_out_of_range():
    for s in (mpq(-1, 100), mpq(1, 3) + mpq(1, 10 ** 9), mpq(1, 2)):
        with pytest.raises(OutOfRange):
            family_state(s)
    assert not DensityMatrix.from_rationals(family_matrix(mpq(1, 2)), check=False).is_psd()


def test_validation():
    with pytest.raises(InvalidDensityMatrix):
        DensityMatrix.from_rationals([[mpq(1, 2) if i == j else 0 for j in range(4)] for i in range(4)])
    bad = [[mpq(1, 4) if i == j else 0 for j in range(4)] for i in range(4)]
    bad[0][1] = 1
    with pytest.raises(InvalidDensityMatrix):
        DensityMatrix.from_rationals(bad)
    with pytest.raises(InvalidDensityMatrix):
        DensityMatrix.from_array(np.eye(4) / 4, Field.QUATERNION)


def test_serialization_round_trip(tmp_path):
    rho = diff_maximizer()
    text = json.dumps(rho.to_dict())
    back = DensityMatrix.from_dict(json.loads(text))
    assert back.exact and (back.re == rho.re).all() and (back.im == rho.im).all()
    arr = sample_batch(Field.COMPLEX, block_rng(5, 0), 1)[0]
    flt = DensityMatrix.from_array(arr)
    back = DensityMatrix.from_dict(json.loads(json.dumps(flt.to_dict())))
    assert np.array_equal(back.data, flt.data)


def test_quaternion_partial_transpose():
    rho = sample_batch(Field.QUATERNION, block_rng(11, 0), 200, experimental=True)
    pt = partial_transpose_quaternion(rho)
    assert np.allclose(pt, pt.conj().swapaxes(-1, -2))
    assert np.array_equal(partial_transpose_quaternion(pt), rho)
    # each 2x2 quaternion block keeps the [[z, w], [-w*, z*]] shape
    assert np.allclose(pt[:, 0::2, 0::2], pt[:, 1::2, 1::2].conj())
    assert np.allclose(pt[:, 0::2, 1::2], -pt[:, 1::2, 0::2].conj())
    # eigenvalues stay doubly degenerate
    ev = np.linalg.eigvalsh(pt)
    assert np.allclose(ev[:, 0::2], ev[:, 1::2], atol=1e-12)


def test_pt_eigenvalues_at_most_one_negative():
    rho = DensityMatrix.from_array(sample_batch(Field.COMPLEX, block_rng(3, 0), 1)[0])
    assert (pt_eigenvalues(rho) < 0).sum() <= 1
    ev = pt_eigenvalues(bell_state())
    assert np.allclose(sorted(ev), [-0.5, 0.5, 0.5, 0.5])
