"""Two-qubit density matrices, partial transposes and the determinant test.

Two numeric paths share one type. Exact matrices hold rational real and
imaginary parts (used for the named extremal states and identity checks);
floating matrices hold a complex128 array (used by the sampler).

Quaternionic matrices are stored through the 2x2 complex embedding of each
quaternion entry, giving an 8x8 complex array. Their partial transpose is
experimental: it moves whole quaternion entries and does not conjugate them.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq

from .ratcore import ZERO, format_rational, is_psd_exact, rational

PSD_TOL = 1e-12


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"
    QUATERNION = "quaternion"

    @property
    def alpha(self):
        return {Field.REAL: mpq(1, 2), Field.COMPLEX: mpq(1), Field.QUATERNION: mpq(2)}[self]

    @classmethod
    def from_alpha(cls, alpha) -> "Field":
        for f in cls:
            if f.alpha == rational(alpha):
                return f
        raise ValueError(f"no field with alpha = {alpha}")


class OutOfRange(ValueError):
    pass


class InvalidDensityMatrix(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A 4x4 density matrix.

    ``re``/``im`` are 4x4 object arrays of mpq for exact matrices; ``data`` is
    the complex128 array otherwise (8x8 embedding for quaternions).
    """

    field: Field
    data: np.ndarray | None = None
    re: np.ndarray | None = None
    im: np.ndarray | None = None

    @property
    def exact(self) -> bool:
        return self.re is not None

    @classmethod
    def from_rationals(cls, real, imag=None, field: Field | None = None, *, check: bool = True):
        re = np.array([[rational(v) for v in row] for row in real], dtype=object)
        im = (np.array([[rational(v) for v in row] for row in imag], dtype=object)
              if imag is not None else np.full((4, 4), ZERO, dtype=object))
        if field is None:
            field = Field.REAL if not any(im.flat) else Field.COMPLEX
        rho = cls(Field(field), re=re, im=im)
        if check:
            rho.validate()
        return rho

    @classmethod
    def from_array(cls, array, field: Field | None = None, *, check: bool = True):
        data = np.asarray(array, dtype=complex)
        if field is None:
            field = Field.REAL if not np.any(data.imag) else Field.COMPLEX
        field = Field(field)
        expected = (8, 8) if field is Field.QUATERNION else (4, 4)
        if data.shape != expected:
            raise InvalidDensityMatrix(f"{field.value} matrix must have shape {expected}")
        rho = cls(field, data=data)
        if check:
            rho.validate()
        return rho

    def to_array(self) -> np.ndarray:
        if self.exact:
            to_f = np.vectorize(float, otypes=[float])
            return to_f(self.re) + 1j * to_f(self.im)
        return self.data

    def trace(self):
        if self.exact:
            return sum(self.re[i, i] for i in range(4))
        tr = np.trace(self.data).real
        return tr / 2 if self.field is Field.QUATERNION else tr

    def is_hermitian(self, tol: float = PSD_TOL) -> bool:
        if self.exact:
            return all(self.re[i, j] == self.re[j, i] and self.im[i, j] == -self.im[j, i]
                       for i in range(4) for j in range(4))
        return bool(np.allclose(self.data, self.data.conj().T, atol=tol))

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        if self.exact:
            return is_psd_exact(_real_embedding(self.re, self.im))
        return bool(np.linalg.eigvalsh(self.data).min() >= -tol)

    def validate(self) -> None:
        if not self.is_hermitian():
            raise InvalidDensityMatrix("matrix is not Hermitian")
        tr = self.trace()
        if (tr != 1) if self.exact else abs(tr - 1) > PSD_TOL:
            raise InvalidDensityMatrix(f"trace is {tr}, not 1")
        if not self.is_psd():
            raise InvalidDensityMatrix("matrix is not positive semidefinite")

    def to_dict(self) -> dict:
        """Row-major (real, imag) pairs; rational strings for exact matrices."""
        if self.exact:
            entries = [[format_rational(self.re[i, j]), format_rational(self.im[i, j])]
                       for i in range(4) for j in range(4)]
        else:
            entries = [[repr(float(z.real)), repr(float(z.imag))] for z in self.data.flat]
        return {"field": self.field.value, "exact": self.exact, "entries": entries}

    @classmethod
    def from_dict(cls, data: dict, *, check: bool = True) -> "DensityMatrix":
        field = Field(data["field"])
        entries = data["entries"]
        if data.get("exact"):
            re = [[entries[4 * i + j][0] for j in range(4)] for i in range(4)]
            im = [[entries[4 * i + j][1] for j in range(4)] for i in range(4)]
            return cls.from_rationals(re, im, field, check=check)
        size = 8 if field is Field.QUATERNION else 4
        arr = np.array([float(r) + 1j * float(i) for r, i in entries]).reshape(size, size)
        return cls.from_array(arr, field, check=check)


def _real_embedding(re, im):
    # X + iY is PSD iff [[X, -Y], [Y, X]] is PSD
    top = [list(re[i]) + [-v for v in im[i]] for i in range(4)]
    bottom = [list(im[i]) + list(re[i]) for i in range(4)]
    return top + bottom


# -- partial transpose and determinants -------------------------------------

def _pt_index(n: int = 4):
    # PT[2a+b, 2c+d] = rho[2a+d, 2c+b]
    rows, cols = np.empty((n, n), dtype=int), np.empty((n, n), dtype=int)
    for a, b, c, d in itertools.product(range(2), repeat=4):
        rows[2 * a + b, 2 * c + d] = 2 * a + d
        cols[2 * a + b, 2 * c + d] = 2 * c + b
    return rows, cols


_PT_ROWS, _PT_COLS = _pt_index()


def partial_transpose_array(arr: np.ndarray) -> np.ndarray:
    """Transpose each 2x2 block of a (..., 4, 4) array in place."""
    shape = arr.shape
    out = arr.reshape(shape[:-2] + (2, 2, 2, 2)).swapaxes(-3, -1)
    return out.reshape(shape)


def partial_transpose_quaternion(arr: np.ndarray) -> np.ndarray:
    """Block PT of (..., 8, 8) embeddings; each quaternion is a 2x2 block."""
    shape = arr.shape
    # axes: (a, b, qi, c, d, qj) with row = 2*(2a+b)+qi
    out = arr.reshape(shape[:-2] + (2, 2, 2, 2, 2, 2)).swapaxes(-5, -2)
    return out.reshape(shape)


def partial_transpose(rho: DensityMatrix) -> DensityMatrix:
    """rho^PT; Hermitian with unit trace, but possibly not PSD."""
    if rho.exact:
        return DensityMatrix(rho.field, re=rho.re[_PT_ROWS, _PT_COLS], im=rho.im[_PT_ROWS, _PT_COLS])
    if rho.field is Field.QUATERNION:
        return DensityMatrix(rho.field, data=partial_transpose_quaternion(rho.data))
    return DensityMatrix(rho.field, data=partial_transpose_array(rho.data))


def _exact_complex_det(re, im):
    # Leibniz expansion over Gaussian-rational entries
    total_re, total_im = ZERO, ZERO
    for perm in itertools.permutations(range(4)):
        pr, pi = mpq(1), ZERO
        for i, j in enumerate(perm):
            pr, pi = pr * re[i, j] - pi * im[i, j], pr * im[i, j] + pi * re[i, j]
            if not pr and not pi:
                break
        if _parity(perm):
            pr, pi = -pr, -pi
        total_re += pr
        total_im += pi
    return total_re, total_im


def _parity(perm) -> int:
    inv = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return inv % 2


def quaternion_det(arr: np.ndarray) -> np.ndarray:
    """Signed determinant of Hermitian quaternionic matrices from 8x8 embeddings.

    Eigenvalues of the embedding come in equal pairs; the determinant is the
    product of one member of each pair. For PSD input this equals the
    positive square root of the embedding's determinant.
    """
    ev = np.linalg.eigvalsh(arr)
    return np.prod(ev[..., ::2], axis=-1)


def det(rho: DensityMatrix):
    """Determinant: exact mpq for exact matrices, float otherwise."""
    if rho.exact:
        value, imag = _exact_complex_det(rho.re, rho.im)
        if imag:
            raise InvalidDensityMatrix("determinant of a Hermitian matrix must be real")
        return value
    if rho.field is Field.QUATERNION:
        return float(quaternion_det(rho.data))
    return float(np.linalg.det(rho.data).real)


def diff_statistic(rho: DensityMatrix):
    """D = |rho^PT| - |rho|."""
    return det(partial_transpose(rho)) - det(rho)


def is_separable(rho: DensityMatrix) -> bool:
    """det(rho^PT) >= 0, boundary included."""
    return det(partial_transpose(rho)) >= 0


def pt_eigenvalues(rho: DensityMatrix) -> np.ndarray:
    pt = partial_transpose(rho).to_array()
    ev = np.linalg.eigvalsh(pt)
    return ev[::2] if rho.field is Field.QUATERNION else ev


# -- named states ------------------------------------------------------------

def maximally_mixed() -> DensityMatrix:
    q = mpq(1, 4)
    return DensityMatrix.from_rationals([[q if i == j else 0 for j in range(4)] for i in range(4)])


def bell_state() -> DensityMatrix:
    """1/2 in the four corners: det(rho^PT) = -1/16."""
    h = mpq(1, 2)
    m = [[0] * 4 for _ in range(4)]
    m[0][0] = m[0][3] = m[3][0] = m[3][3] = h
    return DensityMatrix.from_rationals(m)


def diff_maximizer() -> DensityMatrix:
    """diag(1/6, 1/3, 1/3, 1/6) with -1/6 corners: D = 1/432."""
    m = [[0] * 4 for _ in range(4)]
    for i, v in enumerate((mpq(1, 6), mpq(1, 3), mpq(1, 3), mpq(1, 6))):
        m[i][i] = v
    m[0][3] = m[3][0] = mpq(-1, 6)
    return DensityMatrix.from_rationals(m)


FAMILY_MAX = mpq(1, 3)


def family_matrix(s) -> list:
    """Raw entries of the one-parameter family, with no positivity check."""
    s = rational(s)
    m = [[ZERO] * 4 for _ in range(4)]
    m[0][0] = m[3][3] = (1 - s) / 2
    m[1][1] = m[2][2] = s / 2
    m[0][3] = m[3][0] = s
    return m


def family_state(s) -> DensityMatrix:
    """Entangled family with D(s) = s^2 (2s - 1) / 4, PSD for 0 <= s <= 1/3."""
    s = rational(s)
    if not 0 <= s <= FAMILY_MAX:
        raise OutOfRange(f"family_state needs 0 <= s <= 1/3, got {s}")
    return DensityMatrix.from_rationals(family_matrix(s))


def family_diff(s):
    s = rational(s)
    return s * s * (2 * s - 1) / 4
