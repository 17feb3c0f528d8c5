"""Monte Carlo sampling of Hilbert-Schmidt distributed two-qubit states.

Samples are drawn in fixed-size blocks, block ``b`` using its own Philox
stream keyed by ``(seed, b)``. Blocks are reduced in index order, so a report
depends only on ``(seed, samples, block_size)``, never on the worker count.

Hilbert-Schmidt (flat) measure on d x d density matrices corresponds to
Wishart matrices G G* with a d x M Gaussian G where (beta/2)(M - d + 1) = 1:

* complex (beta=2): square G, M = 4
* real (beta=1): M = 5, a 4 x 5 real Ginibre matrix
* quaternion (beta=4): M = 7/2 is not an integer, so eigenvalues come from
  the Dumitriu-Edelman bidiagonal beta-Laguerre model and eigenvectors from a
  Haar element of Sp(4). Experimental.
"""

from __future__ import annotations

import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from . import dunkl
from .ratcore import ExactScalar, format_rational
from .states import (
    DensityMatrix,
    Field,
    partial_transpose_array,
    partial_transpose_quaternion,
    quaternion_det,
)

BLOCK_SIZE = 1 << 15
MIN_SAMPLES = 1000
DEFAULT_STATISTICS = ("P_sep", "P_D_pos", "P_sep_D_neg", "E_D_1", "E_det_1", "E_detPT_1")

_MOMENT_STAT = re.compile(r"^E_(D|detPT|det)_([1-8])$")


class UnknownStatistic(ValueError):
    pass


class ExperimentalFieldError(RuntimeError):
    pass


def default_workers() -> int:
    env = os.environ.get("SEPM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def block_rng(seed: int, block: int) -> np.random.Generator:
    if seed < 0:
        raise ValueError("seed must be a nonnegative 64-bit integer")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


# -- samplers ----------------------------------------------------------------

def _normalize(w: np.ndarray) -> np.ndarray:
    tr = np.einsum("...ii->...", w).real
    return w / tr[..., None, None]


def sample_real(rng: np.random.Generator, size: int) -> np.ndarray:
    g = rng.standard_normal((size, 4, 5))
    return _normalize(g @ g.swapaxes(-1, -2)).astype(complex)


def sample_complex(rng: np.random.Generator, size: int) -> np.ndarray:
    g = rng.standard_normal((size, 4, 4)) + 1j * rng.standard_normal((size, 4, 4))
    return _normalize(g @ g.conj().swapaxes(-1, -2))


def laguerre_eigenvalues(rng: np.random.Generator, size: int, beta: float, n: int = 4) -> np.ndarray:
    """Trace-normalized eigenvalues with density |Vandermonde|^beta on the simplex.

    Uses the bidiagonal beta-Laguerre model with the exponent chosen so that
    the weight prod(lambda)^(a - p) is flat.
    """
    two_a = 2 + beta * (n - 1)
    b = np.zeros((size, n, n))
    for i in range(n):
        b[:, i, i] = np.sqrt(rng.chisquare(two_a - beta * i, size))
        if i:
            b[:, i, i - 1] = np.sqrt(rng.chisquare(beta * (n - i), size))
    lam = np.linalg.eigvalsh(b @ b.swapaxes(-1, -2))
    return lam / lam.sum(axis=-1, keepdims=True)


def quaternion_embed(z: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Embed quaternion matrices z + w j as interleaved 2x2 complex blocks."""
    shape = z.shape
    out = np.empty(shape[:-2] + (2 * shape[-2], 2 * shape[-1]), dtype=complex)
    out[..., 0::2, 0::2] = z
    out[..., 0::2, 1::2] = w
    out[..., 1::2, 0::2] = -w.conj()
    out[..., 1::2, 1::2] = z.conj()
    return out


def haar_symplectic(rng: np.random.Generator, size: int, n: int = 4) -> np.ndarray:
    """Haar-random elements of Sp(n) as (size, 2n, 2n) complex embeddings."""
    def cnormal():
        return rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))

    v = quaternion_embed(cnormal(), cnormal())
    q = np.empty_like(v)
    for k in range(n):
        cols = v[..., 2 * k:2 * k + 2].copy()
        for i in range(k):
            u = q[..., 2 * i:2 * i + 2]
            cols -= u @ (u.conj().swapaxes(-1, -2) @ cols)
        norm = np.sqrt(np.einsum("...i,...i->...", cols[..., 0].conj(), cols[..., 0]).real)
        q[..., 2 * k:2 * k + 2] = cols / norm[:, None, None]
    return q


def sample_quaternion(rng: np.random.Generator, size: int) -> np.ndarray:
    lam = laguerre_eigenvalues(rng, size, beta=4.0)
    u = haar_symplectic(rng, size)
    diag = np.repeat(lam, 2, axis=-1)
    return (u * diag[:, None, :]) @ u.conj().swapaxes(-1, -2)


def sample_batch(field: Field, rng: np.random.Generator, size: int,
                 *, experimental: bool = False) -> np.ndarray:
    field = Field(field)
    if field is Field.REAL:
        return sample_real(rng, size)
    if field is Field.COMPLEX:
        return sample_complex(rng, size)
    if not experimental:
        raise ExperimentalFieldError("quaternionic sampling requires experimental=True")
    return sample_quaternion(rng, size)


def sample_hs(field: Field, rng: np.random.Generator, *, experimental: bool = False) -> DensityMatrix:
    """One Hilbert-Schmidt distributed density matrix."""
    arr = sample_batch(field, rng, 1, experimental=experimental)[0]
    return DensityMatrix(Field(field), data=arr)


def determinants(field: Field, rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(det rho, det rho^PT) for a batch."""
    if Field(field) is Field.QUATERNION:
        return quaternion_det(rho), quaternion_det(partial_transpose_quaternion(rho))
    return np.linalg.det(rho).real, np.linalg.det(partial_transpose_array(rho)).real


# -- estimation --------------------------------------------------------------

def _validate_statistics(statistics) -> tuple:
    stats = tuple(statistics)
    for name in stats:
        if name not in ("P_sep", "P_D_pos", "P_sep_D_neg", "P_D_neg") and not _MOMENT_STAT.match(name):
            raise UnknownStatistic(f"unknown statistic {name!r}")
    return stats


def _values(name: str, d_rho: np.ndarray, d_pt: np.ndarray) -> np.ndarray:
    diff = d_pt - d_rho
    if name == "P_sep":
        return (d_pt >= 0).astype(float)
    if name == "P_D_pos":
        return (diff > 0).astype(float)
    if name == "P_D_neg":
        return (diff < 0).astype(float)
    if name == "P_sep_D_neg":
        return ((d_pt >= 0) & (diff < 0)).astype(float)
    kind, power = _MOMENT_STAT.match(name).groups()
    base = {"D": diff, "detPT": d_pt, "det": d_rho}[kind]
    return base ** int(power)


@dataclass
class _Moments:
    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def merge(self, values: np.ndarray) -> None:
        n = values.size
        mean = float(values.mean())
        m2 = float(((values - mean) ** 2).sum())
        total = self.count + n
        delta = mean - self.mean
        self.mean += delta * n / total
        self.m2 += m2 + delta * delta * self.count * n / total
        self.count = total

    @property
    def std_error(self) -> float:
        if self.count < 2:
            return float("nan")
        return float(np.sqrt(self.m2 / (self.count - 1) / self.count))


def _run_block(block: int, *, field, seed, size, stats, experimental):
    rng = block_rng(seed, block)
    rho = sample_batch(field, rng, size, experimental=experimental)
    d_rho, d_pt = determinants(field, rho)
    return {name: _values(name, d_rho, d_pt) for name in stats}


def _block_sizes(samples: int, block_size: int) -> list[int]:
    full, rest = divmod(samples, block_size)
    return [block_size] * full + ([rest] if rest else [])


def target_value(field: Field, name: str) -> ExactScalar | None:
    """Exact analytic value of a statistic, when the formulas provide one."""
    from .pformula import p_separability

    alpha = Field(field).alpha
    if name.startswith("P_"):
        p = p_separability(alpha).rational_guess
        if p is None or name == "P_D_neg":
            return None
        return p if name == "P_sep" else p / 2
    kind, power = _MOMENT_STAT.match(name).groups()
    n = int(power)
    if kind == "D":
        return dunkl.f2(n, 0, alpha)
    if kind == "detPT":
        return dunkl.pt_moment(n, alpha)
    return dunkl.det_moment(n, alpha)


@dataclass
class McReport:
    field: Field
    samples: int
    seed: int
    statistics: dict = field(default_factory=dict)  # name -> (estimate, std_error)
    targets: dict = field(default_factory=dict)  # name -> exact rational

    def z_score(self, name: str) -> float:
        est, se = self.statistics[name]
        return (est - float(self.targets[name])) / se

    def to_dict(self) -> dict:
        out = {"field": Field(self.field).value, "samples": self.samples, "seed": self.seed,
               "statistics": {}}
        for name, (est, se) in self.statistics.items():
            entry = {"estimate": repr(est), "std_error": repr(se)}
            if name in self.targets:
                entry["target"] = format_rational(self.targets[name])
                entry["target_decimal"] = repr(float(self.targets[name]))
                entry["z"] = repr(self.z_score(name))
            out["statistics"][name] = entry
        return out


def estimate(field: Field, samples: int, seed: int, statistics=DEFAULT_STATISTICS, *,
             workers: int | None = None, block_size: int = BLOCK_SIZE,
             experimental: bool = False, with_targets: bool = True) -> McReport:
    """Estimate statistics of HS-random states with standard errors."""
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples")
    field = Field(field)
    stats = _validate_statistics(statistics)
    if field is Field.QUATERNION and not experimental:
        raise ExperimentalFieldError("quaternionic sampling requires experimental=True")
    sizes = _block_sizes(samples, block_size)
    acc = {name: _Moments() for name in stats}
    workers = workers or default_workers()
    run = partial(_run_block, field=field, seed=seed, stats=stats, experimental=experimental)
    jobs = [(b, size) for b, size in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = pool.map(lambda job: run(job[0], size=job[1]), jobs)
            for res in results:
                for name in stats:
                    acc[name].merge(res[name])
    else:
        for b, size in jobs:
            res = run(b, size=size)
            for name in stats:
                acc[name].merge(res[name])
    report = McReport(field, samples, seed,
                      {name: (acc[name].mean, acc[name].std_error) for name in stats})
    if with_targets:
        for name in stats:
            t = target_value(field, name)
            if t is not None:
                report.targets[name] = t
    return report


@dataclass
class RangeReport:
    samples: int
    det_min: float
    det_max: float
    det_pt_min: float
    det_pt_max: float
    diff_min: float
    diff_max: float
    max_negative_pt_eigenvalues: int
    min_eigenvalue: float
    max_trace_error: float


def check_ranges(field: Field, samples: int, seed: int, *, block_size: int = BLOCK_SIZE,
                 experimental: bool = False, eig_tol: float = 1e-14) -> RangeReport:
    """Extremes of det rho, det rho^PT and D, and PT eigenvalue sign counts."""
    field = Field(field)
    lo = dict(det=np.inf, pt=np.inf, diff=np.inf, eig=np.inf)
    hi = dict(det=-np.inf, pt=-np.inf, diff=-np.inf)
    max_neg = 0
    trace_err = 0.0
    for b, size in enumerate(_block_sizes(samples, block_size)):
        rho = sample_batch(field, block_rng(seed, b), size, experimental=experimental)
        d_rho, d_pt = determinants(field, rho)
        diff = d_pt - d_rho
        for key, vals in (("det", d_rho), ("pt", d_pt), ("diff", diff)):
            lo[key] = min(lo[key], float(vals.min()))
            hi[key] = max(hi[key], float(vals.max()))
        ev = np.linalg.eigvalsh(rho)
        lo["eig"] = min(lo["eig"], float(ev.min()))
        pt = partial_transpose_quaternion(rho) if field is Field.QUATERNION else partial_transpose_array(rho)
        pt_ev = np.linalg.eigvalsh(pt)
        if field is Field.QUATERNION:
            pt_ev = pt_ev[..., ::2]
        max_neg = max(max_neg, int((pt_ev < -eig_tol).sum(axis=-1).max()))
        tr = np.einsum("...ii->...", rho).real
        if field is Field.QUATERNION:
            tr = tr / 2
        trace_err = max(trace_err, float(np.abs(tr - 1).max()))
    return RangeReport(samples, lo["det"], hi["det"], lo["pt"], hi["pt"], lo["diff"], hi["diff"],
                       max_neg, lo["eig"], trace_err)
