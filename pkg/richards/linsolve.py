"""
Symmetric 7-point-stencil linear algebra
Storage, diagonal incomplete Cholesky (DIC) and preconditioned conjugate gradient

The sequential sweeps run in numba kernels compiled with nogil so SPMD
workers on separate threads actually overlap.
"""

from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
from numba import njit

from .errors import FactorizationBreakdown, NoConvergenceError
from .exchange import ReduceKind

DEFAULT_MAX_ITER = 5000

ReduceFn = Callable[[ReduceKind, float], float]
HaloFn = Callable[[np.ndarray], None]


def serial_reduce(kind: ReduceKind, value):
    return value


def no_halo(field: np.ndarray):
    return None


# --- kernels ---------------------------------------------------------------

@njit(cache=True, nogil=True)
def _matvec_kernel(diag, coeff, owner, neighbour, x, y):
    n = diag.shape[0]
    for c in range(n):
        y[c] = diag[c] * x[c]
    for f in range(coeff.shape[0]):
        o = owner[f]
        nb = neighbour[f]
        a = coeff[f]
        y[o] += a * x[nb]
        if nb < n:
            y[nb] += a * x[o]


@njit(cache=True, nogil=True)
def _dic_factor_kernel(diag, coeff, low_ptr, low_idx, low_face, dtilde):
    n = diag.shape[0]
    for c in range(n):
        d = diag[c]
        for k in range(low_ptr[c], low_ptr[c + 1]):
            a = coeff[low_face[k]]
            d -= a * a / dtilde[low_idx[k]]
        dtilde[c] = d
        if d <= 0.0:
            return c
    return -1


@njit(cache=True, nogil=True)
def _dic_sweep_kernel(rdtilde, coeff, low_ptr, low_idx, low_face, up_ptr, up_idx, up_face, r, z):
    n = r.shape[0]
    for c in range(n):
        s = r[c]
        for k in range(low_ptr[c], low_ptr[c + 1]):
            s -= coeff[low_face[k]] * z[low_idx[k]]
        z[c] = s * rdtilde[c]
    for c in range(n - 1, -1, -1):
        s = 0.0
        for k in range(up_ptr[c], up_ptr[c + 1]):
            s += coeff[up_face[k]] * z[up_idx[k]]
        z[c] -= s * rdtilde[c]


# --- storage ---------------------------------------------------------------

class StencilTopology:
    """
    Face connectivity of one part's system

    Faces whose neighbour index is >= n refer to halo slots: they enter the
    matrix-vector product but not the factorization (block-Jacobi across parts).
    """

    def __init__(self, n: int, owner: np.ndarray, neighbour: np.ndarray, n_halo: int = 0):
        self.n = int(n)
        self.n_halo = int(n_halo)
        self.owner = np.ascontiguousarray(owner, dtype=np.int64)
        self.neighbour = np.ascontiguousarray(neighbour, dtype=np.int64)

        local = np.flatnonzero(self.neighbour < self.n)
        lo = np.minimum(self.owner[local], self.neighbour[local])
        hi = np.maximum(self.owner[local], self.neighbour[local])
        by_hi = np.argsort(hi, kind="stable")
        self.low_idx = lo[by_hi]
        self.low_face = local[by_hi]
        self.low_ptr = np.concatenate([[0], np.cumsum(np.bincount(hi, minlength=self.n))]).astype(np.int64)
        by_lo = np.argsort(lo, kind="stable")
        self.up_idx = hi[by_lo]
        self.up_face = local[by_lo]
        self.up_ptr = np.concatenate([[0], np.cumsum(np.bincount(lo, minlength=self.n))]).astype(np.int64)

    @property
    def n_ext(self) -> int:
        return self.n + self.n_halo


@dataclass(eq=False)
class StencilMatrix:
    """Diagonal, one off-diagonal coefficient per face, and right-hand side"""
    topology: StencilTopology
    diag: np.ndarray
    face_coeff: np.ndarray
    rhs: np.ndarray

    def matvec(self, x_ext: np.ndarray) -> np.ndarray:
        """A x for the owned rows; x_ext must carry current halo values"""
        y = np.empty(self.topology.n)
        _matvec_kernel(self.diag, self.face_coeff, self.topology.owner, self.topology.neighbour, x_ext, y)
        return y

    def to_dense(self) -> np.ndarray:
        """Dense copy of the owned block (tests and small oracles)"""
        n = self.topology.n
        a = np.diag(self.diag.astype(float))
        for f, (o, nb) in enumerate(zip(self.topology.owner, self.topology.neighbour)):
            if nb < n:
                a[o, nb] += self.face_coeff[f]
                a[nb, o] += self.face_coeff[f]
        return a


@dataclass(eq=False)
class DicFactor:
    dtilde: np.ndarray

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / self.dtilde


def dic_factor(A: StencilMatrix) -> DicFactor:
    """
    IC(0) restricted to the diagonal, lexicographic order within the part

    Raises:
        FactorizationBreakdown: a modified pivot is not positive
    """
    topo = A.topology
    dtilde = np.empty(topo.n)
    bad = _dic_factor_kernel(A.diag, A.face_coeff, topo.low_ptr, topo.low_idx, topo.low_face, dtilde)
    if bad >= 0:
        raise FactorizationBreakdown(int(bad), float(dtilde[bad]))
    return DicFactor(dtilde)


def dic_apply(F: DicFactor, A: StencilMatrix, r: np.ndarray) -> np.ndarray:
    """Solve (D + L) D^-1 (D + L^T) z = r by forward sweep, scaling, backward sweep"""
    topo = A.topology
    z = np.empty(topo.n)
    _dic_sweep_kernel(F.inverse, A.face_coeff, topo.low_ptr, topo.low_idx, topo.low_face,
                      topo.up_ptr, topo.up_idx, topo.up_face, np.ascontiguousarray(r, dtype=float), z)
    return z


def scaled_residual(r: np.ndarray, diag: np.ndarray) -> float:
    """max_i |r_i| / diag_i, in metres of head"""
    if r.size == 0:
        return 0.0
    return float(np.max(np.abs(r) / diag))


def pcg_solve(A: StencilMatrix, x0: Optional[np.ndarray], tol: float,
              max_iter: int = DEFAULT_MAX_ITER,
              reduce: ReduceFn = serial_reduce,
              halo: HaloFn = no_halo) -> Tuple[np.ndarray, int]:
    """
    Preconditioned conjugate gradient with DIC

    Args:
        A: this part's rows of the global system
        x0: initial guess for the owned cells (zeros if None)
        tol: exit when max_i |r_i / diag_i| <= tol [m]
        max_iter: iteration cap
        reduce: global reduction service (identity when serial)
        halo: fills the halo slots of an extended vector in place

    Returns:
        (x, iterations)

    Raises:
        NoConvergenceError: cap reached, or the search direction lost positivity
        FactorizationBreakdown: the preconditioner broke down on any part
    """
    topo = A.topology
    n = topo.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    p_ext = np.zeros(topo.n_ext)

    p_ext[:n] = x
    halo(p_ext)
    r = A.rhs - A.matvec(p_ext)
    res = reduce(ReduceKind.MAX, scaled_residual(r, A.diag))
    if res <= tol:
        return x, 0

    # every part must leave together, so a local breakdown is agreed globally
    breakdown = None
    try:
        factor = dic_factor(A)
    except FactorizationBreakdown as err:
        breakdown = err
    if reduce(ReduceKind.MAX, 0.0 if breakdown is None else 1.0) > 0.0:
        raise breakdown or FactorizationBreakdown(-1, float("nan"))
    z = dic_apply(factor, A, r)
    p_ext[:n] = z
    rz = reduce(ReduceKind.SUM, float(np.dot(r, z)))

    for it in range(1, max_iter + 1):
        halo(p_ext)
        q = A.matvec(p_ext)
        p = p_ext[:n]
        pq = reduce(ReduceKind.SUM, float(np.dot(p, q)))
        if not pq > 0.0:
            raise NoConvergenceError(res, it)
        alpha = rz / pq
        x += alpha * p
        r -= alpha * q
        res = reduce(ReduceKind.MAX, scaled_residual(r, A.diag))
        if res <= tol:
            return x, it
        z = dic_apply(factor, A, r)
        rz_new = reduce(ReduceKind.SUM, float(np.dot(r, z)))
        beta = rz_new / rz
        rz = rz_new
        p_ext[:n] = z + beta * p
    raise NoConvergenceError(res, max_iter)
