"""Dense primal-dual interior-point solver for small block SDPs.

Primal/dual pair, for ``sense="min"``::

    min  <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
    max  b.y      s.t.  sum_i y_i A_i + S = C,  S >= 0

For ``sense="max"`` the roles flip: the primal maximizes ``<C, X>`` and the
dual minimizes ``b.y`` subject to ``S = sum_i y_i A_i - C >= 0``. Either way
``y`` certifies an upper (max) or lower (min) bound valid for every
right-hand side ``b``.

The method is an infeasible-start path-following scheme with Mehrotra's
predictor-corrector and either the Nesterov-Todd (default) or HKM search
direction. Each constraint matrix is
stored per block as a row of a sparse ``(m, n_b**2)`` matrix acting on the
row-major vectorization of the block.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
from scipy.linalg import lapack

log = logging.getLogger(__name__)

STEP_FRACTION = 0.98
STALL_ITERATIONS = 10


@dataclass(frozen=True, eq=False)
class SdpProblem:
    blocks: tuple[int, ...]
    objective: tuple[np.ndarray, ...]
    A: tuple[sp.csr_matrix, ...]
    b: np.ndarray
    sense: str = "max"

    def __post_init__(self) -> None:
        if self.sense not in ("max", "min"):
            raise ValueError("sense must be 'max' or 'min'")
        if not (len(self.blocks) == len(self.objective) == len(self.A)):
            raise ValueError("one objective and one constraint matrix per block")
        m = len(self.b)
        for n, C, A in zip(self.blocks, self.objective, self.A):
            if C.shape != (n, n) or np.max(np.abs(C - C.T), initial=0) > 1e-12:
                raise ValueError("objective blocks must be symmetric and match block sizes")
            if A.shape != (m, n * n):
                raise ValueError("constraint matrix has the wrong shape")
            At = _transpose_vec(A, n)
            if abs(A - At).max() > 1e-12 if A.nnz else False:
                raise ValueError("constraint matrices must be symmetric")

    @property
    def n_constraints(self) -> int:
        return len(self.b)

    @classmethod
    def from_dense(
        cls,
        blocks: Sequence[int],
        objective: Sequence[np.ndarray],
        constraints: Sequence[tuple[Sequence[np.ndarray], float]],
        sense: str = "max",
    ) -> "SdpProblem":
        """Build from dense per-block matrices; ``constraints`` holds ``(A_blocks, b)`` pairs."""
        A = []
        for k, n in enumerate(blocks):
            rows = [np.asarray(Ai[k], dtype=float).ravel() for Ai, _ in constraints]
            A.append(sp.csr_matrix(np.array(rows).reshape(len(constraints), n * n)))
        b = np.array([bi for _, bi in constraints], dtype=float)
        return cls(tuple(blocks), tuple(np.asarray(C, dtype=float) for C in objective), tuple(A), b, sense)

    def to_json(self) -> str:
        """Self-describing export; entries are upper-triangle ``[block, i, j, value]``."""

        def upper(mat_rows):
            return [[k, int(i), int(j), float(v)] for k, i, j, v in mat_rows if i <= j]

        obj = []
        for k, (n, C) in enumerate(zip(self.blocks, self.objective)):
            for i, j in zip(*np.nonzero(C)):
                obj.append((k, i, j, C[i, j]))
        cons = [[] for _ in self.b]
        for k, (n, A) in enumerate(zip(self.blocks, self.A)):
            coo = A.tocoo()
            for r, c, v in zip(coo.row, coo.col, coo.data):
                cons[r].append((k, c // n, c % n, v))
        return json.dumps(
            {
                "format": "block-sdp/1",
                "sense": self.sense,
                "blocks": list(self.blocks),
                "objective": upper(obj),
                "constraints": [{"b": float(bi), "entries": upper(e)} for bi, e in zip(self.b, cons)],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "SdpProblem":
        d = json.loads(text)
        builder = SdpBuilder(d["blocks"], d["sense"])
        for k, i, j, v in d["objective"]:
            builder.objective_entry(k, i, j, v, symmetric_entries=True)
        for c in d["constraints"]:
            builder.add_constraint([(k, i, j, v) for k, i, j, v in c["entries"]], c["b"], symmetric_entries=True)
        return builder.build()


def _transpose_vec(A: sp.csr_matrix, n: int) -> sp.csr_matrix:
    """Rows of ``A`` reinterpreted as transposed n x n matrices."""
    perm = np.arange(n * n).reshape(n, n).T.ravel()
    return A[:, perm]


class SdpBuilder:
    """Incremental assembly of an :class:`SdpProblem` from sparse terms.

    ``coef * X[i, j]`` terms are given per entry; off-diagonal terms are split
    evenly between (i, j) and (j, i) so the matrices stay symmetric. With
    ``symmetric_entries=True`` the full ``coef`` goes to both entries, i.e.
    the term reads ``coef * (X[i, j] + X[j, i])``.
    """

    def __init__(self, blocks: Sequence[int], sense: str = "max"):
        self.blocks = tuple(int(n) for n in blocks)
        self.sense = sense
        self._obj = [np.zeros((n, n)) for n in self.blocks]
        self._rows: list[int] = []
        self._blk: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._b: list[float] = []

    def _sym_terms(self, k, i, j, coef, symmetric_entries):
        n = self.blocks[k]
        if i == j:
            return [(i * n + j, coef)]
        half = coef if symmetric_entries else coef / 2
        return [(i * n + j, half), (j * n + i, half)]

    def objective_entry(self, k: int, i: int, j: int, coef: float, symmetric_entries: bool = False) -> None:
        for col, v in self._sym_terms(k, i, j, coef, symmetric_entries):
            n = self.blocks[k]
            self._obj[k][col // n, col % n] += v

    def add_constraint(self, terms: Iterable[tuple[int, int, int, float]], rhs: float, symmetric_entries: bool = False) -> int:
        """Add ``sum coef * X_k[i, j] = rhs``; returns the constraint index."""
        r = len(self._b)
        for k, i, j, coef in terms:
            for col, v in self._sym_terms(k, i, j, coef, symmetric_entries):
                self._rows.append(r)
                self._blk.append(k)
                self._cols.append(col)
                self._vals.append(v)
        self._b.append(float(rhs))
        return r

    @property
    def n_constraints(self) -> int:
        return len(self._b)

    def build(self) -> SdpProblem:
        m = len(self._b)
        rows, blk = np.array(self._rows, dtype=int), np.array(self._blk, dtype=int)
        cols, vals = np.array(self._cols, dtype=int), np.array(self._vals, dtype=float)
        A = []
        for k, n in enumerate(self.blocks):
            sel = blk == k
            mat = sp.csr_matrix((vals[sel], (rows[sel], cols[sel])), shape=(m, n * n))
            mat.sum_duplicates()
            mat.eliminate_zeros()
            A.append(mat)
        return SdpProblem(self.blocks, tuple(self._obj), tuple(A), np.array(self._b), self.sense)


@dataclass(eq=False)
class SdpSolution:
    status: str
    X: list[np.ndarray]
    y: np.ndarray
    S: list[np.ndarray]
    primal_obj: float
    dual_obj: float
    gap: float
    iterations: int
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    message: str = ""
    infeasibility_ray: np.ndarray | None = field(default=None, repr=False)
    iterates: list | None = field(default=None, repr=False)  # (X, y, S) per iteration, if requested

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def diagnostics(self) -> dict:
        return {
            "status": self.status,
            "primal_obj": self.primal_obj,
            "dual_obj": self.dual_obj,
            "gap": self.gap,
            "iterations": self.iterations,
            "primal_residual": self.primal_residual,
            "dual_residual": self.dual_residual,
            "message": self.message,
        }


class SolverError(RuntimeError):
    def __init__(self, solution: SdpSolution):
        super().__init__(f"SDP solver finished with status {solution.status}: {solution.message}")
        self.solution = solution


def _apply(A: Sequence[sp.csr_matrix], mats: Sequence[np.ndarray]) -> np.ndarray:
    return sum(Ak @ Mk.ravel() for Ak, Mk in zip(A, mats))


def _apply_t(A: Sequence[sp.csr_matrix], blocks, y) -> list[np.ndarray]:
    return [(Ak.T @ y).reshape(n, n) for Ak, n in zip(A, blocks)]


def _sym(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _inner(P: Sequence[np.ndarray], Q: Sequence[np.ndarray]) -> float:
    return float(sum(np.vdot(p, q) for p, q in zip(P, Q)))


def _max_step(X: np.ndarray, dX: np.ndarray) -> float:
    """Largest alpha with X + alpha dX still PSD (X positive definite)."""
    try:
        L = np.linalg.cholesky(X)
    except np.linalg.LinAlgError:
        return 0.0
    W = sla.solve_triangular(L, sla.solve_triangular(L, dX, lower=True).T, lower=True)
    lam = np.linalg.eigvalsh(_sym(W)).min()
    return np.inf if lam >= 0 else -1.0 / lam


def _independent_rows(A, b, tol=1e-9):
    """Drop linearly dependent equality rows.

    Returns ``(keep, ray)``; ``ray`` is a Farkas vector (``A^T ray = 0``,
    ``b.ray != 0``) when the equalities are inconsistent, else ``None``.
    """
    m = len(b)
    G = sum((Ak @ Ak.T) for Ak in A)
    G = G.toarray() if sp.issparse(G) else np.asarray(G)
    if m == 0:
        return np.arange(0), None
    scale = max(np.max(np.abs(np.diag(G))), 1.0)
    c, piv, rank, info = lapack.dpstrf(G, lower=1, tol=1e-13 * scale)
    piv = piv - 1
    if rank == m:
        return np.arange(m), None
    keep, drop = np.sort(piv[:rank]), piv[rank:]
    Gkk = G[np.ix_(keep, keep)]
    coef = np.linalg.solve(Gkk, G[np.ix_(keep, drop)])
    mismatch = b[drop] - coef.T @ b[keep]
    bad = np.argmax(np.abs(mismatch))
    if abs(mismatch[bad]) > tol * (1 + np.max(np.abs(b))):
        ray = np.zeros(m)
        ray[drop[bad]] = 1.0
        ray[keep] = -coef[:, bad]
        return keep, ray / np.linalg.norm(ray)
    return keep, None



def _is_primal_ray(A, blocks, b, y, tol=1e-6) -> bool:
    """``sum y_i A_i <= 0`` with ``b.y > 0`` certifies ``A(X) = b, X >= 0`` empty."""
    ny = np.linalg.norm(y)
    if ny == 0 or b @ y <= tol * ny * (1 + np.linalg.norm(b)):
        return False
    return max(np.linalg.eigvalsh(t).max() for t in _apply_t(A, blocks, y / ny)) <= tol


def _is_dual_ray(A, C, X, tol=1e-6) -> bool:
    """``A(X) = 0, X >= 0, <C, X> < 0`` certifies the dual constraints empty."""
    nx = np.sqrt(_inner(X, X))
    Xn = [x / nx for x in X]
    return _inner(C, Xn) < -tol and np.max(np.abs(_apply(A, Xn)), initial=0.0) <= tol


def _project_affine(A, blocks, b, X, gram):
    """Least-norm correction onto ``A(X) = b``; skipped if it would leave the cone."""
    r = b - _apply(A, X)
    corr = _apply_t(A, blocks, sla.cho_solve(gram, r))
    Xn = [_sym(Xk + ck) for Xk, ck in zip(X, corr)]
    try:
        for x in Xn:
            np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        return X
    return Xn


def _schur_factor(A, W1, W2):
    """Cholesky factor of M_ij = sum_k Tr(A_i W1_k A_j W2_k)."""
    m = A[0].shape[0]
    M = np.zeros((m, m))
    for Ak, P, Q in zip(A, W1, W2):
        if Ak.nnz == 0:
            continue
        AK = Ak @ np.kron(P, Q)
        M += Ak @ np.ascontiguousarray(AK.T)
    M = _sym(M)
    for reg in (0.0, 1e-12):
        try:
            Mr = M + reg * max(np.max(np.diag(M)), 1.0) * np.eye(m) if reg else M
            return M, sla.cho_factor(Mr)
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError("Schur complement is not positive definite")


def _schur_solve(schur, rhs, refine: int = 2):
    """Cholesky solve followed by a few steps of iterative refinement."""
    M, factor = schur
    x = sla.cho_solve(factor, rhs)
    for _ in range(refine):
        x = x + sla.cho_solve(factor, rhs - M @ x)
    return x


def _step_pair(X, S, dX, dS, n_tot):
    ap = min(1.0, STEP_FRACTION * min(_max_step(Xk, d) for Xk, d in zip(X, dX)))
    ad = min(1.0, STEP_FRACTION * min(_max_step(Sk, d) for Sk, d in zip(S, dS)))
    mu = _inner([Xk + ap * d for Xk, d in zip(X, dX)], [Sk + ad * d for Sk, d in zip(S, dS)]) / n_tot
    return ap, ad, mu


def _hkm_step(A, blocks, X, S, rp, Rd, mu):
    """HKM predictor-corrector direction."""
    n_tot = sum(blocks)
    try:
        Sinv = [_sym(sla.cho_solve(sla.cho_factor(Sk), np.eye(len(Sk)))) for Sk in S]
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("dual slack lost positive definiteness") from None
    factor = _schur_factor(A, X, Sinv)
    base_rhs = rp + _apply(A, [Xk @ Rk @ Si for Xk, Rk, Si in zip(X, Rd, Sinv)])

    def solve_dir(Rc):
        rhs = base_rhs - _apply(A, [Rk @ Si for Rk, Si in zip(Rc, Sinv)])
        dy = _schur_solve(factor, rhs)
        dS = [Rk - Tk for Rk, Tk in zip(Rd, _apply_t(A, blocks, dy))]
        dX = [_sym((Rk - Xk @ dSk) @ Si) for Rk, Xk, dSk, Si in zip(Rc, X, dS, Sinv)]
        return dX, dy, dS

    XS = [Xk @ Sk for Xk, Sk in zip(X, S)]
    dXa, _, dSa = solve_dir([-m for m in XS])
    _, _, mu_aff = _step_pair(X, S, dXa, dSa, n_tot)
    sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))
    Rc = [sigma * mu * np.eye(n) - XSk - dx @ ds for n, XSk, dx, ds in zip(blocks, XS, dXa, dSa)]
    dX, dy, dS = solve_dir(Rc)
    return dX, dy, dS, sigma


def _nt_scaling(Xk, Sk):
    """R with R^-1 X R^-T = R^T S R = diag(lam)."""
    Lx = np.linalg.cholesky(Xk)
    Ls = np.linalg.cholesky(Sk)
    U, lam, Vt = np.linalg.svd(Ls.T @ Lx)
    R = Lx @ Vt.T / np.sqrt(lam)
    return R, lam


def _nt_step(A, blocks, X, S, rp, Rd, mu):
    """Nesterov-Todd predictor-corrector direction, computed in the scaled space."""
    n_tot = sum(blocks)
    try:
        scal = [_nt_scaling(Xk, Sk) for Xk, Sk in zip(X, S)]
    except np.linalg.LinAlgError:
        raise np.linalg.LinAlgError("iterate lost positive definiteness") from None
    R = [r for r, _ in scal]
    lam = [l for _, l in scal]
    W = [_sym(r @ r.T) for r in R]
    factor = _schur_factor(A, W, W)
    base_rhs = rp + _apply(A, [Wk @ Rk @ Wk for Wk, Rk in zip(W, Rd)])

    def solve_dir(T):
        # Z solves lam o Z = T (Jordan product with the diagonal lam)
        Z = [2 * Tk / (l[:, None] + l[None, :]) for Tk, l in zip(T, lam)]
        RZR = [r @ z @ r.T for r, z in zip(R, Z)]
        dy = _schur_solve(factor, base_rhs - _apply(A, RZR))
        dS = [Rk - Tk for Rk, Tk in zip(Rd, _apply_t(A, blocks, dy))]
        dX = [_sym(rzr - Wk @ dSk @ Wk) for rzr, Wk, dSk in zip(RZR, W, dS)]
        return dX, dy, dS

    lam2 = [np.diag(l * l) for l in lam]
    dXa, _, dSa = solve_dir([-m for m in lam2])
    _, _, mu_aff = _step_pair(X, S, dXa, dSa, n_tot)
    sigma = min(1.0, max(0.0, (mu_aff / mu) ** 3))
    T = []
    for r, n, l2, dx, ds in zip(R, blocks, lam2, dXa, dSa):
        rinv = np.linalg.inv(r)
        dxs = rinv @ dx @ rinv.T
        dss = r.T @ ds @ r
        T.append(sigma * mu * np.eye(n) - l2 - _sym(dxs @ dss))
    dX, dy, dS = solve_dir(T)
    return dX, dy, dS, sigma

def solve(
    p: SdpProblem,
    gap_tol: float = 1e-8,
    max_iter: int = 200,
    feas_tol: float = 1e-8,
    direction: str = "nt",
    keep_iterates: bool = False,
) -> SdpSolution:
    """Solve ``p`` to relative duality gap ``gap_tol``.

    Residuals are measured in the max norm relative to ``1 + max|b|`` (primal)
    and ``1 + max|C|`` (dual). The returned point is the best iterate seen.
    With ``keep_iterates`` every iterate is also returned (in the caller's
    sign convention), for post-processing that ranks them differently.
    """
    sign = 1.0 if p.sense == "min" else -1.0
    blocks = p.blocks
    n_tot = sum(blocks)
    m_full = p.n_constraints

    keep, ray = _independent_rows(p.A, p.b)
    if ray is not None:
        zeros = [np.zeros((n, n)) for n in blocks]
        return SdpSolution(
            "infeasible", zeros, np.zeros(m_full), zeros, np.nan, np.nan, np.inf, 0,
            message="equality constraints are inconsistent", infeasibility_ray=ray,
        )
    A = [Ak[keep] for Ak in p.A]
    b = p.b[keep]
    C = [sign * Ck for Ck in p.objective]

    normA = np.sqrt(np.asarray(sum(Ak.multiply(Ak).sum(axis=1) for Ak in A)).ravel())
    normC = np.sqrt(_inner(C, C))
    scale_b = 1 + np.max(np.abs(b), initial=0.0)
    scale_c = 1 + max(np.abs(c).max() for c in C)
    xi = max(10.0, np.sqrt(n_tot), np.max((1 + np.abs(b)) / (1 + normA), initial=1.0) * np.sqrt(n_tot))
    eta = max(10.0, np.sqrt(n_tot), normC, np.max(normA, initial=0.0))
    X = [xi * np.eye(n) for n in blocks]
    S = [eta * np.eye(n) for n in blocks]
    gram = sum(Ak @ Ak.T for Ak in A)
    gram = sla.cho_factor(gram.toarray() if sp.issparse(gram) else np.asarray(gram)) if len(b) else None
    y = np.zeros(len(b))

    status, message = "max_iterations", ""
    ray_out = None
    history = [] if keep_iterates else None
    best = None
    it = 0
    for it in range(max_iter + 1):
        rp = b - _apply(A, X)
        Rd = [Ck - Sk - Tk for Ck, Sk, Tk in zip(C, S, _apply_t(A, blocks, y))]
        pobj, dobj = _inner(C, X), float(b @ y)
        xs = _inner(X, S)
        mu = xs / n_tot
        rel_p = np.max(np.abs(rp), initial=0.0) / scale_b
        rel_d = max(np.abs(r).max() for r in Rd) / scale_c
        gap = max(abs(pobj - dobj), xs) / (1 + abs(pobj) + abs(dobj))
        log.debug("it %3d pobj % .10f dobj % .10f gap %.2e rp %.2e rd %.2e", it, pobj, dobj, gap, rel_p, rel_d)
        if history is not None:
            y_it = np.zeros(m_full)
            y_it[keep] = sign * y
            history.append(([x.copy() for x in X], y_it, [s.copy() for s in S]))
        score = max(rel_p / feas_tol, rel_d / feas_tol, gap / gap_tol)
        if best is None or score < best[0]:
            best = (score, [x.copy() for x in X], y.copy(), [s.copy() for s in S], gap)
            best_it = it
        if score <= 1.0:
            break
        if it - best_it >= STALL_ITERATIONS:
            status, message = "stalled", f"no progress in {STALL_ITERATIONS} iterations"
            break
        if (rel_p > 1e-5 and mu < 1e-10 * (1 + abs(pobj))) or np.max(np.abs(y), initial=0) > 1e12:
            if _is_primal_ray(A, blocks, b, y):
                status, message = "infeasible", "primal infeasible (Farkas ray in y)"
                ray_out = np.zeros(m_full)
                ray_out[keep] = sign * y / np.linalg.norm(y)
                break
        if max(np.abs(x).max() for x in X) > 1e12:
            if _is_dual_ray(A, C, X):
                status, message = "infeasible", "dual infeasible (improving ray in X)"
                ray_out = np.concatenate([x.ravel() for x in X])
                ray_out /= np.linalg.norm(ray_out)
                break
        if it == max_iter:
            message = "iteration limit reached"
            break

        try:
            if direction == "hkm":
                step = _hkm_step(A, blocks, X, S, rp, Rd, mu)
            elif direction == "nt":
                step = _nt_step(A, blocks, X, S, rp, Rd, mu)
            else:
                raise ValueError(f"unknown search direction {direction!r}")
        except np.linalg.LinAlgError as exc:
            status, message = "numerical_failure", str(exc)
            break
        dX, dy, dS, sigma = step
        ap = min(1.0, STEP_FRACTION * min(_max_step(Xk, d) for Xk, d in zip(X, dX)))
        ad = min(1.0, STEP_FRACTION * min(_max_step(Sk, d) for Sk, d in zip(S, dS)))
        log.debug("     step primal %.3f dual %.3f sigma %.2e", ap, ad, sigma)
        if max(ap, ad) < 1e-8:
            status, message = "numerical_failure", "step length collapsed"
            break
        X = [Xk + ap * d for Xk, d in zip(X, dX)]
        S = [Sk + ad * d for Sk, d in zip(S, dS)]
        if ap < 1.0 and gram is not None:
            X = _project_affine(A, blocks, b, X, gram)
        y = y + ad * dy

    if status != "infeasible":
        score, X, y, S, gap = best
        if score <= 1.0:
            status, message = "optimal", ""
    y_full = np.zeros(m_full)
    y_full[keep] = sign * y
    pobj = sign * _inner(C, X)
    dobj = float(p.b @ y_full)
    return SdpSolution(
        status, X, y_full, S, pobj, dobj, float(gap), it,
        primal_residual=float(np.max(np.abs(p.b - _apply(p.A, X)), initial=0.0)),
        dual_residual=float(max(np.abs(r).max() for r in dual_residual(p, y_full, S))),
        message=message,
        infeasibility_ray=ray_out,
        iterates=history,
    )


def dual_residual(p: SdpProblem, y: np.ndarray, S: Sequence[np.ndarray]) -> list[np.ndarray]:
    """Per-block ``C - sum y_i A_i + S`` (max) or ``C - sum y_i A_i - S`` (min)."""
    At = _apply_t(p.A, p.blocks, y)
    if p.sense == "max":
        return [Ck - Tk + Sk for Ck, Tk, Sk in zip(p.objective, At, S)]
    return [Ck - Tk - Sk for Ck, Tk, Sk in zip(p.objective, At, S)]


@dataclass(frozen=True)
class ResidualReport:
    primal: float
    dual: float
    min_eig_X: float
    min_eig_S: float
    gap: float
    complementarity: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def residuals(p: SdpProblem, s: SdpSolution) -> ResidualReport:
    pr = np.max(np.abs(p.b - _apply(p.A, s.X)), initial=0.0)
    dr = max(np.abs(r).max() for r in dual_residual(p, s.y, s.S))
    pobj = _inner(p.objective, s.X)
    dobj = float(p.b @ s.y)
    return ResidualReport(
        primal=float(pr),
        dual=float(dr),
        min_eig_X=float(min(np.linalg.eigvalsh(x).min() for x in s.X)),
        min_eig_S=float(min(np.linalg.eigvalsh(x).min() for x in s.S)),
        gap=float(abs(pobj - dobj)),
        complementarity=float(_inner(s.X, s.S)),
    )
