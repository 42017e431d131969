"""Small dense convex QP solver (primal active set) for

    min  1/2 z' H z + q' z    s.t.  C z >= lb

Sized for hard-real-time force distribution: a dozen variables, a few dozen
inequality rows, warm-startable across control ticks. Tie-breaking is fixed
(lowest index) so solves are deterministic.
"""
from dataclasses import dataclass, field

import numpy as np

_FEAS_TOL = 1e-9
_LAMBDA_TOL = 1e-9
_STEP_TOL = 1e-11


@dataclass
class QpProblem:
    H: np.ndarray    # (n, n) symmetric PSD
    q: np.ndarray    # (n,)
    C: np.ndarray    # (m, n)
    lb: np.ndarray   # (m,)

    def __post_init__(self):
        self.H = np.asarray(self.H, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        n = self.H.shape[0]
        if self.H.shape != (n, n) or self.q.shape != (n,):
            raise ValueError("inconsistent H/q dimensions")
        if self.C.ndim != 2 or self.C.shape[1] != n or self.lb.shape != (self.C.shape[0],):
            raise ValueError("inconsistent C/lb dimensions")
        if not np.allclose(self.H, self.H.T, atol=1e-12, rtol=0.0):
            raise ValueError("H must be symmetric")


@dataclass
class QpSolution:
    z: np.ndarray
    lam: np.ndarray
    status: str          # solved | infeasible | max-iterations
    iterations: int


@dataclass
class ActiveSetSolver:
    """One instance per control thread; keeps the previous solution for warm starts."""
    max_iter: int = 200
    _warm_z: np.ndarray = field(default=None, repr=False)
    _warm_active: tuple = field(default=(), repr=False)

    def solve(self, problem: QpProblem, max_iter=None, warm_start=True):
        max_iter = self.max_iter if max_iter is None else max_iter
        H, q, C, lb = problem.H, problem.q, problem.C, problem.lb
        n, m = H.shape[0], C.shape[0]

        H = _ensure_spd(H)

        z, active = self._starting_point(H, q, C, lb, warm_start)
        if z is None:
            return QpSolution(z=np.full(n, np.nan), lam=np.zeros(m),
                              status="infeasible", iterations=0)

        iterations = 0
        status = "max-iterations"
        lam_full = np.zeros(m)
        while iterations < max_iter:
            iterations += 1
            g = H @ z + q
            W = sorted(active)
            p, lam_w = _eqp_step(H, g, C, W)
            if np.linalg.norm(p, np.inf) <= _STEP_TOL * (1.0 + np.linalg.norm(z, np.inf)):
                if lam_w.size == 0 or np.min(lam_w) >= -_LAMBDA_TOL:
                    lam_full = np.zeros(m)
                    for idx, ci in enumerate(W):
                        lam_full[ci] = max(lam_w[idx], 0.0)
                    status = "solved"
                    break
                # drop the most negative multiplier (argmin returns the lowest index)
                drop = W[int(np.argmin(lam_w))]
                active.discard(drop)
                continue
            # ratio test against constraints outside the working set
            alpha = 1.0
            blocking = -1
            slack = C @ z - lb
            descent = C @ p
            for i in range(m):
                if i in active or descent[i] >= -1e-13:
                    continue
                a_i = slack[i] / (-descent[i])
                if a_i < alpha - 1e-13:
                    alpha = max(a_i, 0.0)
                    blocking = i
            z = z + alpha * p
            if blocking >= 0:
                active.add(blocking)

        self._warm_z = z.copy()
        self._warm_active = tuple(sorted(active))
        return QpSolution(z=z, lam=lam_full, status=status, iterations=iterations)

    def _starting_point(self, H, q, C, lb, warm_start):
        """Feasible z plus a working set of constraints active at z."""
        n, m = H.shape[0], C.shape[0]
        if warm_start and self._warm_z is not None and self._warm_z.shape == (n,) \
                and C.shape[0] == m and np.all(C @ self._warm_z - lb >= -_FEAS_TOL):
            z = self._warm_z.copy()
            slack = C @ z - lb
            active = {i for i in self._warm_active if i < m and abs(slack[i]) <= 1e-8}
            return z, active
        z = -np.linalg.solve(H, q)
        if m == 0 or np.all(C @ z - lb >= -_FEAS_TOL):
            return z, set()
        z = _pocs_feasible(C, lb, z)
        if z is None:
            return None, None
        slack = C @ z - lb
        return z, {i for i in range(m) if abs(slack[i]) <= 1e-10}


def _ensure_spd(H):
    """Cholesky-checked copy; rank-deficient Hessians get a trace-scaled shift."""
    try:
        np.linalg.cholesky(H)
        return H
    except np.linalg.LinAlgError:
        n = H.shape[0]
        eps = 1e-9 * max(np.trace(H) / n, 1.0)
        return H + eps * np.eye(n)


def _eqp_step(H, g, C, W):
    """Newton step p and multipliers with the working-set rows as equalities."""
    n = H.shape[0]
    k = len(W)
    if k == 0:
        return np.linalg.solve(H, -g), np.empty(0)
    Cw = C[W, :]
    K = np.zeros((n + k, n + k))
    K[:n, :n] = H
    K[:n, n:] = -Cw.T
    K[n:, :n] = Cw
    rhs = np.concatenate([-g, np.zeros(k)])
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def _pocs_feasible(C, lb, z, sweeps=500):
    """Cyclic projection onto half-spaces; None if no feasible point is found."""
    norms_sq = np.einsum("ij,ij->i", C, C)
    for _ in range(sweeps):
        violated = False
        for i in range(C.shape[0]):
            r = lb[i] - C[i] @ z
            if r > _FEAS_TOL:
                if norms_sq[i] <= 0.0:
                    return None
                z = z + (r / norms_sq[i]) * C[i]
                violated = True
        if not violated:
            return z
    return None


def solve(problem: QpProblem, max_iter=200):
    """One-shot solve with a fresh workspace."""
    return ActiveSetSolver(max_iter=max_iter).solve(problem, warm_start=False)
