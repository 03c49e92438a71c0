"""Constrained entropic barycenter solver over covariance observations.

Estimates one spectrum y from J per-array covariance observations by
minimizing sum_j [ T_eps(y, phi_j) + gamma * ||delta_j||^2 ] subject to
A_j phi_j = r_j + delta_j, where T_eps is entropic transport cost, A_j the
lifted forward operator of array j, and delta_j a slack absorbing
observation noise. The solver runs block coordinate ascent on the Lagrange
dual: each array block maximizes over its dual vector lambda_j with a
damped Newton method (the root of
``A_j (u_j o K v_j) - r_j + lambda_j / (2 gamma)`` in lambda_j, where
u_j = exp(A_j^T lambda_j / eps)), and the barycenter block has the closed
form y = geometric mean of K^T u_j with v_j = y / (K^T u_j).

Conventions: plans are M_j = diag(u_j) K diag(v_j); rows are the array
side (row sums M_j 1 = phi_j), columns the barycenter side
(column sums M_j^T 1 = y); slacks are delta_j = -lambda_j / (2 gamma).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .arrays import ForwardOperator
from .errors import ConvergenceError
from .transport import gibbs_kernel

LINESEARCH_SHRINK = 0.5
LINESEARCH_DECREASE = 1e-4
LINESEARCH_MIN_STEP = 1e-12


@dataclass
class FusionProblem:
    """One fusion instance: operators, observations, ground cost, parameters.

    ``operators`` entries may be ForwardOperator objects or plain (rows, n)
    arrays; ``observations`` are the lifted covariance vectors r_j.
    """

    operators: list
    observations: list
    cost: np.ndarray
    epsilon: float
    gamma: float

    def __post_init__(self):
        if len(self.operators) < 1:
            raise ValueError("at least one array is required")
        if len(self.operators) != len(self.observations):
            raise ValueError("operators and observations must pair up")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        self.cost = np.asarray(self.cost, dtype=float)
        n = self.cost.shape[0]
        if self.cost.shape != (n, n):
            raise ValueError("cost matrix must be square")
        matrices = []
        observations = []
        for j, (op, obs) in enumerate(zip(self.operators, self.observations)):
            mat = op.matrix if isinstance(op, ForwardOperator) else np.asarray(op, dtype=float)
            obs = np.asarray(obs, dtype=float)
            if mat.ndim != 2 or mat.shape[1] != n:
                raise ValueError(f"operator {j} must have {n} columns, got shape {mat.shape}")
            if obs.shape != (mat.shape[0],):
                raise ValueError(
                    f"observation {j} has shape {obs.shape}, expected ({mat.shape[0]},)"
                )
            matrices.append(mat)
            observations.append(obs)
        if all(not obs.any() for obs in observations):
            raise ValueError("all observations are zero; the barycenter mass is undetermined")
        self.observations = observations
        self._matrices = matrices

    @property
    def operator_matrices(self) -> list[np.ndarray]:
        return self._matrices

    @property
    def n(self) -> int:
        return self.cost.shape[0]

    @property
    def n_arrays(self) -> int:
        return len(self._matrices)


@dataclass
class SolverState:
    """Dual iterate of the solver; u_j = exp(A_j^T lambda_j / epsilon)."""

    lam: list[np.ndarray]
    u: list[np.ndarray]
    v: list[np.ndarray]
    barycenter: np.ndarray
    dual_value: float
    eq_residuals: np.ndarray     # per-array max-norm of the Newton root function
    outer_iterations: int


@dataclass
class SweepIterate:
    """Scaling snapshot of one outer sweep (v is the one Newton consumed)."""

    u: list[np.ndarray]
    v: list[np.ndarray]
    barycenter: np.ndarray


@dataclass
class ConvergenceReport:
    converged: bool
    outer_iterations: int
    dual_values: np.ndarray
    max_residuals: np.ndarray
    barycenter_changes: np.ndarray
    newton_iterations: np.ndarray
    message: str = ""
    iterates: list[SweepIterate] | None = None


@dataclass
class FusionResult:
    """Solver output: barycenter spectrum plus per-array quantities."""

    barycenter: np.ndarray
    marginals: list[np.ndarray]       # phi_j = u_j o (K v_j)
    slacks: list[np.ndarray]          # delta_j = -lambda_j / (2 gamma)
    plans: list[np.ndarray] | None
    report: ConvergenceReport
    state: SolverState


def newton_solve_lambda(operator, observation, kv, epsilon: float, gamma: float,
                        lambda_init=None, newton_tol: float = 1e-9,
                        max_newton: int = 50) -> tuple[np.ndarray, int]:
    """Solve one array block of the dual by a damped Newton method.

    Finds the root of f(lam) = A (u(lam) o kv) - r + lam/(2 gamma) with
    u(lam) = exp(A^T lam / epsilon). The Jacobian
    (1/eps) A diag(u o kv) A^T + I/(2 gamma) is symmetric positive
    definite, so steps use a Cholesky solve; step lengths backtrack on the
    Euclidean residual norm. Convergence is declared on the max-norm of f.

    Returns the solution and the number of Newton steps taken.
    """
    A = operator.matrix if isinstance(operator, ForwardOperator) else np.asarray(operator, dtype=float)
    r = np.asarray(observation, dtype=float)
    kv = np.asarray(kv, dtype=float)
    if np.any(kv <= 0):
        raise ValueError("kv must be strictly positive")
    if not (epsilon > 0 and gamma > 0):
        raise ValueError("epsilon and gamma must be positive")
    rows = A.shape[0]
    lam = np.zeros(rows) if lambda_init is None else np.array(lambda_init, dtype=float)
    half_inv_gamma = 1.0 / (2.0 * gamma)

    def evaluate(lam_try):
        with np.errstate(over="ignore", invalid="ignore"):
            u_try = np.exp((A.T @ lam_try) / epsilon)
            w_try = u_try * kv
            f_try = A @ w_try - r + half_inv_gamma * lam_try
        return f_try, w_try

    f, w = evaluate(lam)
    fnorm = float(np.linalg.norm(f))
    for iteration in range(max_newton + 1):
        if np.max(np.abs(f)) <= newton_tol:
            return lam, iteration
        if iteration == max_newton:
            break
        jac = (A * w) @ A.T / epsilon
        if not np.all(np.isfinite(jac)):
            raise ConvergenceError(
                "Newton Jacobian overflowed; the dual iterate left the "
                "representable range",
                residuals=float(np.max(np.abs(f))),
                iterations=iteration,
            )
        jac[np.diag_indices_from(jac)] += half_inv_gamma
        step = -cho_solve(cho_factor(jac, lower=True), f)
        sigma = 1.0
        accepted = False
        while sigma >= LINESEARCH_MIN_STEP:
            lam_try = lam + sigma * step
            f_try, w_try = evaluate(lam_try)
            fnorm_try = float(np.linalg.norm(f_try))
            if np.isfinite(fnorm_try) and fnorm_try <= (1.0 - LINESEARCH_DECREASE * sigma) * fnorm:
                accepted = True
                break
            sigma *= LINESEARCH_SHRINK
        if not accepted:
            raise ConvergenceError(
                f"Newton line search stalled below step {LINESEARCH_MIN_STEP}",
                residuals=float(np.max(np.abs(f))),
                iterations=iteration,
            )
        lam, f, w, fnorm = lam_try, f_try, w_try, fnorm_try
    raise ConvergenceError(
        f"Newton did not reach tol={newton_tol} within {max_newton} steps",
        residuals=float(np.max(np.abs(f))),
        iterations=max_newton,
    )


def update_barycenter(u: list, kernel) -> np.ndarray:
    """Elementwise geometric mean of the back-projections K^T u_j.

    Evaluated in log space so products of extreme scalings cannot
    overflow.
    """
    kernel = np.asarray(kernel, dtype=float)
    log_sum = None
    for u_j in u:
        ktu = kernel.T @ u_j
        if np.any(ktu <= 0):
            raise ValueError("K^T u has nonpositive entries")
        term = np.log(ktu)
        log_sum = term if log_sum is None else log_sum + term
    return np.exp(log_sum / len(u))


def update_v(barycenter, u_j, kernel) -> np.ndarray:
    """Barycenter-side scaling v_j = y / (K^T u_j)."""
    ktu = np.asarray(kernel, dtype=float).T @ u_j
    if np.any(ktu == 0):
        raise ValueError("K^T u has zero entries")
    return np.asarray(barycenter, dtype=float) / ktu


def dual_objective(state: SolverState, problem: FusionProblem, kernel=None) -> float:
    """Lagrange dual value at the given state.

    Per array: lam^T r - eps * u^T K v - ||lam||^2 / (4 gamma) + eps * n^2,
    summed over arrays.
    """
    if kernel is None:
        kernel = gibbs_kernel(problem.cost, problem.epsilon)
    eps = problem.epsilon
    n = problem.n
    total = 0.0
    for lam_j, u_j, v_j, r_j in zip(state.lam, state.u, state.v, problem.observations):
        total += (
            float(lam_j @ r_j)
            - eps * float(u_j @ (kernel @ v_j))
            - float(lam_j @ lam_j) / (4.0 * problem.gamma)
            + eps * n * n
        )
    return total


@dataclass
class ResidualReport:
    """Max-norm diagnostics: Newton root functions and marginal agreement."""

    newton: np.ndarray                # per-array ||A (u o Kv) - r + lam/(2 gamma)||_inf
    barycenter_agreement: np.ndarray  # per-array ||v o (K^T u) - y||_inf


def residuals(state: SolverState, problem: FusionProblem, kernel=None) -> ResidualReport:
    """Evaluate the per-array solver diagnostics at a state."""
    if kernel is None:
        kernel = gibbs_kernel(problem.cost, problem.epsilon)
    newton = []
    agreement = []
    half_inv_gamma = 1.0 / (2.0 * problem.gamma)
    for A, r, lam_j, u_j, v_j in zip(
        problem.operator_matrices, problem.observations, state.lam, state.u, state.v
    ):
        f = A @ (u_j * (kernel @ v_j)) - r + half_inv_gamma * lam_j
        newton.append(np.max(np.abs(f)))
        agreement.append(np.max(np.abs(v_j * (kernel.T @ u_j) - state.barycenter)))
    return ResidualReport(np.array(newton), np.array(agreement))


def fuse(problem: FusionProblem, *, outer_tol: float = 1e-7, max_outer: int = 5000,
         newton_tol: float = 1e-9, max_newton: int = 50,
         return_plans: bool = False, record_iterates: bool = False) -> FusionResult:
    """Run the block dual ascent to convergence.

    Each outer sweep solves every array block by Newton against the current
    v_j, then refreshes the barycenter and the v_j. Convergence requires
    every Newton block at its tolerance (enforced by the inner solver) and
    a relative L1 change of the barycenter at most ``outer_tol``. The
    returned state is the one the final Newton sweep solved against, so its
    root functions satisfy ``newton_tol`` exactly.

    Exhausting ``max_outer`` is reported through the result (converged
    False), not raised; inner Newton failures propagate as
    ConvergenceError tagged with the array index.
    """
    matrices = problem.operator_matrices
    obs = problem.observations
    eps, gam = problem.epsilon, problem.gamma
    n, n_arrays = problem.n, problem.n_arrays
    kernel = gibbs_kernel(problem.cost, eps)
    half_inv_gamma = 1.0 / (2.0 * gam)

    lam = [np.zeros(m.shape[0]) for m in matrices]
    u = [np.ones(n) for _ in range(n_arrays)]
    v = [np.ones(n) for _ in range(n_arrays)]
    kv = [kernel @ v_j for v_j in v]
    barycenter = None
    ktu = None

    dual_values: list[float] = []
    max_residuals: list[float] = []
    barycenter_changes: list[float] = []
    newton_counts: list[int] = []
    iterates: list[SweepIterate] | None = [] if record_iterates else None

    converged = False
    outer = 0
    eq_res = np.full(n_arrays, np.inf)
    for outer in range(1, max_outer + 1):
        if outer > 1:
            # refresh the barycenter-side scalings before the Newton sweep so
            # the state at exit is always the one Newton solved against
            v = [barycenter / ktu_j for ktu_j in ktu]
            kv = [kernel @ v_j for v_j in v]
        sweep_newton = 0
        for j in range(n_arrays):
            try:
                lam[j], steps = newton_solve_lambda(
                    matrices[j], obs[j], kv[j], eps, gam, lam[j],
                    newton_tol=newton_tol, max_newton=max_newton,
                )
            except ConvergenceError as exc:
                raise ConvergenceError(
                    f"array {j}: {exc}",
                    residuals=exc.residuals,
                    iterations=exc.iterations,
                ) from exc
            u[j] = np.exp((matrices[j].T @ lam[j]) / eps)
            sweep_newton += steps
            f_j = matrices[j] @ (u[j] * kv[j]) - obs[j] + half_inv_gamma * lam[j]
            eq_res[j] = np.max(np.abs(f_j))

        ktu = [kernel.T @ u_j for u_j in u]
        log_sum = np.zeros(n)
        for ktu_j in ktu:
            if np.any(ktu_j <= 0):
                raise ValueError("K^T u has nonpositive entries")
            log_sum += np.log(ktu_j)
        new_barycenter = np.exp(log_sum / n_arrays)

        dual = 0.0
        for lam_j, u_j, kv_j, r_j in zip(lam, u, kv, obs):
            dual += (
                float(lam_j @ r_j)
                - eps * float(u_j @ kv_j)
                - float(lam_j @ lam_j) / (4.0 * gam)
                + eps * n * n
            )
        if barycenter is None:
            change = np.inf
        else:
            change = float(np.abs(new_barycenter - barycenter).sum()
                           / np.abs(barycenter).sum())

        dual_values.append(dual)
        max_residuals.append(float(eq_res.max()))
        barycenter_changes.append(change)
        newton_counts.append(sweep_newton)
        if iterates is not None:
            iterates.append(SweepIterate(
                u=[u_j.copy() for u_j in u],
                v=[v_j.copy() for v_j in v],
                barycenter=new_barycenter.copy(),
            ))

        barycenter = new_barycenter
        if change <= outer_tol:
            converged = True
            break

    state = SolverState(
        lam=lam, u=u, v=v, barycenter=barycenter,
        dual_value=dual_values[-1], eq_residuals=eq_res.copy(),
        outer_iterations=outer,
    )
    report = ConvergenceReport(
        converged=converged,
        outer_iterations=outer,
        dual_values=np.array(dual_values),
        max_residuals=np.array(max_residuals),
        barycenter_changes=np.array(barycenter_changes),
        newton_iterations=np.array(newton_counts),
        message="" if converged else (
            f"barycenter change {barycenter_changes[-1]:.3e} above "
            f"outer_tol={outer_tol} after {outer} sweeps"
        ),
        iterates=iterates,
    )
    marginals = [u_j * kv_j for u_j, kv_j in zip(u, kv)]
    slacks = [-lam_j * half_inv_gamma for lam_j in lam]
    plans = None
    if return_plans:
        plans = [u_j[:, None] * kernel * v_j[None, :] for u_j, v_j in zip(u, v)]
    return FusionResult(
        barycenter=barycenter,
        marginals=marginals,
        slacks=slacks,
        plans=plans,
        report=report,
        state=state,
    )
