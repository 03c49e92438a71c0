"""Entropic optimal transport between two spectra on a common grid.

The regularized problem minimizes <C, M> + eps * D(M) over nonnegative
plans M with prescribed marginals, where D(M) = sum(m*log(m) - m + 1) with
the 0*log(0) = 0 convention. It is solved by alternating diagonal scalings
of the Gibbs kernel K = exp(-C/eps). A brute-force vertex enumeration of
the unregularized LP is included as a test oracle for tiny instances.
"""

from __future__ import annotations

import warnings

import numpy as np
from scipy.special import xlogy

from .errors import ConvergenceError

TOTAL_MASS_RTOL = 1e-9


def gibbs_kernel(cost, epsilon: float) -> np.ndarray:
    """Elementwise exp(-cost/epsilon).

    Entries that underflow to zero are tolerated (and reported once via a
    warning) as long as every row and column keeps at least one positive
    entry; a fully dead row or column makes the scaling iterations
    meaningless, so that raises instead.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    cost = np.asarray(cost, dtype=float)
    kernel = np.exp(-cost / epsilon)
    if not kernel.all():
        dead_rows = ~kernel.any(axis=1)
        dead_cols = ~kernel.any(axis=0)
        if dead_rows.any() or dead_cols.any():
            raise ValueError(
                "Gibbs kernel fully underflowed for some row or column; "
                "increase epsilon or rescale the cost matrix"
            )
        warnings.warn(
            "Gibbs kernel has underflowed entries; results may lose accuracy",
            RuntimeWarning,
            stacklevel=2,
        )
    return kernel


def plan_entropy(plan) -> float:
    """Entropy penalty D(M) = sum(m*log(m) - m + 1), with 0*log(0) = 0."""
    plan = np.asarray(plan, dtype=float)
    return float(np.sum(xlogy(plan, plan) - plan + 1.0))


def transport_cost(plan, cost, epsilon: float) -> float:
    """Regularized objective <C, M> + eps * D(M) of a given plan."""
    plan = np.asarray(plan, dtype=float)
    cost = np.asarray(cost, dtype=float)
    if plan.shape != cost.shape:
        raise ValueError(f"plan shape {plan.shape} != cost shape {cost.shape}")
    return float(np.sum(cost * plan)) + epsilon * plan_entropy(plan)


def _check_marginals(phi0, phi1):
    if np.any(phi0 < 0) or np.any(phi1 < 0):
        raise ValueError("marginals must be nonnegative")
    t0, t1 = float(phi0.sum()), float(phi1.sum())
    if t0 <= 0 or t1 <= 0:
        raise ValueError("marginals must have positive total mass")
    if abs(t0 - t1) > TOTAL_MASS_RTOL * max(t0, t1):
        raise ValueError(f"marginal totals differ: {t0} vs {t1}")


def sinkhorn(phi0, phi1, cost, epsilon: float, tol: float = 1e-8,
             max_iter: int = 100_000) -> tuple[np.ndarray, float]:
    """Solve entropic transport between two spectra by diagonal scaling.

    Parameters
    ----------
    phi0, phi1 : array_like
        Nonnegative marginals with equal total mass.
    cost : array_like
        Ground cost, shape (len(phi0), len(phi1)).
    epsilon : float
        Entropy regularization strength.
    tol : float
        Convergence threshold on both marginal residuals, measured as the
        max-norm of the defect relative to the largest marginal entry.
    max_iter : int
        Iteration budget; exceeding it raises ConvergenceError carrying the
        last residuals.

    Returns
    -------
    plan, objective : (ndarray, float)
        The scaled-kernel plan and its regularized objective value.
    """
    phi0 = np.asarray(phi0, dtype=float)
    phi1 = np.asarray(phi1, dtype=float)
    _check_marginals(phi0, phi1)
    kernel = gibbs_kernel(cost, epsilon)
    if kernel.shape != (phi0.size, phi1.size):
        raise ValueError("cost shape does not match the marginals")

    scale0 = phi0.max()
    scale1 = phi1.max()
    v = np.ones_like(phi1)
    kv = kernel @ v
    err0 = err1 = np.inf
    for iteration in range(1, max_iter + 1):
        if kv.min() <= 0:
            raise ConvergenceError(
                "kernel too sharp: scaling hit a zero column sum; increase epsilon",
                iterations=iteration,
            )
        u = phi0 / kv
        ktu = kernel.T @ u
        if ktu.min() <= 0:
            raise ConvergenceError(
                "kernel too sharp: scaling hit a zero row sum; increase epsilon",
                iterations=iteration,
            )
        v = phi1 / ktu
        kv = kernel @ v
        err0 = np.max(np.abs(u * kv - phi0)) / scale0
        err1 = np.max(np.abs(v * ktu - phi1)) / scale1
        if max(err0, err1) <= tol:
            plan = u[:, None] * kernel * v[None, :]
            return plan, transport_cost(plan, cost, epsilon)
    raise ConvergenceError(
        f"sinkhorn did not reach tol={tol} within {max_iter} iterations",
        residuals=(err0, err1),
        iterations=max_iter,
    )


MAX_ORACLE_SIZE = 6


def lp_transport_oracle(phi0, phi1, cost) -> float:
    """Exact optimum of the unregularized transport LP, for tiny instances.

    Enumerates every spanning-tree basis of the transportation polytope,
    solves the flows each tree implies, and minimizes cost over the
    feasible ones. The tree count grows as m**(n-1) * n**(m-1), so both
    marginals are capped at 6 points.
    """
    phi0 = np.asarray(phi0, dtype=float)
    phi1 = np.asarray(phi1, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = phi0.size, phi1.size
    if max(m, n) > MAX_ORACLE_SIZE:
        raise ValueError(
            f"instance too large for basis enumeration: {m}x{n} exceeds "
            f"{MAX_ORACLE_SIZE} points per marginal"
        )
    _check_marginals(phi0, phi1)
    if cost.shape != (m, n):
        raise ValueError("cost shape does not match the marginals")

    best = np.inf
    flow_tol = 1e-12 * (phi0.sum() + 1.0)
    for tree in _spanning_trees(m, n):
        value = _tree_cost(tree, phi0, phi1, cost, m, flow_tol)
        if value is not None and value < best:
            best = value
    return float(best)


def _spanning_trees(m, n):
    """Yield spanning trees of the complete bipartite graph K_{m,n}.

    Trees are emitted as lists of (row, col) cells. Classic include/exclude
    backtracking over the edge list, pruning branches that can no longer
    connect all nodes.
    """
    n_nodes = m + n
    edges = [(i, j) for i in range(m) for j in range(n)]
    n_edges = len(edges)
    parent = list(range(n_nodes))
    size = [1] * n_nodes

    def find(x):
        while parent[x] != x:
            x = parent[x]
        return x

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra == rb:
            return None
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
        return rb

    def undo(rb):
        ra = parent[rb]
        size[ra] -= size[rb]
        parent[rb] = rb

    def completable(idx):
        # can the remaining edges still merge all current components?
        roots = {find(x) for x in range(n_nodes)}
        count = len(roots)
        if count == 1:
            return True
        shadow = {r: r for r in roots}

        def find2(x):
            while shadow[x] != x:
                x = shadow[x]
            return x

        for i, j in edges[idx:]:
            ra, rb = find2(find(i)), find2(find(m + j))
            if ra != rb:
                shadow[rb] = ra
                count -= 1
                if count == 1:
                    return True
        return False

    chosen: list[tuple[int, int]] = []

    def recurse(idx, n_chosen):
        if n_chosen == n_nodes - 1:
            yield list(chosen)
            return
        if idx == n_edges or n_chosen + (n_edges - idx) < n_nodes - 1:
            return
        i, j = edges[idx]
        token = union(i, m + j)
        if token is not None:
            chosen.append(edges[idx])
            yield from recurse(idx + 1, n_chosen + 1)
            chosen.pop()
            undo(token)
        if completable(idx + 1):
            yield from recurse(idx + 1, n_chosen)

    yield from recurse(0, 0)


def _tree_cost(tree, phi0, phi1, cost, m, flow_tol):
    """Cost of the basic solution a spanning tree determines, or None.

    Flows are found by peeling leaves: a leaf's single edge must carry that
    node's remaining supply (row) or demand (col). A negative flow means
    the basis is infeasible.
    """
    adjacency: dict[int, list[tuple[int, int]]] = {}
    for idx, (i, j) in enumerate(tree):
        adjacency.setdefault(i, []).append((idx, m + j))
        adjacency.setdefault(m + j, []).append((idx, i))
    remaining = list(phi0) + list(phi1)
    used = [False] * len(tree)
    degree = {node: len(neigh) for node, neigh in adjacency.items()}
    leaves = [node for node, d in degree.items() if d == 1]
    total = 0.0
    while leaves:
        node = leaves.pop()
        if degree[node] == 0:
            continue
        idx, other = next(
            (idx, other) for idx, other in adjacency[node] if not used[idx]
        )
        flow = remaining[node]
        if flow < -flow_tol:
            return None
        row, col = (node, other) if node < m else (other, node)
        total += flow * cost[row, col - m]
        remaining[node] = 0.0
        remaining[other] -= flow
        used[idx] = True
        degree[node] -= 1
        degree[other] -= 1
        if degree[other] == 1:
            leaves.append(other)
    return total
