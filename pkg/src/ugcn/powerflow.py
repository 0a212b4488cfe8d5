"""AC power flow: backward/forward sweep for radial feeders, Newton for meshed grids.

Injections are net complex power into the network in per-unit (loads negative).
The slack bus (root for distribution, first bus otherwise) holds 1+0j and
absorbs the balance.  Solutions satisfy the nodal power balance
S_n = v_n * conj((Y v)_n) at every non-slack bus to the stated tolerance.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionMismatch, NoConvergence
from .grid import DISTRIBUTION, GridGraph, build_admittance

MISMATCH_TOL = 1e-10
SWEEP_MAX_ITER = 300
NEWTON_MAX_ITER = 40
VOLTAGE_DIVERGED = 5.0


def nodal_mismatch(y: np.ndarray, v: np.ndarray, s_inj: np.ndarray) -> np.ndarray:
    """Per-bus complex power balance error v * conj(Y v) - S."""
    return v * np.conj(y @ v) - s_inj


def solve_powerflow(
    graph: GridGraph,
    s_inj: np.ndarray,
    y: np.ndarray | None = None,
    tol: float = MISMATCH_TOL,
) -> np.ndarray:
    """Bus voltage phasors for the given net injections (slack entry ignored)."""
    s_inj = np.asarray(s_inj, dtype=np.complex128)
    if s_inj.shape != (graph.n,):
        raise DimensionMismatch(f"expected {graph.n} injections, got {s_inj.shape}")
    y = build_admittance(graph) if y is None else y
    if graph.kind == DISTRIBUTION:
        return _sweep(graph, s_inj, y, tol)
    return _newton(graph, s_inj, y, tol)


def _sweep(graph: GridGraph, s_inj: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    tree = graph.bfs()
    slack = graph.pos(graph.slack_bus())
    n = graph.n
    z_to_parent = np.zeros(n, dtype=np.complex128)
    for p in range(n):
        if tree.parent_branch[p] >= 0:
            z_to_parent[p] = graph.branches[tree.parent_branch[p]].impedance

    v = np.ones(n, dtype=np.complex128)
    order = tree.order
    reverse = order[::-1]
    for it in range(SWEEP_MAX_ITER):
        i_bus = np.conj(s_inj / v)
        # Backward: accumulate downstream current into each branch to the parent.
        i_down = i_bus.copy()
        for p in reverse:
            if tree.parent[p] >= 0:
                i_down[tree.parent[p]] += i_down[p]
        # Forward: drop voltages from the slack outward.
        v_new = v.copy()
        v_new[slack] = 1.0 + 0.0j
        for p in order:
            par = tree.parent[p]
            if par >= 0:
                v_new[p] = v_new[par] + z_to_parent[p] * i_down[p]
        step = float(np.max(np.abs(v_new - v)))
        v = v_new
        if not np.all(np.isfinite(v.view(np.float64))) or np.max(np.abs(v)) > VOLTAGE_DIVERGED \
                or np.min(np.abs(v)) < 1e-6:
            raise NoConvergence(it + 1, float("inf"))
        if step < 1e-13:
            break
    mism = nodal_mismatch(y, v, s_inj)
    mism[slack] = 0.0
    worst = float(np.max(np.abs(mism)))
    if worst > tol:
        raise NoConvergence(SWEEP_MAX_ITER, worst)
    return v


def _newton(graph: GridGraph, s_inj: np.ndarray, y: np.ndarray, tol: float) -> np.ndarray:
    n = graph.n
    slack = graph.pos(graph.slack_bus())
    free = np.array([i for i in range(n) if i != slack])
    v = np.ones(n, dtype=np.complex128)
    for it in range(NEWTON_MAX_ITER):
        mism = nodal_mismatch(y, v, s_inj)
        worst = float(np.max(np.abs(mism[free])))
        if not np.isfinite(worst) or np.max(np.abs(v)) > VOLTAGE_DIVERGED:
            raise NoConvergence(it, float("inf"))
        if worst < tol:
            return v
        # Rectangular Jacobian of S = v .* conj(Y v) w.r.t. (e, f) at free buses.
        i_cur = y @ v
        diag_i = np.diag(np.conj(i_cur))
        vy = v[:, None] * np.conj(y)
        ds_de = diag_i + vy
        ds_df = 1j * diag_i - 1j * vy
        jac = np.block([
            [ds_de[np.ix_(free, free)].real, ds_df[np.ix_(free, free)].real],
            [ds_de[np.ix_(free, free)].imag, ds_df[np.ix_(free, free)].imag],
        ])
        rhs = np.concatenate([-mism[free].real, -mism[free].imag])
        try:
            delta = np.linalg.solve(jac, rhs)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(it, worst) from exc
        m = len(free)
        step = delta[:m] + 1j * delta[m:]
        # Backtrack while the step worsens the balance; full steps resume near the solution.
        scale = 1.0
        for _ in range(8):
            trial = v.copy()
            trial[free] += scale * step
            trial_worst = float(np.max(np.abs(nodal_mismatch(y, trial, s_inj)[free])))
            if np.isfinite(trial_worst) and trial_worst < worst:
                break
            scale *= 0.5
        else:
            raise NoConvergence(it + 1, worst)
        v[free] += scale * step
    mism = nodal_mismatch(y, v, s_inj)
    raise NoConvergence(NEWTON_MAX_ITER, float(np.max(np.abs(mism[free]))))
