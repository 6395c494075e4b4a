"""Derivative-free Nelder-Mead simplex minimization.

Standard coefficients (reflection 1, expansion 2, contraction 1/2,
shrink 1/2). Convergence is declared when every vertex lies within a
per-coordinate tolerance of the best vertex, which keeps the stopping rule
meaningful when coordinates have different units (pixels vs radians).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    steps: Sequence[float],
    xtol: Sequence[float],
    max_iters: int = 200,
    f0: float | None = None,
) -> SimplexResult:
    """Minimize ``f`` starting from ``x0``.

    Parameters
    ----------
    f : callable
        Objective; may return ``inf`` to mark infeasible points.
    x0 : sequence of float
        Starting vertex. It stays in the simplex until something strictly
        better is found, so the returned value never exceeds ``f(x0)``.
    steps : sequence of float
        Offset along each axis used to build the initial simplex.
    xtol : sequence of float
        Per-coordinate simplex diameter below which iteration stops.
    max_iters : int
        Iteration cap.
    f0 : float, optional
        Known value of ``f(x0)``, saves one evaluation.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    n = x0.size
    xtol = np.asarray(xtol, dtype=np.float64)
    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        return float(f(x))

    verts = np.empty((n + 1, n))
    vals = np.empty(n + 1)
    verts[0] = x0
    vals[0] = call(x0) if f0 is None else float(f0)
    for i in range(n):
        v = x0.copy()
        v[i] += steps[i]
        verts[i + 1] = v
        vals[i + 1] = call(v)

    it = 0
    converged = False
    while it < max_iters:
        # stable sort keeps ties in insertion order -> deterministic
        order = np.argsort(vals, kind="stable")
        verts, vals = verts[order], vals[order]
        if np.all(np.abs(verts[1:] - verts[0]) <= xtol):
            converged = True
            break
        it += 1

        centroid = verts[:-1].mean(axis=0)
        worst = verts[-1]
        xr = centroid + (centroid - worst)
        fr = call(xr)
        if fr < vals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = call(xe)
            if fe < fr:
                verts[-1], vals[-1] = xe, fe
            else:
                verts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-2]:
            verts[-1], vals[-1] = xr, fr
            continue
        if fr < vals[-1]:
            xc = centroid + 0.5 * (xr - centroid)
            fc = call(xc)
            if fc <= fr:
                verts[-1], vals[-1] = xc, fc
                continue
        else:
            xc = centroid + 0.5 * (worst - centroid)
            fc = call(xc)
            if fc < vals[-1]:
                verts[-1], vals[-1] = xc, fc
                continue
        for i in range(1, n + 1):
            verts[i] = verts[0] + 0.5 * (verts[i] - verts[0])
            vals[i] = call(verts[i])

    order = np.argsort(vals, kind="stable")
    return SimplexResult(verts[order[0]].copy(), float(vals[order[0]]), it, evals, converged)
