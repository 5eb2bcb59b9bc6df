"""Per-node arrival rates for an open network.

In steady state the rate into node i is the external rate plus everything
routed there from other nodes:

    lambda_i = lambda0_i + sum_j p_ji * lambda_j

which is the linear system ``(I - P^T) lambda = lambda0``.  The direct solver
is the production path; a damped fixed-point iteration is kept alongside it
as an independent cross-check.  Nodes listed in ``known_arrival_rates`` are
pinned to their given values and excluded from the residual check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import (
    NonConvergentError,
    NumericalFailureError,
    SingularMatrixError,
    SingularRoutingError,
)
from .linalg import solve_dense
from .model import NetworkSpec, validate_network

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class ArrivalRates:
    """Solved arrival rates, one entry per node, plus the external total."""

    rates: Mapping[int, float]
    total_external: float

    def __post_init__(self):
        object.__setattr__(self, "rates",
                           {int(k): float(v) for k, v in sorted(self.rates.items())})

    def rate(self, node_id: int) -> float:
        return self.rates[node_id]


def total_external_rate(spec: NetworkSpec) -> float:
    """Sum of all external arrival rates; 0 if there are none."""
    return float(sum(spec.external_arrivals.values()))


def _system(spec: NetworkSpec):
    ids = spec.ids()
    index = {i: k for k, i in enumerate(ids)}
    n = len(ids)
    p = np.zeros((n, n))
    for (i, j), prob in spec.routing.entries.items():
        p[index[i], index[j]] = prob
    lam0 = np.zeros(n)
    for i, r in spec.external_arrivals.items():
        lam0[index[i]] = r
    return ids, index, p, lam0


def solve_traffic(
    spec: NetworkSpec,
    method: str = "direct",
    tol: float = 1e-12,
    max_iter: int = 100_000,
    damping: float = 0.9,
) -> ArrivalRates:
    """Solve the traffic equations.

    Args:
        spec: network description (validated lazily if needed).
        method: "direct" (Gaussian elimination) or "fixed_point" (damped
            iteration, kept as an independent cross-check).
        tol: step-size stopping threshold for the fixed-point method.
        max_iter: iteration cap for the fixed-point method.
        damping: relaxation weight on the fixed-point update, in (0, 1].

    Returns:
        ArrivalRates with one nonnegative rate per node.  Nodes covered by
        ``known_arrival_rates`` are returned verbatim.

    Raises:
        SingularRoutingError: the linear system has no unique solution
            (for example a closed subnetwork with no path to an exit).
        NonConvergentError: the fixed-point method hit ``max_iter``.
        NumericalFailureError: the solution fails the residual check.
    """
    if not spec.is_validated:
        spec = validate_network(spec)
    ids, index, p, lam0 = _system(spec)
    n = len(ids)
    known = dict(spec.known_arrival_rates or {})
    known_rows = {index[i] for i in known}

    if method == "direct":
        a = np.eye(n) - p.T
        b = lam0.copy()
        for i, r in known.items():
            k = index[i]
            a[k, :] = 0.0
            a[k, k] = 1.0
            b[k] = r
        try:
            lam = solve_dense(a, b)
        except SingularMatrixError as e:
            raise SingularRoutingError(str(e)) from e
    elif method == "fixed_point":
        lam = lam0.copy()
        for i, r in known.items():
            lam[index[i]] = r
        pt = p.T
        step = np.inf
        for _ in range(max_iter):
            nxt = lam0 + pt @ lam
            for i, r in known.items():
                nxt[index[i]] = r
            nxt = (1.0 - damping) * lam + damping * nxt
            step = float(np.max(np.abs(nxt - lam)))
            lam = nxt
            if step <= tol:
                break
        else:
            raise NonConvergentError(max_iter, step)
    else:
        raise ValueError(f"unknown method {method!r}")

    # Elimination noise can leave rates a hair below zero.
    lam = np.where((lam < 0) & (lam > -1e-12), 0.0, lam)

    residual = lam - (lam0 + p.T @ lam)
    free = [k for k in range(n) if k not in known_rows]
    if free:
        worst = float(np.max(np.abs(residual[free])))
        if worst > RESIDUAL_TOL:
            raise NumericalFailureError(
                f"traffic solution residual {worst:.3e} exceeds {RESIDUAL_TOL:.0e}"
            )

    return ArrivalRates(
        rates={i: float(lam[index[i]]) for i in ids},
        total_external=total_external_rate(spec),
    )
