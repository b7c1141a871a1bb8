"""Periodic invariance: certificate search, RCIS, limit cycles, policies.

A certificate with controls ``u*_0..u*_{T-1}`` and witness ``x*_0..x*_T``
induces the robust controlled-invariant set  Omega* = U_k R(x*_k)  (union of
boxes cornered at the witness states), a feedback policy "apply the control
of the first box containing you", and — by iterating whole periods of the
repeated sequence under the worst-case disturbance — a limit cycle whose
boxes form an attractive set Gamma inside Omega*.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .certificate import SSequenceCertificate
from .encode import DecodeMismatchError, EncodingArtifacts, decode, encode_switched, encode_traffic
from .milp import solve_milp
from .order import Box, BoxUnion, PolyLowerSet, as_vector, leq
from .systems import SwitchedAffineSystem, TrafficNetwork

__all__ = [
    "SSequenceCertificate", "HorizonRecord", "SearchResult", "find_s_sequence",
    "Rcis", "build_rcis", "feedback_policy", "open_loop_policy",
    "LimitCycle", "LimitCycleError", "compute_limit_cycle",
    "build_attractive_set", "necessity_bound",
]


@dataclass(frozen=True)
class HorizonRecord:
    """Outcome of one horizon in the sweep."""
    T: int
    status: str          # "found" | "proven_infeasible" | "budget_unknown"
    solver_status: str
    nodes: int
    elapsed: float


@dataclass(frozen=True)
class SearchResult:
    certificate: SSequenceCertificate | None
    records: tuple
    minimal: bool        # True only if every smaller horizon was proven infeasible

    @property
    def found(self):
        return self.certificate is not None

    @property
    def budget_limited(self):
        return any(r.status == "budget_unknown" for r in self.records)


def _encode(system, safe_set, T, objective):
    if isinstance(system, TrafficNetwork):
        if safe_set is not None:
            raise ValueError("traffic safety is the box x <= x_s from the link "
                             "table; a separate safe set cannot be attached")
        return encode_traffic(system, T, objective=objective)
    if safe_set is None:
        raise ValueError("switched systems need an explicit safe set")
    return encode_switched(system, safe_set, T, objective=objective)


def find_s_sequence(system, safe_set=None, t_max=10, objective="max_l1_x0",
                    time_budget=None, node_budget=None, t_min=1,
                    dump_lp=None) -> SearchResult:
    """Sweep horizons T = t_min..t_max until a certificate is found.

    The budgets cover the *whole* sweep: each horizon gets an equal share of
    whatever remains (`remaining / horizons_left`), so early cheap horizons
    roll their unused share forward.  A horizon that exhausts its share is
    recorded as ``budget_unknown`` and the sweep moves on — minimality is
    claimed only when every smaller horizon was actually proven infeasible
    (and the sweep started at T=1).

    ``objective`` is ``"max_l1_x0"`` (maximize the l1 norm of x*_0, proving
    optimality) or ``"first_feasible"`` (stop at the first integral point).
    """
    if t_max < 1:
        raise ValueError("t_max must be >= 1")
    if not 1 <= t_min <= t_max:
        raise ValueError("need 1 <= t_min <= t_max")
    if objective not in ("max_l1_x0", "first_feasible"):
        raise ValueError(f"unknown objective {objective!r}")
    mode = "first_feasible" if objective == "first_feasible" else "prove_optimal"
    enc_objective = "feasibility" if objective == "first_feasible" else "max_l1_x0"

    records = []
    certificate = None
    start = time.monotonic()
    nodes_spent = 0
    for T in range(t_min, t_max + 1):
        horizons_left = t_max - T + 1
        t_slice = None
        if time_budget is not None:
            remaining = time_budget - (time.monotonic() - start)
            if remaining <= 0:
                records.append(HorizonRecord(T, "budget_unknown", "not_attempted", 0, 0.0))
                continue
            t_slice = remaining / horizons_left
        n_slice = None
        if node_budget is not None:
            remaining_nodes = node_budget - nodes_spent
            if remaining_nodes <= 0:
                records.append(HorizonRecord(T, "budget_unknown", "not_attempted", 0, 0.0))
                continue
            n_slice = max(1, remaining_nodes // horizons_left)

        art = _encode(system, safe_set, T, enc_objective)
        dump = None if dump_lp is None else f"{dump_lp}_T{T}.lp"
        t0 = time.monotonic()
        sol = solve_milp(art.model, node_budget=n_slice, time_budget=t_slice,
                         mode=mode, dump_path=dump)
        dt = time.monotonic() - t0
        nodes_spent += sol.nodes
        if sol.status in ("optimal", "feasible", "feasible_budget_hit"):
            certificate = decode(art, sol)
            records.append(HorizonRecord(T, "found", sol.status, sol.nodes, dt))
            break
        if sol.status == "infeasible":
            records.append(HorizonRecord(T, "proven_infeasible", sol.status, sol.nodes, dt))
        elif sol.status == "budget_unknown":
            records.append(HorizonRecord(T, "budget_unknown", sol.status, sol.nodes, dt))
        else:  # pragma: no cover - every encoder variable is bounded
            raise RuntimeError(f"unexpected solver status {sol.status!r} at T={T}")
    minimal = (certificate is not None and t_min == 1
               and all(r.status == "proven_infeasible"
                       for r in records if r.T < certificate.T))
    return SearchResult(certificate=certificate, records=tuple(records),
                        minimal=minimal)


@dataclass(frozen=True)
class Rcis:
    """Union of witness boxes plus the per-box control table."""
    region: BoxUnion
    controls: tuple
    certificate: SSequenceCertificate

    def policy(self, p: int):
        return self.controls[p]


def build_rcis(cert: SSequenceCertificate) -> Rcis:
    boxes = tuple(Box(cert.x_star[k]) for k in range(cert.T))
    return Rcis(region=BoxUnion(boxes), controls=cert.controls, certificate=cert)


def feedback_policy(rcis: Rcis, x):
    """Control of the lowest-index box containing ``x``; None if outside."""
    p = rcis.region.locate(x)
    return None if p is None else rcis.controls[p]


def open_loop_policy(cert: SSequenceCertificate, k: int):
    """u*_{k mod T} — the repeated sequence, blind to the state."""
    if k < 0:
        raise ValueError("step counter must be >= 0")
    return cert.controls[k % cert.T]


class LimitCycleError(Exception):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class LimitCycle:
    points: tuple        # x_inf_0 .. x_inf_{T-1}
    periods: int         # whole periods iterated until convergence
    residual: float      # max entrywise change over the final period
    closure_error: float # |f(x_inf_{T-1}, w*, u*_{T-1}) - x_inf_0|_inf
    monotone_violations: int

    @property
    def T(self):
        return len(self.points)


def compute_limit_cycle(sys, cert: SSequenceCertificate, tol: float = 1e-9,
                        max_periods: int = 10 ** 6) -> LimitCycle:
    """Iterate whole periods of the repeated sequence from x*_0 under w = w*.

    Under the worst-case disturbance each period's phase states sit
    entrywise below the previous period's, so the iteration converges
    monotonically; the phase states it converges to are the cycle points.
    Convergence is declared when no phase state moved more than ``tol``
    over one full period.  A certificate bug shows up either as
    ``monotone_violations > 0`` or as failure to converge (which raises).

    The first period is compared against the certificate's stored witness
    states, which a rounded certificate only claims to its own declared
    tolerance; that one comparison therefore uses the larger of ``tol``
    and ``cert.tol``.  All later periods compare exact computed states
    and use ``tol`` directly.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    T = cert.T
    w = sys.w_star
    first_tol = max(tol, cert.tol) if cert.tol is not None else tol
    phase = [np.asarray(x, dtype=float) for x in cert.x_star[:T]]
    violations = 0
    residual = np.inf
    for period in range(1, max_periods + 1):
        x = sys.step(phase[T - 1], w, cert.controls[T - 1])
        new = []
        for k in range(T):
            new.append(x)
            x = sys.step(x, w, cert.controls[k])
        residual = max(float(np.max(np.abs(new[k] - phase[k]))) for k in range(T))
        thresh = first_tol if period == 1 else tol
        violations += sum(bool(np.any(new[k] > phase[k] + thresh)) for k in range(T))
        phase = new
        if residual < tol:
            cycle = LimitCycle(
                points=tuple(p.copy() for p in phase),
                periods=period,
                residual=residual,
                closure_error=float(np.max(np.abs(
                    sys.step(phase[T - 1], w, cert.controls[T - 1]) - phase[0]))),
                monotone_violations=violations,
            )
            return cycle
    raise LimitCycleError(
        f"no limit cycle within {max_periods} periods (residual {residual:.3g})",
        residual)


def build_attractive_set(cycle: LimitCycle) -> BoxUnion:
    """Gamma: union of boxes cornered at the cycle points."""
    return BoxUnion(tuple(Box(p) for p in cycle.points))


def necessity_bound(c: float, alpha: float, eps: float, n: int) -> float:
    """c / (alpha * eps)^n — horizon beyond which no safe policy can hide.

    If no s-sequence exists for any T up to this bound, then no control
    policy keeps the eps-shrunk safe set invariant (the grid constant c and
    the lower-bound rate alpha are problem data, not computed here).
    """
    if c <= 0 or alpha <= 0 or eps <= 0:
        raise ValueError("c, alpha, eps must be positive")
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    return float(c) / float(alpha * eps) ** int(n)
