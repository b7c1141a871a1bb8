"""Trajectory simulation, certificate verification, dominance checking.

This module is the independent oracle: everything here drives the system's
own ``step`` function and never consults the optimizer, so solver output
can be judged against it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .certificate import SSequenceCertificate
from .invariance import LimitCycle, Rcis, feedback_policy
from .order import BoxUnion, PolyLowerSet, as_vector, leq
from .rng import SplitMix64

VERIFY_TOL = 1e-5


@dataclass(frozen=True)
class Policy:
    kind: str            # "open_loop" | "feedback"
    T: int
    _fn: object

    def __call__(self, k, x):
        return self._fn(k, x)


def open_loop(cert: SSequenceCertificate) -> Policy:
    """Repeat u*_0..u*_{T-1} forever, blind to the state."""
    return Policy("open_loop", cert.T, lambda k, x: cert.controls[k % cert.T])


def feedback(rcis: Rcis) -> Policy:
    """Control of the first certificate box containing x; None outside."""
    return Policy("feedback", rcis.certificate.T,
                  lambda k, x: feedback_policy(rcis, x))


@dataclass(frozen=True)
class Adversary:
    kind: str            # "worst_case" | "uniform"
    _fn: object

    def __call__(self, sys, k):
        return self._fn(sys, k)


def worst_case_w_star() -> Adversary:
    """Always play the rectangle corner w* (worst case by monotonicity)."""
    return Adversary("worst_case", lambda sys, k: sys.w_star)


def uniform(seed) -> Adversary:
    """Draw each disturbance coordinate from U(0, w*_i) per step.

    ``seed`` may be an integer or a SplitMix64 stream (use
    ``SplitMix64(master).spawn(i)`` to give concurrent runs independent
    streams).
    """
    rng = seed if isinstance(seed, SplitMix64) else SplitMix64(seed)

    def draw(sys, k):
        return np.array([rng.uniform(0.0, float(wi)) for wi in sys.w_star])

    return Adversary("uniform", draw)


@dataclass(frozen=True)
class Trajectory:
    states: tuple        # x_0 .. x_N
    controls: tuple      # u_0 .. u_{N-1}
    disturbances: tuple
    phases: tuple        # k mod T per state
    safe: tuple          # per-state membership in S (None when S not supplied)
    in_omega: tuple
    in_gamma: tuple      # phase-matched: x_k in R(x_inf_{k mod T})
    status: str          # "completed" | "halted_outside_region"
    policy_kind: str
    adversary_kind: str

    def __len__(self):
        return len(self.states)


def simulate(sys, x0, policy: Policy, adversary: Adversary, steps: int,
             safe_set: PolyLowerSet | None = None,
             omega: BoxUnion | None = None,
             gamma: BoxUnion | None = None) -> Trajectory:
    """Roll the system ``steps`` transitions forward from x0.

    Membership columns are recorded only for the sets actually supplied.
    Gamma is checked phase-matched — state k against the box cornered at
    the cycle point of phase k mod T — which is strictly stronger than
    union membership.  If a feedback policy falls off its region the run
    halts with status ``"halted_outside_region"`` and the states so far.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    x = as_vector(x0, sys.state_dim, "x0")
    if np.any(x < 0):
        raise ValueError("x0 must be nonnegative")
    states, controls, dists = [x], [], []
    status = "completed"
    for k in range(steps):
        u = policy(k, states[-1])
        if u is None:
            status = "halted_outside_region"
            break
        w = np.asarray(adversary(sys, k), dtype=float)
        states.append(sys.step(states[-1], w, u))
        controls.append(u)
        dists.append(w)
    T = policy.T

    def flags(region, phase_matched=False):
        out = []
        for k, xs in enumerate(states):
            if region is None:
                out.append(None)
            elif phase_matched:
                out.append(bool(region.boxes[k % T].contains(xs)))
            else:
                out.append(bool(region.contains(xs)))
        return tuple(out)

    return Trajectory(
        states=tuple(states), controls=tuple(controls),
        disturbances=tuple(dists),
        phases=tuple(k % T for k in range(len(states))),
        safe=flags(safe_set), in_omega=flags(omega),
        in_gamma=flags(gamma, phase_matched=True),
        status=status, policy_kind=policy.kind, adversary_kind=adversary.kind)


@dataclass(frozen=True)
class ConditionReport:
    passed: bool
    worst_residual: float
    first_violation_step: int | None

    def to_dict(self):
        return {"passed": self.passed, "worst_residual": self.worst_residual,
                "first_violation_step": self.first_violation_step}


@dataclass(frozen=True)
class VerificationReport:
    passed: bool
    tol: float
    dynamics: ConditionReport
    safety: ConditionReport
    closure: ConditionReport

    def to_dict(self):
        return {"passed": self.passed, "tol": self.tol,
                "dynamics": self.dynamics.to_dict(),
                "safety": self.safety.to_dict(),
                "closure": self.closure.to_dict()}


def verify_certificate(sys, S: PolyLowerSet,
                       cert: SSequenceCertificate) -> VerificationReport:
    """Check the three certificate conditions by pure simulation.

    For every step k: the stored x*_{k+1} must equal f(x*_k, w*, u*_k);
    x*_k must lie in S for k < T; and x*_T must sit below x*_0.  All
    within the certificate's own tolerance if it declares one (rounded
    witnesses are rounded), else 1e-5.
    """
    tol = cert.tol if cert.tol is not None else VERIFY_TOL
    T = cert.T
    w = sys.w_star

    dyn_res, dyn_first = 0.0, None
    for k in range(T):
        nxt = sys.step(np.asarray(cert.x_star[k]), w, cert.controls[k])
        r = float(np.max(np.abs(np.asarray(cert.x_star[k + 1]) - nxt)))
        if r > dyn_res:
            dyn_res = r
        if r > tol and dyn_first is None:
            dyn_first = k
    dynamics = ConditionReport(dyn_first is None, dyn_res, dyn_first)

    safe_res, safe_first = 0.0, None
    for k in range(T):
        m = S.violation(np.asarray(cert.x_star[k]))
        if m > safe_res:
            safe_res = m
        if m > tol and safe_first is None:
            safe_first = k
    safety = ConditionReport(safe_first is None, safe_res, safe_first)

    cl_res = float(np.max(np.asarray(cert.x_star[T]) - np.asarray(cert.x_star[0])))
    closure = ConditionReport(cl_res <= tol, max(cl_res, 0.0),
                              None if cl_res <= tol else T)

    return VerificationReport(
        passed=dynamics.passed and safety.passed and closure.passed,
        tol=tol, dynamics=dynamics, safety=safety, closure=closure)


@dataclass(frozen=True)
class DominanceReport:
    dominated: bool
    worst_excess: float
    first_violation_step: int | None

    def to_dict(self):
        return {"dominated": self.dominated, "worst_excess": self.worst_excess,
                "first_violation_step": self.first_violation_step}


def dominance_check(sys, cert: SSequenceCertificate,
                    trajectory: Trajectory, tol: float = 1e-9) -> DominanceReport:
    """Every trajectory state must sit below the worst-case run from x*_0.

    The reference is the open-loop trajectory from x*_0 under w = w*,
    aligned step for step (same phase, same period).  Requires the checked
    trajectory to be open-loop from phase 0 with x_0 below x*_0 — those are
    the hypotheses of the comparison argument.
    """
    if trajectory.policy_kind != "open_loop" or trajectory.phases[0] != 0:
        raise ValueError("dominance needs an open-loop trajectory starting at phase 0")
    x_ref = np.asarray(cert.x_star[0], dtype=float)
    if not leq(trajectory.states[0], x_ref, 1e-12):
        raise ValueError("dominance precondition x0 <= x*_0 fails")
    worst, first = 0.0, None
    for k, xs in enumerate(trajectory.states):
        excess = float(np.max(xs - x_ref))
        if excess > worst:
            worst = excess
        if excess > tol and first is None:
            first = k
        if k < len(trajectory.states) - 1:
            x_ref = sys.step(x_ref, sys.w_star, cert.controls[k % cert.T])
    return DominanceReport(first is None, worst, first)


def gamma_excess(trajectory: Trajectory, cycle: LimitCycle) -> list:
    """Per-state distance to the phase-matched cycle corner.

    max over coordinates of the positive part of x_k - x_inf_{k mod T};
    0.0 means the state is inside its phase box of Gamma.
    """
    out = []
    for k, xs in enumerate(trajectory.states):
        corner = cycle.points[k % cycle.T]
        out.append(float(np.max(np.maximum(xs - corner, 0.0))))
    return out


def _fmt_control(u):
    if u is None:
        return ""
    if isinstance(u, tuple):
        return ":".join(str(p) for p in u)
    return str(u)


def _fmt_flag(v):
    return "" if v is None else str(int(v))


def write_trajectory_csv(trajectory: Trajectory, path):
    """Write one row per state: step,phase,x_1..x_n,u,safe,in_omega,in_gamma.

    Traffic controls are colon-joined phase tuples.  The final state has no
    control, so its ``u`` cell is empty.  Output bytes are deterministic.
    """
    n = trajectory.states[0].shape[0]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "phase"] + [f"x_{i + 1}" for i in range(n)]
                        + ["u", "safe", "in_omega", "in_gamma"])
        for k, xs in enumerate(trajectory.states):
            u = trajectory.controls[k] if k < len(trajectory.controls) else None
            writer.writerow(
                [k, trajectory.phases[k]] + [repr(float(v)) for v in xs]
                + [_fmt_control(u), _fmt_flag(trajectory.safe[k]),
                   _fmt_flag(trajectory.in_omega[k]),
                   _fmt_flag(trajectory.in_gamma[k])])
