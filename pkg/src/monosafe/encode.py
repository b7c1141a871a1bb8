"""Mixed-integer encodings of the s-sequence feasibility/optimization problem.

Produces, for a horizon ``T``, a model over witness states ``x_0 .. x_T``
whose integral solutions are exactly the control sequences with

    x_{k+1} = f(x_k, w*, u_k),   x_k safe for k < T,   x_T <= x_0 .

Mode selection (switched systems) and the served-flow min-terms (traffic)
are linearized with per-constraint big-M disjunctions; each M is twice the
relevant bound-derived maximum, capped at 1000, so no admissible state can
spuriously satisfy a relaxed branch.

``decode`` is deliberately paranoid: controls are read off the binaries and
the witness is *re-simulated* with the real step function; the solver's
state values are only accepted if they match the simulation to 1e-5, and the
safety/closure conditions are re-checked on the simulated states.  A big-M
artifact therefore cannot survive decoding.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .certificate import SSequenceCertificate
from .milp import MilpModel, MilpSolution
from .order import PolyLowerSet, leq
from .systems import NS, EW, SwitchedAffineSystem, TrafficNetwork

M_CAP = 1000.0       # ceiling on any big-M constant
DECODE_TOL = 1e-5    # solver state vs re-simulation, and Def-4 re-checks


class DecodeMismatchError(Exception):
    """Solver assignment does not survive exact re-simulation."""


@dataclass
class EncodingArtifacts:
    model: MilpModel
    kind: str                       # "switched" | "traffic"
    T: int
    objective: str
    system: object
    safe_set: PolyLowerSet
    x_idx: dict = field(default_factory=dict)        # (k, i) -> var
    control_idx: dict = field(default_factory=dict)  # (k, mode)/(k, junction) -> var
    selector_idx: dict = field(default_factory=dict) # (k, link) -> var (traffic)
    z_idx: dict = field(default_factory=dict)        # (k, link) -> var (traffic)
    big_m: dict = field(default_factory=dict)        # row index -> M value
    state_cap: np.ndarray | None = None


def _check_horizon(T):
    if T < 1:
        raise ValueError("horizon T must be >= 1")


def _set_objective(model, art, objective):
    if objective == "max_l1_x0":
        model.set_objective({art.x_idx[(0, i)]: 1.0
                             for i in range(art.state_cap.shape[0])}, "max")
    elif objective == "feasibility":
        model.set_objective({}, "min")
    else:
        raise ValueError(f"unknown objective {objective!r}")


def encode_switched(sys: SwitchedAffineSystem, S: PolyLowerSet, T: int,
                    objective: str = "feasibility") -> EncodingArtifacts:
    """Big-M encoding with one-hot mode binaries per step."""
    _check_horizon(T)
    n = sys.state_dim
    if S.dim != n:
        raise ValueError("safe set dimension mismatch")
    ub = S.coordinate_bounds()
    if not np.all(np.isfinite(ub)):
        raise ValueError("safe set must bound every coordinate (big-M derivation)")
    model = MilpModel(f"switched_T{T}")
    art = EncodingArtifacts(model=model, kind="switched", T=T,
                            objective=objective, system=sys, safe_set=S,
                            state_cap=ub)
    for k in range(T + 1):
        for i in range(n):
            # x_T inherits the same cap: closure forces x_T <= x_0 <= ub
            art.x_idx[(k, i)] = model.add_var(f"x_{k}_{i}", lb=0.0, ub=float(ub[i]))
    for k in range(T):
        for m in sys.controls:
            art.control_idx[(k, m)] = model.add_var(f"u_{k}_{m}", binary=True)
        model.add_constraint({art.control_idx[(k, m)]: 1.0 for m in sys.controls},
                             "=", 1.0)
    w = sys.w_star
    for k in range(T):
        for m in sys.controls:
            A = sys.modes[m - 1]
            bidx = art.control_idx[(k, m)]
            for i in range(n):
                # when the mode binary is 0 both rows relax completely
                m_lo = min(2.0 * (float(A[i] @ ub) + w[i]), M_CAP)
                row = {art.x_idx[(k, j)]: float(A[i, j]) for j in range(n) if A[i, j]}
                row[art.x_idx[(k + 1, i)]] = row.get(art.x_idx[(k + 1, i)], 0.0) - 1.0
                row[bidx] = m_lo
                r = model.add_constraint(row, "<=", m_lo - w[i])
                art.big_m[r] = m_lo
                m_hi = min(2.0 * float(ub[i]), M_CAP)
                row = {art.x_idx[(k, j)]: -float(A[i, j]) for j in range(n) if A[i, j]}
                row[art.x_idx[(k + 1, i)]] = row.get(art.x_idx[(k + 1, i)], 0.0) + 1.0
                row[bidx] = m_hi
                r = model.add_constraint(row, "<=", m_hi + w[i])
                art.big_m[r] = m_hi
    for k in range(T):  # x_k in S for k <= T-1
        for a_row, b_val in zip(S.A, S.b):
            coeffs = {art.x_idx[(k, j)]: float(a_row[j]) for j in range(n) if a_row[j]}
            if coeffs:
                model.add_constraint(coeffs, "<=", float(b_val))
    for i in range(n):  # cyclic closure
        model.add_constraint({art.x_idx[(T, i)]: 1.0, art.x_idx[(0, i)]: -1.0},
                             "<=", 0.0)
    _set_objective(model, art, objective)
    return art


def encode_traffic(net: TrafficNetwork, T: int,
                   objective: str = "feasibility") -> EncodingArtifacts:
    """Big-M encoding of the served-flow min-terms and phase selection.

    Junction binaries use 1 = NS.  The green indicator of a link is the
    affine expression ``u`` (NS links) or ``1 - u`` (EW links) of its head
    junction's binary.  Each link/step gets a flow variable ``z`` bracketed
    by ``min(x, c)`` on green and pinned to 0 on red, with a selector
    binary choosing the active min branch.  Safety enters as variable upper
    bounds ``x <= x_s``.
    """
    _check_horizon(T)
    n = net.state_dim
    model = MilpModel(f"traffic_T{T}")
    art = EncodingArtifacts(model=model, kind="traffic", T=T,
                            objective=objective, system=net,
                            safe_set=net.safe_set(), state_cap=net.x_s.copy())
    for k in range(T + 1):
        for i in range(n):
            art.x_idx[(k, i)] = model.add_var(f"x_{k}_{i}", lb=0.0, ub=float(net.x_s[i]))
    for k in range(T):
        for j in net.junctions:
            art.control_idx[(k, j)] = model.add_var(f"u_{k}_{j}", binary=True)
        for i, link in enumerate(net.links):
            art.z_idx[(k, i)] = model.add_var(f"z_{k}_{link.id}", lb=0.0, ub=float(net.c[i]))
            art.selector_idx[(k, i)] = model.add_var(f"d_{k}_{link.id}", binary=True)

    for k in range(T):
        for i, link in enumerate(net.links):
            z = art.z_idx[(k, i)]
            x = art.x_idx[(k, i)]
            d = art.selector_idx[(k, i)]
            u = art.control_idx[(k, link.head)]
            ns = link.direction == NS
            c = float(net.c[i])
            m_flow = min(2.0 * c, M_CAP)
            m_state = min(2.0 * float(net.x_s[i]), M_CAP)
            # z <= x
            model.add_constraint({z: 1.0, x: -1.0}, "<=", 0.0)
            # z <= M g   (g = u for NS, 1-u for EW)
            r = model.add_constraint({z: 1.0, u: -m_flow if ns else m_flow},
                                     "<=", 0.0 if ns else m_flow)
            art.big_m[r] = m_flow
            # z >= x - M d - M (1-g)
            if ns:
                r = model.add_constraint({x: 1.0, z: -1.0, d: -m_state, u: m_state},
                                         "<=", m_state)
            else:
                r = model.add_constraint({x: 1.0, z: -1.0, d: -m_state, u: -m_state},
                                         "<=", 0.0)
            art.big_m[r] = m_state
            # z >= c - M (1-d) - M (1-g)
            if ns:
                r = model.add_constraint({z: -1.0, d: m_flow, u: m_flow},
                                         "<=", 2.0 * m_flow - c)
            else:
                r = model.add_constraint({z: -1.0, d: m_flow, u: -m_flow},
                                         "<=", m_flow - c)
            art.big_m[r] = m_flow
        # state update equalities
        for i, link in enumerate(net.links):
            row = {art.x_idx[(k + 1, i)]: 1.0, art.x_idx[(k, i)]: -1.0,
                   art.z_idx[(k, i)]: 1.0}
            for (src, dst, ratio) in net.turns:
                if dst == link.id and ratio:
                    zq = art.z_idx[(k, net.link_index(src))]
                    row[zq] = row.get(zq, 0.0) - ratio
            model.add_constraint(row, "=", float(net.w_star[i]))
    for i in range(n):  # cyclic closure
        model.add_constraint({art.x_idx[(T, i)]: 1.0, art.x_idx[(0, i)]: -1.0},
                             "<=", 0.0)
    _set_objective(model, art, objective)
    return art


def decode(art: EncodingArtifacts, sol: MilpSolution,
           sys=None) -> SSequenceCertificate:
    """Extract controls, re-simulate the witness, and cross-check everything.

    The simulation (not the solver's state values) is authoritative: the
    returned certificate carries simulated states, and any disagreement
    beyond 1e-5 — or a safety/closure violation of the simulated witness —
    raises ``DecodeMismatchError``.
    """
    if sol.x is None:
        raise DecodeMismatchError(f"no assignment to decode (status {sol.status})")
    sys = sys if sys is not None else art.system
    T = art.T
    controls = []
    if art.kind == "switched":
        for k in range(T):
            vals = {m: sol.x[art.control_idx[(k, m)]] for m in sys.controls}
            m_best = max(vals, key=lambda m: vals[m])
            if vals[m_best] < 1.0 - 1e-6:
                raise DecodeMismatchError(f"step {k}: mode binaries not one-hot: {vals}")
            controls.append(m_best)
    else:
        for k in range(T):
            phases = []
            for j in sys.junctions:
                v = sol.x[art.control_idx[(k, j)]]
                if abs(v - round(v)) > 1e-6:
                    raise DecodeMismatchError(f"step {k}: junction {j} binary fractional: {v}")
                phases.append(NS if round(v) == 1 else EW)
            controls.append(tuple(phases))
    n = art.state_cap.shape[0]
    x = np.array([sol.x[art.x_idx[(0, i)]] for i in range(n)])
    states = [x]
    for k in range(T):
        states.append(sys.step(states[-1], sys.w_star, controls[k]))
    for k in range(T + 1):
        solver_state = np.array([sol.x[art.x_idx[(k, i)]] for i in range(n)])
        gap = float(np.max(np.abs(solver_state - states[k])))
        if gap > DECODE_TOL:
            raise DecodeMismatchError(
                f"step {k}: solver state deviates from re-simulation by {gap:.3g}")
    cap = art.state_cap
    for k, xs in enumerate(states):
        if np.any(xs > cap + DECODE_TOL):
            raise DecodeMismatchError(f"step {k}: re-simulated state exceeds the "
                                      "bound backing the big-M constants")
        if k < T and not art.safe_set.contains(xs, DECODE_TOL):
            raise DecodeMismatchError(f"step {k}: re-simulated witness leaves the safe set")
    if not leq(states[T], states[0], DECODE_TOL):
        raise DecodeMismatchError("re-simulated witness violates closure x_T <= x_0")
    return SSequenceCertificate(T=T, controls=tuple(controls), x_star=tuple(states))
