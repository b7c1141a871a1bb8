"""Command-line front end: certificate search, verification, simulation.

Exit codes are a stable contract: 0 success, 1 input error, 2 negative
result (not found / verification failed), 3 inconclusive (budget ran out).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from importlib import resources

import numpy as np

from .certificate import SSequenceCertificate
from .invariance import build_attractive_set, build_rcis, compute_limit_cycle, find_s_sequence
from .order import Box, PolyLowerSet
from .simulate import (feedback, open_loop, simulate, uniform, verify_certificate,
                       worst_case_w_star, write_trajectory_csv)
from .systems import TrafficNetwork, load_system_file, system_hash

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NEGATIVE = 2
EXIT_INCONCLUSIVE = 3


class _Parser(argparse.ArgumentParser):
    # usage mistakes are input errors (exit 1), not negative results (exit 2)
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


class InputError(Exception):
    pass


def _resolve_path(path):
    """Accept real paths or the bare names of bundled data files."""
    if os.path.exists(path):
        return str(path)
    candidate = resources.files("monosafe.data") / os.path.basename(path)
    if os.path.basename(path) == path and candidate.is_file():
        return str(candidate)
    raise InputError(f"no such file: {path}")


def _load_system(args):
    spec_path = _resolve_path(args.system)
    try:
        sys_, safe_set, digest = load_system_file(spec_path, args.beta_resolution)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot parse system spec {args.system}: {exc}")
    if getattr(args, "safe_set", None):
        if isinstance(sys_, TrafficNetwork):
            raise InputError("traffic safety is derived from the link table; "
                             "--safe-set does not apply")
        with open(_resolve_path(args.safe_set)) as fh:
            raw = json.load(fh)
        try:
            safe_set = PolyLowerSet(np.asarray(raw["A"], float), np.asarray(raw["b"], float))
        except (KeyError, ValueError) as exc:
            raise InputError(f"bad safe-set file {args.safe_set}: {exc}")
    return sys_, safe_set, digest


def _out_dir(args):
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _parse_x0(text, dim):
    try:
        vec = np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError:
        raise InputError(f"--x0 must be comma-separated numbers, got {text!r}")
    if vec.shape[0] != dim:
        raise InputError(f"--x0 has {vec.shape[0]} entries, system needs {dim}")
    return vec


def cmd_find(args):
    sys_, safe_set, digest = _load_system(args)
    out = _out_dir(args)
    objective = {"max-l1": "max_l1_x0", "first-feasible": "first_feasible"}[args.objective]
    dump = os.path.join(out, "model") if args.dump_lp else None
    result = find_s_sequence(
        sys_, None if isinstance(sys_, TrafficNetwork) else safe_set,
        t_max=args.tmax, objective=objective,
        time_budget=args.time_budget, node_budget=args.node_budget,
        t_min=args.tmin, dump_lp=dump)

    lines = [f"system: {args.system}  (hash {digest})", "horizon sweep:"]
    for r in result.records:
        lines.append(f"  T={r.T}: {r.status}  [{r.solver_status}, "
                     f"{r.nodes} nodes, {r.elapsed:.2f}s]")
    if result.found:
        cert = dataclasses.replace(result.certificate, system_hash=digest)
        cert.save(os.path.join(out, "certificate.json"))
        rcis = build_rcis(cert)
        _write_corners_csv(os.path.join(out, "rcis_corners.csv"), rcis.region.boxes)
        lines.append(f"found: s-sequence of length T={cert.T}"
                     + (" (minimal)" if result.minimal else " (minimality not proven)"))
        lines.append(f"controls: {_control_text(cert.controls)}")
        lines.append(f"wrote certificate.json and rcis_corners.csv to {out}")
        code = EXIT_OK
    elif result.budget_limited:
        lines.append(f"no certificate up to T={args.tmax}; at least one horizon "
                     "hit the budget — existence undecided")
        code = EXIT_INCONCLUSIVE
    else:
        lines.append(f"no s-sequence exists for any T <= {args.tmax} (proven)")
        code = EXIT_NEGATIVE
    text = "\n".join(lines)
    print(text)
    with open(os.path.join(out, "summary.txt"), "w") as fh:
        fh.write(text + "\n")
    return code


def _control_text(controls):
    if controls and isinstance(controls[0], tuple):
        return "; ".join(":".join(u) for u in controls)
    return ",".join(str(u) for u in controls)


def _write_corners_csv(path, boxes):
    n = boxes[0].corner.shape[0]
    with open(path, "w") as fh:
        fh.write("box," + ",".join(f"x_{i + 1}" for i in range(n)) + "\n")
        for p, box in enumerate(boxes):
            fh.write(f"{p}," + ",".join(repr(float(v)) for v in box.corner) + "\n")


def cmd_verify(args):
    sys_, safe_set, digest = _load_system(args)
    try:
        cert = SSequenceCertificate.load(_resolve_path(args.certificate))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot parse certificate {args.certificate}: {exc}")
    if cert.system_hash is not None and cert.system_hash != digest:
        print(f"error: certificate was issued for system hash {cert.system_hash}, "
              f"but {args.system} hashes to {digest}", file=sys.stderr)
        return EXIT_INPUT
    report = verify_certificate(sys_, safe_set, cert)
    payload = report.to_dict()
    payload["system_hash"] = digest
    payload["beta_resolution"] = args.beta_resolution if isinstance(sys_, TrafficNetwork) else None
    print(json.dumps(payload, indent=2))
    if args.out:
        with open(os.path.join(_out_dir(args), "verify_report.json"), "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    return EXIT_OK if report.passed else EXIT_NEGATIVE


def cmd_simulate(args):
    sys_, safe_set, digest = _load_system(args)
    try:
        cert = SSequenceCertificate.load(_resolve_path(args.certificate))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"cannot parse certificate {args.certificate}: {exc}")
    if cert.system_hash is not None and cert.system_hash != digest:
        print(f"error: certificate was issued for system hash {cert.system_hash}, "
              f"but {args.system} hashes to {digest}", file=sys.stderr)
        return EXIT_INPUT
    out = _out_dir(args)
    x0 = (np.asarray(cert.x_star[0]) if args.x0 is None
          else _parse_x0(args.x0, sys_.state_dim))
    rcis = build_rcis(cert)
    cycle = compute_limit_cycle(sys_, cert)
    gamma = build_attractive_set(cycle)
    policy = feedback(rcis) if args.policy == "feedback" else open_loop(cert)
    if args.policy == "open-loop" and not Box(np.asarray(cert.x_star[0])).contains(x0):
        print("warning: x0 lies outside R(x*_0); the periodic trajectory is no "
              "longer an upper bound and convergence to the attractive set is "
              "not guaranteed", file=sys.stderr)
    adversary = (worst_case_w_star() if args.adversary == "worst-case"
                 else uniform(args.seed))
    traj = simulate(sys_, x0, policy, adversary, args.steps,
                    safe_set=safe_set, omega=rcis.region, gamma=gamma)
    write_trajectory_csv(traj, os.path.join(out, "trajectory.csv"))
    _write_cycle_csv(os.path.join(out, "limit_cycle.csv"), cycle)
    print(f"simulated {len(traj) - 1} steps ({traj.status}); "
          f"safe {sum(bool(s) for s in traj.safe)}/{len(traj)}, "
          f"in attractive set at end: {bool(traj.in_gamma[-1])}")
    print(f"limit cycle: {cycle.periods} periods to residual {cycle.residual:.2e}")
    print(f"wrote trajectory.csv and limit_cycle.csv to {out}")
    return EXIT_OK


def _write_cycle_csv(path, cycle):
    n = cycle.points[0].shape[0]
    with open(path, "w") as fh:
        fh.write("phase," + ",".join(f"x_{i + 1}" for i in range(n)) + "\n")
        for k, point in enumerate(cycle.points):
            fh.write(f"{k}," + ",".join(repr(float(v)) for v in point) + "\n")


def build_parser():
    parser = _Parser(prog="monosafe",
                     description="s-sequence search, verification, and "
                                 "simulation for monotone safety control")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, certificate=False):
        p.add_argument("--system", required=True,
                       help="system spec JSON (bundled names like case1.json work)")
        p.add_argument("--beta-resolution", choices=("first", "second"), default="first",
                       help="which listed value of a duplicated turn ratio to use")
        p.add_argument("--out", default=None, help="output directory")
        if certificate:
            p.add_argument("--certificate", required=True, help="certificate JSON")

    p_find = sub.add_parser("find", help="sweep horizons for an s-sequence")
    common(p_find)
    p_find.add_argument("--safe-set", default=None,
                        help="override safe set JSON {A, b} (switched systems only)")
    p_find.add_argument("--tmax", type=int, default=10)
    p_find.add_argument("--tmin", type=int, default=1,
                        help="skip horizons below this (forfeits minimality claims)")
    p_find.add_argument("--objective", choices=("max-l1", "first-feasible"),
                        default="max-l1")
    p_find.add_argument("--time-budget", type=float, default=None, metavar="S")
    p_find.add_argument("--node-budget", type=int, default=None, metavar="N")
    p_find.add_argument("--dump-lp", action="store_true",
                        help="write each horizon's model in LP format to the output dir")
    p_find.set_defaults(func=cmd_find)

    p_verify = sub.add_parser("verify", help="check a certificate by simulation")
    common(p_verify, certificate=True)
    p_verify.add_argument("--safe-set", default=None,
                          help="override safe set JSON {A, b} (switched systems only)")
    p_verify.set_defaults(func=cmd_verify)

    p_sim = sub.add_parser("simulate", help="roll the closed loop forward")
    common(p_sim, certificate=True)
    p_sim.add_argument("--steps", type=int, default=200)
    p_sim.add_argument("--x0", default=None,
                       help="initial state as comma-separated numbers (default x*_0)")
    p_sim.add_argument("--policy", choices=("open-loop", "feedback"), default="open-loop")
    p_sim.add_argument("--adversary", choices=("uniform", "worst-case"), default="uniform")
    p_sim.add_argument("--seed", type=int, default=0, metavar="U64")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
