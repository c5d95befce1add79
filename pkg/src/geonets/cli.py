"""Command line front end.

Exit codes: 0 the command's check holds, 1 the check failed, 2 bad input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from geonets import comparison, critical, net as nets, relax as rlx
from geonets.manifold import DistanceError, ShootingError, get_manifold

OK, FAILED, BAD_INPUT, NUMERICAL = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    manifold: str = "s2"
    tol: float = 1e-9
    grid_deg: float = 2.0
    petals: int = 1
    perturb: float = 0.0
    seed: int = 0
    out: str | None = None
    format: str = "json"
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        if self.grid_deg <= 0:
            raise ValueError("--grid-deg must be positive")
        if self.format not in ("json", "csv"):
            raise ValueError("--format must be json or csv")


def _vec(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def _emit(report: dict, cfg: RunConfig, rows: list | None = None, header: list | None = None):
    report = {"config": asdict(cfg), **report}
    if cfg.format == "json":
        text = json.dumps(report, indent=2, default=float)
    else:
        buf = io.StringIO()
        w = csv.writer(buf)
        if rows is None:
            w.writerow(["key", "value"])
            for k, v in _flatten(report):
                w.writerow([k, json.dumps(v, default=float) if isinstance(v, list) else v])
        else:
            w.writerow(header)
            w.writerows(rows)
        text = buf.getvalue()
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text + ("\n" if not text.endswith("\n") else ""))


def _residuals(net):
    return {v: nets.balance_residual(net, v) for v in net.balanced_ids()}


def cmd_verify_theta(args, cfg: RunConfig) -> int:
    m = get_manifold(cfg.manifold)
    theta = nets.build_theta(m)
    report = {
        "stationary": nets.is_stationary(theta, cfg.tol),
        "minimizing": nets.is_minimizing(theta),
        "balanced_count": nets.count_balanced(theta, cfg.tol),
        "total_length": theta.total_length(),
        "residuals": _residuals(theta),
    }
    ok = report["stationary"] and report["minimizing"] and report["balanced_count"] == 2
    if cfg.perturb > 0:
        rng = np.random.default_rng(cfg.seed)
        moved = rlx.perturb(theta, cfg.perturb, rng)
        params = rlx.RelaxParams(residual_tol=args.relax_tol, max_iters=args.max_iters)
        rep = rlx.relax(moved, params)
        report["perturbed"] = {
            "stationary": nets.is_stationary(moved, cfg.tol),
            "max_residual": rep.residuals[0],
            "total_length": rep.lengths[0],
        }
        report["relaxed"] = {
            "converged": rep.converged,
            "iterations": rep.iterations,
            "max_residual": rep.residuals[-1],
            "total_length": rep.lengths[-1],
            "message": rep.message,
        }
        ok = ok and rep.converged
    _emit(report, cfg)
    return OK if ok else FAILED


def cmd_flower(args, cfg: RunConfig) -> int:
    m = get_manifold(cfg.manifold)
    p = args.center if args.center is not None else np.array([0.0, 0.0, 1.0])
    p = m.point(p)
    petals = nets.great_circle_petals(m, p, cfg.petals)
    flower = nets.build_flower(m, p, petals)
    minimizing = nets.flower_is_minimizing(flower)
    scan = critical.scan_critical(m, p, step_deg=cfg.grid_deg)
    R_p = scan.critical_radius
    report = {
        "petals": cfg.petals,
        "minimizing": minimizing,
        "total_length": flower.total_length(),
        "critical_radius": R_p,
        "distinct_halfway_points": len(nets.distinct_points(m, [flower.point(pt.halfway) for pt in flower.flower.petals])),
    }
    ok = minimizing
    if minimizing:
        b = critical.flower_length_bound(flower, R_p)
        report["bound"] = b.bound
        report["satisfied"] = b.satisfied
        report["equality"] = bool(abs(b.bound - b.total_length) <= 1e-9)
        ok = b.satisfied
    if report["distinct_halfway_points"] < cfg.petals:
        report["note"] = f"only {report['distinct_halfway_points']} distinct halfway critical point(s)"
    _emit(report, cfg)
    return OK if ok else FAILED


def cmd_scan(args, cfg: RunConfig) -> int:
    m = get_manifold(cfg.manifold)
    p = m.point(args.center if args.center is not None else m.random_point(np.random.default_rng(cfg.seed)))
    kw = {"step_deg": cfg.grid_deg}
    if args.radius is not None:
        kw["max_radius"] = args.radius
    elif args.chart_radius is not None:
        if not hasattr(m, "from_chart"):
            raise ValueError(f"--chart-radius needs a surface of revolution, not {m.name}")
        kw["max_radius"] = m.distance(p, m.from_chart(args.chart_radius, 0.0))
    if args.radial_steps is not None:
        kw["n_radii"] = args.radial_steps
    rep = critical.scan_critical(m, p, tol=cfg.tol, **kw)
    rows = [[*h.point.tolist(), h.distance, True] for h in rep.hits]
    dim = len(p)
    _emit(rep.to_dict(), cfg, rows=rows, header=["x", "y", "z"][:dim] + ["distance", "critical"])
    return NUMERICAL if rep.failures else OK


def cmd_certify(args, cfg: RunConfig) -> int:
    m = get_manifold(cfg.manifold)
    p, q = m.point(args.p), m.point(args.q)
    if args.x is not None:
        xs = [m.point(args.x)]
    else:
        rng = np.random.default_rng(cfg.seed)
        xs = []
        while len(xs) < args.samples:
            x = m.random_point(rng)
            if not (m.same_point(x, p, 1e-6) or m.same_point(x, q, 1e-6)):
                xs.append(x)
    certs = [comparison.certify_uniqueness(m, p, q, x) for x in xs]
    report = {"certificates": [c.to_dict() for c in certs], "all_valid": all(c.valid for c in certs)}
    rows = [[*c.x, c.sides["d(p,x)"], c.sides["d(p,q)"], c.sides["d(q,x)"], c.valid] for c in certs]
    _emit(report, cfg, rows=rows, header=["x0", "x1", "x2", "d_px", "d_pq", "d_qx", "valid"])
    return OK if report["all_valid"] else FAILED


def cmd_relax(args, cfg: RunConfig) -> int:
    m = get_manifold(cfg.manifold) if args.manifold_given else None
    net = nets.load_net(args.net, manifold=m)
    params = rlx.RelaxParams(
        step_size=args.step_size,
        max_iters=args.max_iters,
        residual_tol=args.relax_tol,
        bvp_resolve_every=args.resolve_every,
    )
    rep = rlx.relax(net, params)
    out = Path(cfg.out) if cfg.out else Path(args.net).with_suffix(".relaxed.json")
    nets.save_net(rep.net, out)
    history = out.with_suffix(".residuals.csv")
    history.write_text(rep.history_csv())
    summary = {
        "converged": rep.converged,
        "iterations": rep.iterations,
        "initial_residual": rep.residuals[0],
        "final_residual": rep.residuals[-1],
        "initial_length": rep.lengths[0],
        "final_length": rep.lengths[-1],
        "message": rep.message,
        "net_file": str(out),
        "history_file": str(history),
    }
    sys.stdout.write(json.dumps({"config": asdict(cfg), **summary}, indent=2) + "\n")
    return OK if rep.converged else FAILED


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifold", default=None, help="s2, rp2, plane, paraboloid, spheroid:<c>, revolution:<file>")
    common.add_argument("--tol", type=float, default=1e-9)
    common.add_argument("--grid-deg", type=float, default=2.0)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("json", "csv"), default="json")

    ap = argparse.ArgumentParser(prog="geonets", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-theta", parents=[common], help="check the round theta net")
    sp.add_argument("--perturb", type=float, default=0.0)
    sp.add_argument("--relax-tol", type=float, default=1e-6)
    sp.add_argument("--max-iters", type=int, default=500)
    sp.set_defaults(func=cmd_verify_theta)

    sp = sub.add_parser("flower", parents=[common], help="build and check a great-circle flower")
    sp.add_argument("--petals", type=int, default=1)
    sp.add_argument("--center", type=_vec, default=None)
    sp.set_defaults(func=cmd_flower)

    sp = sub.add_parser("scan", parents=[common], help="scan for critical points of a distance function")
    sp.add_argument("--center", type=_vec, default=None)
    sp.add_argument("--radius", type=float, default=None, help="maximum geodesic radius")
    sp.add_argument("--chart-radius", type=float, default=None, help="maximum chart radius (surfaces of revolution)")
    sp.add_argument("--radial-steps", type=int, default=None)
    sp.set_defaults(func=cmd_scan)

    sp = sub.add_parser("certify", parents=[common], help="uniqueness certificates for a mutually critical pair")
    sp.add_argument("--p", type=_vec, default=_vec("0,0,1"))
    sp.add_argument("--q", type=_vec, default=_vec("0,0,-1"))
    sp.add_argument("--x", type=_vec, default=None)
    sp.add_argument("--samples", type=int, default=100)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("relax", parents=[common], help="relax a net file to a stationary net")
    sp.add_argument("net")
    sp.add_argument("--step-size", type=float, default=0.25)
    sp.add_argument("--max-iters", type=int, default=2000)
    sp.add_argument("--relax-tol", type=float, default=1e-7)
    sp.add_argument("--resolve-every", type=int, default=10)
    sp.set_defaults(func=cmd_relax)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.manifold_given = args.manifold is not None
    try:
        cfg = RunConfig(
            command=args.command,
            manifold=args.manifold or "s2",
            tol=args.tol,
            grid_deg=args.grid_deg,
            petals=getattr(args, "petals", 1),
            perturb=getattr(args, "perturb", 0.0),
            seed=args.seed,
            out=args.out,
            format=args.format,
        )
        if cfg.petals < 1:
            raise ValueError("--petals must be at least 1")
        if cfg.perturb < 0 or not math.isfinite(cfg.perturb):
            raise ValueError("--perturb must be a non-negative number")
        return args.func(args, cfg)
    except (ShootingError, DistanceError, rlx.RelaxError, ArithmeticError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
