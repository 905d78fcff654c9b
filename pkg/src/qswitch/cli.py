"""Command-line front end.

    qswitch analytic --k 3 --mu 1 --r 0,1,1
    qswitch solve    --k 3 --B 2 --r 0,1,1 --dump
    qswitch simulate --k 3 --B 1 --r 0,1,1 --duration 1e6 --check
    qswitch region   --k 3 --B 2 --compare-b1 --out fig7a/
    qswitch replay   fig7a/manifest.json

Exit codes: 0 success, 1 I/O failure, 2 validation error, 3 a requested
cross-check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__, analytic, ctmc, region, sim
from .model import PolicyParams, SwitchConfig, ValidationError, validate_config

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_CHECK = 3

# relative tolerance for closed form vs CTMC cross-checks
CHECK_RTOL = 1e-10

def _policy(text: str) -> PolicyParams:
    try:
        return PolicyParams.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_system(p: argparse.ArgumentParser, *, with_buffer: bool = True, policy: bool = True):
    p.add_argument("--k", type=int, required=True, help="number of links (>= 3)")
    p.add_argument("--mu", type=float, default=1.0, help="link entanglement rate per link")
    p.add_argument("--alpha", type=float, default=0.0, help="per-qubit decoherence rate")
    if with_buffer:
        p.add_argument("--B", dest="buffer_size", type=int, default=1, help="per-link buffer (1 or 2)")
    if policy:
        p.add_argument("--r", dest="policy", type=_policy, default=PolicyParams(0.0, 1.0, 1.0),
                       help="policy r1,r2,r3 (default 0,1,1)")
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    p.add_argument("--out", type=Path, help="directory for result JSON and manifest")
    p.add_argument("--check", action="store_true", help="exit 3 if an internal cross-check fails")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qswitch", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"qswitch {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form B=1 results")
    _add_system(p)

    p = sub.add_parser("solve", help="solve the CTMC for one policy")
    _add_system(p)
    p.add_argument("--dump", action="store_true", help="print the transition table")

    p = sub.add_parser("simulate", help="Monte Carlo estimate with CTMC comparison")
    _add_system(p)
    p.add_argument("--duration", type=float, default=1e5, help="simulated seconds per replication")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--batches", type=int, default=sim.MIN_BATCHES)
    p.add_argument("--trace", type=Path, help="write the event trace of replication 0 as CSV")

    p = sub.add_parser("region", help="sweep policies and write region data")
    _add_system(p, policy=False)
    p.add_argument("--step", type=float, default=0.05, help="policy grid step")
    p.add_argument("--engine", choices=region.ENGINES, help="default: analytic for B=1, ctmc for B=2")
    p.add_argument("--compare-b1", action="store_true", help="also sweep B=1 and compare (B=2 only)")

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest", type=Path)
    return parser


def _config(args) -> tuple[SwitchConfig, PolicyParams]:
    cfg = SwitchConfig(args.k, args.mu, args.alpha, getattr(args, "buffer_size", 1))
    pol = getattr(args, "policy", None) or PolicyParams(0.0, 1.0, 1.0)
    validate_config(cfg, pol)
    return cfg, pol


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300) if b != 0 else abs(a)


# --- commands --------------------------------------------------------------


def cmd_analytic(args) -> tuple[dict, list[str]]:
    if getattr(args, "buffer_size", 1) != 1:
        raise ValidationError("no closed form for B=2; use `qswitch solve`")
    cfg, pol = _config(args)
    if cfg.alpha == 0:
        cp = analytic.capacities_b1(cfg, pol)
        pi = analytic.stationary_b1(cfg, pol)
    else:
        cp = analytic.capacities_b1_decoherence(cfg, pol)
        pi = None
    ext = analytic.extremes_b1(cfg)
    lines = analytic.bounding_lines_b1(cfg)
    gap = analytic.tdm_gap(ext.c3_hat, ext.c2_hat, ext.c2_max, ext.c3_max)
    areas = analytic.triangle_areas(ext.c2_max, ext.c3_max, gap)
    result = {
        "k": cfg.k, "mu": cfg.mu, "alpha": cfg.alpha, "policy": list(pol.as_tuple()),
        "c2": cp.c2, "c3": cp.c3,
        "c2_max": ext.c2_max, "c3_max": ext.c3_max,
        "farthest": {"c3": ext.c3_hat, "c2": ext.c2_hat},
        "line1": {"slope": lines.line1[0], "intercept": lines.line1[1]},
        "line2": {"slope": lines.line2[0], "intercept": lines.line2[1]},
        "areas": {"a_triangle": areas.a_triangle, "a_tdm": areas.a_tdm,
                  "a_total": areas.a_total, "ratio": areas.ratio},
    }
    if pi is not None:
        result["pi"] = {f"({a},{b})": v for (a, b), v in pi.items()}
    if cfg.alpha == 0:
        result["area_rational"] = analytic.area_rational(cfg.k)
    text = [
        f"C2 = {cp.c2:.12g}",
        f"C3 = {cp.c3:.12g}",
        f"C2* = {ext.c2_max:.12g}   C3* = {ext.c3_max:.12g}",
        f"farthest point (C3, C2) = ({ext.c3_hat:.12g}, {ext.c2_hat:.12g})",
        f"line1: C2 <= {lines.line1[0]:.12g} C3 + {lines.line1[1]:.12g}",
        f"line2: C2 <= {lines.line2[0]:.12g} C3 + {lines.line2[1]:.12g}",
        f"area above TDM / total = {areas.ratio:.12g}",
    ]
    if args.check:
        _, ref = ctmc.solve(cfg, pol)
        ok = _rel_err(cp.c2, ref.c2) <= CHECK_RTOL and _rel_err(cp.c3, ref.c3) <= CHECK_RTOL
        result["check"] = {"ctmc_c2": ref.c2, "ctmc_c3": ref.c3, "passed": ok}
        text.append(f"cross-check vs CTMC: {'ok' if ok else 'FAILED'}")
    return result, text


def cmd_solve(args) -> tuple[dict, list[str]]:
    cfg, pol = _config(args)
    chain = ctmc.build_chain(cfg, pol)
    pi = ctmc.solve_stationary(chain)
    cp = ctmc.capacities(chain, pi)
    result = {
        "k": cfg.k, "mu": cfg.mu, "alpha": cfg.alpha, "buffer_size": cfg.buffer_size,
        "policy": list(pol.as_tuple()),
        "pi": pi.as_dict(), "residual": pi.residual,
        "c2": cp.c2, "c3": cp.c3,
    }
    text = [f"pi{s} = {p:.12g}" for s, p in pi.as_dict().items()]
    text += [f"C2 = {cp.c2:.12g}", f"C3 = {cp.c3:.12g}", f"residual |pi Q|_inf = {pi.residual:.3g}"]
    if args.dump:
        text += ["", chain.dump()]
        result["transitions"] = chain.dump().splitlines()
    if args.check and cfg.buffer_size == 1:
        ref = (analytic.capacities_b1 if cfg.alpha == 0 else analytic.capacities_b1_decoherence)(cfg, pol)
        ok = _rel_err(cp.c2, ref.c2) <= CHECK_RTOL and _rel_err(cp.c3, ref.c3) <= CHECK_RTOL
        result["check"] = {"analytic_c2": ref.c2, "analytic_c3": ref.c3, "passed": ok}
        text.append(f"cross-check vs closed form: {'ok' if ok else 'FAILED'}")
    return result, text


def _within(est: float, half: float, ref: float) -> bool:
    return abs(est - ref) <= half


def cmd_simulate(args) -> tuple[dict, list[str]]:
    cfg, pol = _config(args)
    if args.reps < 2:
        raise ValidationError(f"reps >= 2 required (got {args.reps})")
    if not args.duration > 0:
        raise ValidationError("duration must be positive")
    est = sim.replicate(cfg, pol, args.duration, args.reps, args.seed, n_batches=args.batches)
    if args.trace is not None:
        first = sim.replication_seeds(args.seed, args.reps)[0]
        with args.trace.open("w") as fh:
            sim.simulate(cfg, pol, args.duration, first, n_batches=args.batches, trace=fh)
    _, ref = ctmc.solve(cfg, pol)
    ok2 = _within(est.c2_hat, est.ci2, ref.c2)
    ok3 = _within(est.c3_hat, est.ci3, ref.c3)
    result = {
        "k": cfg.k, "mu": cfg.mu, "alpha": cfg.alpha, "buffer_size": cfg.buffer_size,
        "policy": list(pol.as_tuple()),
        "duration": est.duration, "seed": est.seed, "reps": est.n_reps,
        "total_events": est.total_events,
        "c2_hat": est.c2_hat, "ci2": est.ci2, "c3_hat": est.c3_hat, "ci3": est.ci3,
        "ctmc_c2": ref.c2, "ctmc_c3": ref.c3,
        "agree": bool(ok2 and ok3),
    }
    text = [
        f"{'':6}{'simulated':>16} {'95% half-width':>16} {'CTMC':>16}",
        f"{'C2':6}{est.c2_hat:16.8g} {est.ci2:16.3g} {ref.c2:16.8g}  {'ok' if ok2 else 'outside CI'}",
        f"{'C3':6}{est.c3_hat:16.8g} {est.ci3:16.3g} {ref.c3:16.8g}  {'ok' if ok3 else 'outside CI'}",
        f"{est.n_reps} reps x {est.duration:g} s, seed {est.seed}, {est.total_events} events",
        f"verdict: {'agree' if ok2 and ok3 else 'DISAGREE'}",
    ]
    if args.check:
        result["check"] = {"passed": result["agree"]}
    return result, text


def cmd_region(args, written: list[Path]) -> tuple[dict, list[str]]:
    cfg, _ = _config(args)
    if args.out is None:
        raise ValidationError("region requires --out")
    engine = args.engine or region.default_engine(cfg)
    res = region.sweep(cfg, args.step, engine)
    written += region.write_region(res, args.out)
    summary = res.summary()
    checks = {}
    text = [
        f"{len(res.points)} policies, {len(res.upper_boundary)} on the frontier",
        f"C2* = {res.c2_max:.12g}   C3* = {res.c3_max:.12g}",
        f"farthest point {res.farthest_point.policy.as_tuple()} -> "
        f"(C3, C2) = ({res.farthest_point.c3:.12g}, {res.farthest_point.c2:.12g})",
        f"area above TDM / total = {res.areas.ratio:.12g}",
    ]
    if cfg.alpha > 0:
        base_cfg = SwitchConfig(cfg.k, cfg.mu, 0.0, cfg.buffer_size)
        base = region.sweep(base_cfg, args.step, engine)
        inside = region.frontier_dominates(base.frontier_array(), res.frontier_array(), strict=True)
        shrink = 1 - region.frontier_area(res.frontier_array()) / region.frontier_area(base.frontier_array())
        summary["alpha0_baseline"] = {"strictly_inside": inside, "relative_area_shrinkage": shrink}
        checks["strictly_inside_alpha0"] = inside
        text.append(f"frontier strictly inside alpha=0 frontier: {inside} (area shrinkage {shrink:.4g})")
    if args.compare_b1:
        if cfg.buffer_size != 2:
            raise ValidationError("--compare-b1 requires --B 2")
        b1_cfg = SwitchConfig(cfg.k, cfg.mu, cfg.alpha, 1)
        cmp = region.compare_buffers(b1_cfg, cfg, args.step)
        written += region.write_region(cmp.b1, args.out, prefix="b1_")
        dom = region.frontier_dominates(cmp.b2.frontier_array(), cmp.b1.frontier_array())
        summary["compare_b1"] = {
            "delta_c2_max": cmp.delta_c2_max,
            "delta_c3_max": cmp.delta_c3_max,
            "b2_dominates_b1": dom,
        }
        checks["b2_dominates_b1"] = dom
        text.append(f"B=2 frontier dominates B=1: {dom} "
                    f"(dC2* = {cmp.delta_c2_max:.6g}, dC3* = {cmp.delta_c3_max:.6g})")
    if args.check:
        summary["check"] = {"passed": all(checks.values()), **checks}
    path = args.out / "summary.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary, text


# --- plumbing ----------------------------------------------------------------


def _manifest(args, argv: list[str], outputs: list[Path]) -> dict:
    params = {}
    for key, value in sorted(vars(args).items()):
        if key in ("func",):
            continue
        if isinstance(value, PolicyParams):
            value = list(value.as_tuple())
        elif isinstance(value, Path):
            value = str(value)
        params[key] = value
    return {
        "tool": "qswitch",
        "version": __version__,
        "command": args.command,
        "argv": list(argv),
        "params": params,
        "outputs": [str(p) for p in outputs],
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def _run(args, argv: list[str]) -> int:
    written: list[Path] = []
    if args.command == "region":
        result, text = cmd_region(args, written)
    else:
        handler = {"analytic": cmd_analytic, "solve": cmd_solve, "simulate": cmd_simulate}[args.command]
        result, text = handler(args)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        if args.command != "region":
            path = args.out / f"{args.command}.json"
            path.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
            written.append(path)
        manifest = _manifest(args, argv, written)
        (args.out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if args.json:
        payload = dict(result)
        payload["manifest"] = _manifest(args, argv, written)
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        print("\n".join(text))
    check = result.get("check")
    if check is not None and not check["passed"]:
        return EXIT_CHECK
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "replay":
        try:
            manifest = json.loads(args.manifest.read_text())
        except (OSError, ValueError) as exc:
            print(f"error: cannot read manifest: {exc}", file=sys.stderr)
            return EXIT_IO
        return main(manifest["argv"])
    try:
        return _run(args, argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
