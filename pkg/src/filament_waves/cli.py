"""Command-line interface.

Usage examples:
  python -m filament_waves spectrum --p 1 --q 2 --k0 1 --l0 0 --cutoff 64x32
  python -m filament_waves amplitudes --q 2 --kmax 20 --pmax 1000
  python -m filament_waves branch --p 1 --q 2 --k0 1 --l0 0 --b-grid 0,0.025,0.05,0.1
  python -m filament_waves evolve --snapshot out/point_003.json --periods 1
  python -m filament_waves travel --a 2 --l 0 --b-max 0.1 --b-steps 8

Every command writes into ``--outdir`` (default: ``$FILAMENT_WAVES_OUTDIR`` or
the working directory) and finishes with ``manifest.json``.  Exit codes:
0 success, 2 usage error, 3 domain error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import evolution, formats, lattice, traveling
from . import lyapunov_schmidt as ls
from .errors import BranchTruncated, FilamentError

log = logging.getLogger("filament_waves")

OUTDIR_ENV = "FILAMENT_WAVES_OUTDIR"


class UsageError(Exception):
    pass


def _cutoff(text: str) -> tuple:
    try:
        j, k = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cutoff must look like 64x32, got {text!r}") from None
    if j < 1 or k < 1:
        raise argparse.ArgumentTypeError("cutoff entries must be positive")
    return j, k


def _rational(text: str) -> Fraction:
    try:
        return lattice.parse_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _float_list(text: str) -> list:
    try:
        return [float(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--outdir", default=os.environ.get(OUTDIR_ENV, "."),
                   help="output directory (default $%s or .)" % OUTDIR_ENV)
    p.add_argument("--config", default=None, help="flat key = value file; CLI flags win")
    p.add_argument("-v", "--verbose", action="store_true")


def _add_site(p: argparse.ArgumentParser, required=True):
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.add_argument("--j0", type=int, default=1)
    p.add_argument("--k0", type=int, required=required)
    p.add_argument("--l0", type=int, choices=(0, 1), required=required)


def _add_b_grid(p: argparse.ArgumentParser, default_max: float):
    p.add_argument("--b-grid", type=_float_list, default=None,
                   help="explicit comma-separated amplitudes starting at 0")
    p.add_argument("--b-max", type=float, default=default_max)
    p.add_argument("--b-steps", type=int, default=8)


def build_parser() -> tuple:
    parser = argparse.ArgumentParser(prog="filament-waves",
                                     description="Standing and traveling waves of a vortex filament pair.")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    sp = sub.add_parser("spectrum", help="exact eigenvalue table, kernel and gap report")
    _add_site(sp, required=False)
    sp.add_argument("--a2inv", type=_rational, default=None, help="a^-2 as n/d (default: from the site)")
    sp.add_argument("--cutoff", type=_cutoff, default=lattice.DEFAULT_CUTOFF)
    subs["spectrum"] = sp

    sp = sub.add_parser("amplitudes", help="atlas of candidate bifurcation amplitudes")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--kmax", type=int, required=True)
    sp.add_argument("--pmax", type=int, required=True)
    sp.add_argument("--cutoff", type=_cutoff, default=lattice.DEFAULT_CUTOFF)
    subs["amplitudes"] = sp

    sp = sub.add_parser("branch", help="continue a standing-wave branch in b")
    _add_site(sp)
    sp.add_argument("--cutoff", type=_cutoff, default=lattice.DEFAULT_CUTOFF)
    _add_b_grid(sp, 0.1)
    defaults = ls.SolverConfig()
    sp.add_argument("--J", type=int, default=defaults.J)
    sp.add_argument("--K", type=int, default=defaults.K)
    sp.add_argument("--s", type=float, default=defaults.s)
    sp.add_argument("--tol", type=float, default=defaults.tol)
    sp.add_argument("--max-iter", type=int, default=defaults.max_iter)
    sp.add_argument("--oversample", type=int, default=defaults.oversample)
    sp.add_argument("--chop-rel", type=float, default=defaults.chop_rel)
    sp.add_argument("--secant-tol", type=float, default=defaults.secant_tol)
    sp.add_argument("--snapshots", type=_bool, default=True, help="write one field snapshot per point")
    subs["branch"] = sp

    sp = sub.add_parser("evolve", help="integrate a snapshot in time and check the return")
    src = sp.add_mutually_exclusive_group(required=True)
    src.add_argument("--snapshot", default=None, help="field, profile or state snapshot")
    src.add_argument("--straight", type=float, default=None, metavar="A",
                     help="straight pair at distance A")
    sp.add_argument("--periods", type=float, default=1.0)
    sp.add_argument("--period", type=float, default=None, help="override the period length")
    sp.add_argument("--steps-per-period", type=int, default=4096)
    sp.add_argument("--scheme", choices=evolution.SCHEMES, default="etdrk4")
    sp.add_argument("--K", type=int, default=None, help="spatial truncation (default: snapshot's)")
    sp.add_argument("--collision-guard", type=float, default=0.1)
    sp.add_argument("--cadence", type=int, default=16)
    sp.add_argument("--reversibility", type=_bool, default=False)
    subs["evolve"] = sp

    sp = sub.add_parser("travel", help="traveling-wave branch from nu0")
    sp.add_argument("--a", type=float, required=True)
    sp.add_argument("--l", type=int, choices=(0, 1), required=True)
    _add_b_grid(sp, 0.1)
    sp.add_argument("--N", type=int, default=traveling.TravelConfig().N)
    sp.add_argument("--tol", type=float, default=traveling.TravelConfig().tol)
    sp.add_argument("--snapshots", type=_bool, default=True)
    subs["travel"] = sp

    for p in subs.values():
        _add_common(p)
    return parser, subs


def parse_args(argv=None) -> argparse.Namespace:
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = formats.read_config(args.config)
        except (OSError, ValueError) as exc:
            parser.error(str(exc))
        sp = subs[args.command]
        known = {a.dest: a for a in sp._actions}
        unknown = sorted(set(values) - set(known) - {"config"})
        if unknown:
            sp.error(f"unknown config keys: {', '.join(unknown)}")
        sp.set_defaults(**{k: v for k, v in values.items() if k != "config"})
        args = parser.parse_args(argv)
    return args


def _b_grid(args) -> list:
    if args.b_grid is not None:
        grid = list(args.b_grid)
    else:
        if args.b_steps < 1 or args.b_max <= 0:
            raise UsageError("need --b-steps >= 1 and --b-max > 0")
        grid = [args.b_max * i / args.b_steps for i in range(args.b_steps + 1)]
    if not grid or grid[0] != 0 or any(b1 <= b0 for b0, b1 in zip(grid, grid[1:])):
        raise UsageError("the b grid must start at 0 and increase strictly")
    return grid


def _site_dict(site: lattice.BifurcationSite) -> dict:
    return {"p": site.p, "q": site.q, "j0": site.j0, "k0": site.k0, "l0": site.l0,
            "a2inv": lattice.format_rational(site.a2inv), "a0": site.a0,
            "nonresonant": site.nonresonant,
            "witness": list(site.witness) if site.witness else None,
            "cutoff": list(site.cutoff)}


def _sorted_sites(sites) -> list:
    return sorted((list(s) for s in sites), key=lambda s: (s[2], s[1], s[0]))


def _config_echo(args) -> dict:
    skip = {"outdir", "config", "verbose", "command"}
    out = {}
    for key, value in sorted(vars(args).items()):
        if key in skip:
            continue
        if isinstance(value, Fraction):
            value = lattice.format_rational(value)
        elif isinstance(value, tuple):
            value = list(value)
        out[key] = value
    return out


def cmd_spectrum(args, manifest, outdir):
    freq = lattice.RationalFrequency(args.p, args.q)
    site = None
    if args.k0 is not None and args.l0 is not None:
        site = lattice.bifurcation_site(freq, args.j0, args.k0, args.l0, args.cutoff)
        if args.a2inv is not None and args.a2inv != site.a2inv:
            raise UsageError(f"--a2inv {args.a2inv} does not match the site value {site.a2inv}")
        a2inv, kernel = site.a2inv, site.kernel
    elif args.a2inv is not None:
        a2inv = args.a2inv
        kernel = lattice.kernel_set(freq, a2inv, args.cutoff)
    else:
        raise UsageError("give either --a2inv or a site (--k0 and --l0)")
    values, denom = lattice.scaled_eigenvalues(freq, a2inv, args.cutoff)
    J, K, _ = values.shape
    rows = ((j, k, l, lattice.format_rational(Fraction(int(values[j, k, l]), denom)))
            for j in range(J) for k in range(K) for l in range(2))
    formats.write_csv(outdir / "eigenvalues.csv", ["j", "k", "l", "lambda"], rows, manifest)
    report = {"p": freq.p, "q": freq.q, "a2inv": lattice.format_rational(Fraction(a2inv)),
              "cutoff": list(args.cutoff), "kernel": _sorted_sites(kernel),
              "scale": denom}
    report["gap_report"] = lattice.gap_report(freq, a2inv, kernel, args.cutoff).as_dict()
    if site is not None:
        report["site"] = _site_dict(site)
        if not site.nonresonant:
            log.warning("site (%d,%d,%d) is resonant; witness %s",
                        site.j0, site.k0, site.l0, tuple(site.witness))
    formats.write_json(outdir / "spectrum.json", report, manifest)
    print(f"kernel: {report['kernel']}")
    print(f"min_abs_lambda: {report['gap_report']['min_abs_lambda']} "
          f"at {tuple(report['gap_report']['argmin_site'])}")
    if site is not None and not site.nonresonant:
        print(f"resonant: witness {tuple(site.witness)}")


def cmd_amplitudes(args, manifest, outdir):
    sites = lattice.enumerate_candidates(args.q, args.kmax, args.pmax, args.cutoff)
    header = ["a2inv", "a0", "p", "q", "j0", "k0", "l0", "nonresonant", "witness",
              "minimal_period"]
    rows = [(lattice.format_rational(s.a2inv), s.a0, s.p, s.q, s.j0, s.k0, s.l0, s.nonresonant,
             "" if s.witness is None else "(%d,%d,%d)" % tuple(s.witness), s.minimal_period)
            for s in sites]
    formats.write_csv(outdir / "amplitudes.csv", header, rows, manifest)
    distinct = sorted({s.a2inv for s in sites if s.nonresonant})
    formats.write_json(outdir / "amplitudes.json", {
        "candidates": len(sites), "nonresonant": sum(s.nonresonant for s in sites),
        "distinct_nonresonant_a2inv": len(distinct)}, manifest)
    print(f"{len(sites)} candidates, {len(distinct)} distinct nonresonant amplitudes")


def _branch_rows(points):
    return [(p.b, p.a, p.range_residual, p.full_residual, p.iterations, p.w_norm) for p in points]


def cmd_branch(args, manifest, outdir):
    freq = lattice.RationalFrequency(args.p, args.q)
    site = lattice.bifurcation_site(freq, args.j0, args.k0, args.l0, args.cutoff)
    cfg = ls.SolverConfig(s=args.s, tol=args.tol, max_iter=args.max_iter,
                          oversample=args.oversample, J=args.J, K=args.K,
                          chop_rel=args.chop_rel, secant_tol=args.secant_tol)
    grid = _b_grid(args)
    truncated = None
    try:
        branch = ls.continue_branch(site, grid, cfg)
    except BranchTruncated as exc:
        branch, truncated = exc.branch, str(exc)
    header = ["b", "a", "range_residual", "full_residual", "iterations", "w_norm"]
    formats.write_csv(outdir / "branch.csv", header, _branch_rows(branch.points), manifest)
    fits = dict(branch.fits)
    fits.update({"site": _site_dict(site), "points": len(branch.points), "truncated": truncated})
    formats.write_json(outdir / "branch_fits.json", fits, manifest)
    if args.snapshots:
        for i, pt in enumerate(branch.points):
            meta = {"p": site.p, "q": site.q, "j0": site.j0, "k0": site.k0, "l0": site.l0,
                    "a2inv": lattice.format_rational(site.a2inv), "a": pt.a, "b": pt.b}
            formats.write_json(outdir / f"point_{i:03d}.json",
                               formats.field_to_dict(pt.u, meta), manifest)
    if truncated:
        log.warning("%s", truncated)
    print(f"{len(branch.points)} branch points; fits {branch.fits}")


def _load_initial(args, manifest):
    """Initial state, its period and an optional exact-translation reference."""
    if args.straight is not None:
        if args.straight <= 0:
            raise UsageError("--straight needs a positive distance")
        K = args.K or 16
        return evolution.straight_state(args.straight, K), args.period or 4 * math.pi, None, {
            "source": "straight", "a": args.straight}
    manifest.add_input(args.snapshot)
    doc = formats.read_json(args.snapshot)
    if doc.get("format") == formats.FIELD_FORMAT_2D:
        u, meta = formats.field_from_dict(doc)
        freq = lattice.RationalFrequency(int(meta["p"]), int(meta["q"]))
        site = lattice.bifurcation_site(freq, int(meta.get("j0", 1)), int(meta["k0"]),
                                        int(meta["l0"]))
        sol = ls.assemble_field(u, float(meta["a"]), site, float(meta.get("b", 0.0)),
                                args.collision_guard)
        state = evolution.init_from_assembled(sol, args.K, args.collision_guard)
        return state, args.period or sol.period, None, {"source": "standing", **meta}
    kind, first, second, meta = formats.one_d_from_dict(doc)
    if kind == "state":
        state = evolution.EvolutionState(first, second, float(meta.get("t", 0.0)))
        if args.K:
            state = state.resized(args.K)
        period = args.period or meta.get("period")
        if period is None:
            raise UsageError("state snapshots need --period")
        return state, float(period), None, {"source": "state", **meta}
    Kp = (len(first) - 1) // 2
    cos_coeffs = np.stack([first[Kp:].real, second[Kp:].real])
    cos_coeffs[:, 1:] *= 2
    profile = traveling.TravelProfile(cos_coeffs, float(meta["nu"]), float(meta["a"]),
                                      float(meta.get("b", 0.0)), int(meta["l"]))
    K = args.K or max(Kp, 32)
    w1, w2, _ = traveling.embed_profile(profile, K)
    return evolution.EvolutionState(w1, w2), args.period or 2 * math.pi / profile.nu, profile, {
        "source": "traveling", **meta}


def cmd_evolve(args, manifest, outdir):
    if args.periods <= 0 or args.steps_per_period < 1:
        raise UsageError("need --periods > 0 and --steps-per-period >= 1")
    state, period, profile, source = _load_initial(args, manifest)
    cfg = evolution.EvolveConfig(dt=period / args.steps_per_period, scheme=args.scheme,
                                 collision_guard=args.collision_guard, cadence=args.cadence)
    T = args.periods * period
    final, diag = evolution.integrate(state, T, cfg)
    d = diag.as_arrays()
    header = ["t", "re_mean_w1", "im_mean_w1", "re_mean_w2", "im_mean_w2", "min_abs_w1",
              "tail_energy", "energy"]
    rows = zip(d["t"], d["mean_w1"].real, d["mean_w1"].imag, d["mean_w2"].real,
               d["mean_w2"].imag, d["min_abs_w1"], d["tail_energy"], d["energy"])
    formats.write_csv(outdir / "diagnostics.csv", header, rows, manifest)
    formats.write_json(outdir / "final_state.json",
                       formats.state_to_dict(final.w1_hat, final.w2_hat, final.t,
                                             {"period": period}), manifest)
    summary = {"source": source, "period": period, "T": T, "steps": math.ceil(T / cfg.dt - 1e-9),
               "scheme": args.scheme,
               "mean_w1_change": float(np.max(np.abs(d["mean_w1"] - d["mean_w1"][0]))),
               "mean_w2_rate": complex((d["mean_w2"][-1] - d["mean_w2"][0]) / T),
               "energy_drift": float(np.ptp(d["energy"])),
               "min_abs_w1": float(np.min(d["min_abs_w1"]))}
    if float(args.periods).is_integer():
        summary["return_error"] = evolution.relative_error(final.w1_hat, state.w1_hat)
    if profile is not None:
        target = traveling.translated_w1(profile, state.K, T)
        summary["translation_error"] = float(np.max(np.abs(final.w1_hat - target)))
    if args.reversibility:
        summary["reversibility_error"] = evolution.reversibility_check(state, T, cfg)
    formats.write_json(outdir / "evolve.json", summary, manifest)
    for key in ("return_error", "translation_error", "reversibility_error"):
        if key in summary:
            print(f"{key}: {summary[key]:.3e}")


def cmd_travel(args, manifest, outdir):
    nu0 = traveling.nu0(args.a, args.l)
    cfg = traveling.TravelConfig(N=args.N, tol=args.tol)
    profiles = traveling.solve_travel_branch(args.a, args.l, _b_grid(args), cfg)
    formats.write_csv(outdir / "travel.csv", ["b", "nu", "residual", "modes", "iterations"],
                      [(p.b, p.nu, p.residual, p.N, p.iterations) for p in profiles], manifest)
    fit = ls.fit_exponent([p.b for p in profiles], [abs(p.nu - nu0) for p in profiles])
    formats.write_json(outdir / "travel.json", {
        "a": args.a, "l": args.l, "nu0": nu0, "active_component": traveling.active_component(args.l),
        "nu_shift_exponent": fit, "max_residual": max(p.residual for p in profiles)}, manifest)
    if args.snapshots:
        for i, p in enumerate(profiles):
            meta = {"a": p.a, "l": p.l, "b": p.b, "nu": p.nu}
            formats.write_json(outdir / f"profile_{i:03d}.json",
                               formats.profile_to_dict(p.coeffs, meta), manifest)
    print(f"nu0 = {nu0!r}; {len(profiles)} profiles; exponent {fit:.4f}")


COMMANDS = {"spectrum": cmd_spectrum, "amplitudes": cmd_amplitudes, "branch": cmd_branch,
            "evolve": cmd_evolve, "travel": cmd_travel}


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    outdir = Path(args.outdir)
    arguments = {k: v for k, v in _config_echo(args).items()}
    manifest = formats.RunManifest(command=args.command, arguments=arguments)
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, manifest, outdir)
    except (UsageError, ValueError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FilamentError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    manifest.write(outdir)
    return 0
