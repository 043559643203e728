"""Command-line experiment runner.

Every subcommand reads an INI config (see :mod:`gsbkit.config`), applies flag
overrides, writes ``<out>/<subcommand>.json`` and ``<out>/<subcommand>.csv``
and exits with status 0 when all of its assertions hold, 1 when one fails and
2 on usage or configuration errors.  JSON payloads contain no timestamp; the
run time is written only to the first (comment) line of the CSV file, so
payloads are byte-identical across runs with the same seed.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import field_model as fm
from .config import ConfigError, ExperimentConfig, load_config, parse_complex
from .convergence_lab import negative_control, run_convergence
from .fock_space import BlockOperator, build_basis, numb_inequality_check, random_vector
from .ladder_ops import (LadderPair, adjoint_pair_check, build_ladder,
                         commutator_check, nelson_bound_check)
from .model_builder import excitation_sector
from .reports import SCHEMA_VERSION, csv_text, dumps
from .resolvent_engine import (RWAParts, SpectralPoint, RequiresRenormalization,
                               bound_state, propagator, relative_bound_check,
                               renormalized_rwa_matrix, rwa_matrix, rwa_resolve,
                               self_energy)

SUBCOMMANDS = ("verify-bounds", "resolvent-check", "self-energy", "bound-state",
               "growth-cert", "converge", "spectrum-scan")


class Context:
    """Objects shared by the subcommands, built once from the config."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.model = cfg.field_model()
        self.f = cfg.form_factor(self.model)
        self.n_max = cfg.get("truncation", "n_max")
        self.lam = cfg.get("model", "lambda")
        self.omega_e = cfg.get("model", "omega_e")
        self.omega_tilde = cfg.get("model", "omega_e_tilde")
        self.seed = cfg.get("experiment", "seed")
        self.tol = cfg.get("experiment", "tolerance")
        self.z_list = cfg.get("experiment", "z")
        self._basis = None

    @property
    def basis(self):
        if self._basis is None:
            self._basis = build_basis(self.model.size, self.n_max)
        return self._basis

    def kinds(self):
        k = self.cfg.get("experiment", "kind")
        if k == "both":
            return ["plain", "renormalized"]
        if k not in ("plain", "renormalized"):
            raise ConfigError(f"[experiment] kind must be plain, renormalized or both, got {k!r}")
        return [k]

    def energy(self, kind):
        return self.omega_e if kind == "plain" else self.omega_tilde


# --------------------------------------------------------------------------- #
#                                 subcommands                                 #
# --------------------------------------------------------------------------- #

def cmd_verify_bounds(ctx: Context):
    f, basis, seed = ctx.f, ctx.basis, ctx.seed
    trials = ctx.cfg.get("experiment", "trials")
    pair = build_ladder(f, basis)
    if ctx.cfg.get("form_factor", "corrupt_adjoint"):
        # deliberately broken pairing, used as a negative control
        bad = pair.create.entries * np.exp(0.1j)
        pair = LadderPair(pair.annihilate, BlockOperator(bad, basis), f)
    checks = [adjoint_pair_check(pair, trials=min(trials, 200), seed=seed)]
    for s in ctx.cfg.get("experiment", "s"):
        if s >= 1:
            checks.append(nelson_bound_check(pair, s, trials=trials, seed=seed))
    rng = np.random.default_rng(seed)
    numb = [numb_inequality_check(random_vector(basis, rng), s, ctx.model)
            for s in ctx.cfg.get("experiment", "s") for _ in range(min(trials, 200))]
    worst = max(numb, key=lambda r: r.max_deviation)
    worst.details["vectors"] = len(numb)
    worst.passed = all(r.passed for r in numb)
    checks.append(worst)
    checks.append(commutator_check(f, f, basis))
    checks.append(commutator_check(f, fm.gaussian(ctx.model, 0.7), basis))
    s_rel = min(2.0, max(1.0, f.declared_s))
    r_rel = ctx.cfg.get("experiment", "r")
    r_rel = 1.0 if math.isnan(r_rel) else r_rel
    if basis.n_max >= 1:
        checks.append(relative_bound_check(f, s_rel, r_rel, basis,
                                           trials=min(trials, 500), seed=seed))
    rows = [[c.name, c.params.get("s", ""), c.max_deviation, c.bound, int(c.passed)]
            for c in checks]
    payload = {"checks": [c.as_dict() for c in checks]}
    return payload, (["check", "s", "max_deviation", "bound", "pass"], rows), \
        all(c.passed for c in checks)


def cmd_resolvent_check(ctx: Context):
    f, basis, lam = ctx.f, ctx.basis, ctx.lam
    rng = np.random.default_rng(ctx.seed)
    d = basis.dim
    inputs = rng.standard_normal((2 * d, 3)) + 1j * rng.standard_normal((2 * d, 3))
    vac = np.zeros((2 * d, 2), dtype=complex)
    vac[0, 0] = vac[d, 1] = 1.0
    inputs = np.hstack([inputs, vac])
    rows, results, ok = [], [], True
    for kind in ctx.kinds():
        energy = ctx.energy(kind)
        H = (rwa_matrix(f, energy, lam, basis) if kind == "plain"
             else renormalized_rwa_matrix(f, energy, lam, basis)).toarray()
        parts = RWAParts(f, energy, lam, basis, kind)
        for z in ctx.z_list:
            entry = {"kind": kind, "z": z, "energy": energy}
            try:
                top, bottom = rwa_resolve(parts, z, inputs[:d], inputs[d:])
                out = np.vstack([top, bottom])
                ref = np.linalg.solve(H - z * np.eye(2 * d), inputs)
                err = float(np.max(np.linalg.norm(out - ref, axis=0)
                                   / np.linalg.norm(ref, axis=0)))
                resid = float(np.max(np.linalg.norm((H - z * np.eye(2 * d)) @ out - inputs,
                                                    axis=0) / np.linalg.norm(inputs, axis=0)))
                entry.update(relative_error=err, residual=resid, pass_=err <= ctx.tol)
            except (SpectralPoint, np.linalg.LinAlgError) as exc:
                err, resid = math.inf, math.inf
                entry.update(relative_error=err, residual=resid, pass_=False,
                             error=str(exc))
            entry["pass"] = entry.pop("pass_")
            ok &= entry["pass"]
            results.append(entry)
            rows.append([kind, z.real, z.imag, err, resid, int(entry["pass"])])
    payload = {"lambda": lam, "tolerance": ctx.tol, "composite_dimension": 2 * d,
               "results": results,
               "max_relative_error": max(r["relative_error"] for r in results)}
    return payload, (["kind", "re_z", "im_z", "relative_error", "residual", "pass"], rows), ok


def cmd_self_energy(ctx: Context):
    f = ctx.f
    rows, results, ok = [], [], True
    for z in ctx.z_list:
        entry = {"z": z}
        for kind in ("plain", "renormalized"):
            try:
                val = self_energy(f, z, kind).value
            except RequiresRenormalization:
                val = complex(math.inf, 0.0)
            entry[kind] = val
            if math.isfinite(val.real) and z.imag != 0 and val.imag * z.imag < 0:
                ok = False
                entry.setdefault("herglotz_violation", []).append(kind)
        entry["plain_grid"] = self_energy(f, z, "plain", include_tail=False).value
        results.append(entry)
        rows.append([z.real, z.imag, entry["plain"].real, entry["plain"].imag,
                     entry["renormalized"].real, entry["renormalized"].imag])
    norms = {}
    for s in sorted(set(ctx.cfg.get("experiment", "s")) | {0.0, 1.0, 2.0}):
        norms[f"{s:g}"] = fm.weighted_norm(f, s)
    payload = {"form_factor": f.label, "results": results, "weighted_norms": norms}
    expect = ctx.cfg.get("experiment", "expect_norm")
    if not math.isnan(expect):
        s = ctx.cfg.get("experiment", "expect_norm_s")
        val = fm.weighted_norm(f, s)
        dev = abs(val - expect)
        passed = dev <= ctx.cfg.get("experiment", "expect_tol")
        payload["expected_norm"] = {"s": s, "expected": expect, "value": val,
                                    "deviation": dev, "pass": passed}
        ok &= passed
    header = ["re_z", "im_z", "re_sigma", "im_sigma", "re_sigma_ren", "im_sigma_ren"]
    return payload, (header, rows), ok


def _sector_ground(f, omega_e, lam):
    basis = build_basis(f.model.size, 1)
    H = rwa_matrix(f, omega_e, lam, basis)
    return float(np.linalg.eigvalsh(excitation_sector(H, 1).matrix)[0])


def cmd_bound_state(ctx: Context):
    f = ctx.f
    fine = f.on(ctx.model.refined(2))
    rows, results, ok = [], [], True
    for omega_e, lam in ctx.cfg.get("experiment", "settings"):
        entry = {"omega_e": omega_e, "lambda": lam, "grids": []}
        for g in (f, fine):
            bs = bound_state(g, omega_e, lam)
            eig = _sector_ground(g, omega_e, lam)
            diff = abs(bs.energy - eig)
            passed = diff <= ctx.tol
            ok &= passed
            entry["grids"].append({"modes": g.model.size, "root": bs.as_dict(),
                                   "sector_eigenvalue": eig, "difference": diff,
                                   "pass": passed})
            rows.append([omega_e, lam, g.model.size, bs.energy, eig, diff, int(passed)])
        try:
            entry["continuum"] = bound_state(f, omega_e, lam, include_tail=True).as_dict()
        except RequiresRenormalization:
            entry["continuum"] = bound_state(f, omega_e, lam, kind="renormalized",
                                             include_tail=True).as_dict()
            entry["continuum"]["note"] = "plain self-energy diverges; omega_e read as renormalized"
        results.append(entry)
    payload = {"form_factor": f.label, "tolerance": ctx.tol, "results": results}
    header = ["omega_e", "lambda", "modes", "root", "sector_eigenvalue", "difference", "pass"]
    return payload, (header, rows), ok


def cmd_growth_cert(ctx: Context):
    f = ctx.f
    s_vals = [s for s in ctx.cfg.get("experiment", "s") if 1 <= s <= 2]
    s = s_vals[-1] if s_vals else 2.0
    cert = fm.growth_certificate(f, s, ctx.cfg.get("experiment", "n_growth"))
    rows = []
    for n, I in zip(cert.n, cert.integrals):
        bound = cert.C_f * float(n) ** (cert.r - s) if cert.feasible else math.nan
        rows.append([int(n), I, bound, bound - I if cert.feasible else math.nan])
    payload = {"form_factor": f.label, "certificate": cert.as_dict()}
    return payload, (["n", "I_n", "bound", "margin"], rows), bool(cert.feasible)


def cmd_converge(ctx: Context):
    f, lam = ctx.f, ctx.lam
    kind = ctx.cfg.get("model", "kind")
    model_kind = {"plain": "rwa-plain", "renormalized": "rwa-renormalized",
                  "gsb": "gsb"}.get(kind)
    if model_kind is None:
        raise ConfigError(f"[model] kind must be plain, renormalized or gsb, got {kind!r}")
    seq = fm.make_cutoff_sequence(f, ctx.cfg.get("experiment", "cutoffs"))
    z = ctx.z_list[0]
    target = ctx.cfg.get("experiment", "target")
    schedule = None
    energy = ctx.omega_e
    if model_kind == "rwa-renormalized":
        energy = ctx.omega_tilde
        schedule = fm.renormalization_schedule(seq, energy, lam)
    rep = run_convergence(seq, model_kind, z, lam, energy, ctx.basis, schedule=schedule,
                          target=target, seed=ctx.seed)
    payload = {"report": rep.as_dict()}
    ok = rep.passed
    if ctx.cfg.get("experiment", "negative_control"):
        nc = negative_control(seq, z, lam, energy, ctx.basis,
                              growth=ctx.cfg.get("experiment", "growth"), seed=ctx.seed,
                              target=target)
        payload["negative_control"] = nc.as_dict()
        ok &= nc.passed
    return payload, rep.csv_rows(), ok


def cmd_spectrum_scan(ctx: Context):
    f, basis, lam = ctx.f, ctx.basis, ctx.lam
    e = ctx.cfg.get
    re_vals = np.linspace(e("experiment", "re_min"), e("experiment", "re_max"),
                          e("experiment", "re_count"))
    rows, worst, ok = [], 0.0, True
    for kind in ctx.kinds():
        energy = ctx.energy(kind)
        for im in e("experiment", "im"):
            for re in re_vals:
                z = complex(float(re), float(im))
                sig = self_energy(f, z, kind, include_tail=False).value
                G = propagator(f, z, energy, lam, kind, basis)
                scaled = G.inverse_norm(seed=ctx.seed) * abs(z.imag)
                passed = scaled <= 1.0 + 1e-8
                ok &= passed
                worst = max(worst, scaled)
                rows.append([kind, z.real, z.imag, sig.real, sig.imag, scaled, int(passed)])
    payload = {"lambda": lam, "points": len(rows), "max_scaled_inverse_norm": worst,
               "bound": 1.0 + 1e-8}
    header = ["kind", "re_z", "im_z", "re_sigma", "im_sigma", "inv_norm_times_im_z", "pass"]
    return payload, (header, rows), ok


HANDLERS = {
    "verify-bounds": cmd_verify_bounds,
    "resolvent-check": cmd_resolvent_check,
    "self-energy": cmd_self_energy,
    "bound-state": cmd_bound_state,
    "growth-cert": cmd_growth_cert,
    "converge": cmd_converge,
    "spectrum-scan": cmd_spectrum_scan,
}


# --------------------------------------------------------------------------- #
#                                   driver                                    #
# --------------------------------------------------------------------------- #

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gsbkit",
                                description="Spin-boson resolvent experiments.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        sp_ = sub.add_parser(name, help=HANDLERS[name].__doc__)
        sp_.add_argument("--config", metavar="PATH")
        sp_.add_argument("--seed", type=int)
        sp_.add_argument("--out", metavar="DIR", default="out")
        sp_.add_argument("--grid", type=int, metavar="G", help="number of field modes")
        sp_.add_argument("--nmax", type=int, metavar="N")
        sp_.add_argument("--lambda", dest="lam", type=float, metavar="X")
        sp_.add_argument("--z", action="append", metavar="a+bi")
        sp_.add_argument("--tolerance", type=float, metavar="X")
    return p


def apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    if args.seed is not None:
        cfg.set("experiment", "seed", args.seed)
    if args.grid is not None:
        cfg.set("field", "count", args.grid)
    if args.nmax is not None:
        cfg.set("truncation", "n_max", args.nmax)
    if args.lam is not None:
        cfg.set("model", "lambda", args.lam)
    if args.z:
        cfg.set("experiment", "z", [parse_complex(t) for t in args.z])
    if args.tolerance is not None:
        cfg.set("experiment", "tolerance", args.tolerance)
    return cfg


def run(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = apply_overrides(load_config(args.config), args)
        ctx = Context(cfg)
        payload, (header, rows), ok = HANDLERS[args.command](ctx)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"gsbkit {args.command}: configuration error: {exc}", file=sys.stderr)
        return 2
    except (fm.MisdeclaredFormFactor, fm.InconclusiveConvergence) as exc:
        print(f"gsbkit {args.command}: {exc}", file=sys.stderr)
        return 2
    body = {"command": args.command, "config": cfg.as_dict(), "pass": bool(ok),
            "schema_version": SCHEMA_VERSION, **payload}
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = args.command
    (out / f"{stem}.json").write_text(dumps(body))
    stamp = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    (out / f"{stem}.csv").write_text(f"# generated {stamp}\n" + csv_text(header, rows))
    print(f"{'PASS' if ok else 'FAIL'} {stem}: wrote {out / stem}.json and .csv",
          file=stdout)
    return 0 if ok else 1


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
