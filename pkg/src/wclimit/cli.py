"""Command-line experiment runner.

    wclimit run CONFIG [--t T] [--dt DT] [--lambda L ...] [--n-max N] [--out DIR]
    wclimit {moments,dyson-sweep,bounds,coefficients,simulate,ito-audit} [CONFIG] [flags]
    wclimit selftest [--only K ...] [--fault-ito-constant C]

Exit codes: 0 all checks passed, 1 a consistency check failed, 2 invalid
configuration, 3 divergent series (K ||E_11|| >= 1), 4 capacity exceeded,
5 other numerical failure.  Errors are reported on stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import combinatorics as cb
from . import dyson as dy
from . import limit_qsde as lq
from . import moments as mo
from . import pule_bounds as pb
from . import simulator as sim
from .config import (EXPERIMENTS, ExperimentConfig, apply_overrides, build_config, encode_complex,
                     encode_matrix, load_config, parse_matrix)
from .errors import CapacityError, DivergenceError, ModelError, ValidationError, WclimitError

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_DIVERGENCE, EXIT_CAPACITY, EXIT_NUMERIC = 0, 1, 2, 3, 4, 5


# ----------------------------------------------------------------------------
# serialization

def fmt_float(x: float) -> str:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x + 0.0, ".17g")  # + 0.0 folds -0.0 into 0.0


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return encode_complex(complex(obj))
    if isinstance(obj, Path):
        return str(obj)
    return obj


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits; non-finite floats become strings."""
    obj = _plain(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return fmt_float(obj) if math.isfinite(obj) else json.dumps(fmt_float(obj))
    return json.dumps(obj)


def csv_text(rows: list[dict], columns: list[str] | None, provenance: str) -> str:
    columns = columns or (list(rows[0]) if rows else [])
    buf = io.StringIO()
    buf.write(f"# {provenance}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_float(float(r[c])) if isinstance(r[c], (float, np.floating)) else r[c] for c in columns])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# experiment results

class Outcome:
    def __init__(self):
        self.rows: list[dict] = []
        self.columns: list[str] | None = None
        self.summary: dict = {}
        self.checks: list[dict] = []

    def check(self, name: str, value, tolerance, passed: bool) -> None:
        self.checks.append({"name": name, "value": value, "tolerance": tolerance, "passed": bool(passed)})

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)


def exp_moments(cfg: ExperimentConfig) -> Outcome:
    o = Outcome()
    n_max = cfg.int_param("n_max", 6, low=1)
    seeds = cfg.int_param("seeds", 5, low=1)
    per = cfg.int_param("words_per_seed", 10, low=1)
    tol_f = cfg.float_param("tol_fock", 1e-10)
    tol_p = cfg.float_param("tol_pule", 1e-12)
    worst_f = worst_p = 0.0
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        for i in range(per):
            n = 1 + (seed + i) % n_max
            w = mo.random_word(rng, n, structured=bool(i % 3))
            part = mo.vacuum_moment_partition(w)
            df = abs(part - mo.vacuum_moment_fock(w))
            dp = abs(part - mo.vacuum_moment_pule(w))
            worst_f, worst_p = max(worst_f, df), max(worst_p, dp)
            o.rows.append({"seed": seed, "word": i, "n": n, "diagrams": len(mo.admissible_partitions(w)),
                           "re": part.real, "im": part.imag, "abs_vs_fock": df, "abs_vs_pule": dp})
    intensity = cfg.float_param("poisson_intensity", 1.5)
    poisson = []
    for k in range(n_max + 1):
        lhs, rhs = mo.poisson_moment_check(intensity, k)
        poisson.append({"order": k, "stirling_sum": lhs, "characteristic": rhs, "rel_err": abs(lhs - rhs) / lhs})
    o.summary = {"words": len(o.rows), "max_abs_vs_fock": worst_f, "max_abs_vs_pule": worst_p, "poisson": poisson}
    o.check("partition_vs_fock", worst_f, tol_f, worst_f < tol_f)
    o.check("partition_vs_pule", worst_p, tol_p, worst_p < tol_p)
    pw = max(p["rel_err"] for p in poisson)
    o.check("poisson_moments", pw, 1e-10, pw < 1e-10)
    return o


def _levels(cfg: ExperimentConfig) -> list[int]:
    if "levels" in cfg.params:
        lv = cfg.params["levels"]
        if not isinstance(lv, list) or not all(isinstance(n, int) and 1 <= n <= dy.MAX_SIMPLEX_N for n in lv):
            raise ValidationError("experiment.levels", f"expected integers in 1..{dy.MAX_SIMPLEX_N}")
        return lv
    return list(range(2, cfg.int_param("n_max", 3, low=1) + 1))


def exp_dyson_sweep(cfg: ExperimentConfig) -> Outcome:
    o = Outcome()
    model = cfg.correlation
    t = cfg.float_param("t", 1.0)
    lams = dy.validate_lambdas(cfg.param("lambdas", [1.0, 0.5, 0.25, 0.125]))
    kind = cfg.param("kind", "all")
    if kind not in ("all", "I", "II"):
        raise ValidationError("experiment.kind", "expected one of all, I, II")
    levels = _levels(cfg)
    o.columns = ["n", "diagram_id", "type", "lambda", "re", "im", "abs_err_vs_limit", "bound", "bound_margin"]
    for n in levels:
        o.rows += dy.lambda_sweep(n, t, lams, model, kind)
    diagrams = {}
    for r in o.rows:
        diagrams.setdefault((r["n"], r["diagram_id"]), []).append(r)
    extrap = []
    for (n, did), rs in diagrams.items():
        cs = dy.ContractionSet.from_partition(cb.SetPartition.from_blocks(
            [[int(c) for c in b] for b in did.split("|")]))
        lim = dy.contraction_limit(cs, t, model)
        ex = dy.richardson([r["lambda"] for r in rs], [complex(r["re"], r["im"]) for r in rs])
        extrap.append({"n": n, "diagram_id": did, "limit": lim, "richardson": ex, "abs_err": abs(ex - lim)})
    o.summary = {"t": t, "lambdas": lams, "kind": kind, "levels": levels, "diagrams": len(diagrams),
                 "constants": _constants(model), "extrapolation": extrap}
    if not o.rows:
        o.summary["note"] = "no contracted diagrams of the requested type at these levels"
    margin = min((r["bound_margin"] for r in o.rows), default=0.0)
    o.check("bound_margin_nonnegative", margin, 0.0, margin >= 0)
    if cfg.system is not None and len(lams) >= 3:
        lim = lq.dyson_limit_levels(cfg.system, model, cfg.amplitudes, cfg.phi1, cfg.phi2, t, max(levels))
        rel = []
        for n in levels:
            vals = [dy.dyson_term_matrix_element(cfg.system, cfg.amplitudes, model, n, t, lam, cfg.phi1, cfg.phi2,
                                                 kind="I") for lam in lams]
            ex = dy.richardson(lams, vals)
            rel.append({"n": n, "values": vals, "richardson": ex, "limit": lim[n],
                        "rel_err": abs(ex - lim[n]) / abs(lim[n]) if lim[n] else abs(ex)})
        o.summary["matrix_elements"] = rel
        tol = cfg.float_param("tol_matrix_elements", 0.1)
        worst = max(r["rel_err"] for r in rel)
        o.check("typeI_terms_vs_limit", worst, tol, worst < tol)
    return o


def _constants(model) -> dict:
    c = model.constants
    return {"family": type(model).__name__, "params": model.params(), "gamma": c.gamma,
            "kappa_plus": c.kappa_plus, "kappa_minus": c.kappa_minus, "sigma": c.sigma, "K": c.K}


def exp_bounds(cfg: ExperimentConfig) -> Outcome:
    o = Outcome()
    t = cfg.float_param("t", 1.0)
    n_max = cfg.int_param("n_max", 20, low=1)
    if all(k in cfg.params for k in ("A", "B")):
        A = cfg.float_param("A", positive=False)
        B = cfg.float_param("B", positive=False)
        Bp = cfg.float_param("B_prime", B, positive=False)
        params = pb.BoundParameters(A, B, Bp, {"source": "explicit"})
    elif cfg.system is not None and cfg.correlation is not None:
        params = pb.params_from_system(cfg.system, cfg.amplitudes, cfg.correlation, t)
    else:
        raise ValidationError("experiment", "give A and B, or a system with a correlation model")
    o.rows = pb.bound_table(params, n_max)
    total = pb.series_total(params)
    o.summary = {"A": params.A, "B": params.B, "B_prime": params.B_prime, "provenance": params.provenance,
                 "series_total": total, "scattering_free": params.scattering_free}
    if not params.scattering_free:
        o.summary["omega"] = pb.omega(params.A, params.B)
        o.summary["heisenberg_majorant"] = pb.heisenberg_majorant(params.A, params.B, params.B_prime)
    cum = o.rows[-1]["cumulative"]
    o.check("partial_sum_below_total", cum / total, 1.0, cum <= total * (1 + 1e-12))
    m = min(n_max, 20)
    rec = pb.level_bounds(m, params)
    enum_err = max(abs(pb.level_bound_enumeration(n, params) - rec[n]) / max(rec[n], 1e-300) for n in range(1, m + 1))
    o.check("recurrence_vs_enumeration", enum_err, 1e-10, enum_err < 1e-10)
    tail_ok = all(total - r["cumulative"] <= r["tail"] * (1 + 1e-9) + 1e-12 * total for r in o.rows)
    o.check("tail_bound_valid", tail_ok, True, tail_ok)
    return o


def exp_coefficients(cfg: ExperimentConfig) -> Outcome:
    o = Outcome()
    tol = cfg.float_param("tolerance", 1e-12)
    c = lq.limit_coefficients(cfg.system, cfg.correlation)
    res = c.residuals()
    eh = lq.evans_hudson_report(c)
    no = lq.normal_order_identity_check(c, cfg.system, c.kappa_plus)
    o.rows = [{"group": "structure", "name": k, "value": v} for k, v in res.items()]
    o.rows += [{"group": "evans_hudson", "name": k, "value": v} for k, v in eh.items()]
    o.rows += [{"group": "normal_order", "name": k, "value": v} for k, v in no.items()]
    o.summary = {"constants": _constants(cfg.correlation), "dim": c.dim,
                 "series_ratio": abs(c.kappa_plus) * float(np.linalg.norm(cfg.system.E11, 2)),
                 "L_00": encode_matrix(c.L00), "L_01": encode_matrix(c.L01), "L_10": encode_matrix(c.L10),
                 "L_11": encode_matrix(c.L11), "W": encode_matrix(c.W), "L": encode_matrix(c.L),
                 "H": encode_matrix(c.H), "residuals": res, "evans_hudson": eh, "normal_order": no}
    worst = max(res.values())
    o.check("structure_residuals", worst, tol, worst < tol)
    w_eh = max(eh["identity"], eh["adjoint"], eh["structural"])
    o.check("evans_hudson_residuals", w_eh, tol, w_eh < tol)
    o.check("lindblad_form", eh["lindblad_margin"], -1e-10, eh["lindblad_margin"] >= -1e-10)
    w_no = max(no.values())
    o.check("normal_order_residuals", w_no, tol, w_no < tol)
    return o


def _observable(cfg: ExperimentConfig) -> np.ndarray:
    d = cfg.system.dim
    if "observable" in cfg.params:
        X = parse_matrix(cfg.params["observable"], "experiment.observable", d)
    else:
        X = np.diag(np.arange(d, dtype=float)).astype(complex)
    return X


def exp_simulate(cfg: ExperimentConfig) -> Outcome:
    o = Outcome()
    dt = cfg.float_param("dt", 0.01)
    t = cfg.float_param("t", 1.0)
    noise_kind = cfg.param("noise", "vacuum")
    if noise_kind not in ("vacuum", "coherent"):
        raise ValidationError("experiment.noise", "expected vacuum or coherent")
    scheme = cfg.param("scheme", "euler")
    if scheme not in ("euler", "discrete"):
        raise ValidationError("experiment.scheme", "expected euler or discrete")
    repair = bool(cfg.param("polar_repair", False))
    steps = round(t / dt)
    if steps < 1 or abs(steps * dt - t) > 1e-9 * t:
        raise ValidationError("experiment.dt", f"t = {t} must be a positive multiple of dt = {dt}")
    amps = cfg.amplitudes if noise_kind == "coherent" else (dy.VACUUM, dy.VACUUM)
    noise = sim.NoiseState(tuple(amps))
    c = lq.limit_coefficients(cfg.system, cfg.correlation)
    X = _observable(cfg)
    p1, p2 = cfg.phi1, cfg.phi2
    slices = sim.build_slices(c.gamma, dt)
    tr = sim.evolve_unitary(c, slices, steps, p1, p2, noise, repair)
    obs = sim.schrodinger_matrix_elements(c, slices, X, p1, p2, steps, noise, repair)
    o.columns = ["step", "time", "re", "im", "obs_re", "obs_im", "defect"]
    for r, v in zip(tr.records, obs):
        o.rows.append({**r, "obs_re": v.real, "obs_im": v.imag})
    final = complex(tr.records[-1]["re"], tr.records[-1]["im"])
    ode = lq.matrix_element_ode(c, p1, p2, amps, t)
    J = sim.evolve_heisenberg(c, slices, X, steps, noise, scheme, repair).operator
    J_disc = sim.evolve_heisenberg(c, slices, X, steps, noise, "discrete", repair).operator
    hs = abs(np.vdot(p1, J_disc @ p2) - obs[-1])
    dts = [dt, dt / 2, dt / 4]
    err_u = sim.coherent_errors(c, amps, p1, p2, dts, t, ode)
    o.summary = {"dt": dt, "t": t, "steps": steps, "noise": noise_kind, "scheme": scheme, "polar_repair": repair,
                 "gamma": c.gamma, "final_matrix_element": final, "ode_matrix_element": ode,
                 "error_vs_ode": abs(final - ode), "heisenberg_matrix_element": complex(np.vdot(p1, J @ p2)),
                 "heisenberg_vs_schrodinger": hs, "max_defect": float(tr.defects.max()),
                 "defect_constant_estimate": tr.c_estimate, "convergence_dts": dts,
                 "unitary_errors": err_u, "unitary_ratios": sim.convergence_ratios(err_u)}
    if noise.is_vacuum:
        sg = complex(np.vdot(p1, lq.lindblad_semigroup(c, X, t) @ p2))
        errs = []
        for h in dts:
            Jh = sim.evolve_heisenberg(c, sim.build_slices(c.gamma, h), X, t=t, scheme=scheme).operator
            errs.append(abs(np.vdot(p1, Jh @ p2) - sg))
        o.summary.update({"semigroup_matrix_element": sg, "observable_errors": errs,
                          "observable_ratios": sim.convergence_ratios(errs)})
        Ji = sim.evolve_heisenberg(c, slices, np.eye(c.dim), steps, noise, "euler").operator
        ident = float(np.abs(Ji - np.eye(c.dim)).max())
        o.summary["J(I)-I"] = ident
        o.check("identity_preserved", ident, 0.0, ident == 0.0)
    o.check("heisenberg_vs_schrodinger", hs, 1e-8, hs < 1e-8)
    return o


def exp_ito_audit(cfg: ExperimentConfig) -> Outcome:
    o = Outcome()
    gamma = cfg.float_param("gamma", cfg.correlation.constants.gamma if cfg.correlation else 1.0)
    dt = cfg.float_param("dt", 0.01)
    const = cfg.param("ito_constant")
    rep = sim.ito_table_audit(sim.build_slices(gamma, dt, ito_constant=const))
    o.columns = ["left", "right", "class", "residual", "order"]
    for r in rep["pairs"]:
        o.rows.append({"left": "dA%d%d" % r["left"], "right": "dA%d%d" % r["right"], "class": r["class"],
                       "residual": r["residual"], "order": r["order"]})
    o.summary = {"gamma": gamma, "dt": dt, "table_pairs": rep["table_pairs"],
                 "vanishing_pairs": rep["vanishing_pairs"], "max_residual": rep["max_residual"]}
    o.check("ito_table", rep["max_residual"], 1e-14 * max(1.0, gamma), rep["passed"])
    return o


RUNNERS = {"moments": exp_moments, "dyson-sweep": exp_dyson_sweep, "bounds": exp_bounds,
           "coefficients": exp_coefficients, "simulate": exp_simulate, "ito-audit": exp_ito_audit}


# ----------------------------------------------------------------------------
# built-in configurations for the named subcommands

def _qubit_system() -> dict:
    s = lq.qubit_damping()
    return {"dim": 2, "E_00": encode_matrix(s.E00), "E_01": encode_matrix(s.E01),
            "E_10": encode_matrix(s.E10), "E_11": encode_matrix(s.E11)}


DEFAULTS = {
    "moments": {"experiment": {"name": "moments", "n_max": 6, "seeds": 5, "words_per_seed": 10}},
    "dyson-sweep": {"correlation": {"family": "exponential", "params": {"tau": 1.0, "sigma0": 0.0}},
                    "experiment": {"name": "dyson-sweep", "n_max": 2, "kind": "I", "t": 1.0,
                                   "lambdas": [1.0, 0.5, 0.25, 0.125]}},
    "bounds": {"experiment": {"name": "bounds", "A": -0.7, "B": 0.5, "t": 1.0, "n_max": 20}},
    "coefficients": {"system": _qubit_system(),
                     "correlation": {"family": "exponential", "params": {"tau": 1.0, "sigma0": 0.0}},
                     "experiment": {"name": "coefficients"}},
    "simulate": {"system": _qubit_system(),
                 "correlation": {"family": "exponential", "params": {"tau": 0.5, "sigma0": 0.0}},
                 "states": {"phi1": [0, 1], "phi2": [0, 1]},
                 "experiment": {"name": "simulate", "t": 1.0, "dt": 0.01, "noise": "vacuum",
                                "observable": [[-1, 0], [0, 1]]}},
    "ito-audit": {"experiment": {"name": "ito-audit", "gamma": 1.0, "dt": 0.01}},
}


# ----------------------------------------------------------------------------
# running and writing

def execute(cfg: ExperimentConfig) -> tuple[Outcome, dict]:
    outcome = RUNNERS[cfg.experiment](cfg)
    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    prov = {"config_sha256": cfg.sha256, "version": __version__, "experiment": cfg.experiment}
    artifacts = {}
    stem = cfg.experiment.replace("-", "_")
    if "csv" in cfg.formats:
        text = csv_text(outcome.rows, outcome.columns,
                        f"config_sha256={prov['config_sha256']} version={__version__}")
        artifacts[f"{stem}.csv"] = text
    if "json" in cfg.formats:
        doc = {"provenance": prov, "summary": outcome.summary, "checks": outcome.checks,
               "passed": outcome.passed}
        artifacts[f"{stem}.json"] = dumps(doc) + "\n"
    for name, text in artifacts.items():
        (out / name).write_text(text)
    manifest = {**prov, "config": cfg.raw, "passed": outcome.passed, "checks": outcome.checks,
                "artifacts": {n: hashlib.sha256(t.encode()).hexdigest() for n, t in artifacts.items()}}
    (out / "manifest.json").write_text(dumps(manifest) + "\n")
    return outcome, manifest


def _diagnostic(exc: Exception) -> dict:
    d = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ValidationError):
        d["field"] = exc.field
    return d


def _exit_code(exc: Exception) -> int:
    if isinstance(exc, ModelError):
        return EXIT_CONFIG
    if isinstance(exc, DivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(exc, CapacityError):
        return EXIT_CAPACITY
    return EXIT_NUMERIC


def _overrides(args) -> dict:
    return {"experiment.t": args.t, "experiment.dt": args.dt, "experiment.lambdas": args.lam,
            "experiment.n_max": args.n_max, "output.directory": args.out}


def _add_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--t", type=float, help="final time")
    p.add_argument("--dt", type=float, help="time step of the simulator or slice width")
    p.add_argument("--lambda", dest="lam", type=float, nargs="+", help="coupling values, strictly decreasing")
    p.add_argument("--n-max", dest="n_max", type=int, help="highest level")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wclimit", description="Weak-coupling limit experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("run", help="run the experiment named in a config file")
    p.add_argument("config")
    _add_flags(p)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment (built-in config unless one is given)")
        p.add_argument("config", nargs="?")
        _add_flags(p)
    p = sub.add_parser("selftest", help="run the acceptance suite")
    p.add_argument("--only", type=int, nargs="+", help="criterion numbers")
    p.add_argument("--fault-ito-constant", type=float, help="inject a wrong Ito constant")
    p.add_argument("--no-times", action="store_true", help="omit timings for diffable output")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        from .selftest import format_report, run_selftest
        faults = {"ito_constant": args.fault_ito_constant} if args.fault_ito_constant is not None else None
        results = run_selftest(args.only, faults)
        print(format_report(results, with_time=not args.no_times))
        return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK
    try:
        overrides = _overrides(args)
        if args.config is not None:
            cfg = load_config(args.config, overrides)
            if args.command != "run" and cfg.experiment != args.command:
                raise ValidationError("experiment.name", f"config runs '{cfg.experiment}', not '{args.command}'")
        else:
            cfg = build_config(apply_overrides(DEFAULTS[args.command], overrides))
        outcome, manifest = execute(cfg)
    except WclimitError as exc:
        print(json.dumps(_diagnostic(exc)), file=sys.stderr)
        return _exit_code(exc)
    for c in outcome.checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {c['name']}: {c['value']} (tolerance {c['tolerance']})")
    print(f"artifacts written to {cfg.out_dir} (config sha256 {manifest['config_sha256'][:12]})")
    return EXIT_OK if outcome.passed else EXIT_CHECK


if __name__ == "__main__":
    sys.exit(main())
