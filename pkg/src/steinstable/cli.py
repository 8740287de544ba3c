"""Command-line front end for experiments.

Subcommands (each takes --config PATH, --seed INT, --out DIR,
--workers INT):

  cf           tabulate both characteristic-function forms and their gap
  density      tabulate the density by Fourier inversion
  sample       draw exact samples and render them against the density
  stein-check  Monte Carlo Stein-identity runs, one row per test function
  solve        solve the Stein equation; solution table plus summary
  bound-sweep  approximation-bound terms and empirical distances over n
  sd-check     self-decomposability: invert the cf ratio, test it is a law

Every command reads a plain-text ``[section]``/``key = value`` config,
validates it strictly (unknown keys rejected, every range checked) before
any computation, and writes CSV files with a ``#`` provenance header plus
a PNG figure into --out.  Output bytes are a pure function of
(config, seed, workers): rerunning a command reproduces its CSVs exactly.

Exit codes: 0 success; 2 config error; 3 numeric failure; 4 request
outside the implemented scope (the alpha = 1 semigroup).
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .bounds import (
    BoundReport,
    ConstantsPolicy,
    DNASpec,
    bound_w2,
    bound_wdelta,
    dna_stable_params,
    empirical_w2h,
    empirical_wdelta,
    sum_samples,
    truncated_second_moment,
    two_point_sampler,
)
from .numerics import (
    AliasWarning,
    GridSpec,
    NonConvergence,
    NonIntegrable,
    RngStream,
)
from .operators import (
    compound_poisson_uniform_sampler,
    stein_identity_mc,
)
from . import plots
from .reportio import (
    ConfigError,
    Section,
    config_comment_lines,
    f_float,
    f_floats,
    f_int,
    f_ints,
    f_str,
    load_config,
    resolve_config,
    write_csv,
)
from .semigroup import (
    AlphaOneError,
    const_one,
    derivative_bound_report,
    make_context,
    remainder_density,
    solve_stein,
)
from .stable import (
    StableParams,
    cf_stable,
    cf_stable_closed,
    density,
    derive_params,
    sample,
    uniform_jump_levy,
)
from .testfunctions import operator_dictionary, solver_h2_dictionary, w2h_dictionary

__all__ = ["main"]

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_SCOPE = 4


def _stable_section(required: bool = True) -> Section:
    return Section({
        "alpha": f_float(0.0, 2.0, lo_open=True, hi_open=True),
        "beta": f_float(default=0.0),
        "m1": f_float(0.0),
        "m2": f_float(0.0),
    }, required=required)


def _stable_params(cfg: dict) -> StableParams:
    sec = cfg["stable"]
    try:
        return StableParams(alpha=sec["alpha"], beta=sec["beta"],
                            m1=sec["m1"], m2=sec["m2"])
    except ValueError as exc:
        raise ConfigError(f"[stable]: {exc}")


def _log(cmd: str, msg: str) -> None:
    print(f"[{cmd}] {msg}")


# ---------------------------------------------------------------------------
# cf
# ---------------------------------------------------------------------------

CF_SCHEMA = {
    "stable": _stable_section(),
    "grid": Section({
        "t_min": f_float(default=-10.0),
        "t_max": f_float(default=10.0),
        "n": f_int(2, 200001, default=201),
    }),
}


def cmd_cf(cfg, args, out: Path, header) -> None:
    params = _stable_params(cfg)
    g = cfg["grid"]
    if not g["t_max"] > g["t_min"]:
        raise ConfigError("[grid]: t_max must exceed t_min")
    t = np.linspace(g["t_min"], g["t_max"], g["n"])
    _log("cf", f"evaluating both cf forms on {len(t)} points")
    dp = derive_params(params)
    levy = np.asarray(cf_stable(params, t))
    closed = np.asarray(cf_stable_closed(params, t, dp))
    gap = np.abs(levy - closed)
    rows = [
        (float(tv), float(lv.real), float(lv.imag), float(abs(lv)),
         float(cv.real), float(cv.imag), float(abs(cv)), float(dv))
        for tv, lv, cv, dv in zip(t, levy, closed, gap)
    ]
    path = write_csv(out / "cf.csv",
                     ["t", "re_levy", "im_levy", "abs_levy",
                      "re_closed", "im_closed", "abs_closed",
                      "abs_difference"],
                     rows, header)
    _log("cf", f"wrote {path.name} (max form gap {gap.max():.3e})")
    fig = plots.save_curves(
        out / "cf.png",
        [("Re psi", t, closed.real), ("Im psi", t, closed.imag),
         ("|psi|", t, np.abs(closed))],
        xlabel="t", ylabel="cf",
        title=f"alpha={params.alpha:g}: characteristic function "
              f"(max |levy - closed| = {gap.max():.2e})")
    _log("cf", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------

DENSITY_SCHEMA = {
    "stable": _stable_section(),
    "grid": Section({
        "x_min": f_float(),
        "x_max": f_float(),
        "n": f_int(2, 400001, default=2001),
    }),
}


def cmd_density(cfg, args, out: Path, header) -> None:
    params = _stable_params(cfg)
    if "grid" in cfg["_present"]:
        g = cfg["grid"]
        if not g["x_max"] > g["x_min"]:
            raise ConfigError("[grid]: x_max must exceed x_min")
        grid = GridSpec(g["x_min"], g["x_max"], g["n"])
    else:
        grid = None
    _log("density", "inverting the characteristic function")
    x, p = density(params, grid)
    path = write_csv(out / "density.csv", ["x", "pdf"],
                     [(float(a), float(b)) for a, b in zip(x, p)], header)
    _log("density", f"wrote {path.name} ({len(x)} points)")
    fig = plots.save_density(out / "density.png", x, p,
                             title=f"alpha={params.alpha:g} density")
    _log("density", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

SAMPLE_SCHEMA = {
    "stable": _stable_section(),
    "sample": Section({
        "n": f_int(1, 10000000, default=1000),
    }),
}


def cmd_sample(cfg, args, out: Path, header) -> None:
    params = _stable_params(cfg)
    n = cfg["sample"]["n"]
    _log("sample", f"drawing {n} exact samples")
    xs = sample(params, n, RngStream(args.seed, 11))
    path = write_csv(out / "samples.csv", ["index", "value"],
                     [(i, float(v)) for i, v in enumerate(xs)], header)
    _log("sample", f"wrote {path.name}")
    fig = plots.save_sample_hist(
        out / "samples.png", xs,
        title=f"alpha={params.alpha:g}: {n} draws",
        density_xy=density(params))
    _log("sample", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# stein-check
# ---------------------------------------------------------------------------

_OPERATORS = ("stable", "symmetric", "gaussian", "type_a")

CHECK_SCHEMA = {
    "check": Section({
        "operator": f_str(set(_OPERATORS)),
        "target": f_str(set(_OPERATORS) | {"matched"}, default="matched"),
        "n": f_int(1, 10000000, default=100000),
        "functions": f_str(default="all"),
    }, required=True),
    "stable": _stable_section(required=False),
    "gaussian": Section({
        "beta": f_float(default=0.0),
        "sigma2": f_float(0.0, lo_open=True, default=1.0),
    }),
    "type_a": Section({
        "rate": f_float(0.0, lo_open=True, default=1.0),
    }),
}


def _check_functions(spec: str):
    members = operator_dictionary()
    if spec == "all":
        return members
    try:
        idx = [int(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise ConfigError(
            "[check] functions: expected 'all' or comma-separated member "
            f"indices 0..{len(members) - 1}")
    if not idx or any(i < 0 or i >= len(members) for i in idx):
        raise ConfigError(
            f"[check] functions: indices must lie in 0..{len(members) - 1}")
    return [members[i] for i in idx]


def _target_sampler(kind: str, cfg, params) -> callable:
    """Sampler for the law the draws come from (matched or deliberately
    mismatched against the operator)."""
    if kind == "stable":
        return lambda k, st: sample(params, k, st)
    if kind == "symmetric":
        p = StableParams(alpha=params.alpha, beta=0.0,
                         m1=params.m1, m2=params.m2)
        return lambda k, st: sample(p, k, st)
    if kind == "gaussian":
        b, s2 = cfg["gaussian"]["beta"], cfg["gaussian"]["sigma2"]
        return lambda k, st: b + math.sqrt(s2) * \
            st.generator().standard_normal(k)
    rate = cfg["type_a"]["rate"]
    return compound_poisson_uniform_sampler(rate)


def cmd_stein_check(cfg, args, out: Path, header) -> None:
    c = cfg["check"]
    op = c["operator"]
    target = c["target"] if c["target"] != "matched" else op
    needs_stable = "stable" in (op, target) or "symmetric" in (op, target)
    if needs_stable and "stable" not in cfg["_present"]:
        raise ConfigError(
            f"operator/target {op!r}/{target!r} needs a [stable] section")
    params = _stable_params(cfg) if needs_stable else None
    kw = {}
    if op == "stable":
        kw["params"] = params
    elif op == "symmetric":
        if abs(params.m1 - params.m2) > 0:
            raise ConfigError(
                "[stable]: the symmetric operator needs m1 = m2")
        kw["alpha"] = params.alpha
        kw["m"] = params.m1
    elif op == "gaussian":
        kw["beta"] = cfg["gaussian"]["beta"]
        kw["sigma2"] = cfg["gaussian"]["sigma2"]
    else:
        rate = cfg["type_a"]["rate"]
        kw["levy"] = uniform_jump_levy(rate)
        kw["beta"] = 0.5 * rate  # mean of the uniform(0,1] jump law

    fns = _check_functions(c["functions"])
    _log("stein-check",
         f"operator={op} target={target} n={c['n']} "
         f"functions={len(fns)} workers={args.workers}")
    ests = stein_identity_mc(
        op, fns, c["n"], RngStream(args.seed, 21),
        sampler=_target_sampler(target, cfg, params),
        workers=args.workers, **kw)
    rows = []
    zvals = []
    for g, e in zip(fns, ests):
        ok = abs(e.mean) <= e.threshold
        zvals.append(abs(e.mean) / e.se if e.se > 0 else math.inf)
        rows.append((op, target, g.name, float(e.mean), float(e.se),
                     bool(ok)))
    path = write_csv(out / "stein_check.csv",
                     ["operator", "target", "test_fn", "mean",
                      "std_error", "pass"],
                     rows, header)
    npass = sum(r[-1] for r in rows)
    _log("stein-check", f"wrote {path.name} ({npass}/{len(rows)} pass)")
    fig = plots.save_check_bars(
        out / "stein_check.png", [g.name for g in fns], zvals,
        title=f"E[A g(X)] z-scores: operator={op}, samples from {target}")
    _log("stein-check", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

SOLVE_SCHEMA = {
    "stable": _stable_section(),
    "solve": Section({
        "h": f_str({"gauss", "odd", "shifted", "const"}, default="gauss"),
        "x_max": f_float(1.0, 64.0, default=12.0),
        "n_x": f_int(51, 20001, default=961),
    }),
}


def _solve_h(name: str):
    if name == "const":
        return const_one()
    return solver_h2_dictionary()[{"gauss": 0, "odd": 1, "shifted": 2}[name]]


def cmd_solve(cfg, args, out: Path, header) -> None:
    params = _stable_params(cfg)
    s = cfg["solve"]
    h = _solve_h(s["h"])
    _log("solve", f"building semigroup context (alpha={params.alpha:g})")
    ctx = make_context(params)
    _log("solve", f"solving the Stein equation for h = {h.name}")
    sol = solve_stein(ctx, h, x_max=s["x_max"], n_x=s["n_x"],
                      mc_seed=777 + args.seed)
    rows = [(float(a), float(b), float(c), float(d), float(e))
            for a, b, c, d, e in
            zip(sol.x, sol.f, sol.fp, sol.fpp, sol.residual)]
    path = write_csv(out / "solution.csv",
                     ["x", "f", "fp", "fpp", "residual"], rows, header)
    _log("solve", f"wrote {path.name}")

    central = np.abs(sol.x) <= 0.8 * float(sol.x[-1])
    max_res = float(np.max(np.abs(sol.residual[central])))
    ratio_fp = ratio_fpp = None
    sup_fp = float(np.max(np.abs(sol.core_fp)))
    sup_fpp = float(np.max(np.abs(sol.core_fpp)))
    if sol.h_sup_norms.get(1):
        rep = derivative_bound_report(sol)
        ratio_fp = rep["ratio_fp"]
        ratio_fpp = rep.get("ratio_fpp")
    srow = [(h.name, float(params.alpha), float(sol.eh), float(sol.eh_mc),
             float(sol.eh_mc_se), max_res, sup_fp, sup_fpp,
             ratio_fp, ratio_fpp)]
    spath = write_csv(out / "solve_summary.csv",
                      ["h", "alpha", "eh", "eh_mc", "eh_mc_se",
                       "max_residual_central80", "sup_fp", "sup_fpp",
                       "ratio_fp", "ratio_fpp"],
                      srow, header)
    _log("solve", f"wrote {spath.name} "
         f"(max central residual {max_res:.3e})")
    fig = plots.save_solution(
        out / "solution.png", sol,
        title=f"alpha={params.alpha:g}, h={h.name}")
    _log("solve", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# bound-sweep
# ---------------------------------------------------------------------------

SWEEP_SCHEMA = {
    "sweep": Section({
        "kind": f_str({"w2", "wdelta"}),
        "n_values": f_ints(1),
        "replicas": f_int(0, 100000, default=1000),
    }, required=True),
    "stable": _stable_section(required=False),
    "w2": Section({
        "N_values": f_floats(0.0, lo_open=True, default=(2.0,)),
        "scale": f_float(0.0, lo_open=True, default=1.0),
        "scale_mode": f_str({"fixed", "attracted", "var_matched"},
                            default="var_matched"),
        "mc_samples": f_int(1000, 2000000, default=100000),
        "t_nodes": f_int(101, 100001, default=4001),
    }),
    "dna": Section({
        "alpha": f_float(0.0, 1.0, lo_open=True, hi_open=True),
        "A": f_float(0.0, lo_open=True),
        "theta": f_float(-1.0, 1.0, default=0.0),
        "e_model": f_str({"zero", "gauss"}, default="zero"),
        "e_amp": f_float(default=0.0),
        "e_rate": f_float(0.0, lo_open=True, default=1.0),
    }),
    "wdelta": Section({
        "M_values": f_floats(0.0, lo_open=True, default=(2.0,)),
        "delta": f_float(0.0, 1.0, lo_open=True, hi_open=True,
                         default=0.5),
    }),
    "constants": Section({
        "C_alpha_A_K": f_float(0.0, lo_open=True, default=1.0),
        "C_1_nu": f_float(0.0, lo_open=True, default=1.0),
        "C_2_nu": f_float(0.0, lo_open=True, default=1.0),
        "truncation_U": f_float(0.0, lo_open=True, default=1.0),
    }, required=True),
}


def _dna_spec(cfg) -> DNASpec:
    d = cfg["dna"]
    if d["e_model"] == "zero":
        e_fn = e_d1 = lambda y: np.zeros_like(np.asarray(y, dtype=float))
    else:
        amp, rate = d["e_amp"], d["e_rate"]

        def e_fn(y, _a=amp, _r=rate):
            y = np.asarray(y, dtype=float)
            return _a * np.exp(-_r * y * y)

        def e_d1(y, _a=amp, _r=rate):
            y = np.asarray(y, dtype=float)
            return -2.0 * _r * y * _a * np.exp(-_r * y * y)

    try:
        return DNASpec(alpha=d["alpha"], A=d["A"], theta=d["theta"],
                       e_fn=e_fn, e_d1=e_d1)
    except ValueError as exc:
        raise ConfigError(f"[dna]: {exc}")


def cmd_bound_sweep(cfg, args, out: Path, header) -> None:
    sw = cfg["sweep"]
    kind = sw["kind"]
    consts = ConstantsPolicy(**cfg["constants"])
    m = sw["replicas"]
    drop = ("w2.",) if kind == "wdelta" else ("dna.", "wdelta.")
    header = [ln for ln in header if not ln.startswith(drop)]

    reports: list[tuple[BoundReport, float | None, bool]] = []
    if kind == "wdelta":
        if "dna" not in cfg["_present"]:
            raise ConfigError("a wdelta sweep needs a [dna] section")
        spec = _dna_spec(cfg)
        params = dna_stable_params(spec)
        delta = cfg["wdelta"]["delta"]
        for i, n in enumerate(sw["n_values"]):
            for j, M in enumerate(cfg["wdelta"]["M_values"]):
                rep = bound_wdelta(n, spec, params, M, consts)
                emp, surro = None, False
                if m > 0:
                    sums = sum_samples(spec, n, m,
                                       RngStream(args.seed, 1000 + 7 * i))
                    ref = sample(params, m,
                                 RngStream(args.seed, 1001 + 7 * i))
                    ed = empirical_wdelta(sums, ref, delta)
                    emp, surro = ed.value, ed.surrogate
                reports.append((rep, emp, surro))
                _log("bound-sweep",
                     f"n={n} M={M:g}: total={rep.total:.6g}"
                     + (f" empirical={emp:.6g}" if emp is not None else ""))
    else:
        if "stable" not in cfg["_present"]:
            raise ConfigError("a w2 sweep needs a [stable] section")
        params = _stable_params(cfg)
        if not 1.0 < params.alpha < 2.0:
            raise ConfigError("[stable]: a w2 sweep needs alpha in (1,2)")
        w2 = cfg["w2"]
        dictionary = w2h_dictionary()
        for i, n in enumerate(sw["n_values"]):
            for j, N in enumerate(w2["N_values"]):
                scale = w2["scale"]
                if w2["scale_mode"] == "attracted":
                    scale = scale * n ** (-1.0 / params.alpha)
                elif w2["scale_mode"] == "var_matched":
                    scale = scale * math.sqrt(
                        truncated_second_moment(params, N) / n)
                z_sampler = two_point_sampler(scale)
                rep = bound_w2(n, z_sampler, params, N, consts,
                               RngStream(args.seed, 2000 + 13 * i + j),
                               mc_samples=w2["mc_samples"],
                               t_nodes=w2["t_nodes"])
                emp = None
                if m > 0:
                    st = RngStream(args.seed, 3000 + 13 * i + j)
                    sums = np.asarray(
                        z_sampler(n * m, st), dtype=float).reshape(m, n) \
                        .sum(axis=1)
                    ref = sample(params, m,
                                 RngStream(args.seed, 3001 + 13 * i + j))
                    emp = empirical_w2h(sums, ref, dictionary)
                reports.append((rep, emp, False))
                _log("bound-sweep",
                     f"n={n} N={N:g}: total={rep.total:.6g}"
                     + (f" empirical={emp:.6g}" if emp is not None else ""))

    cols = reports[0][0].csv_columns()
    rows = [rep.csv_row(empirical=emp, surrogate=surro)
            for rep, emp, surro in reports]
    if kind == "w2":
        # the per-summand kernel mismatch is the quantity that shrinks as
        # the summand law approaches the target's jump structure
        cols = cols + ["kernel_mismatch_per_summand"]
        for row, (rep, _, _) in zip(rows, reports):
            row.append(rep.parameters["kernel_mismatch_per_summand"])
    path = write_csv(out / "bound_sweep.csv", cols, rows, header)
    _log("bound-sweep", f"wrote {path.name} ({len(rows)} rows)")

    # figure: totals and empirical over n at the first M/N value
    first_mn = reports[0][0].parameters.get("M_or_N")
    ns, totals, emps = [], [], []
    terms: dict[str, list] = {}
    for rep, emp, _ in reports:
        if rep.parameters.get("M_or_N") != first_mn:
            continue
        ns.append(rep.parameters["n"])
        totals.append(rep.total)
        emps.append(math.nan if emp is None else float(emp))
        for k, v in rep.terms.items():
            terms.setdefault(k, []).append(v)
    fig = plots.save_bound_sweep(
        out / "bound_sweep.png", ns, totals, emps, terms,
        title=f"{kind} bound sweep (M/N = {first_mn:g})")
    _log("bound-sweep", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# sd-check
# ---------------------------------------------------------------------------

SD_SCHEMA = {
    "stable": _stable_section(),
    "sd": Section({
        "eta_values": f_floats(0.0, 1.0, lo_open=True, hi_open=True,
                               default=(0.3, 0.5, 0.7)),
        "mass_tol": f_float(0.0, lo_open=True, default=5e-3),
        "neg_tol": f_float(0.0, lo_open=True, default=1e-6),
    }),
}


def _remainder_grid(params: StableParams, eta: float) -> GridSpec:
    """Alias-safe window for inverting the cf ratio at decimation eta: the
    remainder law is a rescaled copy of the target (tail mass factor
    1 - eta^alpha), so the window follows from the effective scale."""
    dp = derive_params(params)
    a = params.alpha
    frac = 1.0 - eta ** a
    d_eff = dp.d_alpha * frac
    scale_eff = d_eff ** (1.0 / a)
    if a != 1.0:
        center = dp.gamma_alpha * (1.0 - eta)
    else:
        center = (dp.gamma_alpha * (1.0 - eta)
                  - (2.0 / math.pi) * dp.theta * dp.d_alpha
                  * eta * math.log(eta))
    msum = (params.m1 + params.m2) * frac
    half_w = max(64.0 * scale_eff, (msum * 3e6) ** (1.0 / (1.0 + a)), 8.0)
    xi_max = (23.0 / d_eff) ** (1.0 / a)
    n = max(2.0 * half_w * xi_max / math.pi, 20.0 * half_w / scale_eff)
    n = int(2 ** min(22, max(12, math.ceil(math.log2(n)))))
    return GridSpec(center - half_w, center + half_w, n)


def cmd_sd_check(cfg, args, out: Path, header) -> None:
    params = _stable_params(cfg)
    sd = cfg["sd"]
    rows = []
    curves = []
    for eta in sd["eta_values"]:
        grid = _remainder_grid(params, eta)
        t = -math.log(eta)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", AliasWarning)
            x, p = remainder_density(params, t, grid)
        aliased = any(issubclass(w.category, AliasWarning)
                      for w in caught)
        dx = float(x[1] - x[0])
        mass = float(np.sum(p) * dx)
        pmin = float(np.min(p))
        pmax = float(np.max(p))
        neg_ratio = max(0.0, -pmin) / pmax if pmax > 0 else math.inf
        ok = (abs(mass - 1.0) <= sd["mass_tol"]
              and neg_ratio <= sd["neg_tol"] and not aliased)
        rows.append((float(eta), float(x[0]), float(x[-1]), len(x),
                     mass, abs(mass - 1.0), pmin, neg_ratio,
                     bool(aliased), bool(ok)))
        curves.append((f"eta={eta:g}", x, p))
        _log("sd-check",
             f"eta={eta:g}: mass={mass:.9f} min_density={pmin:.3e} "
             f"{'PASS' if ok else 'FAIL'}")
    path = write_csv(out / "sd_check.csv",
                     ["eta", "x_min", "x_max", "grid_points",
                      "total_mass", "mass_defect", "min_density",
                      "neg_ratio", "aliased", "pass"],
                     rows, header)
    _log("sd-check", f"wrote {path.name}")
    fig = plots.save_curves(
        out / "sd_check.png", curves, xlabel="x", ylabel="density",
        title=f"alpha={params.alpha:g}: remainder densities from the "
              "cf ratio")
    _log("sd-check", f"wrote {fig.name}")


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------

_COMMANDS = {
    "cf": (CF_SCHEMA, cmd_cf,
           "tabulate both characteristic-function forms and their gap"),
    "density": (DENSITY_SCHEMA, cmd_density,
                "tabulate the density by Fourier inversion"),
    "sample": (SAMPLE_SCHEMA, cmd_sample,
               "draw exact samples and render them against the density"),
    "stein-check": (CHECK_SCHEMA, cmd_stein_check,
                    "Monte Carlo Stein-identity checks"),
    "solve": (SOLVE_SCHEMA, cmd_solve,
              "solve the Stein equation and report diagnostics"),
    "bound-sweep": (SWEEP_SCHEMA, cmd_bound_sweep,
                    "approximation-bound terms and empirical distances"),
    "sd-check": (SD_SCHEMA, cmd_sd_check,
                 "self-decomposability ratio inversion test"),
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="steinstable",
        description="Stein's method numerics for stable and infinitely "
                    "divisible laws")
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, _, help_text) in _COMMANDS.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True,
                        help="experiment config file")
        sp.add_argument("--seed", type=int, default=0,
                        help="random seed (default 0)")
        sp.add_argument("--out", default=".",
                        help="output directory (default .)")
        sp.add_argument("--workers", type=int, default=1,
                        help="deterministic MC substreams (default 1)")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    schema, runner, _ = _COMMANDS[args.command]
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        raw = load_config(args.config)
        cfg = resolve_config(raw, schema)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        header = config_comment_lines(args.command, cfg, seed=args.seed,
                                      workers=args.workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        runner(cfg, args, out, header)
    except ConfigError as exc:
        # cross-field validation that needs the typed values
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AlphaOneError as exc:
        print(f"out of scope: {exc}", file=sys.stderr)
        return EXIT_SCOPE
    except (NonConvergence, NonIntegrable, FloatingPointError,
            ValueError, RuntimeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
