"""End-to-end acceptance checks.

Each test prints exactly one line

    criterion NN: PASS/FAIL — what was checked (key numbers)

so a plain ``pytest -s tests/test_acceptance.py`` doubles as the acceptance
report.  Tolerances and sizes are pinned here on purpose; loosening them is
a contract change, not a tweak.
"""

import itertools
import math
import time

import numpy as np
import pytest
from scipy.integrate import quad

from steinstable.bounds import (
    ConstantsPolicy,
    DNASpec,
    bound_w2,
    bound_wdelta,
    dna_stable_params,
    empirical_wdelta,
    kernel_decomposition_check,
    kernel_Knu,
    scaling_identity_check,
    sum_kernel_identity_mc,
    two_point_sampler,
)
from steinstable.cli import main as cli_main
from steinstable.numerics import RngStream, normal_stream, uniform_stream
from steinstable.operators import (
    apply_stable,
    apply_type_c,
    compound_poisson_uniform_sampler,
    stein_identity_mc,
)
from steinstable.semigroup import (
    generator_limit_check,
    make_context,
    semigroup_law_check,
    solve_stein,
    derivative_bound_report,
)
from steinstable.stable import (
    StableParams,
    cf_stable,
    cf_stable_closed,
    tempered_cauchy_levy,
    uniform_jump_levy,
)
from steinstable.testfunctions import (
    gauss_bump,
    odd_gauss,
    operator_dictionary,
    solver_h2_dictionary,
)


def _criterion(num: int, desc: str, ok: bool, detail: str) -> None:
    line = f"criterion {num:2d}: {'PASS' if ok else 'FAIL'} — {desc} ({detail})"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# shared fixtures (contexts and solved Stein equations are expensive)
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def ctx05():
    return make_context(StableParams(alpha=0.5, beta=0.0, m1=1.0, m2=1.0))


@pytest.fixture(scope="module")
def ctx15():
    return make_context(StableParams(alpha=1.5, beta=0.0, m1=1.0, m2=1.0))


@pytest.fixture(scope="module")
def solutions(ctx05, ctx15):
    """{(alpha, h.name): SteinSolution} for both alphas x three h's,
    plus the wall time spent building them (charged to criterion 7)."""
    t0 = time.perf_counter()
    out = {}
    for ctx in (ctx05, ctx15):
        for h in solver_h2_dictionary():
            out[(ctx.params.alpha, h.name)] = solve_stein(ctx, h)
    return out, time.perf_counter() - t0


# ---------------------------------------------------------------------------
# 1. the two characteristic-function routes agree
# ---------------------------------------------------------------------------

def test_cf_routes_agree():
    t0 = time.perf_counter()
    t = np.linspace(-10.0, 10.0, 201)
    worst = 0.0
    for alpha in (0.3, 0.5, 0.9, 1.0, 1.2, 1.5, 1.9):
        for m1, m2 in ((1.0, 1.0), (2.0, 1.0)):
            for beta in (0.0, 1.0):
                p = StableParams(alpha=alpha, beta=beta, m1=m1, m2=m2)
                gap = np.max(np.abs(cf_stable(p, t) - cf_stable_closed(p, t)))
                worst = max(worst, float(gap))
    dt = time.perf_counter() - t0
    _criterion(1, "integral and closed cf routes agree on "
                  "28 parameter sets x 201 points",
               worst < 1e-6 and dt < 60.0,
               f"max gap {worst:.3g}, {dt:.1f}s")


# ---------------------------------------------------------------------------
# 2. the operator means vanish on matched targets
# ---------------------------------------------------------------------------

def test_identity_holds_for_matched_targets():
    t0 = time.perf_counter()
    gs = operator_dictionary()[:5]      # decaying members work for every alpha
    targets = [
        ("cp_uniform", dict(operator="type_a", levy=uniform_jump_levy(1.0),
                            beta=0.5,
                            sampler=compound_poisson_uniform_sampler(1.0))),
        ("gaussian", dict(operator="gaussian", beta=0.3, sigma2=1.5)),
        ("symmetric_0.7", dict(operator="symmetric", alpha=0.7, m=1.0)),
    ]
    for alpha in (0.5, 0.9, 1.2, 1.5):
        for m1, m2 in ((1.0, 1.0), (2.0, 1.0)):
            p = StableParams(alpha=alpha, beta=0.0, m1=m1, m2=m2)
            targets.append((f"stable_{alpha}_{m1:g}_{m2:g}",
                            dict(operator="stable", params=p)))
    n_checks = 0
    n_ok = 0
    for k, (label, kw) in enumerate(targets):
        for seed in range(10):
            ests = stein_identity_mc(kw["operator"], gs, 100000,
                                     RngStream(1000 + seed, 40 + k),
                                     **{a: v for a, v in kw.items()
                                        if a != "operator"})
            for e in ests:
                n_checks += 1
                n_ok += bool(e.consistent)
    rate = n_ok / n_checks
    dt = time.perf_counter() - t0
    _criterion(2, "E[A g(X)] = 0 within 3 SE across 11 matched targets "
                  "x 5 g's x 10 seeds at n=1e5",
               rate >= 0.95 and dt < 300.0,
               f"pass rate {n_ok}/{n_checks} = {rate:.3f}, {dt:.0f}s")


# ---------------------------------------------------------------------------
# 3. and reject a mismatched target
# ---------------------------------------------------------------------------

def test_identity_rejects_mismatched_target():
    p = StableParams(alpha=1.5, beta=0.0, m1=1.0, m2=1.0)
    gs = [operator_dictionary()[2], operator_dictionary()[5]]   # odd members

    def gauss_draws(n, stream):
        return normal_stream(stream, n)

    detected = 0
    z_min = math.inf
    for seed in range(10):
        ests = stein_identity_mc("stable", gs, 100000,
                                 RngStream(3000 + seed, 5),
                                 params=p, sampler=gauss_draws)
        zs = [abs(e.mean) / e.se for e in ests]
        z_min = min(z_min, *zs)
        detected += all(z > 3.0 for z in zs)
    _criterion(3, "gaussian samples fail the alpha=1.5 stable identity "
                  "in >= 9 of 10 seeds",
               detected >= 9, f"detected {detected}/10, min |z| {z_min:.1f}")


# ---------------------------------------------------------------------------
# 4. exponentially tempered 1/u^2 jumps converge to the alpha=1 operator
# ---------------------------------------------------------------------------

def test_tempered_limit_reaches_cauchy_branch():
    p1 = StableParams(alpha=1.0, beta=0.4, m1=2.0, m2=1.0)
    probes = [(gauss_bump(0.0, 1.0, 1.0), 0.7),
              (odd_gauss(1.0, 1.0), -1.3),
              (gauss_bump(1.5, 0.8, 1.0), 2.0)]
    ok = True
    worst_rel = 0.0
    for g, x in probes:
        vals = [apply_type_c(g, x, tempered_cauchy_levy(gam, p1.m1, p1.m2),
                             beta=p1.beta).value
                for gam in (0.1, 0.01, 0.001)]
        limit = apply_stable(g, x, p1).value
        cauchy = abs(vals[1] - vals[0]) > abs(vals[2] - vals[1])
        rel = abs(vals[2] - limit) / max(abs(limit), 1e-12)
        worst_rel = max(worst_rel, rel)
        ok = ok and cauchy and rel < 0.01
    _criterion(4, "tempered-jump operator is Cauchy in the tempering and "
                  "lands on the alpha=1 branch",
               ok, f"worst rel gap at 0.001: {worst_rel:.3g}")


# ---------------------------------------------------------------------------
# 5. semigroup laws
# ---------------------------------------------------------------------------

def test_semigroup_laws(ctx05, ctx15):
    hs = [gauss_bump(0.0, 1.0, 1.0), odd_gauss(1.0, 1.0),
          gauss_bump(1.5, 0.8, 1.0)]
    probes = np.linspace(-3.0, 3.0, 7)
    worst = {"identity": 0.0, "composition": 0.0,
             "conservation": 0.0, "equilibrium": 0.0}
    for ctx in (ctx05, ctx15):
        for h in hs:
            res = semigroup_law_check(ctx, h, 0.3, 0.5, probes)
            for k in worst:
                worst[k] = max(worst[k], res[k])
    ok = (worst["identity"] < 1e-6 and worst["composition"] < 1e-3
          and worst["conservation"] < 1e-10 and worst["equilibrium"] < 1e-3)
    _criterion(5, "t->0 identity, composition, mass conservation and "
                  "t->inf equilibrium hold for alpha in {0.5,1.5} x 3 h's",
               ok, ", ".join(f"{k} {v:.2g}" for k, v in worst.items()))


# ---------------------------------------------------------------------------
# 6. difference quotients of the semigroup converge to the generator
# ---------------------------------------------------------------------------

def test_generator_difference_quotients(ctx05, ctx15):
    f = gauss_bump(0.0, 1.0, 1.0)
    xs = (-2.0, -0.7, -0.3, 0.4)
    ok = True
    lo, hi = math.inf, 0.0
    for ctx in (ctx05, ctx15):
        dev = generator_limit_check(ctx, f, (0.1, 0.05, 0.025), xs)
        ratios = np.concatenate([dev[0] / dev[1], dev[1] / dev[2]])
        lo = min(lo, float(ratios.min()))
        hi = max(hi, float(ratios.max()))
        ok = ok and bool(np.all((ratios >= 1.6) & (ratios <= 2.6)))
    _criterion(6, "halving t cuts the quotient-vs-generator deviation by "
                  "about half on 4 probes, both alphas",
               ok, f"ratio range [{lo:.2f}, {hi:.2f}]")


# ---------------------------------------------------------------------------
# 7. the solved Stein equation actually balances
# ---------------------------------------------------------------------------

def test_solver_residuals(solutions):
    sols, build_s = solutions
    t0 = time.perf_counter()
    worst = 0.0
    for sol in sols.values():
        central = np.abs(sol.x) <= 0.8 * float(sol.x[-1])
        worst = max(worst, float(np.max(np.abs(sol.residual[central]))))
    dt = build_s + (time.perf_counter() - t0)
    _criterion(7, "operator-route residual of the solved equation stays "
                  "below 5e-3 on the central 80%, 6 (alpha, h) pairs",
               worst < 5e-3 and dt < 600.0,
               f"max residual {worst:.3g}, {dt:.0f}s incl. solves")


# ---------------------------------------------------------------------------
# 8. solution derivative norms respect the gradient bounds
# ---------------------------------------------------------------------------

def test_solver_derivative_bounds(solutions):
    sols, _ = solutions
    ok = True
    worst_fp = 0.0
    worst_fpp = 0.0
    for (alpha, _name), sol in sols.items():
        rep = derivative_bound_report(sol)
        worst_fp = max(worst_fp, rep["ratio_fp"])
        ok = ok and rep["ratio_fp"] <= 1.001
        if alpha > 1.0:
            worst_fpp = max(worst_fpp, rep["ratio_fpp"])
            ok = ok and rep["ratio_fpp"] <= 1.001
    _criterion(8, "||f'|| <= ||h'|| both alphas and ||f''|| <= ||h''||/2 "
                  "at alpha=1.5, same matrix as #7",
               ok, f"max ratios f' {worst_fp:.4f}, f'' {worst_fpp:.4f}")


# ---------------------------------------------------------------------------
# 9. closed-form jump kernel equals its defining integral
# ---------------------------------------------------------------------------

def test_kernel_closed_form():
    worst = 0.0
    for alpha in (1.2, 1.5, 1.8):
        p = StableParams(alpha=alpha, beta=0.0, m1=1.3, m2=0.6)
        for N in (0.5, 1.0, 2.0, 3.0, 5.0):
            for frac in (-0.9, -0.4, 0.1, 0.5, 0.9):
                t = frac * N
                if t >= 0:
                    ref = p.m1 * quad(lambda u: u ** (-alpha), t, N,
                                      points=[t])[0] if t < N else 0.0
                else:
                    ref = p.m2 * quad(lambda u: u ** (-alpha), -t, N)[0] \
                        if -t < N else 0.0
                worst = max(worst, abs(float(kernel_Knu(t, N, p)) - ref))
    pin = StableParams(alpha=1.5, beta=0.0, m1=1.0, m2=1.0)
    pin_gap = abs(float(kernel_Knu(1.0, 2.0, pin)) - (2.0 - math.sqrt(2.0)))
    _criterion(9, "closed kernel equals quadrature on a 5x5x3 (t,N,alpha) "
                  "grid and hits the exact 2-sqrt(2) value",
               worst < 1e-8 and pin_gap < 1e-10,
               f"max gap {worst:.2g}, pinned value gap {pin_gap:.2g}")


# ---------------------------------------------------------------------------
# 10. kernel decomposition of the jump integral + the n-sum analogue
# ---------------------------------------------------------------------------

def test_kernel_decomposition_and_sum_identity():
    p = StableParams(alpha=1.5, beta=0.0, m1=2.0, m2=1.0)
    fs = [gauss_bump(0.0, 1.0, 1.0), odd_gauss(1.0, 1.0),
          gauss_bump(1.5, 0.8, 1.0)]
    worst = 0.0
    for f in fs:
        for x, N in ((0.3, 1.0), (-1.2, 2.0), (2.0, 0.7)):
            worst = max(worst, kernel_decomposition_check(f, x, N, p))
    ok = worst < 1e-5

    zmax = 0.0
    for N in (1.5, 0.8):        # N=1.5: kernel term live; N=0.8: only R1
        res = sum_kernel_identity_mc(fs[0], N, 400000, RngStream(11, 6))
        z = abs(res["lhs_mc"] - res["rhs"]) / res["lhs_se"]
        zmax = max(zmax, z)
        ok = ok and z <= 3.0
    _criterion(10, "pointwise kernel decomposition on 9 probes and the "
                   "n=3 sum identity within MC error",
               ok, f"max pointwise gap {worst:.2g}, max |z| {zmax:.2f}")


# ---------------------------------------------------------------------------
# 11. one-sided rescaling identity for alpha < 1
# ---------------------------------------------------------------------------

def test_rescaling_identity():
    worst = 0.0
    for alpha in (0.3, 0.5, 0.7):
        p = StableParams(alpha=alpha, beta=0.0, m1=1.5, m2=0.7)
        for f, y in ((gauss_bump(0.0, 1.0, 1.0), 0.4),
                     (odd_gauss(1.0, 1.0), -1.1)):
            for a in (0.1, 0.5, 0.9):
                worst = max(worst, scaling_identity_check(f, y, a, p))
    _criterion(11, "both quadrature routes of the rescaling identity agree "
                   "over 3 alphas x 3 scales x 2 f's",
               worst < 1e-6, f"max gap {worst:.2g}")


# ---------------------------------------------------------------------------
# 12. bound terms scale exactly and the breakdown sums to the total
# ---------------------------------------------------------------------------

def test_bound_scalings_and_breakdown():
    zero = lambda y: np.zeros_like(np.asarray(y, dtype=float))  # noqa: E731
    spec = DNASpec(alpha=0.7, A=0.4, theta=0.0, e_fn=zero, e_d1=zero)
    params = dna_stable_params(spec)
    consts = ConstantsPolicy()
    r1 = bound_wdelta(400, spec, params, 2.0, consts)
    r2 = bound_wdelta(800, spec, params, 2.0, consts)
    ratio_iid = r2.terms["iid_coupling"] / r1.terms["iid_coupling"]
    ratio_tail = r2.terms["levy_tail"] / r1.terms["levy_tail"]
    ok = (abs(ratio_iid - 0.5) < 1e-9
          and abs(ratio_tail - 2.0 ** -(1.0 / 0.7 - 1.0)) < 1e-9
          and r1.terms["perturbation_inner"] == 0.0
          and r1.terms["location_and_outer"] == 0.0)

    p15 = StableParams(alpha=1.5, beta=0.0, m1=1.0, m2=1.0)
    rw = bound_w2(20, two_point_sampler(0.3), p15, 2.0, consts,
                  RngStream(5, 9), mc_samples=20000, t_nodes=1001)
    gap = 0.0
    for rep in (r1, r2, rw):
        gap = max(gap, abs(sum(rep.terms.values()) - rep.total))
    ok = ok and gap < 1e-12
    _criterion(12, "e=0, theta=0 bound terms follow their exact n power "
                   "laws; term breakdowns sum to totals",
               ok, f"iid ratio {ratio_iid:.12f}, tail ratio "
                   f"{ratio_tail:.12f}, sum gap {gap:.2g}")


# ---------------------------------------------------------------------------
# 13. assignment-based transport distance equals brute force
# ---------------------------------------------------------------------------

def test_transport_matches_brute_force():
    delta = 0.5
    worst = 0.0
    for k in range(20):
        stream = RngStream(500 + k, 77)
        x = normal_stream(stream, 8) * 2.0
        # heavy-tailed counterpart so both cost regimes |d| and |d|^delta appear
        y = np.tan(math.pi * (uniform_stream(stream, 8) - 0.5))
        got = empirical_wdelta(x, y, delta).value
        costs = np.minimum(np.abs(x[:, None] - y[None, :]),
                           np.abs(x[:, None] - y[None, :]) ** delta)
        brute = min(float(np.mean(costs[range(8), list(perm)]))
                    for perm in itertools.permutations(range(8)))
        worst = max(worst, abs(got - brute))
    _criterion(13, "exact transport solver equals exhaustive permutation "
                   "minimum on 20 random n=8 instances",
               worst < 1e-12, f"max gap {worst:.2g}")


# ---------------------------------------------------------------------------
# 14. CLI reruns are byte-identical
# ---------------------------------------------------------------------------

CLI_CASES = {
    "cf": ("cf.csv", """
[stable]
alpha = 1.5
beta = 1.0
m1 = 2.0
m2 = 1.0

[grid]
n = 41
"""),
    "density": ("density.csv", """
[stable]
alpha = 1.2
m1 = 1.0
m2 = 1.0

[grid]
x_min = -40
x_max = 40
n = 401
"""),
    "sample": ("samples.csv", """
[stable]
alpha = 0.7
m1 = 1.0
m2 = 0.5

[sample]
n = 300
"""),
    "stein-check": ("stein_check.csv", """
[check]
operator = gaussian
n = 3000
functions = 0,2
"""),
    "solve": ("solution.csv", """
[stable]
alpha = 1.5
m1 = 1.0
m2 = 1.0

[solve]
h = const
"""),
    "bound-sweep": ("bound_sweep.csv", """
[sweep]
kind = wdelta
n_values = 40, 80
replicas = 60

[dna]
alpha = 0.7
A = 0.4

[constants]
"""),
    "sd-check": ("sd_check.csv", """
[stable]
alpha = 1.3
beta = 0.5
m1 = 1.0
m2 = 0.4

[sd]
eta_values = 0.5
"""),
}


def test_cli_reruns_byte_identical(tmp_path):
    diffs = []
    for cmd, (csv_name, cfg_text) in CLI_CASES.items():
        cfg = tmp_path / f"{cmd}.ini"
        cfg.write_text(cfg_text)
        outs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{cmd}_{tag}"
            code = cli_main([cmd, "--config", str(cfg), "--seed", "3",
                             "--out", str(out)])
            assert code == 0, f"{cmd} exited {code}"
            outs.append((out / csv_name).read_bytes())
        if outs[0] != outs[1]:
            diffs.append(cmd)
    _criterion(14, "all 7 CLI commands emit byte-identical CSV on rerun "
                   "with the same config and seed",
               not diffs, "differs: " + ",".join(diffs) if diffs else
               "7/7 identical")
