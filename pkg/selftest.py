# Standard library imports
import logging
import math
import time
from dataclasses import dataclass

# Third-party imports
import numpy as np
from scipy import special

# Local application/library specific imports
import asymptotics
import bgamma
import density
import determinacy
from bernstein import (BoundedRatio, GammaRatio, Identity, Log, PowerShifted, catalog, gamma_ratio_with_threshold,
                       gauss_laguerre)
from errors import BergUrbanikError


@dataclass(frozen=True)
class SelftestResult:
    name: str
    passed: bool
    detail: str


def _evaluator(phi, tol=1e-11):
    return bgamma.BernsteinGammaEvaluator(phi, tol=tol)


###################################### Criteria


def check_gamma_conformance():
    """phi(u) = u: W is Gamma on (0, 10] x [-20, 20]i and gamma_phi is Euler's constant."""
    evaluator = _evaluator(Identity())
    re = np.linspace(0.05, 10.0, 10)
    im = np.linspace(-20.0, 20.0, 20)
    z = (re[:, None] + 1j * im[None, :]).ravel()
    deviation = np.abs(np.expm1(bgamma.log_eval_W(evaluator, z) - special.loggamma(z)))
    worst = float(np.max(deviation))
    gamma_gap = abs(evaluator.gamma_phi - np.euler_gamma)
    return worst <= 1e-9 and gamma_gap <= 1e-6, f"max rel {worst:.2e}; |gamma_phi - gamma| {gamma_gap:.2e}"


def check_functional_equation():
    """W(z + 1) = phi(z) W(z) on {a + ib : a in {0.25, 0.5, 1, 2}, b in [-50, 50]}."""
    z = (np.array([0.25, 0.5, 1.0, 2.0])[:, None] + 1j * np.linspace(-50.0, 50.0, 21)[None, :]).ravel()
    worst, where = 0.0, ""
    families = dict(catalog(), gauss_laguerre=gauss_laguerre(0.5, 1.0))
    for name, phi in families.items():
        evaluator = _evaluator(phi)
        log_step = bgamma.log_eval_W(evaluator, z) + phi.log_eval_complex(z) - bgamma.log_eval_W(evaluator, z + 1)
        gap = float(np.max(np.abs(np.expm1(log_step))))
        if gap > worst:
            worst, where = gap, name
    return worst <= 1e-10, f"max rel {worst:.2e} ({where or 'all exact'})"


def check_exponential_oracle():
    xs = np.linspace(0.05, 8.0, 40)
    grid = density.density_grid(_evaluator(Identity()), 1.0, 0, xs, tol=1e-8)
    if grid.errors:
        return False, f"{len(grid.errors)} inversion failure(s)"
    worst = max(abs(p.value - math.exp(-p.x)) for p in grid.points)
    return worst <= 1e-6, f"max abs {worst:.2e}"


def check_bessel_oracle():
    evaluator = _evaluator(Identity())
    xs = np.linspace(0.1, 6.0, 20)
    grid = density.density_grid(evaluator, 2.0, 0, xs, tol=1e-8)
    if grid.errors:
        return False, f"{len(grid.errors)} inversion failure(s)"
    worst = max(abs(p.value - 2.0 * special.k0(2.0 * math.sqrt(p.x))) for p in grid.points)
    moment_gap = max(abs(density.quadrature_moment(evaluator, 2.0, n) / math.factorial(n) ** 2 - 1.0)
                     for n in range(5))
    return worst <= 1e-5 and moment_gap <= 1e-4, f"max abs {worst:.2e}; moments max rel {moment_gap:.2e}"


def check_gauss_laguerre_oracle():
    phi = gauss_laguerre(0.5, 1.0)
    evaluator = _evaluator(phi)
    xs = np.linspace(0.1, 3.0, 15)
    grid = density.density_grid(evaluator, 1.0, 0, xs, tol=1e-8)
    if grid.errors:
        return False, f"{len(grid.errors)} inversion failure(s)"
    worst = max(abs(p.value - density.gauss_laguerre_density(0.5, 1.0, p.x)) for p in grid.points)
    z = np.linspace(0.5, 6.0, 12)
    closed = special.gamma(z / 2.0 + 1.0) / special.gamma(1.5)
    w_gap = float(np.max(np.abs(np.real(bgamma.eval_W(evaluator, z)) / closed - 1.0)))
    return worst <= 1e-5 and w_gap <= 1e-8, f"density max abs {worst:.2e}; W max rel {w_gap:.2e}"


THRESHOLD_TABLE = (
    ("identity", Identity(), 2.0),
    ("gamma_ratio(1,1,0.3)", GammaRatio(1.0, 1.0, 0.3), 20.0 / 7.0),
    ("power_shifted(0.5,0)", PowerShifted(0.5, 0.0), 4.0),
    ("log(1)", Log(1.0), math.inf),
    ("bounded_ratio", BoundedRatio(), math.inf),
)


def check_threshold_table():
    misses = []
    for name, phi, expected in THRESHOLD_TABLE:
        bounds = determinacy.threshold_bounds(phi)
        hit = (bounds.sharp_at_lower and math.isclose(bounds.lower, expected, rel_tol=1e-12)
               and math.isclose(bounds.upper, expected, rel_tol=1e-12))
        if not hit:
            misses.append(f"{name}: [{bounds.lower}, {bounds.upper}] sharp={bounds.sharp_at_lower}")
    return not misses, "; ".join(misses) or "all five reproduced"


def check_series_behaviour():
    identity = Identity()
    below = determinacy.carleman_series(identity, 2.0).classification
    above = determinacy.carleman_series(identity, 2.5).classification
    failures = []
    for name in ("identity", "power_shifted", "gamma_ratio"):
        phi = catalog()[name]
        t = determinacy.threshold_bounds(phi).upper + 0.5
        outcome = determinacy.abelian_series(phi, t).classification
        if outcome != "converges":
            failures.append(f"{name}@t={t:g}: {outcome}")
    passed = below == "diverges" and above == "converges" and not failures
    return passed, f"carleman t=2 {below}, t=2.5 {above}; abelian {'; '.join(failures) or 'all converge'}"


ASYMPTOTIC_POINTS = (
    ("identity t=1", Identity(), 1.0, 12.0),
    ("identity t=2", Identity(), 2.0, 25.0),
    ("gauss_laguerre t=1", gauss_laguerre(0.5, 1.0), 1.0, 4.0),
)


def check_asymptotic_ratio():
    details, passed = [], True
    for name, phi, t, xi in ASYMPTOTIC_POINTS:
        exact, _ = density.mellin_barnes_density(_evaluator(phi), t, xi, tol=1e-10)
        ratio = asymptotics.asym_density(phi, t, xi) / exact
        passed &= abs(ratio - 1.0) <= 0.05
        details.append(f"{name} ratio {ratio:.4f}")
    C_phi, _ = bgamma.calibrate_C_phi(Identity())
    C_gap = abs(C_phi / math.sqrt(2 * math.pi) - 1.0)
    display_gap = max(abs(asymptotics.asym_density(Identity(), t, 30.0, n, C_phi=math.sqrt(2 * math.pi))
                          / asymptotics.urbanik_classical(t, 30.0, n) - 1.0)
                      for t in (1.0, 2.0, 3.0) for n in (0, 1, 2))
    passed &= C_gap <= 5e-3 and display_gap <= 1e-9
    details.append(f"C_phi rel {C_gap:.1e}; classical display rel {display_gap:.1e}")
    return passed, "; ".join(details)


def check_semigroup_law():
    """f_2 = f_1 * f_1 for f_t(y) = e^y nu_t(e^y), phi(u) = u."""
    evaluator = _evaluator(Identity())
    step = 1.0 / 32
    s = np.arange(-26.0, 6.0 + step / 2, step)
    grid = density.density_grid(evaluator, 1.0, 0, np.exp(s), tol=1e-10)
    if grid.errors:
        return False, f"{len(grid.errors)} inversion failure(s)"
    f1 = np.exp(s) * np.array([p.value for p in grid.points])
    index = np.arange(len(s))
    worst = 0.0
    for y in np.arange(-2.0, 4.0 + 0.25, 0.5):
        # y - s[j] = s[k] with k = (y - 2 s[0]) / step - j
        k = int(round((y - 2.0 * s[0]) / step)) - index
        inside = (k >= 0) & (k < len(s))
        convolved = step * float(np.sum(f1[inside] * f1[k[inside]]))
        f2, _ = density.mellin_barnes_density(evaluator, 2.0, math.exp(y), tol=1e-10)
        worst = max(worst, abs(convolved - math.exp(y) * f2))
    return worst <= 1e-4, f"max abs {worst:.2e}"


def _standard_normal():
    return asymptotics.AsymptoticModel(lambda y: 1.0 / math.sqrt(2 * math.pi), lambda y: 0.5 * y * y,
                                       lambda y: y, lambda y: 1.0)


def check_composer():
    normal = _standard_normal()
    worst = 0.0
    for y in (0.5, 1.0, 3.0):
        psi0, eta0 = asymptotics.gaussian_tail_convolve(normal, normal, y)
        worst = max(worst, abs(psi0 - y * y / 4.0), abs(eta0 - 1.0 / math.sqrt(4 * math.pi)))
    identity = Identity()
    model = asymptotics.semigroup_tail_model(identity, 1.0)
    ratios = [asymptotics.dfold(model, 3, y)
              / (math.exp(y) * asymptotics.asym_density(identity, 3.0, math.exp(y))) for y in (6.0, 8.0, 10.0)]
    spread = max(abs(r - 1.0) for r in ratios)
    return worst <= 1e-10 and spread <= 0.01, f"gaussian pair {worst:.1e}; d-fold ratio spread {spread:.1e}"


def check_power_identity():
    evaluator = _evaluator(Identity())
    worst = max(abs(density.power_density(evaluator, 2.0, x) - density.power_density_direct(evaluator, 2.0, x))
                for x in (0.5, 1.0, 2.0))
    return worst <= 2e-5, f"max abs {worst:.2e}"


def check_flatness_suite():
    u_list, w_list = (1e2, 1e4, 1e6, 1e8), (0.5, 1.0)
    failures = []
    for name in ("identity", "power_shifted", "gamma_ratio", "log"):
        data = asymptotics.legendre_data(catalog()[name])
        if not asymptotics.self_neglecting_check(data.s_G, u_list, w_list).passed:
            failures.append(f"s_G of {name}")
    legendre = asymptotics.legendre_data(Identity())
    for y in (1.0, 5.0, 10.0):
        top = math.exp(y)
        if not math.isclose(legendre.L_G(y) + legendre.G(top), y * top, rel_tol=1e-8, abs_tol=1e-8):
            failures.append(f"conjugacy at y={y:g}")
    model = asymptotics.semigroup_tail_model(Identity(), 1.0)
    if not asymptotics.flatness_check(lambda u: u * u, model, (5.0, 10.0, 20.0, 40.0), (1.0,)).passed:
        failures.append("u^2 against the identity model")
    if asymptotics.self_neglecting_check(lambda u: u, u_list, (1.0,)).passed:
        failures.append("s(u) = u was accepted")
    return not failures, "; ".join(failures) or "all checks behave"


CRITERIA = (
    ("gamma-conformance", check_gamma_conformance),
    ("functional-equation", check_functional_equation),
    ("exponential-oracle", check_exponential_oracle),
    ("bessel-oracle", check_bessel_oracle),
    ("gauss-laguerre-oracle", check_gauss_laguerre_oracle),
    ("threshold-table", check_threshold_table),
    ("series-behaviour", check_series_behaviour),
    ("asymptotic-ratio", check_asymptotic_ratio),
    ("semigroup-law", check_semigroup_law),
    ("composer", check_composer),
    ("power-identity", check_power_identity),
    ("flatness-suite", check_flatness_suite),
)


def run_selftest(names=None):
    results = []
    for name, check in CRITERIA:
        if names is not None and name not in names:
            continue
        start = time.perf_counter()
        try:
            passed, detail = check()
        except BergUrbanikError as e:
            passed, detail = False, f"{type(e).__name__} in {e.op}: {e}"
        logging.info(f"[Selftest] {name}: {'pass' if passed else 'FAIL'} in {time.perf_counter() - start:.1f}s "
                     f"({detail})")
        results.append(SelftestResult(name, bool(passed), detail))
    return results


###################################### Worked-example tables


def threshold_examples(thresholds=(2.5, 3.0, 4.0, 5.0, 10.0)):
    rows = []
    for T in thresholds:
        phi = gamma_ratio_with_threshold(T)
        bounds = determinacy.threshold_bounds(phi)
        rows.append((T, phi.a, phi.b, bounds.lower, bounds.upper, bounds.sharp_at_lower))
    return "gamma-ratio-thresholds", ["T", "a", "b", "lower", "upper", "sharp"], rows


def gauss_laguerre_examples(alpha=0.5, m=1.0):
    phi = gauss_laguerre(alpha, m)
    evaluator = _evaluator(phi)
    a = alpha * m + 1.0
    rows = []
    for x in (0.25, 0.5, 1.0, 2.0, 3.0):
        value, error = density.mellin_barnes_density(evaluator, 1.0, x, tol=1e-10)
        closed = density.gauss_laguerre_density(alpha, m, x)
        w = float(np.real(bgamma.eval_W(evaluator, x)))
        w_closed = special.gamma(alpha * x + a - alpha) / special.gamma(a)
        rows.append((x, value, closed, abs(value - closed), w, w_closed))
    return "gauss-laguerre", ["x", "density", "closed_form", "abs_diff", "W", "W_closed_form"], rows


def log_family_examples(lam=1.0, t=1.0):
    phi = Log(lam)
    C = asymptotics.calibrated_constant(phi)
    rows = []
    for x in (5.0, 10.0, 15.0):
        _, log_asym = asymptotics.log_asym_density(phi, t, x ** t, C_phi=C)
        log_display = asymptotics.log_family_display(lam, t, x, C=C, as_log=True)
        rows.append((x, log_asym, log_display, log_asym - log_display))
    return "log-family", ["x", "log_asymptotic", "log_display", "difference"], rows


def examples_tables():
    return [threshold_examples(), gauss_laguerre_examples(), log_family_examples()]
