# Standard library imports
import logging
import math
from dataclasses import dataclass

# Third-party imports
import numpy as np
from scipy import optimize, special

# Local application/library specific imports
from bernstein import integrate_positive
from bgamma import calibrate_C_phi
from errors import BergUrbanikError, DomainError, InapplicableError, ParameterError

INF = math.inf
FLAT_FLOOR = 1e-12  # deviations below this count as exact
BRACKET_STEPS = 64


@dataclass(frozen=True)
class CheckReport:
    max_deviation: float
    passed: bool
    deviations: tuple = ()  # one row of deviations per w, ordered by u


@dataclass(frozen=True)
class LegendreData:
    phi: object
    G: object
    L_G: object
    s_G: object


@dataclass(frozen=True)
class AsymptoticModel:
    """Gaussian tail f(y) ~ eta(y) e^{-psi(y)}, psi asymptotically parabolic."""
    eta: object
    psi: object
    psi_prime: object
    psi_second: object
    y_min: float = -INF

    def s_psi(self, y):
        return 1.0 / math.sqrt(self.psi_second(y))

    def log_density(self, y):
        return math.log(self.eta(y)) - self.psi(y)

    def density(self, y):
        return math.exp(self.log_density(y))


###################################### Legendre data


def _require_unbounded(phi, op):
    if phi.is_constant or math.isfinite(phi.phi_infinity()):
        raise DomainError("needs an unbounded, non-constant phi", op=op)


def _substituted(upper, func, op):
    """int_0^upper func(u) du split at 1 so long ranges run in log scale."""
    head = integrate_positive(func, 0.0, min(1.0, upper), op)
    if upper <= 1.0:
        return head
    return head + integrate_positive(func, 1.0, upper, op)


def exponent_integral(phi, x):
    """int_k^x varphi(r)/r dr as int_0^{varphi(x)} u phi'(u)/phi(u) du."""
    upper = float(phi.inverse(x))
    return _substituted(upper, lambda u: u * float(phi.log_derivative(u)), "exponent_integral")


def legendre_data(phi):
    _require_unbounded(phi, "legendre_data")
    log_phi_one = float(phi.log_eval(1.0))

    def G(u):
        return integrate_positive(lambda r: float(phi.log_eval(r)), 1.0, u, "legendre_data") + log_phi_one

    def L_G(y):
        top = float(phi.inverse(math.exp(y)))
        return integrate_positive(lambda u: u * float(phi.log_derivative(u)), 1.0, top, "legendre_data")

    def s_G(u):
        return math.sqrt(1.0 / float(phi.log_derivative(u)))

    return LegendreData(phi, G, L_G, s_G)


###################################### Self-neglect and flatness


def _ratio_check(ratio, u_list, w_list, op):
    us = sorted(float(u) for u in u_list)
    rows, passed = [], True
    for w in w_list:
        row = [abs(ratio(u, float(w)) - 1.0) for u in us]
        for a, b in zip(row, row[1:]):
            if not (b < a or b <= FLAT_FLOOR):
                passed = False
        rows.append(tuple(row))
    worst = max((max(r) for r in rows), default=0.0)
    logging.debug(f"[{op}] max deviation {worst:.3e}, pass={passed}")
    return CheckReport(worst, passed, tuple(rows))


def self_neglecting_check(s, u_list, w_list):
    """Deviations |s(u + w s(u))/s(u) - 1|; must shrink along increasing u."""
    def ratio(u, w):
        base = s(u)
        if not base > 0:
            raise DomainError(f"scale must be positive, s({u}) = {base}", op="self_neglecting_check")
        return s(u + w * base) / base

    return _ratio_check(ratio, u_list, w_list, "SelfNeglect")


def flatness_check(h, model, u_list, w_list):
    def ratio(u, w):
        base = h(u)
        if not base > 0:
            raise DomainError(f"h must be positive, h({u}) = {base}", op="flatness_check")
        return h(u + w * model.s_psi(u)) / base

    return _ratio_check(ratio, u_list, w_list, "Flatness")


###################################### Density asymptotics


def calibrated_constant(phi):
    return calibrate_C_phi(phi)[0]


def _gate(phi, t, xi, op):
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}", op=op)
    if math.isfinite(phi.phi_infinity()) or not phi.flags.power_jurek:
        raise InapplicableError("the tail asymptotic needs phi(oo) = oo and the power-Jurek property", op=op)
    x = xi ** (1.0 / t)
    if not x > max(float(phi.eval(1.0)), phi.killing):
        raise DomainError(f"xi^(1/t) = {x:g} lies below max(phi(1), k)", op=op)
    return x


def _signed(n, log_abs, as_log):
    sign = -1.0 if n % 2 else 1.0
    return (sign, log_abs) if as_log else sign * math.exp(log_abs)


def asym_density(phi, t, xi, n=0, C_phi=None, as_log=False):
    """
    Large-xi asymptotic of the n-th derivative of the density of nu_t at xi.

    With x = xi^{1/t}:
    (-1)^n xi^{-n} varphi(x)^n C^t / sqrt(2 pi t) sqrt(xi^{(1-t)/t} varphi'(x)) e^{-t int_k^x varphi(r)/r dr}.
    """
    x = _gate(phi, t, xi, "asym_density")
    C_phi = calibrated_constant(phi) if C_phi is None else C_phi
    u = float(phi.inverse(x))
    log_inverse_slope = -math.log(float(phi.derivative(u)))
    log_abs = (t * math.log(C_phi) - 0.5 * math.log(2 * math.pi * t)
               + 0.5 * ((1.0 - t) / t * math.log(xi) + log_inverse_slope)
               - t * exponent_integral(phi, x))
    if n:
        log_abs += n * (math.log(u) - math.log(xi))
    return _signed(n, log_abs, as_log)


def log_asym_density(phi, t, xi, n=0, C_phi=None):
    """(sign, log|value|) of asym_density, for tails beyond the float range."""
    return asym_density(phi, t, xi, n, C_phi, as_log=True)


def correction_integral(phi, x, correction):
    """int_k^x E(r)/r dr via r = phi(u), with correction(u) = E(phi(u))."""
    upper = float(phi.inverse(x))
    return _substituted(upper, lambda u: correction(u) * float(phi.log_derivative(u)), "correction_integral")


def asym_density_drift(phi, t, xi, n=0, C_phi=None, as_log=False):
    """Drift form with E(u) = u - k - d varphi(u); derivative multiplier d^{-n} x^{n(1-t)}."""
    if not phi.flags.has_drift:
        raise InapplicableError("the drift form needs d > 0", op="asym_density_drift")
    x = _gate(phi, t, xi, "asym_density_drift")
    C_phi = calibrated_constant(phi) if C_phi is None else C_phi
    k, d = phi.killing, phi.drift
    log_const = t * math.log(C_phi) - 0.5 * math.log(d)
    if k > 0:
        log_const += t * k / d * (1.0 - math.log(k))
    E = correction_integral(phi, x, lambda u: float(phi.eval(u)) - k - d * u)
    log_abs = (log_const - 0.5 * math.log(2 * math.pi * t)
               + (d + t * (2 * k - d)) / (2 * d) * math.log(x)
               - t * x / d + t / d * E)
    if n:
        log_abs += n * ((1.0 - t) * math.log(x) - math.log(d))
    return _signed(n, log_abs, as_log)


def asym_density_regvar(phi, t, xi, n=0, C_phi=None, as_log=False):
    """phi ~ C_a u^a form with H(u) = C_a^{-1/a} u^{1/a} - varphi(u)."""
    if phi.regvar is None or not 0 < phi.regvar[0] < 1:
        raise InapplicableError("needs a declared regular-variation index in (0,1)", op="asym_density_regvar")
    alpha, C_alpha = phi.regvar
    x = _gate(phi, t, xi, "asym_density_regvar")
    C_phi = calibrated_constant(phi) if C_phi is None else C_phi
    scale = C_alpha ** (-1.0 / alpha)
    k = phi.killing
    log_const = (t * math.log(C_phi) + 0.5 * math.log(scale / alpha)
                 + t * alpha * scale * k ** (1.0 / alpha))
    H = correction_integral(phi, x, lambda u: scale * float(phi.eval(u)) ** (1.0 / alpha) - u)
    log_abs = (log_const - 0.5 * math.log(2 * math.pi * t)
               + (1.0 - alpha * t) / (2 * alpha) * math.log(x)
               - t * alpha * scale * x ** (1.0 / alpha) + t * H)
    if n:
        log_abs += n * (math.log(scale) + (1.0 - alpha * t) / alpha * math.log(x))
    return _signed(n, log_abs, as_log)


def asym_power_density(phi, t, x, C_phi=None):
    """Tail of sigma_t, the density of X^t: (1/t) x^{(1-t)/t} nu_1(x^{1/t})."""
    return x ** ((1.0 - t) / t) * asym_density(phi, 1.0, x ** (1.0 / t), 0, C_phi) / t


def asym_levy_density(phi, t, y, n=0, C_phi=None):
    """f_t^{(n)}(y) ~ e^{(n+1)y} nu_t^{(n)}(e^y)."""
    sign, log_abs = asym_density(phi, t, math.exp(y), n, C_phi, as_log=True)
    return sign * math.exp((n + 1) * y + log_abs)


def urbanik_classical(t, xi, n=0):
    """(-1)^n (2 pi)^{(t-1)/2} / sqrt(t) xi^{(1-t)/2t} xi^{n(1/t - 1)} e^{-t xi^{1/t}}."""
    log_abs = (0.5 * (t - 1.0) * math.log(2 * math.pi) - 0.5 * math.log(t)
               + ((1.0 - t) / (2 * t) + n * (1.0 / t - 1.0)) * math.log(xi) - t * xi ** (1.0 / t))
    return _signed(n, log_abs, False)


def log_family_display(lam, t, x, C=1.0, as_log=False):
    """
    Density of nu_t at x^t for phi(u) = log(1 + u/lam):
    C^t sqrt(lam) e^{t lam gamma} / sqrt(2 pi t) x^{(1-t)/2 + t lam} e^{-lam t Ei(x) + x/2}.
    """
    log_value = (t * math.log(C) + 0.5 * math.log(lam) + t * lam * np.euler_gamma
                 - 0.5 * math.log(2 * math.pi * t) + ((1.0 - t) / 2 + t * lam) * math.log(x)
                 - lam * t * float(special.expi(x)) + x / 2.0)
    return log_value if as_log else math.exp(log_value)


###################################### Gaussian-tail composer


def semigroup_tail_model(phi, t, C_phi=None):
    """Model of y -> e^y nu_t(e^y); psi(y) = t int_k^{e^{y/t}} varphi(r)/r dr, psi' = varphi(e^{y/t})."""
    _require_unbounded(phi, "semigroup_tail_model")
    C_phi = calibrated_constant(phi) if C_phi is None else C_phi
    log_front = t * math.log(C_phi) - 0.5 * math.log(2 * math.pi * t)
    k = phi.killing

    def inverse_slope(w):
        return 1.0 / float(phi.derivative(float(phi.inverse(w))))

    def eta(y):
        w = math.exp(y / t)
        return math.exp(log_front + y / 2.0 + 0.5 * math.log(w * inverse_slope(w)))

    def psi(y):
        return t * exponent_integral(phi, math.exp(y / t))

    def psi_prime(y):
        return float(phi.inverse(math.exp(y / t)))

    def psi_second(y):
        w = math.exp(y / t)
        return w * inverse_slope(w) / t

    return AsymptoticModel(eta, psi, psi_prime, psi_second, y_min=t * math.log(k) if k > 0 else -INF)


def _conjugate_point(model, u):
    """q with psi'(q) = u, by bisection on a geometrically expanded bracket."""
    def excess(q):
        return model.psi_prime(q) - u

    lo = max(-1.0, model.y_min)
    hi = max(1.0, lo + 1.0)
    try:
        for _ in range(BRACKET_STEPS):
            low_side, high_side = excess(lo), excess(hi)
            if low_side <= 0 <= high_side:
                return optimize.brentq(excess, lo, hi, xtol=1e-14, rtol=1e-15)
            width = hi - lo
            if low_side > 0:
                if lo == model.y_min:
                    break
                lo = max(lo - 2.0 * width, model.y_min)
            if high_side < 0:
                hi += 2.0 * width
    except (BergUrbanikError, OverflowError) as e:
        raise DomainError(f"cannot bracket psi'(q) = {u:g} within [{lo:g}, {hi:g}]: {e}",
                          op="gaussian_tail_convolve") from e
    raise DomainError(f"cannot bracket psi'(q) = {u:g} within [{lo:g}, {hi:g}]", op="gaussian_tail_convolve")


def gaussian_tail_convolve(m1, m2, y):
    """
    Tail pair (psi0(y), eta0(y)) of the convolution of two Gaussian tails.

    Solves psi1'(q1) = psi2'(q2) = u with q1 + q2 = y.
    """
    u_a, u_b = sorted((m1.psi_prime(y / 2.0), m2.psi_prime(y / 2.0)))
    if u_a == u_b:
        q1 = q2 = y / 2.0
    else:
        def gap(u):
            return _conjugate_point(m1, u) + _conjugate_point(m2, u) - y
        try:
            u = optimize.brentq(gap, u_a, u_b, xtol=1e-14 * max(1.0, abs(u_b)), rtol=1e-15)
        except ValueError as e:
            raise DomainError(f"conjugate solve failed on u in [{u_a:g}, {u_b:g}]: {e}",
                              op="gaussian_tail_convolve") from e
        q1 = _conjugate_point(m1, u)
        q2 = y - q1
    s1, s2 = m1.s_psi(q1), m2.s_psi(q2)
    psi0 = m1.psi(q1) + m2.psi(q2)
    eta0 = math.sqrt(2 * math.pi) * s1 * m1.eta(q1) * s2 * m2.eta(q2) / math.hypot(s1, s2)
    logging.debug(f"[Composer] y={y:g}: q1={q1:.12g} q2={q2:.12g}")
    return psi0, eta0


def dfold(model, d, y, as_log=False):
    """(1/sqrt d) (2 pi / psi''(y/d))^{(d-1)/2} f(y/d)^d, f = eta e^{-psi}."""
    if int(d) != d or d < 1:
        raise ParameterError(f"d must be a positive integer, got {d}", op="dfold")
    q = y / d
    log_value = (-0.5 * math.log(d) + 0.5 * (d - 1) * (math.log(2 * math.pi) - math.log(model.psi_second(q)))
                 + d * model.log_density(q))
    return log_value if as_log else math.exp(log_value)
