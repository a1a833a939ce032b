# Standard library imports
import logging
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

# Third-party imports
import numpy as np
from scipy import integrate, special

# Local application/library specific imports
from bernstein import Identity
from errors import (BergUrbanikError, ConvergenceError, InapplicableError, ParameterError,
                    UnsupportedFamilyError)

INF = math.inf
B_FIRST = 8.0  # extent of segment 0 of a contour line
B_MAX = 4096.0
H_FIRST = 0.5
H_MIN = 2.0 ** -10
ROUNDOFF = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class SupportInfo:
    kind: str
    right_endpoint: float


@dataclass(frozen=True)
class SmoothnessInfo:
    N_phi: float
    n_of_t: float


@dataclass(frozen=True)
class SectorInfo:
    theta_phi: float
    method: str
    sector_at_t: float
    converged: bool = True


@dataclass(frozen=True)
class GridPoint:
    x: float
    value: float
    abs_error: float
    contour_c: float
    contour_B: float


@dataclass(frozen=True)
class DensityGrid:
    t: float
    n: int
    points: tuple = ()
    errors: tuple = ()  # (x, message) for points that failed

    @property
    def contour(self):
        return {"c": [p.contour_c for p in self.points], "B_used": [p.contour_B for p in self.points]}


###################################### Metadata


def support(phi, t):
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}", op="support")
    if phi.is_constant:
        return SupportInfo("degenerate", phi.killing ** t)
    if phi.flags.is_bounded:
        return SupportInfo("bounded", phi.phi_infinity() ** t)
    return SupportInfo("unbounded", INF)


def smoothness_order(phi, t):
    """N_phi and n(t) = floor(N_phi t) - 1."""
    flags = phi.flags
    if flags.has_drift or (math.isinf(flags.v_at_zero) and flags.in_jurek):
        return SmoothnessInfo(INF, INF)
    if flags.is_bounded and flags.in_jurek and math.isfinite(flags.v_at_zero) and flags.v_at_zero > 0:
        N_phi = flags.v_at_zero / phi.phi_infinity()
    else:
        raise InapplicableError(f"{phi!r} has no computable smoothness order", op="smoothness_order")
    if t <= 1.0 / N_phi:
        raise InapplicableError(f"t={t} <= 1/N_phi={1.0 / N_phi:g}: no smooth density", op="smoothness_order")
    return SmoothnessInfo(N_phi, math.floor(N_phi * t) - 1)


def theta_phi(phi, B_max=1e3, t=1.0):
    """Analyticity angle: drift rule, regular-variation rule, or mean of arg phi(1+iu)."""
    if phi.flags.has_drift:
        theta, method, converged = math.pi / 2, "drift-rule", True
    elif phi.regvar is not None and phi.regvar[0] < 1:
        theta, method, converged = phi.regvar[0] * math.pi / 2, "regvar-rule", True
    else:
        means = []
        for B in (B_max / 4, B_max / 2, B_max):
            value, _ = integrate.quad(lambda u: float(np.angle(phi.eval_complex(1.0 + 1j * u))), 0.0, B,
                                      limit=400)
            means.append(value / B)
        theta = min(max(min(means), 0.0), math.pi / 2)
        method, converged = "numeric", abs(means[2] - means[1]) < 1e-2
        if not converged:
            logging.warning(f"[Sector] arg phi(1+iu) mean still moving: {means}")
    return SectorInfo(theta, method, min(theta * t, math.pi), converged)


###################################### Contour lines


class _ContourLine:
    """
    Values of log M(c + ib), b >= 0, cached on dyadic segments.

    Segment 0 covers [0, B_FIRST]; segment i covers (B_FIRST 2^{i-1}, B_FIRST 2^i].
    A segment at step h reuses the values at step 2h, so every node is
    computed in a batch that depends only on (h, segment).
    """

    def __init__(self, log_transform, c):
        self.log_transform = log_transform
        self.c = float(c)
        self._segments = {}
        self._lock = threading.Lock()

    @staticmethod
    def nodes(h, index):
        if index == 0:
            return h * np.arange(0, int(round(B_FIRST / h)) + 1)
        lo = B_FIRST * 2 ** (index - 1)
        return lo + h * np.arange(1, int(round(lo / h)) + 1)

    def segment(self, h, index):
        key = (h, index)
        with self._lock:
            cached = self._segments.get(key)
            coarse = self._segments.get((2 * h, index))
        if cached is not None:
            return cached
        b = self.nodes(h, index)
        if coarse is None:
            values = self.log_transform(self.c + 1j * b)
        else:
            values = np.empty(b.shape, dtype=complex)
            offset = 0 if index == 0 else 1
            values[offset::2] = coarse[1]
            fresh = np.ones(b.size, dtype=bool)
            fresh[offset::2] = False
            values[fresh] = self.log_transform(self.c + 1j * b[fresh])
        with self._lock:
            return self._segments.setdefault(key, (b, values))


def _line_sum(line, h, index, log_x, kernel):
    """Trapezoid sum of Re f over [0, B] and the modulus mass of the last segment."""
    total, scale, last = 0.0, 0.0, 0.0
    for i in range(index + 1):
        b, log_m = line.segment(h, i)
        z = line.c + 1j * b
        f = np.exp(log_m - z * log_x) * kernel(z)
        part = float(np.sum(f.real))
        modulus = float(np.sum(np.abs(f)))
        if i == 0:
            part -= 0.5 * float(f[0].real)
        total += h * part
        scale += h * modulus
        last = h * modulus
    return total / math.pi, scale / math.pi, last / math.pi


def _invert(line, x, kernel, tol, op):
    """(1/pi) Re int_0^B x^{-z} M(z) kernel(z) db with adaptive B then h."""
    log_x = math.log(x)
    h, index = H_FIRST, 1
    while True:
        value, scale, tail = _line_sum(line, h, index, log_x, kernel)
        if tail < tol / 4:
            break
        index += 1
        if B_FIRST * 2 ** (index - 1) > B_MAX:
            raise ConvergenceError(f"contour tail at x={x:g} still {tail:.2e} at B={B_MAX:g}; "
                                   f"check the n(t) smoothness gate", op=op, achieved=tail)
    while True:
        h /= 2
        refined, scale, tail = _line_sum(line, h, index, log_x, kernel)
        change = abs(refined - value)
        value = refined
        if change < max(tol / 4, ROUNDOFF * scale):
            break
        if h < H_MIN:
            raise ConvergenceError(f"trapezoid at x={x:g} not settling ({change:.2e})", op=op, achieved=change)
    B = B_FIRST * 2 ** (index - 1)
    logging.debug(f"[Density] {op} x={x:.6g}: c={line.c:g} B={B:g} h={h:g} err={tail + change:.2e}")
    return value, tail + change, B


@lru_cache(maxsize=256)
def _power_line(evaluator, t, c):
    return _ContourLine(lambda z: t * evaluator.log_w(z), c)


@lru_cache(maxsize=64)
def _shifted_line(evaluator, t, c):
    return _ContourLine(lambda z: evaluator.log_w(t * z - t + 1.0), c)


def _choose_c(phi, t, x):
    """Contour abscissa: 1 by default, a power-of-two ladder toward the saddle otherwise."""
    if phi.flags.is_bounded:
        edge = phi.phi_infinity() ** t
        if x > edge / 2:
            return 1.0 + 5.0 * x / edge
        return 1.0
    if x < 1e-16:
        return 0.125
    if x < 1e-4:
        return 0.25
    try:
        saddle = float(phi.inverse(x ** (1.0 / t)))
    except BergUrbanikError:
        return 1.0
    if saddle < 2.0:
        return 1.0
    return float(2 ** min(int(math.floor(math.log2(saddle))), 7))


def _rising_factorial(z, n):
    out = np.ones_like(z)
    for j in range(n):
        out = out * (z + j)
    return out


def _check_order(phi, t, n):
    if n < 0 or int(n) != n:
        raise ParameterError(f"derivative order must be a non-negative integer, got {n}", op="mellin_barnes_density")
    if n == 0:
        return
    try:
        order = smoothness_order(phi, t)
    except InapplicableError:
        logging.debug(f"[Density] no smoothness gate for {phi!r}; relying on the tail check")
        return
    if n > order.n_of_t:
        raise InapplicableError(f"order {n} exceeds n(t)={order.n_of_t} at t={t}", op="mellin_barnes_density")


def _density_point(evaluator, t, x, n, tol, c=None):
    if not x > 0 or not t > 0:
        raise ParameterError(f"need x > 0 and t > 0, got x={x}, t={t}", op="mellin_barnes_density")
    c = _choose_c(evaluator.phi, t, x) if c is None else float(c)
    line = _power_line(evaluator, float(t), c)
    scale = x ** (-n)
    value, error, B = _invert(line, x, lambda z: scale * _rising_factorial(z, n), tol, "mellin_barnes_density")
    sign = -1.0 if n % 2 else 1.0
    return sign * value, error, c, B


def mellin_barnes_density(evaluator, t, x, n=0, tol=1e-8, c=None):
    """
    n-th derivative of the density of nu_t at x.

    (-1)^n / (2 pi) int x^{-(c+ib)-n} (c+ib)_n W^t(c+ib) db, integrated over
    b >= 0 by conjugate symmetry.
    """
    _check_order(evaluator.phi, t, n)
    value, error, _, _ = _density_point(evaluator, t, float(x), int(n), tol, c)
    return value, error


def density_grid(evaluator, t, n, x_list, tol=1e-8, workers=1):
    """Pointwise inversion; points share cached contour segments and may run concurrently."""
    _check_order(evaluator.phi, t, n)
    xs = [float(x) for x in x_list]

    def one(x):
        try:
            value, error, c, B = _density_point(evaluator, t, x, int(n), tol)
            return GridPoint(x, value, error, c, B), None
        except BergUrbanikError as e:
            logging.warning(f"[Density] x={x}: {e}")
            return None, (x, str(e))

    if workers > 1 and len(xs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, xs))
    else:
        results = [one(x) for x in xs]
    points = tuple(p for p, _ in results if p is not None)
    errors = tuple(e for _, e in results if e is not None)
    return DensityGrid(float(t), int(n), points, errors)


def power_density(evaluator, t, x, tol=1e-8):
    """sigma_t(x) = (1/t) x^{(1-t)/t} nu_1(x^{1/t}), the density of X^t."""
    if not t > 0 or not x > 0:
        raise ParameterError(f"need t > 0 and x > 0, got {t}, {x}", op="power_density")
    value, _ = mellin_barnes_density(evaluator, 1.0, x ** (1.0 / t), 0, tol)
    return x ** ((1.0 - t) / t) * value / t


def power_density_direct(evaluator, t, x, tol=1e-8, c=1.0):
    """Inversion of z -> W(tz - t + 1) on Re z = c > 1 - 1/t."""
    if not c > 1.0 - 1.0 / t:
        raise ParameterError(f"contour needs c > 1 - 1/t, got c={c}", op="power_density_direct")
    line = _shifted_line(evaluator, float(t), float(c))
    value, _, _ = _invert(line, float(x), lambda z: np.ones_like(z), tol, "power_density_direct")
    return value


def levy_coefficients(n):
    """a(n, k) with d^n/dy^n [e^y g(e^y)] = sum_k a(n,k) e^{(k+1)y} g^{(k)}(e^y)."""
    row = [1]
    for _ in range(n):
        nxt = [0] * (len(row) + 1)
        for k, a in enumerate(row):
            nxt[k] += (k + 1) * a
            nxt[k + 1] += a
        row = nxt
    return row


def levy_density(evaluator, t, y, n=0, tol=1e-8):
    """f_t^{(n)}(y) for f_t(y) = e^y nu_t(e^y)."""
    x = math.exp(y)
    total = 0.0
    for k, a in enumerate(levy_coefficients(int(n))):
        value, _ = mellin_barnes_density(evaluator, t, x, k, tol)
        total += a * math.exp((k + 1) * y) * value
    return total


def kappa_check_identity(phi, u):
    """|int_0^oo e^{-uy} dy - phi'(u)/phi(u)| for phi(u) = u."""
    if not isinstance(phi, Identity):
        raise UnsupportedFamilyError("the kappa check is only available for phi(u) = u", op="kappa_check_identity")
    laplace, _ = integrate.quad(lambda y: math.exp(-u * y), 0.0, INF, epsabs=1e-14, epsrel=1e-13)
    return abs(laplace - float(phi.log_derivative(u)))


###################################### Checks built on the inversion


def mass_beyond(evaluator, t, edge, tol=1e-7, c=3.0):
    """nu_t((edge, oo)) from int W^t(z) edge^{1-z} / (z - 1) on Re z = c > 1."""
    if not c > 1 or not edge > 0:
        raise ParameterError(f"need c > 1 and edge > 0, got {c}, {edge}", op="mass_beyond")
    line = _power_line(evaluator, float(t), float(c))
    value, _, _ = _invert(line, edge, lambda z: edge / (z - 1.0), tol, "mass_beyond")
    return value


def quadrature_moment(evaluator, t, power=0, tol=1e-12, step=1.0 / 32, s_lo=-30.0):
    """int x^power nu_t(x) dx as a trapezoid sum in s = log x."""
    phi = evaluator.phi
    top = support(phi, t).right_endpoint
    s_top = math.log(top) if math.isfinite(top) else INF

    def integrand(s_values):
        grid = density_grid(evaluator, t, 0, np.exp(s_values), tol)
        if grid.errors:
            raise ConvergenceError(f"density failed at {grid.errors[0][0]}: {grid.errors[0][1]}",
                                   op="quadrature_moment")
        return np.array([math.exp((power + 1) * math.log(p.x)) * p.value for p in grid.points])

    s = np.arange(s_lo, min(2.0, s_top) + step / 2, step)
    values = integrand(s)
    while s[-1] + step < s_top:
        peak = float(np.max(np.abs(values)))
        if np.all(np.abs(values[-16:]) < 1e-13 * peak):
            break
        extra = s[-1] + step * np.arange(1, 33)
        extra = extra[extra < s_top]
        if extra.size == 0:
            break
        s = np.concatenate([s, extra])
        values = np.concatenate([values, integrand(extra)])
    return step * (float(np.sum(values)) - 0.5 * (values[0] + values[-1]))


def gauss_laguerre_density(alpha, m, x):
    """Closed-form nu_1 of the Gauss-Laguerre semigroup, normalised to unit mass."""
    a = alpha * m + 1.0
    return x ** (a / alpha - 1.0) * math.exp(-x ** (1.0 / alpha)) / (alpha * special.gamma(a))
