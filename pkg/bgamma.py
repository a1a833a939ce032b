# Standard library imports
import logging
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

# Third-party imports
import numpy as np

# Local application/library specific imports
from bernstein import BernsteinFunction, integrate_positive
from errors import ConvergenceError, DomainError, ParameterError, PrecisionWarning

GAMMA_START = 128  # first n of the gamma_phi iteration
GAMMA_CAP = 2 ** 22
K_START = 64  # smallest truncation depth of the product
K_CAP = 2 ** 20
K_BLOCK = 512  # k-rows summed per numpy block
GL_NODES, GL_WEIGHTS = np.polynomial.legendre.leggauss(32)
STIRLING_POINTS = (20, 40, 80)
ROUNDOFF_FLOOR = 256 * np.finfo(float).eps  # relative to the partial sum of phi'/phi


def _fsum_terms(func, lo, hi):
    """fsum of func(k) for integers lo <= k <= hi."""
    if hi < lo:
        return 0.0
    return math.fsum(np.asarray(func(np.arange(lo, hi + 1, dtype=float)), dtype=float))


def _stencil(func, x):
    """Fourth-order central difference with unit step."""
    return (func(x - 2.0) - 8.0 * func(x - 1.0) + 8.0 * func(x + 1.0) - func(x + 2.0)) / 12.0


def gamma_bracket(phi, n):
    """Monotone bracket (lower, upper) of gamma_phi after n terms."""
    if n < 1:
        raise ParameterError(f"bracket needs n >= 1, got {n}", op="gamma_bracket")
    partial = _fsum_terms(phi.log_derivative, 1, n)
    return partial - float(phi.log_eval(n + 1.0)), partial - float(phi.log_eval(float(n)))


def compute_gamma_phi(phi, tol=1e-12):
    """
    gamma_phi = lim sum_{k<=n} phi'(k)/phi(k) - log phi(n).

    The partial sums are accelerated with the Euler-Maclaurin correction
    f(n)/2 + f'(n)/12, f = phi'/phi, and n is doubled until consecutive
    estimates agree to tol, or until the change stops shrinking below the
    roundoff floor of the partial sum. The raw monotone bracket guards the
    result.

    Returns (estimate, change, (lower, upper)). ``change`` is the last
    difference between consecutive estimates, a convergence diagnostic and
    not a rigorous error bound; the bracket width upper - lower is.
    """
    if phi.is_constant:
        raise ParameterError("gamma_phi is defined for non-constant phi", op="compute_gamma_phi")
    f = phi.log_derivative
    n = GAMMA_START
    partial = _fsum_terms(f, 1, n)
    previous = last_change = None
    while True:
        estimate = (partial - float(phi.log_eval(float(n))) - 0.5 * float(f(float(n)))
                    - _stencil(lambda x: float(f(x)), float(n)) / 12.0)
        if previous is not None:
            change = abs(estimate - previous)
            logging.debug(f"[BernsteinGamma] gamma_phi n={n}: {estimate:.16g} (change {change:.2e})")
            if change < tol:
                break
            floor = ROUNDOFF_FLOOR * max(1.0, abs(partial))
            if last_change is not None and change >= last_change and change <= floor:
                logging.info(f"[BernsteinGamma] gamma_phi at roundoff floor {floor:.1e} (n={n})")
                break
            if n >= GAMMA_CAP:
                raise ConvergenceError(f"gamma_phi did not settle below {tol:g}", op="compute_gamma_phi",
                                       achieved=change)
            last_change = change
        previous = estimate
        partial += _fsum_terms(f, n + 1, 2 * n)
        n *= 2
    lower = partial - float(phi.log_eval(n + 1.0))
    upper = partial - float(phi.log_eval(float(n)))
    if not lower - tol <= estimate <= upper + tol:
        logging.warning(f"[BernsteinGamma] estimate {estimate} left the bracket [{lower}, {upper}] at n={n}")
    log_phi_one = float(phi.log_eval(1.0))
    static_upper = float(f(1.0)) - log_phi_one
    if not -log_phi_one - tol <= estimate <= static_upper + tol:
        logging.warning(f"[BernsteinGamma] estimate {estimate} outside [{-log_phi_one}, {static_upper}]")
    return estimate, change, (lower, upper)


class BernsteinGammaEvaluator:
    """
    Immutable evaluator of W_phi and its powers.

    Log W is accumulated as a sum of principal logarithms of phi on the right
    half-plane, each with argument in (-pi/2, pi/2); the sum is therefore an
    analytic logarithm of W, continuous along vertical lines.
    """

    def __init__(self, phi, tol=1e-10, K=K_START):
        if not isinstance(phi, BernsteinFunction):
            raise ParameterError("evaluator needs a BernsteinFunction", op="BernsteinGammaEvaluator")
        if not tol > 0:
            raise ParameterError(f"tol must be positive, got {tol}", op="BernsteinGammaEvaluator")
        self.phi = phi
        self.tol = float(tol)
        self.K = int(K)
        if phi.is_constant:
            self.gamma_phi, self.gamma_error = -math.log(phi.killing), 0.0
            self.bracket = (self.gamma_phi, self.gamma_phi)
        else:
            self.gamma_phi, self.gamma_error, self.bracket = compute_gamma_phi(phi, self.tol / 100.0)
        logging.info(f"[BernsteinGamma] {phi!r}: gamma_phi={self.gamma_phi:.16g} +/- {self.gamma_error:.1e}")

    def __repr__(self):
        return f"BernsteinGammaEvaluator({self.phi!r}, tol={self.tol:g})"

    @staticmethod
    def shift(z):
        """Functional-equation pre-shift N = ceil(2 - Re z) for Re z < 1."""
        re = np.real(z)
        return np.where(re < 1.0, np.ceil(2.0 - re), 0.0).astype(int)

    def log_w(self, z):
        z = np.asarray(z, dtype=complex)
        flat = z.ravel()
        if np.any(flat.real <= 0):
            raise DomainError("W is evaluated on Re z > 0", op="eval_W")
        if self.phi.is_constant:
            return ((flat - 1.0) * math.log(self.phi.killing)).reshape(z.shape)
        shifts = self.shift(flat)
        correction = np.zeros_like(flat)
        for j in range(int(shifts.max()) if flat.size else 0):
            active = shifts > j
            correction[active] += self.phi.log_eval_complex(flat[active] + j)
        shifted = flat + shifts
        result = np.empty_like(flat)
        depth = self._depth(shifted)
        for K in np.unique(depth):
            pick = depth == K
            result[pick] = self._product(shifted[pick], int(K))
        return (result - correction).reshape(z.shape)

    def _depth(self, z):
        need = np.maximum(2.0 * np.abs(z) + 64.0, self.K) / self.K
        return self.K * 2 ** np.ceil(np.log2(need)).astype(int)

    def _g(self, r, z):
        """log phi(r) - Log phi(r + z) + z phi'(r)/phi(r) for rows r, columns z."""
        r = np.asarray(r, dtype=float)[:, None]
        phi = self.phi
        return phi.log_ratio(r, z[None, :]) + z[None, :] * phi.log_derivative(r)

    def _block_sum(self, z, k_lo, k_hi):
        total = np.zeros_like(z)
        for start in range(k_lo, k_hi + 1, K_BLOCK):
            ks = np.arange(start, min(start + K_BLOCK, k_hi + 1), dtype=float)
            total += self._g(ks, z).sum(axis=0)
        return total

    def _tail(self, z, K):
        """sum_{k > K} g(k) by int_K^oo g dr - g(K)/2 - g'(K)/12 + g'''(K)/720."""
        phi = self.phi
        tau = 0.5 * (GL_NODES + 1.0)
        rise = -phi.log_ratio(float(K), tau[:, None] * z[None, :])
        integral = z * (0.5 * GL_WEIGHTS[:, None] * rise).sum(axis=0)
        rows = self._g(np.array([K - 2.0, K - 1.0, K, K + 1.0, K + 2.0]), z)
        slope = (rows[0] - 8.0 * rows[1] + 8.0 * rows[3] - rows[4]) / 12.0
        curvature = (-rows[0] + 2.0 * rows[1] - 2.0 * rows[3] + rows[4]) / 2.0
        return integral - 0.5 * rows[2] - slope / 12.0 + curvature / 720.0

    def _product(self, z, K):
        head = -self.gamma_phi * z - self.phi.log_eval_complex(z)
        acc = self._block_sum(z, 1, K)
        estimate = head + acc + self._tail(z, K)
        while True:
            acc += self._block_sum(z, K + 1, 2 * K)
            K *= 2
            refined = head + acc + self._tail(z, K)
            change = float(np.max(np.abs(refined - estimate)))
            if change < self.tol / 10.0:
                logging.debug(f"[BernsteinGamma] product settled at K={K} for {z.size} points")
                return refined
            if K >= K_CAP:
                message = f"tail correction still moving by {change:.2e} at K={K}"
                logging.warning(f"[BernsteinGamma] {message}")
                warnings.warn(message, PrecisionWarning)
                return refined
            estimate = refined


def _evaluator_for(obj, tol=1e-10):
    if isinstance(obj, BernsteinGammaEvaluator):
        return obj
    return _cached_evaluator(obj, tol)


@lru_cache(maxsize=64)
def _cached_evaluator(phi, tol):
    return BernsteinGammaEvaluator(phi, tol=tol)


def _scalar_or_array(values, z):
    return complex(values) if np.ndim(z) == 0 else values


def log_eval_W(evaluator, z):
    return _scalar_or_array(_evaluator_for(evaluator).log_w(z), z)


def eval_W(evaluator, z):
    return _scalar_or_array(np.exp(_evaluator_for(evaluator).log_w(z)), z)


def eval_W_power(evaluator, t, z):
    """W^t = exp(t Log W)."""
    if t < 0:
        raise ParameterError(f"power t must be non-negative, got {t}", op="eval_W_power")
    if t == 0:
        return _scalar_or_array(np.ones_like(np.asarray(z, dtype=complex)), z)
    return _scalar_or_array(np.exp(t * _evaluator_for(evaluator).log_w(z)), z)


def psi(evaluator, z):
    """Psi(z) = Log W(z + 1), Re z > -1."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.real <= -1):
        raise DomainError("Psi is evaluated on Re z > -1", op="psi")
    return _scalar_or_array(_evaluator_for(evaluator).log_w(z + 1.0), z)


@dataclass(frozen=True)
class MomentSequence:
    phi: BernsteinFunction
    t: float
    values: tuple
    log_values: tuple

    def value(self, n):
        return self.values[n]


def moments(phi, t, N_max):
    """
    (prod_{k<=n} phi(k))^t for n = 0..N_max.

    ``log_values`` are the cumulative sums of t log phi(k) and stay finite.
    ``values`` are the running product, falling back to exp(log_values)
    wherever the product is not finite; a moment beyond the float range is
    reported as inf.
    """
    if t < 0 or N_max < 0:
        raise ParameterError(f"moments need t >= 0 and N_max >= 0, got {t}, {N_max}", op="moments")
    k = np.arange(1, N_max + 1, dtype=float)
    logs = np.concatenate(([0.0], np.cumsum(t * np.asarray(phi.log_eval(k), dtype=float))))
    with np.errstate(over="ignore", invalid="ignore"):
        values = np.concatenate(([1.0], np.cumprod(np.asarray(phi.eval(k), dtype=float) ** t)))
        values = np.where(np.isfinite(values), values, np.exp(logs))
    if not np.all(np.isfinite(values)):
        logging.debug(f"[BernsteinGamma] moments of {phi!r} overflow before n={N_max}; log values stay finite")
    return MomentSequence(phi, float(t), tuple(float(v) for v in values), tuple(float(v) for v in logs))


###################################### Stirling route


def _require_unbounded(phi, op):
    if phi.flags.is_bounded or math.isfinite(phi.phi_infinity()):
        raise DomainError("the Stirling regime needs phi(oo) = oo", op=op)


def stirling_exponent(phi, n):
    """G(n) = int_1^n log phi(r) dr."""
    return integrate_positive(lambda r: float(phi.log_eval(r)), 1.0, float(n), "stirling_asymptotic")


def _log_phi_head(phi):
    """int_0^1 log phi(r) dr; finite since phi(r) >= r phi(1) on [0,1]."""
    return integrate_positive(lambda r: float(phi.log_eval(r)), 0.0, 1.0, "stirling_asymptotic")


def stirling_asymptotic(phi, n, C_phi=None):
    """
    C_phi sqrt(phi(n)) exp(G(n) + int_0^1 log phi).

    The exponent is anchored at 0 so that C_phi is the same constant that
    multiplies the density asymptotic (sqrt(2 pi) for phi(u) = u).
    """
    _require_unbounded(phi, "stirling_asymptotic")
    if n < 1:
        raise ParameterError(f"n must be >= 1, got {n}", op="stirling_asymptotic")
    if C_phi is None:
        C_phi = calibrate_C_phi(phi)[0]
    exponent = stirling_exponent(phi, n) + _log_phi_head(phi) + 0.5 * float(phi.log_eval(float(n)))
    return C_phi * math.exp(exponent)


@lru_cache(maxsize=64)
def calibrate_C_phi(phi):
    """C_phi from W(n+1) / (sqrt(phi(n)) e^{...}) at n = 20, 40, 80 with Richardson extrapolation."""
    _require_unbounded(phi, "calibrate_C_phi")
    head = _log_phi_head(phi)
    ratios = []
    for n in STIRLING_POINTS:
        log_w = math.fsum(np.asarray(phi.log_eval(np.arange(1, n + 1, dtype=float)), dtype=float))
        ratios.append(log_w - 0.5 * float(phi.log_eval(float(n))) - head - stirling_exponent(phi, n))
    first = [2.0 * ratios[1] - ratios[0], 2.0 * ratios[2] - ratios[1]]
    second = (4.0 * first[1] - first[0]) / 3.0
    C_phi = math.exp(second)
    error = C_phi * abs(first[1] - first[0])
    logging.info(f"[BernsteinGamma] {phi!r}: C_phi={C_phi:.10g} +/- {error:.1e}")
    return C_phi, error
