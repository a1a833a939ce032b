# Standard library imports
import logging
import math
import warnings
from dataclasses import dataclass
from functools import cached_property

# Third-party imports
import numpy as np
from scipy import integrate, special

# Local application/library specific imports
from errors import (ConvergenceError, DomainError, InapplicableError, ParameterError,
                    UnsupportedFamilyError)

INF = math.inf

QUAD_ABS_TOL = 1e-12  # absolute target for the Levy integral
QUAD_ACCEPT = 1e-8  # reported quad error above this is a failure
COMPLEX_IM_LIMIT = 1e3  # |Im z| cap for quadrature-backed complex evaluation
INDEX_SPREAD = 0.02  # local slope spread separating "beta = delta" from an interval
RATIO_SERIES_FROM = 40.0  # |alpha u| from which Gamma ratios use the Bernoulli expansion
RATIO_SERIES_TERMS = 18


def _as_float_array(u):
    arr = np.asarray(u, dtype=float)
    return arr, arr.ndim == 0


def _as_complex_array(z):
    arr = np.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _output(arr, scalar):
    if scalar:
        return complex(arr) if np.iscomplexobj(arr) else float(arr)
    return arr


def _quad(func, a, b, op):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        value, abserr = integrate.quad(func, a, b, epsabs=QUAD_ABS_TOL, epsrel=1e-12, limit=200)
    if not math.isfinite(value) or abserr > max(QUAD_ACCEPT, QUAD_ACCEPT * abs(value)):
        raise ConvergenceError(f"quadrature on [{a}, {b}] did not converge", op=op, achieved=abserr)
    return value


def _one_minus_exp(w):
    """1 - e^{-w} for real or complex w without cancellation near 0."""
    return -np.expm1(-w)


def integrate_positive(func, a, b, op="integrate"):
    """int_a^b func(r) dr for 0 <= a <= b, switching to r = e^s over long ranges."""
    if b < a:
        return -integrate_positive(func, b, a, op)
    if b == a:
        return 0.0
    if a > 0 and b / a > 20.0:
        edges = np.linspace(math.log(a), math.log(b), int(math.ceil(math.log(b / a) / 2.0)) + 1)
        pieces = [_quad(lambda s: func(math.exp(s)) * math.exp(s), lo, hi, op)
                  for lo, hi in zip(edges[:-1], edges[1:])]
        return math.fsum(pieces)
    return _quad(func, a, b, op)


###################################### Levy densities


class LevyDensity:
    """A built-in Levy density, referenced by name from family configs."""

    def __init__(self, name, params, density, tail, v_at_zero, total_mass,
                 completely_monotone=True, beta=None, regvar=None):
        self.name = name
        self.params = dict(params)
        self.density = density
        self.tail = tail
        self.v_at_zero = v_at_zero
        self.total_mass = total_mass
        self.completely_monotone = completely_monotone
        # completely monotone densities are non-increasing
        self.non_increasing = completely_monotone
        self.beta = beta
        self.regvar = regvar

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.name}({args})"


def _positive(params, key, default=None):
    value = float(params.get(key, default))
    if not value > 0:
        raise ParameterError(f"density parameter {key} must be positive, got {value}", op="levy_density")
    return value


def _exp_over_y(params):
    lam = _positive(params, "lambda", 1.0)
    return LevyDensity(
        "exp_over_y", {"lambda": lam},
        density=lambda y: np.exp(-lam * y) / y,
        tail=lambda y: float(special.exp1(lam * y)) if y > 0 else INF,
        v_at_zero=INF, total_mass=INF, beta=0.0)


def _exponential(params):
    c = _positive(params, "c", 1.0)
    lam = _positive(params, "lambda", 1.0)
    return LevyDensity(
        "exponential", {"c": c, "lambda": lam},
        density=lambda y: c * np.exp(-lam * y),
        tail=lambda y: (c / lam) * math.exp(-lam * max(y, 0.0)),
        v_at_zero=c, total_mass=c / lam, beta=0.0)


def _tempered_stable(params):
    alpha = float(params.get("alpha", 0.5))
    m = float(params.get("m", 0.0))
    if not 0 < alpha < 1 or m < 0:
        raise ParameterError(f"tempered_stable needs alpha in (0,1) and m >= 0, got {alpha}, {m}",
                             op="levy_density")
    coef = alpha / special.gamma(1.0 - alpha)

    def tail(y):
        if y <= 0:
            return INF
        if m == 0:
            return y ** (-alpha) / special.gamma(1.0 - alpha)
        return _quad(lambda r: coef * math.exp(-m * r) * r ** (-1.0 - alpha), y, INF, "tail")

    name = "stable" if m == 0 else "tempered_stable"
    return LevyDensity(
        name, {"alpha": alpha, "m": m},
        density=lambda y: coef * np.exp(-m * y) * y ** (-1.0 - alpha),
        tail=tail, v_at_zero=INF, total_mass=INF, beta=alpha, regvar=(alpha, 1.0))


def _stable(params):
    return _tempered_stable({"alpha": params.get("alpha", 0.5), "m": 0.0})


LEVY_DENSITIES = {
    "exp_over_y": _exp_over_y,
    "exponential": _exponential,
    "stable": _stable,
    "tempered_stable": _tempered_stable,
}


def levy_density(name, **params):
    try:
        factory = LEVY_DENSITIES[name]
    except KeyError:
        raise ParameterError(f"unknown Levy density '{name}', choose from {sorted(LEVY_DENSITIES)}",
                             op="levy_density") from None
    return factory(params)


###################################### Triplet and flags


@dataclass(frozen=True)
class LevyTriplet:
    k: float = 0.0
    d: float = 0.0
    density: LevyDensity = None
    atoms: tuple = ()

    def __post_init__(self):
        if self.k < 0 or self.d < 0:
            raise ParameterError(f"killing and drift must be non-negative, got k={self.k}, d={self.d}",
                                 op="LevyTriplet")
        if self.density is not None and self.atoms:
            raise ParameterError("a Levy measure is either a density or a list of atoms", op="LevyTriplet")
        for y, w in self.atoms:
            if y <= 0 or w <= 0:
                raise ParameterError(f"atom ({y}, {w}) needs positive location and weight", op="LevyTriplet")
        if self.k == 0 and self.d == 0 and self.measure_kind == "none":
            raise ParameterError("trivial Bernstein function phi = 0 is excluded", op="LevyTriplet")
        if self.density is not None:
            near = _quad(lambda y: y * self.density.density(y), 0.0, 1.0, "LevyTriplet")
            far = _quad(lambda y: self.density.density(y), 1.0, INF, "LevyTriplet")
            logging.debug(f"[LevyTriplet] {self.density}: int(1^y) mu = {near + far:.6g}")

    @property
    def measure_kind(self):
        if self.density is not None:
            return "density"
        return "atoms" if self.atoms else "none"

    def total_mass(self):
        if self.density is not None:
            return self.density.total_mass
        return float(sum(w for _, w in self.atoms))

    def tail(self, y):
        """mu((y, oo))."""
        if self.density is not None:
            return self.density.tail(y)
        return float(sum(w for loc, w in self.atoms if loc > y))

    def levy_integral(self, u):
        """int (1 - e^{-uy}) mu(dy) for real u >= 0."""
        if self.measure_kind == "none":
            return 0.0
        if self.atoms:
            return float(sum(w * _one_minus_exp(u * loc) for loc, w in self.atoms))
        if u == 0:
            return 0.0
        v = self.density.density
        # on (0,1] the u*y cancellation is explicit
        head = _quad(lambda y: u * y * v(y) * (_one_minus_exp(u * y) / (u * y)), 0.0, 1.0, "eval")
        rest = _quad(lambda y: v(y) * _one_minus_exp(u * y), 1.0, INF, "eval")
        return head + rest

    def levy_integral_complex(self, z):
        if self.measure_kind == "none":
            return 0j
        if self.atoms:
            return complex(sum(w * _one_minus_exp(z * loc) for loc, w in self.atoms))
        v = self.density.density
        parts = []
        for take in (np.real, np.imag):
            head = _quad(lambda y: take(v(y) * _one_minus_exp(z * y)), 0.0, 1.0, "eval_complex")
            rest = _quad(lambda y: take(v(y) * _one_minus_exp(z * y)), 1.0, INF, "eval_complex")
            parts.append(head + rest)
        return complex(parts[0], parts[1])

    def levy_derivative(self, u):
        """int y e^{-uy} mu(dy)."""
        if self.measure_kind == "none":
            return 0.0
        if self.atoms:
            return float(sum(w * loc * math.exp(-u * loc) for loc, w in self.atoms))
        v = self.density.density
        head = _quad(lambda y: y * math.exp(-u * y) * v(y), 0.0, 1.0, "derivative")
        rest = _quad(lambda y: y * math.exp(-u * y) * v(y), 1.0, INF, "derivative")
        return head + rest


@dataclass(frozen=True)
class ClassFlags:
    has_drift: bool = False
    is_bounded: bool = False
    in_jurek: bool = False
    power_jurek: bool = False
    is_complete: bool = False
    v_at_zero: float = math.nan

    def __post_init__(self):
        if self.is_complete and not self.power_jurek:
            raise ParameterError("complete Bernstein functions have the power-Jurek property", op="ClassFlags")
        if self.has_drift and self.is_bounded:
            raise ParameterError("a Bernstein function with drift is unbounded", op="ClassFlags")


@dataclass(frozen=True)
class RatioCondition:
    y_alpha: float
    m_min: float
    holds: bool


###################################### Families


class BernsteinFunction:
    """
    Base class of every Bernstein function family.

    Subclasses supply the vectorised kernels ``_value``, ``_value_complex`` and
    ``_derivative``; the public methods validate arguments and convert scalars.
    """
    family = "abstract"

    def __init__(self, flags, killing, drift, triplet=None, beta=None, delta=None,
                 regvar=None, limsup_regular=False, params=None):
        self.flags = flags
        self.killing = float(killing)
        self.drift = float(drift)
        self.triplet = triplet
        self._declared = None if beta is None else (float(beta), float(delta if delta is not None else beta))
        self.regvar = regvar
        self.limsup_regular = limsup_regular
        self.params = dict(params or {})
        if self._declared is not None:
            b, dl = self._declared
            if not 0 <= dl <= b <= 1:
                raise ParameterError(f"indices must satisfy 0 <= delta <= beta <= 1, got {b}, {dl}",
                                     op=self.family)

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{self.__class__.__name__}({args})"

    # -- indices

    @property
    def declares_indices(self):
        return self._declared is not None

    @cached_property
    def _indices(self):
        if self._declared is not None:
            return self._declared
        beta_hat, delta_hat = estimate_indices(self, 1e2, 1e6, use_declared=False)
        beta_hat = min(max(beta_hat, 0.0), 1.0)
        delta_hat = min(max(delta_hat, 0.0), beta_hat)
        logging.info(f"[{self.__class__.__name__}] estimated indices beta={beta_hat:.4f} delta={delta_hat:.4f}")
        return beta_hat, delta_hat

    @property
    def beta(self):
        return self._indices[0]

    @property
    def delta(self):
        return self._indices[1]

    @property
    def is_constant(self):
        return self.drift == 0 and self.flags.is_bounded and self.phi_infinity() == self.killing

    # -- evaluation

    def eval(self, u):
        arr, scalar = _as_float_array(u)
        if np.any(arr < 0) or np.any(np.isnan(arr)):
            raise DomainError("phi is evaluated on u >= 0", op="eval")
        return _output(self._value(arr), scalar)

    def log_eval(self, u):
        arr, scalar = _as_float_array(u)
        if np.any(arr < 0):
            raise DomainError("phi is evaluated on u >= 0", op="eval")
        return _output(self._log_value(arr), scalar)

    def eval_complex(self, z):
        arr, scalar = _as_complex_array(z)
        if np.any(arr.real <= 0):
            raise DomainError("complex evaluation needs Re z > 0", op="eval_complex")
        return _output(self._value_complex(arr), scalar)

    def log_eval_complex(self, z):
        """Principal Log phi(z); analytic on Re z > 0 since phi maps it into itself."""
        arr, scalar = _as_complex_array(z)
        if np.any(arr.real <= 0):
            raise DomainError("complex evaluation needs Re z > 0", op="eval_complex")
        return _output(self._log_value_complex(arr), scalar)

    def derivative(self, u):
        arr, scalar = _as_float_array(u)
        if np.any(arr <= 0):
            raise DomainError("derivatives are taken at u > 0", op="derivative")
        return _output(self._derivative(arr), scalar)

    def log_derivative(self, u):
        arr, scalar = _as_float_array(u)
        if np.any(arr <= 0):
            raise DomainError("derivatives are taken at u > 0", op="log_derivative")
        return _output(self._log_derivative(arr), scalar)

    def log_ratio(self, r, w):
        """log phi(r) - Log phi(r + w), broadcast over real r > 0 and complex w with Re(r + w) > 0."""
        r = np.asarray(r, dtype=float)
        w = np.asarray(w, dtype=complex)
        if np.any(r <= 0) or np.any((r + w).real <= 0):
            raise DomainError("log_ratio needs r > 0 and Re(r + w) > 0", op="log_ratio")
        return _output(self._log_ratio(r, w), r.ndim == 0 and w.ndim == 0)

    def inverse(self, y):
        if self.is_constant:
            raise ParameterError("a constant Bernstein function has no inverse", op="inverse")
        arr, scalar = _as_float_array(y)
        top = self.phi_infinity()
        if np.any(arr < self.killing) or np.any(arr >= top) or np.any(np.isnan(arr)):
            raise DomainError(f"inverse needs y in [{self.killing}, {top})", op="inverse")
        return _output(self._inverse(arr), scalar)

    def phi_infinity(self):
        return INF

    def tail(self, y):
        if self.triplet is None:
            raise UnsupportedFamilyError(f"{self.family} has no executable Levy triplet", op="tail")
        return self.triplet.tail(y)

    def describe(self):
        return {"family": self.family, **self.params}

    # -- kernels; subclasses override

    def _value(self, u):
        raise NotImplementedError

    def _value_complex(self, z):
        raise NotImplementedError

    def _derivative(self, u):
        raise NotImplementedError

    def _log_value(self, u):
        with np.errstate(divide="ignore"):
            return np.log(self._value(u))

    def _log_value_complex(self, z):
        return np.log(self._value_complex(z))

    def _log_derivative(self, u):
        return self._derivative(u) / self._value(u)

    def _log_ratio(self, r, w):
        return self._log_value(r) - self._log_value_complex(r + w)

    def _inverse(self, y):
        return self._bisect_inverse(y)

    def _bisect_inverse(self, y):
        lo = np.zeros_like(y)
        hi = np.ones_like(y)
        for _ in range(1100):
            short = self._value(hi) < y
            if not short.any():
                break
            hi = np.where(short, 2.0 * hi, hi)
        if np.any(np.isinf(hi)):
            raise DomainError("inverse bracket overflowed", op="inverse")
        for _ in range(1200):
            mid = 0.5 * (lo + hi)
            below = self._value(mid) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-14 * np.maximum(1.0, hi)):
                break
        u = 0.5 * (lo + hi)
        # Newton polish, kept inside the bracket
        for _ in range(2):
            with np.errstate(divide="ignore", invalid="ignore"):
                slope = self._derivative(np.maximum(u, np.finfo(float).tiny))
                step = (self._value(u) - y) / slope
            u = np.where(np.isfinite(step), np.clip(u - step, lo, hi), u)
        return u


class Identity(BernsteinFunction):
    family = "identity"

    def __init__(self):
        super().__init__(ClassFlags(True, False, True, True, True, 0.0), killing=0.0, drift=1.0,
                         triplet=LevyTriplet(d=1.0), beta=1.0, delta=1.0, limsup_regular=True)

    def _value(self, u):
        return u.copy()

    def _value_complex(self, z):
        return z.copy()

    def _derivative(self, u):
        return np.ones_like(u)

    def _log_derivative(self, u):
        return 1.0 / u

    def _inverse(self, y):
        return y.copy()


class Constant(BernsteinFunction):
    family = "constant"

    def __init__(self, k):
        k = float(k)
        if not k > 0:
            raise ParameterError(f"Constant needs k > 0, got {k}", op="Constant")
        super().__init__(ClassFlags(False, True, True, True, True, 0.0), killing=k, drift=0.0,
                         triplet=LevyTriplet(k=k), beta=0.0, delta=0.0, params={"k": k})
        self.k = k

    def phi_infinity(self):
        return self.k

    def _value(self, u):
        return np.full_like(u, self.k)

    def _value_complex(self, z):
        return np.full_like(z, self.k)

    def _derivative(self, u):
        return np.zeros_like(u)


class PowerShifted(BernsteinFunction):
    family = "power_shifted"

    def __init__(self, alpha, m=0.0):
        alpha, m = float(alpha), float(m)
        if not 0 < alpha < 1 or m < 0:
            raise ParameterError(f"PowerShifted needs alpha in (0,1), m >= 0, got {alpha}, {m}",
                                 op="PowerShifted")
        triplet = LevyTriplet(k=m ** alpha, density=levy_density("tempered_stable", alpha=alpha, m=m))
        super().__init__(ClassFlags(False, False, True, True, True, INF), killing=m ** alpha, drift=0.0,
                         triplet=triplet, beta=alpha, delta=alpha, regvar=(alpha, 1.0),
                         limsup_regular=True, params={"alpha": alpha, "m": m})
        self.alpha, self.m = alpha, m

    def _value(self, u):
        return (u + self.m) ** self.alpha

    def _value_complex(self, z):
        return np.power(z + self.m, self.alpha)

    def _derivative(self, u):
        return self.alpha * (u + self.m) ** (self.alpha - 1.0)

    def _log_derivative(self, u):
        return self.alpha / (u + self.m)

    def _inverse(self, y):
        return np.maximum(y ** (1.0 / self.alpha) - self.m, 0.0)


def bernoulli_polynomial(n, x):
    """B_n(x) = sum_k C(n, k) B_k x^(n-k), with B_1 = -1/2."""
    k = np.arange(n + 1)
    return float(np.sum(special.comb(n, k) * special.bernoulli(n) * float(x) ** (n - k)))


class GammaRatio(BernsteinFunction):
    """phi(u) = Gamma(alpha u + a) / Gamma(alpha u + b); Levy density not available."""
    family = "gamma_ratio"

    def __init__(self, alpha, a, b):
        alpha, a, b = float(alpha), float(a), float(b)
        if not (0 < alpha <= 1 and 0 <= b < a < b + 1):
            raise ParameterError(f"GammaRatio needs alpha in (0,1], 0 <= b < a < b+1, got {alpha}, {a}, {b}",
                                 op="GammaRatio")
        index = a - b
        super().__init__(ClassFlags(False, False, True, True, True, INF),
                         killing=special.gamma(a) * special.rgamma(b), drift=0.0,
                         beta=index, delta=index, regvar=(index, alpha ** index), limsup_regular=True,
                         params={"alpha": alpha, "a": a, "b": b})
        self.alpha, self.a, self.b = alpha, a, b
        self._far = max(RATIO_SERIES_FROM, 8.0 * (a + b))
        # B_n(a) - B_n(b) for n = 2..RATIO_SERIES_TERMS
        self._gaps = np.array([bernoulli_polynomial(n, a) - bernoulli_polynomial(n, b)
                               for n in range(2, RATIO_SERIES_TERMS + 1)])

    def _series(self, x):
        """sum_n (-1)^n (B_n(a) - B_n(b)) / (n (n-1) x^(n-1)), the correction to (a - b) Log x."""
        inv = 1.0 / x
        total = np.zeros_like(inv)
        for n, gap in reversed(list(enumerate(self._gaps, start=2))):
            total = (total + (-1) ** n * gap / (n * (n - 1))) * inv
        return total

    def _series_derivative(self, x):
        """d/dx of (a - b) Log x + _series(x)."""
        inv = 1.0 / x
        total = np.zeros_like(inv)
        for n, gap in reversed(list(enumerate(self._gaps, start=2))):
            total = (total - (-1) ** n * gap / n) * inv
        return ((self.a - self.b) + total) * inv

    def _log_gamma_ratio(self, x):
        """log Gamma(x + a) - log Gamma(x + b); the Bernoulli expansion once |x| >= _far."""
        out = np.empty_like(x)
        far = np.abs(x) >= self._far
        near = ~far
        with np.errstate(divide="ignore", invalid="ignore"):
            out[near] = special.loggamma(x[near] + self.a) - special.loggamma(x[near] + self.b)
        out[far] = (self.a - self.b) * np.log(x[far]) + self._series(x[far])
        return out

    def _log_value(self, u):
        return np.real(self._log_gamma_ratio(self.alpha * np.atleast_1d(u))).reshape(np.shape(u))

    def _value(self, u):
        return np.exp(self._log_value(u))

    def _log_value_complex(self, z):
        return self._log_gamma_ratio(self.alpha * np.atleast_1d(z)).reshape(np.shape(z))

    def _value_complex(self, z):
        return np.exp(self._log_value_complex(z))

    def _log_derivative(self, u):
        x = self.alpha * np.atleast_1d(u)
        out = np.empty_like(x)
        far = x >= self._far
        near = ~far
        out[near] = special.digamma(x[near] + self.a) - special.digamma(x[near] + self.b)
        out[far] = self._series_derivative(x[far])
        return (self.alpha * out).reshape(np.shape(u))

    def _log_ratio(self, r, w):
        r, w = np.broadcast_arrays(np.asarray(r, dtype=float), np.asarray(w, dtype=complex))
        x = self.alpha * r
        step = self.alpha * w
        out = np.empty(r.shape, dtype=complex)
        far = (x >= self._far) & (np.abs(x + step) >= self._far)
        near = ~far
        out[near] = super()._log_ratio(r[near], w[near])
        x, step = x[far], step[far]
        out[far] = (self.b - self.a) * np.log1p(step / x) + self._series(x) - self._series(x + step)
        return out

    def _derivative(self, u):
        return self._value(u) * self._log_derivative(u)


def gauss_laguerre(alpha, m):
    """The Gauss-Laguerre member: a = alpha m + 1, b = alpha m + 1 - alpha."""
    alpha, m = float(alpha), float(m)
    phi = GammaRatio(alpha, alpha * m + 1.0, alpha * m + 1.0 - alpha)
    phi.family = "gauss_laguerre"
    phi.params = {"alpha": alpha, "m": m}
    return phi


def gamma_ratio_with_threshold(T, alpha=1.0, b=0.0):
    """GammaRatio whose semigroup switches to indeterminacy at time T > 2."""
    T = float(T)
    if not T > 2:
        raise ParameterError(f"threshold must exceed 2, got {T}", op="gamma_ratio_with_threshold")
    return GammaRatio(alpha, b + 2.0 / T, b)


class Log(BernsteinFunction):
    family = "log"

    def __init__(self, lam=1.0):
        lam = float(lam)
        if not lam > 0:
            raise ParameterError(f"Log needs lambda > 0, got {lam}", op="Log")
        triplet = LevyTriplet(density=levy_density("exp_over_y", **{"lambda": lam}))
        super().__init__(ClassFlags(False, False, True, True, True, INF), killing=0.0, drift=0.0,
                         triplet=triplet, beta=0.0, delta=0.0, params={"lambda": lam})
        self.lam = lam

    def _value(self, u):
        return np.log1p(u / self.lam)

    def _value_complex(self, z):
        return np.log(1.0 + z / self.lam)

    def _derivative(self, u):
        return 1.0 / (self.lam + u)

    def _inverse(self, y):
        with np.errstate(over="ignore"):
            return self.lam * np.expm1(y)


class BoundedRatio(BernsteinFunction):
    family = "bounded_ratio"

    def __init__(self):
        triplet = LevyTriplet(density=levy_density("exponential", c=1.0, **{"lambda": 1.0}))
        super().__init__(ClassFlags(False, True, True, True, True, 1.0), killing=0.0, drift=0.0,
                         triplet=triplet, beta=0.0, delta=0.0)

    def phi_infinity(self):
        return 1.0

    def _value(self, u):
        return u / (u + 1.0)

    def _value_complex(self, z):
        return z / (z + 1.0)

    def _derivative(self, u):
        return 1.0 / (u + 1.0) ** 2

    def _log_derivative(self, u):
        return 1.0 / (u * (u + 1.0))

    def _inverse(self, y):
        return y / (1.0 - y)


class GenericTriplet(BernsteinFunction):
    """phi(u) = k + d u + int (1 - e^{-uy}) mu(dy) by split quadrature."""
    family = "generic_triplet"

    def __init__(self, triplet):
        density = triplet.density
        has_drift = triplet.d > 0
        mass = triplet.total_mass()
        bounded = not has_drift and math.isfinite(mass)
        if triplet.measure_kind == "none":
            jurek, complete, v0, beta, regvar = True, True, 0.0, (1.0 if has_drift else 0.0), None
        elif density is not None:
            jurek, complete, v0 = density.non_increasing, density.completely_monotone, density.v_at_zero
            beta, regvar = density.beta, density.regvar
        else:
            jurek, complete, v0, beta, regvar = False, False, math.nan, 0.0, None
        if has_drift:
            beta, regvar = 1.0, None
        elif bounded:
            beta, regvar = 0.0, None
        super().__init__(ClassFlags(has_drift, bounded, jurek, complete, complete, v0),
                         killing=triplet.k, drift=triplet.d, triplet=triplet,
                         beta=beta, delta=beta, regvar=regvar, limsup_regular=beta is not None and beta > 0,
                         params=self._describe_triplet(triplet))
        self._mass = mass

    @staticmethod
    def _describe_triplet(triplet):
        params = {"k": triplet.k, "d": triplet.d}
        if triplet.density is not None:
            params["v"] = triplet.density.name
            params.update(triplet.density.params)
        elif triplet.atoms:
            params["atoms"] = ", ".join(f"{y}:{w}" for y, w in triplet.atoms)
        return params

    def phi_infinity(self):
        if self.drift > 0:
            return INF
        return self.killing + self._mass

    def _value(self, u):
        t = self.triplet
        return np.vectorize(lambda x: t.k + t.d * x + t.levy_integral(x), otypes=[float])(u)

    def _value_complex(self, z):
        if np.any(np.abs(z.imag) > COMPLEX_IM_LIMIT):
            raise UnsupportedFamilyError(f"quadrature-backed complex evaluation is limited to |Im z| <= "
                                         f"{COMPLEX_IM_LIMIT:g}", op="eval_complex")
        t = self.triplet
        return np.vectorize(lambda w: t.k + t.d * w + t.levy_integral_complex(w), otypes=[complex])(z)

    def _derivative(self, u):
        t = self.triplet
        return np.vectorize(lambda x: t.d + t.levy_derivative(x), otypes=[float])(u)

    def _inverse(self, y):
        t = self.triplet
        if t.measure_kind == "none":
            return (y - t.k) / t.d
        return self._bisect_inverse(y)


class Sum(BernsteinFunction):
    family = "sum"

    def __init__(self, parts):
        parts = list(parts)
        if not parts:
            raise ParameterError("Sum needs at least one part", op="Sum")
        self.parts = parts
        flags = ClassFlags(
            has_drift=any(p.flags.has_drift for p in parts),
            is_bounded=all(p.flags.is_bounded for p in parts),
            in_jurek=all(p.flags.in_jurek for p in parts),
            power_jurek=all(p.flags.is_complete for p in parts),
            is_complete=all(p.flags.is_complete for p in parts),
            v_at_zero=float(sum(p.flags.v_at_zero for p in parts)))
        beta = delta = regvar = None
        limsup = False
        if all(p.declares_indices for p in parts):
            beta = max(p.beta for p in parts)
            delta = max(p.delta for p in parts)
            leading = [p for p in parts if p.beta == beta]
            limsup = all(p.limsup_regular for p in leading)
            if beta > 0 and all(p.regvar is not None and p.regvar[0] == beta for p in leading):
                regvar = (beta, float(sum(p.regvar[1] for p in leading)))
        super().__init__(flags, killing=sum(p.killing for p in parts), drift=sum(p.drift for p in parts),
                         beta=beta, delta=delta, regvar=regvar, limsup_regular=limsup,
                         params={"parts": "; ".join(_spec_string(p) for p in parts)})

    def phi_infinity(self):
        return float(sum(p.phi_infinity() for p in self.parts))

    def tail(self, y):
        return float(sum(p.tail(y) for p in self.parts))

    def _value(self, u):
        return sum(p._value(u) for p in self.parts)

    def _value_complex(self, z):
        return sum(p._value_complex(z) for p in self.parts)

    def _derivative(self, u):
        return sum(p._derivative(u) for p in self.parts)


class Composition(BernsteinFunction):
    """phi = outer(inner(u)); finer class flags are not propagated."""
    family = "composition"

    def __init__(self, outer, inner):
        self.outer, self.inner = outer, inner
        drift = outer.drift * inner.drift
        inner_top = inner.phi_infinity()
        top = outer.phi_infinity() if math.isinf(inner_top) else float(outer.eval(inner_top))
        self._top = top
        flags = ClassFlags(has_drift=drift > 0, is_bounded=math.isfinite(top))
        super().__init__(flags, killing=float(outer.eval(inner.killing)), drift=drift,
                         params={"outer": _spec_string(outer), "inner": _spec_string(inner)})

    def phi_infinity(self):
        return self._top

    def _value(self, u):
        return self.outer._value(self.inner._value(u))

    def _value_complex(self, z):
        return self.outer._value_complex(self.inner._value_complex(z))

    def _derivative(self, u):
        return self.outer._derivative(self.inner._value(u)) * self.inner._derivative(u)


###################################### Operations on families


def estimate_indices(phi, u_lo, u_hi, points=41, use_declared=True):
    """Slope estimates of log phi against log u; declared catalog indices win."""
    if not (1 <= u_lo < u_hi) or points < 3:
        raise ParameterError(f"index grid needs 1 <= u_lo < u_hi and >= 3 points, got [{u_lo}, {u_hi}]",
                             op="estimate_indices")
    if phi.is_constant:
        raise ParameterError("indices of a constant are not estimated", op="estimate_indices")
    if use_declared and phi.declares_indices:
        return phi.beta, phi.delta
    u = np.geomspace(u_lo, u_hi, points)
    log_u = np.log(u)
    log_phi = np.asarray(phi.log_eval(u), dtype=float)
    if not np.all(np.isfinite(log_phi)):
        raise ParameterError("phi is not finite and positive on the index grid", op="estimate_indices")
    slopes = np.diff(log_phi) / np.diff(log_u)
    fit = float(np.polyfit(log_u, log_phi, 1)[0])
    if slopes.max() - slopes.min() < INDEX_SPREAD:
        return fit, fit
    return float(slopes.max()), float(slopes.min())


def ratio_condition(phi, alpha):
    """Sufficient condition for phi / phi_{alpha,m} to be Bernstein for all m >= m_min."""
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0,1), got {alpha}", op="ratio_condition")
    if not phi.flags.has_drift:
        raise InapplicableError("ratio condition needs a drift", op="ratio_condition")
    level = phi.drift * (1.0 - alpha)

    def exceeds(y):
        return y * phi.tail(y) > level

    y_alpha = INF
    previous = 0.0
    for y in np.geomspace(1e-8, 1e8, 321):
        if exceeds(y):
            lo, hi = previous, float(y)
            while hi - lo > 1e-13 * hi:
                mid = 0.5 * (lo + hi)
                if exceeds(mid):
                    hi = mid
                else:
                    lo = mid
            y_alpha = hi
            break
        previous = float(y)
    head = phi.tail(y_alpha / 2.0) if math.isfinite(y_alpha) else 0.0
    m_min = (head + phi.killing) / phi.drift
    logging.debug(f"[RatioCondition] alpha={alpha}: y_alpha={y_alpha}, m_min={m_min}")
    return RatioCondition(y_alpha=y_alpha, m_min=m_min, holds=True)


def potential_density_reference(alpha, m, y):
    """e^{-my} y^{alpha-1} / Gamma(alpha), the potential density of (u+m)^alpha."""
    if not 0 < alpha < 1 or m < 0 or y <= 0:
        raise ParameterError(f"need alpha in (0,1), m >= 0, y > 0; got {alpha}, {m}, {y}",
                             op="potential_density_reference")
    return math.exp(-m * y) * y ** (alpha - 1.0) / special.gamma(alpha)


###################################### Config grammar


def _clean(value):
    return str(value).strip().strip('"').strip("'")


def _number(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ParameterError(f"family parameter '{key}' is required", op="family_from_config")
        return default
    try:
        return float(_clean(cfg[key]))
    except ValueError:
        raise ParameterError(f"family parameter '{key}' is not a number: {cfg[key]}",
                             op="family_from_config") from None


def _parse_atoms(text):
    atoms = []
    for chunk in _clean(text).split(","):
        if not chunk.strip():
            continue
        try:
            y, w = chunk.split(":")
            atoms.append((float(y), float(w)))
        except ValueError:
            raise ParameterError(f"atom '{chunk}' is not 'location:weight'", op="family_from_config") from None
    return tuple(atoms)


def parse_inline(spec):
    tokens = _clean(spec).split()
    if not tokens:
        raise ParameterError("empty family spec", op="family_from_config")
    cfg = {"family": tokens[0]}
    for token in tokens[1:]:
        if "=" not in token:
            raise ParameterError(f"'{token}' is not key=value", op="family_from_config")
        key, value = token.split("=", 1)
        cfg[key.strip().lower()] = value.strip()
    return cfg


def _spec_string(phi):
    parts = [phi.family] + [f"{k}={v}" for k, v in phi.params.items() if k not in ("parts", "outer", "inner")]
    return " ".join(parts)


def family_from_config(config):
    """Build a BernsteinFunction from a [family] mapping of strings."""
    cfg = {str(k).strip().lower(): v for k, v in dict(config).items()}
    name = _clean(cfg.get("family", "")).lower()
    if name == "identity":
        return Identity()
    if name == "constant":
        return Constant(_number(cfg, "k"))
    if name == "power_shifted":
        return PowerShifted(_number(cfg, "alpha"), _number(cfg, "m", 0.0))
    if name == "gamma_ratio":
        return GammaRatio(_number(cfg, "alpha", 1.0), _number(cfg, "a"), _number(cfg, "b"))
    if name == "gauss_laguerre":
        return gauss_laguerre(_number(cfg, "alpha"), _number(cfg, "m"))
    if name == "log":
        return Log(_number(cfg, "lambda", 1.0))
    if name == "bounded_ratio":
        return BoundedRatio()
    if name == "generic_triplet":
        density = None
        if "v" in cfg:
            params = {key: _number(cfg, key) for key in ("lambda", "c", "alpha", "m") if key in cfg}
            density = levy_density(_clean(cfg["v"]), **params)
        atoms = _parse_atoms(cfg["atoms"]) if "atoms" in cfg else ()
        return GenericTriplet(LevyTriplet(k=_number(cfg, "k", 0.0), d=_number(cfg, "d", 0.0),
                                          density=density, atoms=atoms))
    if name == "sum":
        specs = [s for s in _clean(cfg.get("parts", "")).split(";") if s.strip()]
        return Sum([family_from_config(parse_inline(s)) for s in specs])
    if name == "composition":
        if "outer" not in cfg or "inner" not in cfg:
            raise ParameterError("composition needs 'outer' and 'inner'", op="family_from_config")
        return Composition(family_from_config(parse_inline(cfg["outer"])),
                           family_from_config(parse_inline(cfg["inner"])))
    raise ParameterError(f"unknown family '{name}'", op="family_from_config")


def parse_family_spec(spec):
    """'power_shifted alpha=0.5 m=1' -> PowerShifted(0.5, 1)."""
    return family_from_config(parse_inline(spec))


def catalog():
    """The six catalog families with the parameters used throughout the test suites."""
    return {
        "identity": Identity(),
        "constant": Constant(2.0),
        "power_shifted": PowerShifted(0.5, 1.0),
        "gamma_ratio": GammaRatio(1.0, 1.0, 0.3),
        "log": Log(1.0),
        "bounded_ratio": BoundedRatio(),
    }
