# Standard library imports
import logging
import math
from dataclasses import dataclass, field

# Third-party imports
import numpy as np

# Local application/library specific imports
from bernstein import ratio_condition
from errors import InapplicableError, ParameterError, UnsupportedFamilyError

INF = math.inf
SERIES_MARGIN = 0.05
GATE_SLACK = 1e-9
GATE_GRID = np.linspace(10.0, 40.0, 31)
RATIO_ALPHA = 0.5  # reference index for the drift domination rule
VERDICTS = ("determinate", "indeterminate", "unknown")
BASES = ("threshold-rule", "carleman-divergence", "abelian-convergence", "ratio-domination", "insufficient")


@dataclass(frozen=True)
class ThresholdBounds:
    lower: float
    upper: float
    sharp_at_lower: bool
    rule_trace: tuple = ()

    def __post_init__(self):
        if not 2 <= self.lower <= self.upper:
            raise ParameterError(f"bounds must satisfy 2 <= lower <= upper, got {self.lower}, {self.upper}",
                                 op="threshold_bounds")
        if math.isinf(self.lower) and not math.isinf(self.upper):
            raise ParameterError("an infinite lower bound forces an infinite upper bound", op="threshold_bounds")


@dataclass(frozen=True)
class SeriesDiagnostics:
    name: str
    partial_sums: tuple  # (n, S_n) checkpoints
    exponent_estimate: float
    classification: str
    n_terms: int
    companion_exponent: float = None  # exact Carleman terms m(n)^{-1/2n}, when computed


@dataclass(frozen=True)
class DeterminacyVerdict:
    t: float
    verdict: str
    basis: str
    bounds: ThresholdBounds = None
    diagnostics: tuple = ()
    family: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        bounds = None
        if self.bounds is not None:
            bounds = {"lower": _encode(self.bounds.lower), "upper": _encode(self.bounds.upper),
                      "sharp": self.bounds.sharp_at_lower, "rule_trace": list(self.bounds.rule_trace)}
        series = [{"name": d.name, "exponent": _encode(d.exponent_estimate), "classification": d.classification,
                   "N": d.n_terms, "partial_sums": [[n, _encode(s)] for n, s in d.partial_sums],
                   "companion_exponent": None if d.companion_exponent is None else _encode(d.companion_exponent)}
                  for d in self.diagnostics]
        return {"family": dict(self.family), "t": self.t, "verdict": self.verdict, "basis": self.basis,
                "bounds": bounds, "series": series}

    @classmethod
    def from_dict(cls, data):
        bounds = data.get("bounds")
        if bounds is not None:
            bounds = ThresholdBounds(_decode(bounds["lower"]), _decode(bounds["upper"]), bool(bounds["sharp"]),
                                     tuple(bounds.get("rule_trace", ())))
        diagnostics = tuple(
            SeriesDiagnostics(d["name"], tuple((int(n), _decode(s)) for n, s in d["partial_sums"]),
                              _decode(d["exponent"]), d["classification"], int(d["N"]),
                              None if d.get("companion_exponent") is None else _decode(d["companion_exponent"]))
            for d in data.get("series", ()))
        return cls(float(data["t"]), data["verdict"], data["basis"], bounds, diagnostics, dict(data.get("family", {})))


@dataclass(frozen=True)
class LinStatus:
    applies: bool
    condition: str


def _encode(value):
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return value


def _decode(value):
    return float(value)  # accepts the "inf" strings too


###################################### Threshold rules


def _ratio_domination(phi):
    try:
        condition = ratio_condition(phi, RATIO_ALPHA)
    except UnsupportedFamilyError:
        logging.debug(f"[ThresholdBounds] {phi!r}: no tail, ratio domination not checked")
        return ()
    return ("ratio-domination",) if condition.holds else ()


def threshold_bounds(phi, reference=None):
    """
    Bounds lower <= T_phi <= upper for the threshold index.

    ``reference`` is an optional Bernstein function theta with phi/theta
    Bernstein; when theta has the power-Jurek property it caps the upper
    bound at 2/delta_theta.
    """
    flags = phi.flags
    if flags.has_drift:
        bounds = ThresholdBounds(2.0, 2.0, True, ("drift",) + _ratio_domination(phi))
    elif phi.beta == 0:
        bounds = ThresholdBounds(INF, INF, True, ("beta-zero",))
    else:
        lower = max(2.0, 2.0 / phi.beta)
        sharp = phi.beta > 0 and bool(phi.limsup_regular)
        if flags.power_jurek:
            upper = 2.0 / phi.delta if phi.delta > 0 else INF
            trace = ("lower-2/beta", "power-jurek")
        else:
            upper, trace = INF, ("lower-2/beta", "no-upper-rule")
        if reference is not None and reference.flags.power_jurek and reference.delta > 0:
            capped = 2.0 / reference.delta
            if capped < upper:
                upper, trace = capped, tuple(t for t in trace if t != "no-upper-rule") + ("reference-domination",)
        bounds = ThresholdBounds(lower, max(upper, lower), sharp, trace)
    logging.debug(f"[ThresholdBounds] {phi!r}: {bounds}")
    return bounds


###################################### Series diagnostics


def _checkpoints(N):
    marks = [10 ** j for j in range(1, int(math.log10(N)) + 1) if 10 ** j < N]
    return marks + [N]


def _fit_exponent(n, log_terms):
    """p in term ~ C n^{-p}, regressed on n in [N/2, N]."""
    pick = n >= n[-1] / 2
    slope = np.polyfit(np.log(n[pick]), log_terms[pick], 1)[0]
    return float(-slope)


def _classify(p):
    if p < 1 - SERIES_MARGIN:
        return "diverges"
    if p > 1 + SERIES_MARGIN:
        return "converges"
    return "marginal"


def _diagnostics(name, n, log_terms, companion=None):
    sums = np.cumsum(np.exp(log_terms))
    partial = tuple((int(m), float(sums[m - 1])) for m in _checkpoints(len(n)))
    p = _fit_exponent(n, log_terms)
    return SeriesDiagnostics(name, partial, p, _classify(p), len(n), companion)


def carleman_series(phi, t, N=10 ** 4):
    """
    Bound series sum phi(n)^{-t/2} with the exact Carleman terms m(n)^{-1/2n}
    as companion; the bound series decides the classification.
    """
    if not t > 0 or N < 10:
        raise ParameterError(f"need t > 0 and N >= 10, got {t}, {N}", op="carleman_series")
    n = np.arange(1, N + 1, dtype=float)
    log_phi = np.asarray(phi.log_eval(n), dtype=float)
    exact = -t * np.cumsum(log_phi) / (2.0 * n)
    diag = _diagnostics("carleman", n, -0.5 * t * log_phi, _fit_exponent(n, exact))
    if diag.classification == "marginal" and diag.exponent_estimate <= 1 + 1e-6:
        # a pure power n^{-p} with p <= 1 diverges
        diag = SeriesDiagnostics(diag.name, diag.partial_sums, diag.exponent_estimate, "diverges", diag.n_terms,
                                 diag.companion_exponent)
    logging.debug(f"[Carleman] {phi!r} t={t}: p={diag.exponent_estimate:.4f} -> {diag.classification}")
    return diag


def abelian_gate(phi, t, c):
    """log(G'(y) e^{-y/2}) on y in [10, 40], G'(y) = (t-c)/t * varphi(e^{y/t}); must not increase."""
    scale = (t - c) / t
    values = []
    for y in GATE_GRID:
        w = math.exp(y / t) if y / t < 700 else INF
        inverse = float(phi.inverse(w)) if math.isfinite(w) else INF
        if not math.isfinite(inverse) or inverse <= 0:
            raise InapplicableError(f"G'(y) overflows at y={y:g}; the Abelian gate fails", op="abelian_series")
        values.append(math.log(scale) + math.log(inverse) - y / 2.0)
    for y, a, b in zip(GATE_GRID[1:], values, values[1:]):
        if b > a + GATE_SLACK * max(1.0, abs(a)):
            raise InapplicableError(f"G'(y) e^(-y/2) increases near y={y:g}; the Abelian gate fails",
                                    op="abelian_series")
    return values


def abelian_series(phi, t, c=None, N=10 ** 4):
    """Terms phi((t-c) n / t)^{-t/2}, after the G'(y)e^{-y/2} gate."""
    c = t / 10.0 if c is None else c
    if not t > 0 or not 0 < c < t or N < 10:
        raise ParameterError(f"need t > 0, 0 < c < t and N >= 10, got t={t}, c={c}, N={N}", op="abelian_series")
    if not math.isinf(phi.phi_infinity()) or not phi.flags.power_jurek:
        raise InapplicableError("the Abelian criterion needs phi(oo) = oo and the power-Jurek property",
                                op="abelian_series")
    abelian_gate(phi, t, c)
    n = np.arange(1, N + 1, dtype=float)
    log_terms = -0.5 * t * np.asarray(phi.log_eval((t - c) / t * n), dtype=float)
    diag = _diagnostics("abelian", n, log_terms)
    logging.debug(f"[Abelian] {phi!r} t={t} c={c}: p={diag.exponent_estimate:.4f} -> {diag.classification}")
    return diag


###################################### Verdicts


def _series_for(phi, t):
    diags = [carleman_series(phi, t)]
    try:
        diags.append(abelian_series(phi, t))
    except InapplicableError as e:
        logging.debug(f"[Verdict] abelian diagnostics skipped: {e}")
    return tuple(diags)


def verdict(phi, t, reference=None):
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}", op="verdict")
    bounds = threshold_bounds(phi, reference)
    if t < bounds.lower or (t == bounds.lower and (bounds.sharp_at_lower or bounds.lower == 2)):
        result = DeterminacyVerdict(float(t), "determinate", "threshold-rule", bounds, (), phi.describe())
    elif t > bounds.upper:
        basis = "ratio-domination" if "reference-domination" in bounds.rule_trace else "threshold-rule"
        result = DeterminacyVerdict(float(t), "indeterminate", basis, bounds, (), phi.describe())
    else:
        result = DeterminacyVerdict(float(t), "unknown", "insufficient", bounds, _series_for(phi, t),
                                    phi.describe())
    logging.info(f"[Verdict] {phi!r} t={t}: {result.verdict} ({result.basis})")
    return result


def power_verdict(phi, t, reference=None):
    """Determinacy of X^t, X ~ nu_1."""
    if not t > 0:
        raise ParameterError(f"t must be positive, got {t}", op="power_verdict")
    describe = phi.describe()
    if phi.flags.has_drift:
        outcome = "determinate" if t <= 2 else "indeterminate"
        return DeterminacyVerdict(float(t), outcome, "threshold-rule", None, (), describe)
    beta, delta = phi.beta, phi.delta
    if beta == 0 or t < 2.0 / beta or (t == 2.0 / beta and phi.limsup_regular):
        return DeterminacyVerdict(float(t), "determinate", "threshold-rule", None, (), describe)
    if phi.flags.in_jurek and delta > 0 and t > 2.0 / delta:
        return DeterminacyVerdict(float(t), "indeterminate", "threshold-rule", None, (), describe)
    if reference is not None and power_verdict(reference, t).verdict == "indeterminate":
        return DeterminacyVerdict(float(t), "indeterminate", "ratio-domination", None, (), describe)
    return DeterminacyVerdict(float(t), "unknown", "insufficient", None, (), describe)


def lin_status(phi):
    if phi.beta == 0:
        return LinStatus(True, "beta_zero")
    if phi.flags.has_drift:
        return LinStatus(True, "drift")
    if phi.delta == phi.beta > 0 and phi.flags.power_jurek and phi.limsup_regular:
        return LinStatus(True, "jurek_power_regular")
    return LinStatus(False, "none")
