import json
import math

import pytest

import determinacy
from bernstein import (BoundedRatio, Composition, GammaRatio, GenericTriplet, Identity, LevyTriplet, Log, PowerShifted, Sum,
                       catalog, gamma_ratio_with_threshold, levy_density)
from errors import InapplicableError, ParameterError


@pytest.mark.parametrize("phi, expected, sharp", [
    (Identity(), 2.0, True),
    (GammaRatio(1.0, 1.0, 0.3), 2.0 / 0.7, True),
    (PowerShifted(0.5, 0.0), 4.0, True),
    (Log(1.0), math.inf, True),
    (BoundedRatio(), math.inf, True),
])
def test_threshold_table(phi, expected, sharp):
    bounds = determinacy.threshold_bounds(phi)
    assert bounds.lower == pytest.approx(expected)
    assert bounds.upper == pytest.approx(expected)
    assert bounds.sharp_at_lower is sharp


def test_threshold_traces():
    assert determinacy.threshold_bounds(Identity()).rule_trace == ("drift", "ratio-domination")
    assert determinacy.threshold_bounds(Log(1.0)).rule_trace == ("beta-zero",)
    assert "power-jurek" in determinacy.threshold_bounds(PowerShifted(0.5, 1.0)).rule_trace


def test_ratio_domination_needs_a_tail():
    assert determinacy.threshold_bounds(Composition(Identity(), Identity())).rule_trace == ("drift",)
    drifted = GenericTriplet(LevyTriplet(d=1.0, density=levy_density("exponential", c=1.0, **{"lambda": 1.0})))
    assert determinacy.threshold_bounds(drifted).rule_trace == ("drift", "ratio-domination")


@pytest.mark.parametrize("T", [2.5, 3.0, 4.0, 10.0])
def test_every_threshold_is_attained(T):
    bounds = determinacy.threshold_bounds(gamma_ratio_with_threshold(T))
    assert bounds.lower == pytest.approx(T)
    assert bounds.upper == pytest.approx(T)


def _mixed():
    """beta = 0.5 without the power-Jurek property: no upper rule fires."""
    return Sum([PowerShifted(0.5, 0.0), GenericTriplet(LevyTriplet(atoms=((1.0, 1.0),)))])


def test_generic_triplet_thresholds():
    stable = GenericTriplet(LevyTriplet(density=levy_density("stable", alpha=0.5)))
    assert determinacy.threshold_bounds(stable).upper == pytest.approx(4.0)
    lumpy = GenericTriplet(LevyTriplet(atoms=((1.0, 1.0),)))
    assert determinacy.threshold_bounds(lumpy).lower == math.inf


def test_threshold_without_upper_rule():
    bounds = determinacy.threshold_bounds(_mixed())
    assert bounds.lower == pytest.approx(4.0)
    assert bounds.upper == math.inf
    assert bounds.rule_trace == ("lower-2/beta", "no-upper-rule")


def test_reference_caps_the_upper_bound():
    bounds = determinacy.threshold_bounds(_mixed(), reference=PowerShifted(0.5, 0.0))
    assert bounds.upper == pytest.approx(4.0)
    assert bounds.rule_trace == ("lower-2/beta", "reference-domination")
    result = determinacy.verdict(_mixed(), 4.5, reference=PowerShifted(0.5, 0.0))
    assert (result.verdict, result.basis) == ("indeterminate", "ratio-domination")


def test_bounds_validation():
    with pytest.raises(ParameterError):
        determinacy.ThresholdBounds(1.0, 2.0, True)
    with pytest.raises(ParameterError):
        determinacy.ThresholdBounds(3.0, 2.0, True)
    with pytest.raises(ParameterError):
        determinacy.ThresholdBounds(math.inf, 5.0, True)


def test_carleman_series():
    identity = Identity()
    harmonic = determinacy.carleman_series(identity, 2.0)
    assert harmonic.classification == "diverges"
    assert harmonic.exponent_estimate == pytest.approx(1.0, abs=1e-6)
    assert determinacy.carleman_series(identity, 2.5).classification == "converges"
    faster = determinacy.carleman_series(identity, 3.0)
    assert faster.classification == "converges"
    assert faster.exponent_estimate == pytest.approx(1.5, abs=1e-6)
    assert determinacy.carleman_series(Log(1.0), 10.0).classification == "diverges"


def test_carleman_partial_sums():
    diag = determinacy.carleman_series(Identity(), 2.0, N=1000)
    assert [n for n, _ in diag.partial_sums] == [10, 100, 1000]
    assert diag.partial_sums[-1][1] == pytest.approx(sum(1.0 / n for n in range(1, 1001)))
    assert diag.companion_exponent is not None


def test_abelian_series():
    identity = Identity()
    assert determinacy.abelian_series(identity, 3.0, c=0.5).classification == "converges"
    boundary = determinacy.abelian_series(identity, 2.0, c=0.01)
    assert boundary.classification == "marginal"
    assert boundary.exponent_estimate == pytest.approx(1.0, abs=1e-6)
    ratio = determinacy.abelian_series(GammaRatio(1.0, 1.0, 0.3), 4.0)
    assert ratio.classification == "converges"
    assert ratio.exponent_estimate == pytest.approx(1.4, abs=0.01)


@pytest.mark.parametrize("name", ["identity", "power_shifted", "gamma_ratio"])
def test_abelian_series_converges_above_threshold(name):
    phi = catalog()[name]
    t = determinacy.threshold_bounds(phi).upper + 0.5
    assert determinacy.abelian_series(phi, t).classification == "converges"


def test_abelian_gate():
    with pytest.raises(InapplicableError):
        determinacy.abelian_series(BoundedRatio(), 3.0)
    with pytest.raises(InapplicableError):
        determinacy.abelian_series(Log(1.0), 3.0)
    with pytest.raises(ParameterError):
        determinacy.abelian_series(Identity(), 3.0, c=3.0)


@pytest.mark.parametrize("phi, t, outcome", [
    (Identity(), 2.0, "determinate"),
    (Identity(), 2.5, "indeterminate"),
    (BoundedRatio(), 100.0, "determinate"),
    (Log(1.0), 50.0, "determinate"),
    (GammaRatio(1.0, 1.0, 0.3), 2.5, "determinate"),
    (GammaRatio(1.0, 1.0, 0.3), 3.0, "indeterminate"),
])
def test_verdicts(phi, t, outcome):
    result = determinacy.verdict(phi, t)
    assert result.verdict == outcome
    assert result.basis == "threshold-rule"


def test_unknown_verdict_carries_diagnostics():
    result = determinacy.verdict(_mixed(), 5.0)
    assert result.verdict == "unknown" and result.basis == "insufficient"
    assert [d.name for d in result.diagnostics] == ["carleman"]


def test_power_verdict():
    identity = Identity()
    assert determinacy.power_verdict(identity, 2.0).verdict == "determinate"
    assert determinacy.power_verdict(identity, 2.1).verdict == "indeterminate"
    root = PowerShifted(0.5, 0.0)
    assert determinacy.power_verdict(root, 3.9).verdict == "determinate"
    assert determinacy.power_verdict(root, 4.5).verdict == "indeterminate"
    with pytest.raises(ParameterError):
        determinacy.power_verdict(root, 0.0)


def test_lin_status():
    assert determinacy.lin_status(Identity()) == determinacy.LinStatus(True, "drift")
    assert determinacy.lin_status(Log(1.0)) == determinacy.LinStatus(True, "beta_zero")
    assert determinacy.lin_status(GammaRatio(1.0, 1.0, 0.3)) == determinacy.LinStatus(True, "jurek_power_regular")


def test_verdict_json_round_trip():
    phi = GammaRatio(1.0, 1.0, 0.3)
    for t in (2.0, 3.0):
        original = determinacy.verdict(phi, t)
        parsed = determinacy.DeterminacyVerdict.from_dict(json.loads(json.dumps(original.to_dict())))
        assert parsed == original
    infinite = determinacy.verdict(Log(1.0), 3.0)
    payload = json.dumps(infinite.to_dict())
    assert '"inf"' in payload
    assert determinacy.DeterminacyVerdict.from_dict(json.loads(payload)) == infinite
    unknown = determinacy.verdict(_mixed(), 5.0)
    assert determinacy.DeterminacyVerdict.from_dict(json.loads(json.dumps(unknown.to_dict()))) == unknown


VERDICT_ORDER = {"determinate": 0, "unknown": 1, "indeterminate": 2}
TIMES = (0.5, 1.0, 1.9, 2.5, 3.5, 5.0, 10.0)


@pytest.mark.parametrize("name", ["identity", "constant", "power_shifted", "gamma_ratio", "log", "bounded_ratio"])
def test_verdict_is_monotone_in_t(name):
    phi = catalog()[name]
    ranks = [VERDICT_ORDER[determinacy.verdict(phi, t).verdict] for t in TIMES]
    assert ranks == sorted(ranks)


@pytest.mark.parametrize("phi", [Identity(), Log(1.0), GammaRatio(1.0, 1.0, 0.3)])
def test_power_and_semigroup_verdicts_agree(phi):
    assert determinacy.lin_status(phi).applies
    for t in TIMES:
        semigroup = determinacy.verdict(phi, t).verdict
        power = determinacy.power_verdict(phi, t).verdict
        if "unknown" not in (semigroup, power):
            assert semigroup == power, t
