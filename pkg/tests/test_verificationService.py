import math
import os

import pytest

from configService import load_config, parse_config
from transferMatrix import NPeriodMatrix, chebyshev_u
from verificationService import CheckResult, VerificationReport, run_verify

MINIMAL_CONFIG = os.path.join(os.path.dirname(__file__), "..", "configs", "minimal_n2.json")


def _power_with_shifted_index(m, n):
    # U_{n-2} where U_{n-1} belongs: breaks det M^n = 1
    x = m.a.real
    return NPeriodMatrix(m.a * chebyshev_u(n - 1, x) - chebyshev_u(n - 2, x), m.b * chebyshev_u(n - 2, x), n)


@pytest.fixture(scope="module")
def minimal_report():
    return run_verify(load_config(MINIMAL_CONFIG))


def test_check_result_line():
    ok = CheckResult("determinant", 1e-15, 1e-12)
    bad = CheckResult("determinant", math.inf, 0.0, "DomainError: boom")
    assert ok.passed and not bad.passed
    assert ok.line().startswith("✅ determinant")
    assert bad.line().startswith("❌ determinant")
    assert bad.line().endswith("(DomainError: boom)")


def test_report_lookup():
    report = VerificationReport([CheckResult("a", 0.0, 1.0), CheckResult("b", 2.0, 1.0)])
    assert not report.passed
    assert [check.name for check in report.failures] == ["b"]
    assert report.check("a").passed
    with pytest.raises(KeyError):
        report.check("c")


def test_minimal_config_passes(minimal_report):
    assert minimal_report.passed, [check.line() for check in minimal_report.failures]
    names = {check.name for check in minimal_report.checks}
    assert {"determinant", "resonance count", "dwell time = phase time", "v_res = L/tau_res = <v>"} <= names
    # the GaAs orderings only apply to six periods
    assert "max v_res at j=3" not in names


def test_six_period_superlattice_passes():
    report = run_verify(parse_config({"n": 6, "workers": 4}))
    assert report.passed, [check.line() for check in report.failures]
    assert report.check("max v_g at j=4").passed
    assert report.check("max v_res at j=3").passed
    assert report.check("v_res/v_g below one third").residual < 1.0 / 3.0


def test_free_cell_passes():
    config = parse_config({"cell": {"layers": [{"width_nm": 9.0}]}, "n": 3})
    report = run_verify(config)
    assert report.passed, [check.line() for check in report.failures]
    assert "|tilde alpha| = 1 at band edges" not in {check.name for check in report.checks}


def test_broken_power_is_detected():
    report = run_verify(parse_config({"n": 2}), power=_power_with_shifted_index)
    assert not report.passed
    assert not report.check("determinant").passed
    assert not report.check("chebyshev power vs product").passed


def _power_with_vanishing_a(m, n):
    return NPeriodMatrix(0j, m.b, n)


def test_arithmetic_failure_is_reported_not_raised():
    report = run_verify(parse_config({"n": 2}), power=_power_with_vanishing_a)
    assert not report.passed
    resonances = report.check("resonances")
    assert resonances.residual == math.inf
    assert resonances.detail.startswith("ZeroDivisionError")


def test_narrow_band_times_pass():
    # 5 nm barriers at 1 eV leave a band about 1.6e-4 eV wide
    config = parse_config({
        "cell": {"layers": [{"width_nm": 5.0, "potential_ev": 1.0}, {"width_nm": 6.5}]},
        "n": 4,
    })
    report = run_verify(config)
    for name in (
        "resonance count",
        "resonance amplitude (-1)^j",
        "phase time vs unwrapped difference",
        "Im tau_T^E at resonance",
        "tau_T^V = phase time",
    ):
        assert report.check(name).passed, report.check(name).line()


def test_verbose_prints_summary(capsys):
    run_verify(parse_config({"n": 2}), verbose=True)
    out = capsys.readouterr().out
    assert "✅ determinant" in out
    assert "📊" in out
