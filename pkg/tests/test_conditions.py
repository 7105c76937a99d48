import pytest

from asl.conditions import (CONDITIONS, MG_SEQUENCE, SIPM_SEQUENCE, ConstraintViolation,
                            beta_violations, verify_conditions)
from asl.symbols import ipm_symbol, mg_symbol


def test_mg_alpha0_all_hold(mg_report):
    assert mg_report.all_hold, mg_report.summary_line()
    assert set(mg_report.verdicts) == set(CONDITIONS)


def test_sipm_alpha1_all_hold(sipm_report):
    assert sipm_report.all_hold, sipm_report.summary_line()


def test_ipm0_beta3_zero_rejected(ipm0):
    with pytest.raises(ConstraintViolation, match="beta3"):
        verify_conditions(ipm0, 1, SIPM_SEQUENCE, (2, -2, 0), 5, 20)


def test_constraint_block():
    assert beta_violations((3, -2, 1), 1.0) == []
    assert beta_violations((1, -2, 2), 1.0)       # beta3 > beta1
    assert beta_violations((3, -1, 1), 1.0)       # beta1 + beta2 > r0
    assert beta_violations((3, -2.5, 1), 1.0)     # beta2 < -2
    assert beta_violations((3, 0, 1), 3.0)        # beta2 = 0


def test_c5_c6_witness_bounds(mg_report):
    C1, C2 = mg_report.Ctilde1, mg_report.Ctilde2
    b1, b2, b3 = mg_report.betas
    for row in mg_report.rows:
        if row.condition == "C5":
            assert row.value <= C1 * (1 + 1e-12)
        if row.condition == "C6":
            assert row.value >= C2 * (1 - 1e-12)


def test_constants_positive_stable(mg_report, sipm_report):
    for rep in (mg_report, sipm_report):
        assert rep.Ctilde1 > 0 and rep.Ctilde2 > 0
        assert rep.Ctilde1_stable and rep.Ctilde2_stable


def test_mg_constants_values(mg_report):
    assert mg_report.Ctilde2 == pytest.approx(0.00158604, rel=1e-5)


def test_csv_one_row_per_witness(mg_report):
    lines = mg_report.csv_text().splitlines()
    assert lines[0] == "condition,j,b,n,value,bound,holds,note"
    assert len(lines) == len(mg_report.rows) + 1


def test_summary_line_mentions_every_condition(mg_report):
    line = mg_report.summary_line()
    for c in CONDITIONS:
        assert f"{c}=pass" in line


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_mg_presets(alpha):
    rep = verify_conditions(mg_symbol({}, alpha), 1, MG_SEQUENCE, (3, alpha - 2, alpha + 1), 20, 200)
    assert rep.all_hold


def test_sipm_alpha15():
    rep = verify_conditions(ipm_symbol(1.5), 1, SIPM_SEQUENCE, (2, -0.5, 1.5), 50, 400)
    assert rep.all_hold


def test_c6_fails_when_beta3_too_large(mg0):
    # T_d(b, a) T_d(b, 2a) scales like |b|^2, so beta3 = 2 leaves no positive lower constant
    rep = verify_conditions(mg0, 1, MG_SEQUENCE, (3, -2, 2), 20, 200)
    assert not rep.all_hold
    assert not rep.verdicts["C6"].holds
    assert "j=20" in rep.verdicts["C6"].witness
    assert not rep.Ctilde2_stable
