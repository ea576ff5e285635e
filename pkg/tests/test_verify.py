"""Tests for src.verify module."""

import numpy as np
import pytest

from src.curvature import CurvatureData
from src.dsl import load_builtin, parse_model
from src.sampling import sample_points
from src.settings import Tolerances
from src.verify import (
    CLAIMS,
    THEOREMS,
    ClaimSkippedError,
    DegenerateFitError,
    UnknownClaimError,
    UnknownTheoremError,
    Verifier,
    classify_einstein,
    format_number,
    run_claim,
    run_theorem,
    standing_assumption_check,
)

POINTS = [(0.0, 0.0, 0.0), (0.3, -0.2, 0.4), (-0.9, 0.7, -0.6)]

NUMBERED_IDENTITIES = {
    "eq-2.1",
    "eq-2.2",
    "eq-2.3",
    "eq-2.4",
    "eq-2.5",
    "eq-2.6",
    "eq-2.7",
    "eq-2.8",
    "eq-2.9",
    "normality",
    "eq-3.10",
    "prop-3.2",
    "eq-3.11",
    "eq-3.12",
    "eq-3.13",
    "eq-3.14",
    "eq-3.15",
    "eq-3.16",
    "eq-3.17",
    "eq-3.18",
}

# Claims that only run when their gate holds on the sample points
GATED = ("eq-2.3", "eq-3.17", "eq-3.18", "fd-christoffel", "fd-riemann")


def synthetic_curvature(ric: np.ndarray) -> CurvatureData:
    g = np.diag([1.0, -1.0, 1.0])
    zeros4 = np.zeros((3, 3, 3, 3))
    return CurvatureData(
        n=1,
        point=(0.0, 0.0, 0.0),
        g=g,
        g_inv=g,
        phi=np.zeros((3, 3)),
        xi=np.array([0.0, 0.0, 1.0]),
        eta=np.array([0.0, 0.0, 1.0]),
        riem=zeros4,
        riem_dn=zeros4,
        ric=ric,
    )


class TestFormatNumber:
    """Test cases for format_number."""

    @pytest.mark.parametrize(
        "value,expected",
        [
            (0.5, "0.5"),
            (1.0, "1.0"),
            (-0.0, "0.0"),
            (2.0 / 3.0, "0.666666666667"),
            (-3.0, "-3.0"),
            (1e-20, "1e-20"),
        ],
    )
    def test_format(self, value, expected):
        assert format_number(value) == expected


class TestCatalog:
    """Test cases for the claim and theorem catalog."""

    def test_catalog_matches_numbered_identities(self):
        numbered = {c for c in CLAIMS if c.startswith(("eq-", "prop-")) or c == "normality"}

        assert numbered == NUMBERED_IDENTITIES

    def test_supplementary_claim_ids(self):
        assert set(CLAIMS) - NUMBERED_IDENTITIES == {
            "phi-skew",
            "trans-para-sasakian",
            "d-eta-routes",
            "metric-parallel",
            "riemann-symmetries",
            "koszul-agreement",
            "fd-christoffel",
            "fd-riemann",
            "weyl-dimension-three",
            "alpha-beta-reference",
        }

    def test_claim_tiers_are_tolerances(self):
        fields = set(Tolerances.model_fields)

        assert all(claim.tier in fields for claim in CLAIMS.values())

    def test_theorem_ids(self):
        assert list(THEOREMS) == [f"thm-3.{k}" for k in range(6, 16)]

    def test_unknown_claim(self, flat3_spec, origin):
        with pytest.raises(UnknownClaimError) as exc_info:
            run_claim("eq-2.10", flat3_spec, [origin])

        assert "eq-2.1" in str(exc_info.value)

    def test_unknown_theorem(self, flat3_spec, origin):
        with pytest.raises(UnknownTheoremError):
            run_theorem("thm-3.16", flat3_spec, [origin])

    def test_no_points(self, flat3_spec):
        with pytest.raises(ValueError):
            Verifier(flat3_spec, [])


class TestClaims:
    """Test cases for individual claims."""

    @pytest.mark.parametrize("claim_id", [c for c in CLAIMS if c not in GATED])
    def test_example25_claims_pass(self, example25_spec, claim_id):
        result = run_claim(claim_id, example25_spec, POINTS)

        assert result.status == "pass", result
        assert result.points_tested == len(POINTS)

    def test_finite_difference_claims_pass(self, example25_spec):
        verifier = Verifier(example25_spec, POINTS)

        assert verifier.run_claim("fd-christoffel").status == "pass"
        assert verifier.run_claim("fd-riemann").status == "pass"

    def test_lie_derivative_of_metric(self, example25_spec):
        result = run_claim("eq-2.7", example25_spec, POINTS)

        assert result.status == "pass"
        assert result.tolerance == 1e-7

    def test_xi_alpha_is_exact(self, example25_spec):
        assert run_claim("eq-3.12", example25_spec, POINTS).max_residual < 1e-9

    def test_flat3_curvature_of_xi(self, flat3_spec):
        result = run_claim("eq-3.10", flat3_spec, POINTS)

        assert result.status == "pass"
        assert result.max_residual == 0.0

    def test_perturbed_frame_fails(self, example25_text):
        spec = parse_model(
            example25_text.replace("frame E2 = (0, exp(z), 0)", "frame E2 = (0, exp(z) + 0.1*x, 0)")
        )

        result = run_claim("trans-para-sasakian", spec, [(1.0, 0.0, 0.0)])

        assert result.status == "fail"
        assert result.max_residual > 1e-2

    def test_tightened_tolerance_fails(self, example25_spec):
        """The finite-difference oracle cannot reach 1e-12."""
        result = run_claim("fd-riemann", example25_spec, POINTS[1:], Tolerances(fd_riemann=1e-12))

        assert result.status == "fail"
        assert result.tolerance == 1e-12

    def test_mean_is_not_above_max(self, example25_spec):
        result = run_claim("prop-3.2", example25_spec, POINTS)

        assert result.mean_residual <= result.max_residual


class TestGatedClaims:
    """Test cases for claims that only apply when their hypothesis holds."""

    @pytest.mark.parametrize(
        "claim_id", ["eq-2.3", "trans-para-sasakian", "eq-2.4", "eq-2.6", "eq-3.17", "eq-3.18"]
    )
    def test_para_sasakian_model(self, para_sasakian_spec, claim_id):
        result = run_claim(claim_id, para_sasakian_spec, POINTS)

        assert result.status == "pass", result

    def test_para_sasakian_summary(self, para_sasakian_spec):
        summary = Verifier(para_sasakian_spec, POINTS).alpha_beta_summary()

        assert summary.alpha == pytest.approx(1.0)
        assert summary.beta == pytest.approx(0.0, abs=1e-12)
        assert summary.structure_type == "para-sasakian-like"

    def test_para_sasakian_identity_is_skipped_on_example25(self, example25_spec):
        with pytest.raises(ClaimSkippedError) as exc_info:
            run_claim("eq-2.3", example25_spec, POINTS)

        assert exc_info.value.claim_id == "eq-2.3"
        assert "not para-Sasakian" in exc_info.value.reason

    def test_reduced_ricci_identities_follow_standing_assumption(self, example25_spec):
        on_axis = [(0.3, 0.0, 0.4), (-0.5, 0.0, -0.7)]

        assert run_claim("eq-3.17", example25_spec, on_axis).status == "pass"
        assert run_claim("eq-3.18", example25_spec, on_axis).status == "pass"
        with pytest.raises(ClaimSkippedError):
            run_claim("eq-3.17", example25_spec, POINTS)

    def test_reduced_ricci_identities_on_flat3(self, flat3_spec):
        result = run_claim("eq-3.18", flat3_spec, POINTS)

        assert result.status == "pass"
        assert result.max_residual == 0.0

    def test_boundary_points_are_left_out_of_finite_differences(self, example25_spec):
        verifier = Verifier(example25_spec, [(1.0, 0.0, 0.0), (0.3, -0.2, 0.4)])

        result = verifier.run_claim("fd-christoffel")

        assert result.status == "pass"
        assert result.points_tested == 1

    def test_finite_differences_skipped_without_interior_points(self, example25_spec):
        verifier = Verifier(example25_spec, [(1.0, 0.0, 0.0)])

        skipped = verifier.skipped_claims()

        assert set(skipped) >= {"fd-christoffel", "fd-riemann"}
        assert skipped["fd-riemann"].startswith("fd-riemann skipped")
        with pytest.raises(ClaimSkippedError):
            verifier.run_claim("fd-riemann")


class TestTheorems:
    """Test cases for theorem evaluation."""

    def test_flat3_statuses(self, flat3_spec, origin):
        verifier = Verifier(flat3_spec, [origin, (0.5, 0.5, 0.5)])

        assert verifier.run_theorem("thm-3.6").status == "verified"
        assert verifier.run_theorem("thm-3.8").status == "verified"
        assert verifier.run_theorem("thm-3.15").status == "verified"
        # B(E1, E2, E2, E1) = 2/3 on the flat model
        assert verifier.run_theorem("thm-3.14").status == "vacuous"

    def test_alternate_residual_is_reported(self, flat3_spec, origin):
        result = run_theorem("thm-3.11", flat3_spec, [origin])

        assert result.alternate_residual == 0.0
        assert run_theorem("thm-3.7", flat3_spec, [origin]).alternate_residual is None

    def test_standing_assumption(self, example25_spec, flat3_spec, origin):
        on_axis = standing_assumption_check(example25_spec, [origin])
        off_axis = standing_assumption_check(example25_spec, [(0.0, 0.5, 0.0)])

        assert on_axis.met
        assert not off_axis.met
        assert off_axis.residual == pytest.approx(0.5)
        assert standing_assumption_check(flat3_spec, POINTS).met

    def test_standing_assumption_is_attached_to_theorems(self, example25_spec):
        result = run_theorem("thm-3.8", example25_spec, POINTS)

        assert not result.standing_assumption_met


class TestEinsteinFit:
    """Test cases for classify_einstein."""

    def test_eta_einstein(self):
        g = np.diag([1.0, -1.0, 1.0])
        ric = 2.0 * g - 3.0 * np.outer([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])

        fit = classify_einstein([synthetic_curvature(ric)])

        assert fit.lambda_ == pytest.approx(2.0)
        assert fit.mu == pytest.approx(-3.0)
        assert fit.verdict == "eta-einstein"

    def test_einstein(self):
        fit = classify_einstein([synthetic_curvature(-2.0 * np.diag([1.0, -1.0, 1.0]))])

        assert fit.lambda_ == pytest.approx(-2.0)
        assert fit.verdict == "einstein"

    def test_neither(self):
        ric = np.zeros((3, 3))
        ric[0, 1] = ric[1, 0] = 1.0

        assert classify_einstein([synthetic_curvature(ric)]).verdict == "neither"

    def test_recovers_random_coefficients(self):
        rng = np.random.default_rng(3)
        g = np.diag([1.0, -1.0, 1.0])
        eta_eta = np.outer([0.0, 0.0, 1.0], [0.0, 0.0, 1.0])

        for lam, mu in rng.uniform(-5.0, 5.0, size=(20, 2)):
            fit = classify_einstein([synthetic_curvature(lam * g + mu * eta_eta)])

            assert abs(fit.lambda_ - lam) < 1e-9
            assert abs(fit.mu - mu) < 1e-9

    def test_no_samples(self):
        with pytest.raises(DegenerateFitError):
            classify_einstein([])

    def test_lambda_is_serialized_by_name(self):
        fit = classify_einstein([synthetic_curvature(np.zeros((3, 3)))])

        assert "lambda" in fit.model_dump(by_alias=True)


class TestReport:
    """Test cases for the full verification report."""

    def test_flat3(self, flat3_spec):
        report = Verifier(flat3_spec, POINTS).report(seed=7)

        assert report.passed
        assert report.seed == 7
        assert report.points == len(POINTS)
        assert all(c.status == "pass" for c in report.claims)
        statuses = {t.theorem_id: t.status for t in report.theorems}
        assert statuses.pop("thm-3.14") == "vacuous"
        assert set(statuses.values()) == {"verified"}
        assert report.einstein_fit.verdict == "einstein"
        assert report.alpha_beta_summary.structure_type == "para-cosymplectic"
        assert not any(note.startswith("standing assumption") for note in report.notes)

    def test_example25(self, example25_spec):
        report = Verifier(example25_spec, POINTS, workers=2).report(seed=42)

        assert report.passed
        claims = {c.claim_id: c.status for c in report.claims}
        assert claims["eq-3.12"] == "pass"
        assert claims["weyl-dimension-three"] == "pass"
        assert "eq-2.3" not in claims
        assert any(note.startswith("eq-2.3 skipped") for note in report.notes)
        assert any(note.startswith("eq-3.17 skipped") for note in report.notes)
        assert report.alpha_beta_summary.alpha == pytest.approx(0.5)
        assert report.alpha_beta_summary.beta == pytest.approx(1.0)
        assert any(note.startswith("standing assumption") for note in report.notes)
        assert any(note.startswith("thm-3.11: alternate") for note in report.notes)

    def test_reference_discrepancies(self, example25_spec):
        notes = Verifier(example25_spec, [(0.0, 0.0, 0.0)]).reference_notes()

        assert notes[0] == "reference tables: 13 of 15 entries agree at the box centre"
        discrepancies = notes[1:]
        assert len(discrepancies) == 2
        assert discrepancies[0].startswith("discrepancy: [E1, E3]")
        assert discrepancies[1].startswith("discrepancy: nabla_E1 E3")

    def test_skipped_reference_claim_is_noted(self, example25_text):
        spec = parse_model(example25_text)

        report = Verifier(spec, [(0.0, 0.0, 0.0)]).report(seed=0)

        assert "alpha-beta-reference" not in {c.claim_id for c in report.claims}
        assert any("alpha-beta-reference skipped" in note for note in report.notes)

    def test_failing_claim_fails_report(self, example25_text):
        spec = parse_model(
            example25_text.replace("frame E2 = (0, exp(z), 0)", "frame E2 = (0, exp(z) + 0.1*x, 0)")
        )

        assert not Verifier(spec, [(1.0, 0.0, 0.0)]).report(seed=0).passed

    def test_deterministic(self, example25_spec):
        first = Verifier(example25_spec, POINTS).report(seed=1)
        second = Verifier(example25_spec, POINTS, workers=3).report(seed=1)

        assert first.model_dump_json(by_alias=True) == second.model_dump_json(by_alias=True)

    @pytest.mark.parametrize("model", ["example25", "flat3"])
    def test_seed_does_not_change_outcomes(self, model):
        spec = load_builtin(model)
        outcomes = set()

        for seed in (1, 2, 3):
            report = Verifier(spec, sample_points(spec, 5, seed)).report(seed=seed)
            outcomes.add(
                (
                    tuple((c.claim_id, c.status) for c in report.claims),
                    tuple((t.theorem_id, t.status) for t in report.theorems),
                    report.passed,
                )
            )

        assert len(outcomes) == 1
        assert next(iter(outcomes))[2]
