import math

import pytest

from oamsim.geometry import (
    MATERIALS,
    CrystalSpec,
    DegenerateGeometryError,
    NoPropagationError,
    beta_zero_opd,
    delta_from_beta,
    delta_zero_opd,
    opd,
    opd_from_delta,
    path_length_p2p3,
    tir_margin,
    validate_assembly,
)

CALCITE_NO, CALCITE_NE, _ = MATERIALS["calcite"]

# negative uniaxial index pairs for grid sweeps
INDEX_PAIRS = [
    (1.658, 1.486),
    (1.55, 1.48),
    (1.60, 1.35),
    (1.70, 1.50),
    (1.75, 1.42),
    (1.50, 1.30),
    (1.90, 1.60),
    (1.45, 1.40),
    (2.20, 1.90),
    (1.66, 1.49),
]


def calcite(beta: float, d: float = 10.0) -> CrystalSpec:
    return CrystalSpec(CALCITE_NO, CALCITE_NE, d=d, beta=beta)


def beta_for_delta(n_o: float, n_e: float, delta: float) -> float:
    # invert the Snell relation: tan(beta) = sin(delta)/((n_o/n_e) - cos(delta))
    return math.atan2(math.sin(delta), n_o / n_e - math.cos(delta))


class TestDeltaFromBeta:
    def test_calcite_quoted_angles(self):
        delta = delta_from_beta(calcite(math.radians(63.671)))
        assert math.degrees(delta) == pytest.approx(26.329, abs=1e-3)

    def test_isotropic_gives_zero(self):
        for beta_deg in (10.0, 30.0, 60.0):
            spec = CrystalSpec(1.5, 1.5, d=10.0, beta=math.radians(beta_deg))
            assert delta_from_beta(spec) == pytest.approx(0.0, abs=1e-15)

    def test_both_snell_forms_agree(self):
        spec = calcite(math.radians(45.0))
        delta = delta_from_beta(spec)
        snell = abs(
            CALCITE_NO * math.sin(spec.beta) - CALCITE_NE * math.sin(spec.beta + delta)
        )
        assert snell <= 1e-12
        tan_form = abs(
            math.tan(spec.beta)
            - math.sin(delta) / (CALCITE_NO / CALCITE_NE - math.cos(delta))
        )
        assert tan_form <= 1e-9

    def test_beyond_critical_raises(self):
        with pytest.raises(NoPropagationError):
            delta_from_beta(calcite(math.radians(70.0)))

    def test_grazing_clamp_for_rounded_angle(self):
        # the quoted 63.671 deg sits a hair past the exact grazing angle
        delta = delta_from_beta(calcite(math.radians(63.671)))
        assert math.degrees(delta) == pytest.approx(90.0 - 63.671, abs=1e-9)


class TestOpd:
    def test_vanishes_at_design_delta(self):
        delta0 = delta_zero_opd(CALCITE_NO, CALCITE_NE)
        assert opd_from_delta(CALCITE_NO, CALCITE_NE, 10.0, delta0) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_vanishes_at_design_beta(self):
        d = 10.0
        spec = calcite(beta_zero_opd(CALCITE_NO, CALCITE_NE), d=d)
        assert abs(opd(spec)) <= 1e-12 * d

    def test_cross_form_at_45_degrees(self):
        spec = calcite(math.radians(45.0))
        delta = delta_from_beta(spec)
        via_leg = 2.0 * path_length_p2p3(spec) * (
            CALCITE_NE - CALCITE_NO * math.cos(delta)
        )
        assert opd(spec) == pytest.approx(via_leg, rel=1e-12)

    def test_known_value_at_45_degrees(self):
        assert opd(calcite(math.radians(45.0))) == pytest.approx(-12.912892782, abs=1e-6)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateGeometryError):
            opd(CrystalSpec(1.5, 1.5, d=10.0, beta=math.radians(40.0)))


class TestZeroOpdAngles:
    def test_calcite_beta(self):
        assert math.degrees(beta_zero_opd(CALCITE_NO, CALCITE_NE)) == pytest.approx(
            63.671, abs=1e-3
        )

    def test_calcite_delta(self):
        assert math.degrees(delta_zero_opd(CALCITE_NO, CALCITE_NE)) == pytest.approx(
            26.329, abs=1e-3
        )

    def test_equal_indices_limit(self):
        assert beta_zero_opd(1.5, 1.5) == pytest.approx(math.pi / 2, abs=1e-15)
        assert delta_zero_opd(1.5, 1.5) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("n_o, n_e", INDEX_PAIRS)
    def test_angles_are_complementary(self, n_o, n_e):
        assert beta_zero_opd(n_o, n_e) + delta_zero_opd(n_o, n_e) == pytest.approx(
            math.pi / 2, abs=1e-12
        )

    @pytest.mark.parametrize("n_o, n_e", INDEX_PAIRS)
    def test_opd_vanishes_there(self, n_o, n_e):
        d = 7.5
        spec = CrystalSpec(n_o, n_e, d=d, beta=beta_zero_opd(n_o, n_e))
        assert abs(opd(spec)) <= 1e-12 * d

    def test_inverted_indices_rejected(self):
        with pytest.raises(ValueError):
            beta_zero_opd(1.4, 1.6)
        with pytest.raises(ValueError):
            delta_zero_opd(1.4, 1.6)


class TestPathLength:
    def test_thirty_degree_leg(self):
        # sin(30 deg) = 1/2 makes the leg equal to the full side
        n_o, n_e = 1.8, 1.5
        beta = beta_for_delta(n_o, n_e, math.radians(30.0))
        spec = CrystalSpec(n_o, n_e, d=10.0, beta=beta)
        assert path_length_p2p3(spec) == pytest.approx(10.0, abs=1e-9)

    def test_calcite_design_leg(self):
        spec = calcite(beta_zero_opd(CALCITE_NO, CALCITE_NE))
        expected = 10.0 / (2.0 * math.sin(delta_zero_opd(CALCITE_NO, CALCITE_NE)))
        assert path_length_p2p3(spec) == pytest.approx(expected, abs=1e-9)

    def test_degenerate_raises(self):
        with pytest.raises(DegenerateGeometryError):
            path_length_p2p3(CrystalSpec(1.5, 1.5, d=10.0, beta=math.radians(40.0)))


class TestTirMargin:
    def test_calcite_design_point(self):
        spec = calcite(beta_zero_opd(CALCITE_NO, CALCITE_NE))
        assert tir_margin(spec) == pytest.approx(0.331843184560, abs=1e-9)
        assert tir_margin(spec) > 0.0

    def test_boundary_case(self):
        # indices chosen so n_e cos(delta) = 1 exactly
        n_o, n_e = 1.5, 1.2
        beta = beta_for_delta(n_o, n_e, math.acos(1.0 / n_e))
        spec = CrystalSpec(n_o, n_e, d=10.0, beta=beta)
        assert tir_margin(spec) == pytest.approx(0.0, abs=1e-12)

    def test_no_contrast_means_no_tir(self):
        spec = CrystalSpec(1.3, 1.0, d=5.0, beta=math.radians(30.0))
        assert tir_margin(spec) < 0.0


class TestValidateAssembly:
    def test_calcite_design_point(self):
        report = validate_assembly(calcite(beta_zero_opd(CALCITE_NO, CALCITE_NE)))
        assert report.zero_opd
        assert report.tir_ok
        assert not report.compensator_needed
        assert not report.degenerate
        assert report.beta_recommended == pytest.approx(
            beta_zero_opd(CALCITE_NO, CALCITE_NE)
        )

    def test_calcite_45_needs_compensator(self):
        report = validate_assembly(calcite(math.radians(45.0)))
        assert report.compensator_needed
        assert not report.zero_opd
        assert report.tir_ok

    def test_isotropic_degenerate_report(self):
        report = validate_assembly(CrystalSpec(1.5, 1.5, d=10.0, beta=math.radians(40.0)))
        assert report.degenerate
        assert math.isnan(report.opd_mm)
        assert not report.zero_opd
        assert not report.compensator_needed


class TestCrystalSpecValidation:
    def test_rejects_positive_uniaxial(self):
        with pytest.raises(ValueError):
            CrystalSpec(1.4, 1.6, d=10.0, beta=math.radians(40.0))

    def test_rejects_bad_beta(self):
        with pytest.raises(ValueError):
            CrystalSpec(1.6, 1.4, d=10.0, beta=0.0)
        with pytest.raises(ValueError):
            CrystalSpec(1.6, 1.4, d=10.0, beta=math.pi / 2)

    def test_rejects_bad_side(self):
        with pytest.raises(ValueError):
            CrystalSpec(1.6, 1.4, d=0.0, beta=math.radians(40.0))

    def test_allows_equal_indices(self):
        CrystalSpec(1.5, 1.5, d=10.0, beta=math.radians(40.0))


class TestInvariants:
    def test_snell_residual_on_grid(self):
        for n_o, n_e in INDEX_PAIRS:
            beta_max = math.asin(n_e / n_o)
            for k in range(1, 11):
                beta = beta_max * k / 10.0
                spec = CrystalSpec(n_o, n_e, d=3.0, beta=beta)
                delta = delta_from_beta(spec)
                residual = abs(n_o * math.sin(beta) - n_e * math.sin(beta + delta))
                assert residual <= 1e-12

    def test_cross_form_on_grid(self):
        for n_o, n_e in INDEX_PAIRS:
            beta_max = math.asin(n_e / n_o)
            for k in range(1, 11):
                spec = CrystalSpec(n_o, n_e, d=8.0, beta=beta_max * k / 10.0)
                delta = delta_from_beta(spec)
                if delta <= 0.0:
                    continue
                closed = opd(spec)
                via_leg = 2.0 * path_length_p2p3(spec) * (n_e - n_o * math.cos(delta))
                assert abs(closed - via_leg) <= 1e-12 * max(abs(closed), abs(via_leg), 1e-300)

    def test_opd_changes_sign_exactly_once(self):
        for n_o, n_e in INDEX_PAIRS[:4]:
            delta0 = delta_zero_opd(n_o, n_e)
            samples = [1e-4 + (math.pi / 2 - 2e-4) * k / 400 for k in range(401)]
            signs = [opd_from_delta(n_o, n_e, 1.0, d) > 0 for d in samples]
            flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
            assert flips == 1
            below = max(d for d in samples if d < delta0)
            above = min(d for d in samples if d > delta0)
            assert opd_from_delta(n_o, n_e, 1.0, below) < 0 < opd_from_delta(n_o, n_e, 1.0, above)
