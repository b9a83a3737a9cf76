#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qgeom/models.hpp"

using namespace qgeom;

namespace {

VectorXr vec2(Real a, Real b) {
    VectorXr v(2);
    v << a, b;
    return v;
}

Real max_abs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("ladder matrices satisfy their commutation relations") {
    const std::vector<ModelSpec> specs = {
        {GroupTag::WeylHeisenberg, 0.0, 0.0, SeriesTag::None, 48},
        {GroupTag::SU2, 1.5, -0.5, SeriesTag::None, 0},
        {GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, 64},
        {GroupTag::SU11, -1.0, -1.0, SeriesTag::Dminus, 64},
        {GroupTag::SU11, -0.6, 0.6, SeriesTag::ProjectiveDiscrete, 64},
        {GroupTag::SU11, -0.25, 0.25, SeriesTag::TwoOscillator, 64},
        {GroupTag::SU11, -0.75, 0.75, SeriesTag::TwoOscillator, 64},
    };
    for (const ModelSpec& spec : specs) {
        CAPTURE(to_string(spec.group));
        CAPTURE(to_string(spec.series));
        const AlgebraReport rep = ladder_algebra_check(spec);
        CHECK(rep.commutator_residual_jz < 1e-10);
        CHECK(rep.commutator_residual_ladder < 1e-10);
        CHECK(rep.casimir_residual < 1e-10);
        CHECK(rep.lowest_weight_annihilation < 1e-10);
    }
}

TEST_CASE("two-boson realization carries the expected casimir") {
    for (Real j : {-0.25, -0.75}) {
        const ModelSpec spec{GroupTag::SU11, j, -j, SeriesTag::TwoOscillator, 64};
        const AlgebraReport rep = ladder_algebra_check(spec);
        CHECK(std::abs(rep.casimir_eigenvalue - (-3.0 / 16.0)) < 1e-12);
    }
}

TEST_CASE("spin dimension follows from the label") {
    const LadderAlgebra alg = build_ladder({GroupTag::SU2, 1.5, 0.5, SeriesTag::None, 0});
    CHECK(alg.j_plus.rows() == 4);  // 2j+1
    CHECK(alg.weights.minCoeff() == doctest::Approx(-1.5));
    CHECK(alg.weights.maxCoeff() == doctest::Approx(1.5));
}

TEST_CASE("quantum-number validation matches the representation rules") {
    CHECK(validate_series(Complex(-1, 0), 1.0, SeriesTag::Dplus).ok);
    CHECK_FALSE(validate_series(Complex(0.5, 0), 0.25, SeriesTag::Dplus).ok);
    CHECK(validate_series(Complex(-1, 0), -1.0, SeriesTag::Dminus).ok);
    CHECK_FALSE(validate_series(Complex(-1, 0), 1.0, SeriesTag::Dminus).ok);
    CHECK(validate_series(Complex(-0.5, 2.0), 3.0, SeriesTag::Ck0).ok);
    CHECK_FALSE(validate_series(Complex(-0.5, 2.0), 0.5, SeriesTag::Ck0).ok);
    CHECK(validate_series(Complex(-0.5, 2.0), 0.5, SeriesTag::Ck12).ok);
    CHECK(validate_series(Complex(-0.3, 0), 2.0, SeriesTag::Supplementary).ok);
    CHECK_FALSE(validate_series(Complex(-0.7, 0), 2.0, SeriesTag::Supplementary).ok);
    CHECK(validate_series(Complex(-0.25, 0), 1.25, SeriesTag::TwoOscillator).ok);
    // m = 3/4 sits on the other parity branch of the two-boson realization.
    const SeriesValidation cross = validate_series(Complex(-0.25, 0), 0.75, SeriesTag::TwoOscillator);
    CHECK_FALSE(cross.ok);
    CHECK(cross.reason.find("branch") != std::string::npos);
}

TEST_CASE("unsupported analytic-only series refuse to build matrices") {
    CHECK_THROWS_AS(build_ladder({GroupTag::SU11, Complex(-0.5, 1.0), 1.0, SeriesTag::Ck0, 32}),
                    UnsupportedSeries);
    CHECK_THROWS_AS(build_ladder({GroupTag::SU11, -0.3, 1.0, SeriesTag::Supplementary, 32}),
                    UnsupportedSeries);
    CHECK_THROWS_AS(build_ladder({GroupTag::SU2, 0.7, 0.2, SeriesTag::None, 0}), InvalidConfig);
    CHECK_THROWS_AS(build_ladder({GroupTag::SU11, -1.0, 7.5, SeriesTag::Dplus, 32}),
                    InvalidConfig);
}

TEST_CASE("families stay normalized and respect their domains") {
    const ModelSpec spec{GroupTag::SU2, 1.0, 0.0, SeriesTag::None, 0};
    const StateFamily f = build_model(spec);
    const VectorXc psi = evaluate(f, vec2(1.0, 0.7));
    CHECK(std::abs(psi.norm() - 1.0) < 1e-12);
    CHECK_THROWS_AS(evaluate(f, vec2(3.2, 0.0)), OutOfDomain);  // polar angle beyond range

    const ModelSpec tight{GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, 8};
    const StateFamily g = build_model(tight);
    CHECK_THROWS_AS(evaluate(g, vec2(2.0, 0.3)), TruncationInsufficient);
}

TEST_CASE("closed-form tensors match the engines on every model family") {
    struct Case {
        ModelSpec spec;
        VectorXr point;
        Real tol;
    };
    const std::vector<Case> cases = {
        {{GroupTag::WeylHeisenberg, 0.0, 1.0, SeriesTag::None, 64}, vec2(0.4, -0.3), 1e-6},
        {{GroupTag::SU2, 1.5, -0.5, SeriesTag::None, 0}, vec2(1.1, 0.7), 1e-7},
        {{GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, 128}, vec2(0.8, 0.5), 1e-5},
        {{GroupTag::SU11, -1.0, -1.0, SeriesTag::Dminus, 128}, vec2(0.8, -0.4), 1e-5},
        {{GroupTag::SU11, -0.25, 1.25, SeriesTag::TwoOscillator, 128}, vec2(0.6, -0.4), 1e-5},
    };
    for (const Case& c : cases) {
        CAPTURE(to_string(c.spec.group));
        CAPTURE(to_string(c.spec.series));
        const StateFamily family = build_model(c.spec);
        const QuantumGeometricTensor numeric = qgt(family, c.point);
        const QuantumGeometricTensor closed = analytic_qgt(c.spec, c.point);
        CHECK(max_abs(numeric.c2 - closed.c2) < c.tol);
        CHECK(std::abs(numeric.c2.determinant().real() - analytic_det(c.spec, c.point)) < c.tol);
    }
}

TEST_CASE("extremal states have degenerate closed-form determinants") {
    CHECK(std::abs(analytic_det({GroupTag::SU2, 2.0, 2.0, SeriesTag::None, 0}, vec2(1.0, 0.5))) <
          1e-14);
    CHECK(std::abs(analytic_det({GroupTag::SU11, -1.5, 1.5, SeriesTag::Dplus, 0},
                                vec2(0.9, 0.1))) < 1e-14);
    CHECK(std::abs(analytic_det({GroupTag::WeylHeisenberg, 0.0, 0.0, SeriesTag::None, 0},
                                vec2(0.3, 0.8))) < 1e-14);
    // Any model at the hyperbolic origin rho = 0.
    CHECK(std::abs(analytic_det({GroupTag::SU11, -1.0, 2.0, SeriesTag::Dplus, 0},
                                vec2(0.0, 1.2))) < 1e-14);
}

TEST_CASE("derivative of the displacement decomposes over the algebra") {
    // Polar-angle derivative on the sphere at phi = 0: coefficients (1/2, -1/2).
    const CosetDecomposition su2 =
        coset_derivative({GroupTag::SU2, 1.5, -0.5, SeriesTag::None, 0}, vec2(1.2, 0.0));
    CHECK(std::abs(su2.a_matrix(0, 0) - Complex(0.5, 0)) < 1e-8);
    CHECK(std::abs(su2.a_matrix(0, 1) - Complex(-0.5, 0)) < 1e-8);
    CHECK(su2.residual < 1e-6);

    // Radial derivative on the hyperboloid at phi = 0: coefficients (-1/2, 1/2).
    const CosetDecomposition su11 =
        coset_derivative({GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, 96}, vec2(0.9, 0.0));
    CHECK(std::abs(su11.a_matrix(0, 0) - Complex(-0.5, 0)) < 1e-8);
    CHECK(std::abs(su11.a_matrix(0, 1) - Complex(0.5, 0)) < 1e-8);

    // First-quadrature derivative of the displaced oscillator: (1, -1) plus a
    // parameter-dependent central term.
    const CosetDecomposition wh =
        coset_derivative({GroupTag::WeylHeisenberg, 0.0, 0.0, SeriesTag::None, 48},
                         vec2(0.4, -0.3));
    CHECK(std::abs(wh.a_matrix(0, 0) - Complex(1, 0)) < 1e-8);
    CHECK(std::abs(wh.a_matrix(0, 1) - Complex(-1, 0)) < 1e-8);
    CHECK(std::abs(wh.identity[0] - Complex(0, -(-0.3))) < 1e-8);
}

TEST_CASE("model names round-trip through their parsers") {
    for (GroupTag g : {GroupTag::WeylHeisenberg, GroupTag::SU2, GroupTag::SU11})
        CHECK(parse_group(to_string(g)) == g);
    for (SeriesTag t :
         {SeriesTag::None, SeriesTag::Dplus, SeriesTag::Dminus, SeriesTag::Ck0, SeriesTag::Ck12,
          SeriesTag::Supplementary, SeriesTag::ProjectiveDiscrete,
          SeriesTag::ProjectiveContinuous, SeriesTag::TwoOscillator})
        CHECK(parse_series(to_string(t)) == t);
    CHECK_FALSE(parse_group("so3").has_value());
    CHECK_FALSE(parse_series("Dzero").has_value());
}
