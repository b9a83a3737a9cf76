#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "qgeom/statefam.hpp"

using namespace qgeom;

namespace {

VectorXr vec2(Real a, Real b) {
    VectorXr v(2);
    v << a, b;
    return v;
}

// Two-level family (cos s1, e^{-i s0} sin s1): smooth, exactly normalized.
StateFamily two_level_family() {
    StateFamily f;
    f.param_dim = 2;
    f.hilbert_dim = 2;
    f.domain = {Interval{-10, 10}, Interval{-10, 10}};
    f.strict_normalization = true;
    f.evaluator = [](const VectorXr& s) {
        VectorXc psi(2);
        psi << Complex(std::cos(s[1]), 0.0),
            std::exp(Complex(0.0, -s[0])) * std::sin(s[1]);
        return psi;
    };
    return f;
}

}  // namespace

TEST_CASE("state vectors reject bad amplitudes") {
    VectorXc ok(2);
    ok << Complex(1, 0), Complex(0, 0);
    CHECK_NOTHROW(StateVector{ok});

    VectorXc unnormalized(2);
    unnormalized << Complex(1, 0), Complex(0.5, 0);
    CHECK_THROWS_AS(StateVector{unnormalized}, NonFinite);

    VectorXc tiny(1);
    tiny << Complex(1, 0);
    CHECK_THROWS_AS(StateVector{tiny}, InvalidConfig);

    VectorXc bad(2);
    bad << Complex(std::numeric_limits<Real>::quiet_NaN(), 0), Complex(0, 0);
    CHECK_THROWS_AS(StateVector{bad}, NonFinite);
}

TEST_CASE("evaluation enforces the declared domain") {
    const StateFamily f = two_level_family();
    CHECK_NOTHROW(evaluate(f, vec2(0.3, 0.4)));
    CHECK_THROWS_AS(evaluate(f, vec2(11.0, 0.0)), OutOfDomain);
}

TEST_CASE("strict families fail on norm drift, permissive ones renormalize") {
    StateFamily f = two_level_family();
    f.evaluator = [](const VectorXr&) {
        VectorXc psi(2);
        psi << Complex(1.0, 0), Complex(1e-6, 0);
        return psi;
    };
    // norm deviates from 1 by ~5e-13 < drift tolerance: accepted even in strict mode.
    CHECK_NOTHROW(evaluate(f, vec2(0, 0)));

    f.evaluator = [](const VectorXr&) {
        VectorXc psi(2);
        psi << Complex(1.0, 0), Complex(1e-4, 0);
        return psi;
    };
    CHECK_THROWS_AS(evaluate(f, vec2(0, 0)), TruncationInsufficient);

    f.strict_normalization = false;
    const VectorXc psi = evaluate(f, vec2(0, 0));
    CHECK(std::abs(psi.norm() - 1.0) < 1e-14);
    CHECK(f.diagnostics->max_norm_drift > 0.0);
}

TEST_CASE("overlap is Hermitian and normalized on the diagonal") {
    const StateFamily f = two_level_family();
    const VectorXr a = vec2(0.4, 0.9), b = vec2(-0.2, 0.3);
    const Complex sab = overlap(f, a, b);
    const Complex sba = overlap(f, b, a);
    CHECK(std::abs(sab - std::conj(sba)) < 1e-15);
    CHECK(std::abs(overlap(f, a, a) - Complex(1, 0)) < 1e-14);
}

TEST_CASE("log overlap refuses near-orthogonal pairs") {
    const StateFamily f = two_level_family();
    // s1 = 0 vs s1 = pi/2 are exactly orthogonal.
    CHECK_THROWS_AS(log_overlap(f, vec2(0, 0), vec2(0, EIGEN_PI / 2)), VanishingOverlap);
    CHECK(std::abs(log_overlap(f, vec2(0.1, 0.2), vec2(0.1, 0.2))) < 1e-14);
}

TEST_CASE("tangent state matches the analytic derivative") {
    const StateFamily f = two_level_family();
    const VectorXr s = vec2(0.7, 0.5);
    // d/ds0 psi = (0, -i e^{-i s0} sin s1)
    const VectorXc t0 = tangent(f, s, 0);
    VectorXc expected(2);
    expected << Complex(0, 0),
        Complex(0, -1) * std::exp(Complex(0, -s[0])) * std::sin(s[1]);
    CHECK((t0 - expected).cwiseAbs().maxCoeff() < 1e-10);

    // d/ds1 psi = (-sin s1, e^{-i s0} cos s1)
    const VectorXc t1 = tangent(f, s, 1);
    expected << Complex(-std::sin(s[1]), 0),
        std::exp(Complex(0, -s[0])) * std::cos(s[1]);
    CHECK((t1 - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gauge application multiplies by the expected phase") {
    const StateFamily base = two_level_family();
    GaugeFunction alpha;
    alpha.terms = {{0.3, {1, 0}}, {-0.2, {1, 2}}};  // 0.3 s0 - 0.2 s0 s1^2
    const StateFamily gauged = apply_gauge(base, alpha);
    const VectorXr s = vec2(0.8, -0.6);
    const Complex phase = std::exp(Complex(0, -alpha(s)));
    const VectorXc expected = phase * evaluate(base, s);
    CHECK((evaluate(gauged, s) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("polynomial gauge gradient matches finite differences") {
    GaugeFunction alpha;
    alpha.terms = {{0.7, {2, 1}}, {-0.4, {0, 3}}, {1.1, {1, 0}}};
    const VectorXr s = vec2(0.5, -1.2);
    const VectorXr grad = alpha.gradient(s);
    const Real h = 1e-6;
    for (Eigen::Index k = 0; k < 2; ++k) {
        VectorXr sp = s, sm = s;
        sp[k] += h;
        sm[k] -= h;
        const Real fd = (alpha(sp) - alpha(sm)) / (2 * h);
        CHECK(std::abs(grad[k] - fd) < 1e-7);
    }
}

TEST_CASE("state cache returns identical amplitudes for identical keys") {
    const StateFamily f = two_level_family();
    StateCache cache(f);
    const VectorXr s = vec2(0.3, 0.4);
    const VectorXc& first = cache.get(s);
    const VectorXc& second = cache.get(s);
    CHECK(&first == &second);  // same stored entry, not a recomputation
    CHECK(std::abs(cache.overlap(s, s) - Complex(1, 0)) < 1e-14);

    const VectorXr t = vec2(0.1, 0.2);
    CHECK(std::abs(cache.overlap(s, t) - overlap(f, s, t)) < 1e-15);
}

TEST_CASE("finite-difference scheme validates its step") {
    const FDScheme too_small{1e-7, true};
    CHECK_THROWS_AS(too_small.validate(), InvalidConfig);
    const FDScheme too_large{0.5, true};
    CHECK_THROWS_AS(too_large.validate(), InvalidConfig);
    const FDScheme fine{1e-3, true};
    CHECK_NOTHROW(fine.validate());
    CHECK_THROWS_AS(fd::stencil(4), StencilTooWide);
}

TEST_CASE("field derivative is exact on quadratic fields") {
    const auto field = [](const VectorXr& s) -> MatrixXr {
        MatrixXr m(2, 2);
        m << s[0] * s[0], s[0] * s[1], s[0] * s[1], s[1] * s[1];
        return m;
    };
    const VectorXr s = vec2(0.7, -0.3);
    Real err = 0;
    const MatrixXr d0 = fd::field_derivative(field, s, 0, 1e-3, &err);
    MatrixXr expected(2, 2);
    expected << 2 * s[0], s[1], s[1], 0;
    CHECK((d0 - expected).cwiseAbs().maxCoeff() < 1e-11);
    CHECK(err < 1e-11);
}
