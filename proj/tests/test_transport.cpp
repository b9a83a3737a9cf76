#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "qgeom/models.hpp"
#include "qgeom/transport.hpp"

using namespace qgeom;

namespace {

constexpr Real kPi = EIGEN_PI;

VectorXr vec2(Real a, Real b) {
    VectorXr v(2);
    v << a, b;
    return v;
}

// Two-parameter unitary family exp(i(H0 + s0 H1 + s1 H2)) built from fixed
// random Hermitian generators; columns form an orthonormal moving basis.
struct UnitaryFamily {
    MatrixXc h0, h1, h2;

    MatrixXc operator()(const VectorXr& s) const {
        const MatrixXc h = h0 + s[0] * h1 + s[1] * h2;
        Eigen::SelfAdjointEigenSolver<MatrixXc> es(h);
        const VectorXc phases =
            es.eigenvalues().unaryExpr([](Real x) { return std::exp(Complex(0, x)); });
        return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    }
};

UnitaryFamily random_unitary_family(std::uint64_t seed, Eigen::Index d) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> uni(-0.7, 0.7);
    auto hermitian = [&]() {
        MatrixXc a(d, d);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < d; ++c) a(r, c) = Complex(uni(rng), uni(rng));
        return MatrixXc((a + a.adjoint()) / 2);
    };
    return UnitaryFamily{hermitian(), hermitian(), hermitian()};
}

BasisFamily unitary_basis(const UnitaryFamily& u, Eigen::Index d, Eigen::Index rank) {
    BasisFamily b;
    b.param_dim = 2;
    b.hilbert_dim = d;
    b.rank = rank;
    b.evaluator = [u, rank](const VectorXr& s) { return MatrixXc(u(s).leftCols(rank)); };
    return b;
}

}  // namespace

TEST_CASE("loops know whether they close, including across a periodic chart") {
    Path open;
    open.samples = {vec2(0, 0), vec2(0, 1), vec2(0, 2)};
    CHECK_FALSE(open.closed());

    Path plain;
    for (int i = 0; i <= 20; ++i)
        plain.samples.push_back(vec2(std::cos(2 * kPi * i / 20), std::sin(2 * kPi * i / 20)));
    CHECK(plain.closed(1e-12));

    const Path lat = latitude_loop(0.8, 24);
    CHECK(lat.samples.size() == 25);
    CHECK(lat.samples.front()[1] == doctest::Approx(0.0));
    CHECK(lat.samples.back()[1] == doctest::Approx(2 * kPi));
    CHECK(lat.closed(1e-12));  // periodic in coordinate 1
}

TEST_CASE("parallel transport around a flat-space loop is trivial") {
    // Plane in polar coordinates (r, phi): g = diag(1, r^2). The connection is
    // nonzero but the curvature vanishes, so transport around any closed loop
    // must return the initial vector.
    const ChristoffelProvider gamma = [](const VectorXr& s) {
        Rank3<Real> second = make_rank3_r(2);
        second[0](1, 1) = -s[0];                          // Gamma^r_{phi phi} = -r
        second[1](0, 1) = second[1](1, 0) = 1.0 / s[0];   // Gamma^phi_{r phi} = 1/r
        return second;
    };
    Path loop;
    const int n = 2000;
    for (int i = 0; i <= n; ++i) {
        const Real t = 2 * kPi * i / n;
        // Circle of radius 1 around (2, 0), expressed in polar coordinates.
        const Real x = 2 + std::cos(t), y = std::sin(t);
        loop.samples.push_back(vec2(std::hypot(x, y), std::atan2(y, x)));
    }
    const VectorXr v0 = vec2(0.3, -0.7);
    const std::vector<VectorXr> transported = transport_vector(gamma, loop, v0);
    REQUIRE(transported.size() == loop.samples.size());
    CHECK((transported.back() - v0).cwiseAbs().maxCoeff() < 1e-4);
    // Mid-loop the components genuinely change.
    CHECK((transported[n / 2] - v0).cwiseAbs().maxCoeff() > 0.1);
}

TEST_CASE("loop phase matches the enclosed two-form flux on the sphere") {
    const ModelSpec spec{GroupTag::SU2, 0.5, -0.5, SeriesTag::None, 0};
    const StateFamily family = build_model(spec);
    const Real theta0 = kPi / 3;

    const Real phase = berry_phase_loop(family, latitude_loop(theta0, 720));
    const Real expected = -2 * kPi * spec.m * (1 - std::cos(theta0));  // = +pi/2
    CHECK(std::abs(std::remainder(phase - expected, 2 * kPi)) < 1e-4);

    const SigmaField sigma = [&](const VectorXr& s) -> MatrixXr { return qgt(family, s).sigma; };
    const Real flux = sigma_flux(sigma, 2.5e-3, theta0, 0.0, 2 * kPi, 400, 9);
    CHECK(std::abs(std::remainder(phase - flux, 2 * kPi)) < 1e-4);
}

TEST_CASE("loop integrators refuse bad sampling") {
    const ModelSpec spec{GroupTag::SU2, 0.5, -0.5, SeriesTag::None, 0};
    const StateFamily family = build_model(spec);

    Path open;
    for (int i = 0; i <= 40; ++i) open.samples.push_back(vec2(0.5 + 0.01 * i, 0.1));
    CHECK_THROWS_AS(berry_phase_loop(family, open), OpenPath);

    // 17 samples close the loop but stride too far between neighbors.
    CHECK_THROWS_AS(berry_phase_loop(family, latitude_loop(1.5, 16)), UndersampledLoop);
}

TEST_CASE("flux of a constant two-form is twice its area integral") {
    MatrixXr s01(2, 2);
    s01 << 0, 0.35, -0.35, 0;
    const SigmaField constant = [&](const VectorXr&) { return s01; };
    const Real flux = sigma_flux(constant, 0.0, 1.2, -0.5, 0.5, 60, 60);
    CHECK(std::abs(flux - 2 * 0.35 * 1.2 * 1.0) < 1e-12);
}

TEST_CASE("moving-frame connection is anti-Hermitian with the expected entries") {
    const Eigen::Index d = 3;
    BasisFamily rot;
    rot.param_dim = 2;
    rot.hilbert_dim = d;
    rot.rank = d;
    rot.evaluator = [d](const VectorXr& s) {
        MatrixXc b = MatrixXc::Identity(d, d);
        const Real c = std::cos(s[0]), sn = std::sin(s[0]);
        b(0, 0) = c;
        b(0, 1) = -sn;
        b(1, 0) = sn;
        b(1, 1) = c;
        return b;
    };
    const MatrixXc conn = hilbert_connection(rot, vec2(0.4, 0.0), 0);
    MatrixXc expected = MatrixXc::Zero(d, d);
    expected(0, 1) = -1;
    expected(1, 0) = 1;
    CHECK((conn - expected).cwiseAbs().maxCoeff() < 1e-10);

    BasisFamily scaled = rot;
    scaled.evaluator = [d, rot](const VectorXr& s) { return MatrixXc(1.1 * rot.evaluator(s)); };
    CHECK_THROWS_AS(hilbert_connection(scaled, vec2(0.4, 0.0), 0), NonOrthonormalBasis);
}

TEST_CASE("full moving bases are flat; projected sub-bases are not") {
    const Eigen::Index d = 4;
    const UnitaryFamily u = random_unitary_family(2024, d);
    const VectorXr s = vec2(0.3, -0.2);

    const HilbertCurvature full = hilbert_riemann(unitary_basis(u, d, d), s);
    Real worst = 0;
    for (const auto& row : full.r_tilde)
        for (const MatrixXc& block : row)
            worst = std::max(worst, block.cwiseAbs().maxCoeff());
    CHECK(worst < 1e-6);

    const HilbertCurvature single = hilbert_riemann(unitary_basis(u, d, 1), s);
    CHECK(single.r_tilde[0][1].cwiseAbs().maxCoeff() > 1e-4);

    // Abelian curvatures of the individual columns sum to zero over the basis.
    Complex total = 0;
    for (Eigen::Index k = 0; k < d; ++k) {
        UnitaryFamily shifted = u;
        BasisFamily column;
        column.param_dim = 2;
        column.hilbert_dim = d;
        column.rank = 1;
        column.evaluator = [shifted, k](const VectorXr& x) {
            return MatrixXc(shifted(x).col(k));
        };
        total += hilbert_riemann(column, s).r_tilde[0][1](0, 0);
    }
    CHECK(std::abs(total) < 1e-6);
}

TEST_CASE("geodesics on the unit sphere follow great circles") {
    const ModelSpec spec{GroupTag::SU2, 2.0, -2.0, SeriesTag::None, 0};
    const StateFamily family = build_model(spec);
    const MetricField g_field = [&](const VectorXr& x) -> MatrixXr { return qgt(family, x).g; };

    // Start on the equator heading along it: theta must stay pi/2.
    const Path equator = geodesic(g_field, vec2(kPi / 2, 0.0), vec2(0.0, 1.0), 1.0, 200);
    REQUIRE(equator.samples.size() == 201);
    for (const VectorXr& p : equator.samples) CHECK(std::abs(p[0] - kPi / 2) < 1e-6);
    // Unit speed along phi on the equator: total sweep equals the arc length.
    CHECK(std::abs(equator.samples.back()[1] - 1.0) < 1e-6);

    // A meridian launch keeps phi fixed.
    const Path meridian = geodesic(g_field, vec2(1.0, 0.4), vec2(1.0, 0.0), 0.8, 200);
    for (const VectorXr& p : meridian.samples) CHECK(std::abs(p[1] - 0.4) < 1e-6);
    CHECK(std::abs(meridian.samples.back()[0] - 1.8) < 1e-5);
}

TEST_CASE("geodesic integration rejects singular metrics") {
    const MetricField degenerate = [](const VectorXr&) { return MatrixXr::Zero(2, 2); };
    CHECK_THROWS_AS(geodesic(degenerate, vec2(0.5, 0.5), vec2(1.0, 0.0), 0.5, 50),
                    SingularMetric);
}
