#include "qgeom/check.hpp"

#include <cmath>
#include <random>

#include "qgeom/bo.hpp"
#include "qgeom/statefam.hpp"
#include "qgeom/transport.hpp"

namespace qgeom {

namespace {

constexpr Real kPi = 3.14159265358979323846;

struct Runner {
    std::mt19937_64 rng;
    std::vector<CheckResult>& out;

    void add(CheckSuite suite, const std::string& name, Real residual, Real tol,
             std::string note = "") {
        out.push_back({to_string(suite), name, residual, tol,
                       std::isfinite(residual) && residual <= tol, std::move(note)});
    }

    // Runs `body` returning a residual; converts thrown library errors into a
    // failing result carrying the error code.
    template <typename Body>
    void guarded(CheckSuite suite, const std::string& name, Real tol, Body&& body) {
        try {
            add(suite, name, body(), tol);
        } catch (const Error& e) {
            out.push_back({to_string(suite), name, std::numeric_limits<Real>::quiet_NaN(), tol,
                           false, std::string(e.code()) + ": " + e.what()});
        }
    }

    Real uniform(Real lo, Real hi) {
        std::uniform_real_distribution<Real> dist(lo, hi);
        return dist(rng);
    }

    GaugeFunction random_gauge() {
        GaugeFunction alpha;
        for (int e0 = 0; e0 <= 3; ++e0)
            for (int e1 = 0; e0 + e1 <= 3; ++e1)
                alpha.terms.push_back({uniform(-0.5, 0.5), {e0, e1}});
        return alpha;
    }
};

struct NamedModel {
    std::string name;
    ModelSpec spec;
    VectorXr point;
};

VectorXr vec2(Real a, Real b) {
    VectorXr v(2);
    v << a, b;
    return v;
}

std::vector<NamedModel> representative_models(const CheckOptions& options) {
    return {
        {"glauber-m1", {GroupTag::WeylHeisenberg, 0.0, 1.0, SeriesTag::None, 64}, vec2(0.4, -0.3)},
        {"su2-j1-m-1", {GroupTag::SU2, 1.0, -1.0, SeriesTag::None, 0}, vec2(1.1, 0.7)},
        {"su11-dplus-j-1-m1",
         {GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, options.su11_truncation},
         vec2(0.8, 0.5)},
        {"twoosc-j-1q4-m5q4",
         {GroupTag::SU11, -0.25, 1.25, SeriesTag::TwoOscillator, options.su11_truncation},
         vec2(0.6, -0.4)},
    };
}

Real max_abs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

Real rank3_diff(const Rank3<Complex>& a, const Rank3<Complex>& b) {
    Real worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) worst = std::max(worst, max_abs(a[i] - b[i]));
    return worst;
}

Real angle_distance(Real a, Real b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

void run_gauge(Runner& r, const CheckOptions& options) {
    for (const NamedModel& nm : representative_models(options)) {
        r.guarded(CheckSuite::Gauge, nm.name + "-invariance", 1e-6, [&]() -> Real {
            const StateFamily family = build_model(nm.spec);
            const QuantumGeometricTensor base_qgt = qgt(family, nm.point);
            const ThirdCumulant base_c3 = third_cumulant(family, nm.point);
            const Rank3<Complex> base_qc = quantum_christoffel(base_c3);
            const VectorXr base_beta = berry_connection(family, nm.point).beta;
            Real worst = 0.0;
            for (int trial = 0; trial < 3; ++trial) {
                const GaugeFunction alpha = r.random_gauge();
                const StateFamily gauged = apply_gauge(family, alpha);
                worst = std::max(worst, max_abs(qgt(gauged, nm.point).c2 - base_qgt.c2));
                const ThirdCumulant c3 = third_cumulant(gauged, nm.point);
                worst = std::max(worst, rank3_diff(c3.c3_1_2, base_c3.c3_1_2));
                worst = std::max(worst, rank3_diff(c3.c3_2_1, base_c3.c3_2_1));
                worst = std::max(worst, rank3_diff(quantum_christoffel(c3), base_qc));
                const VectorXr shifted = berry_connection(gauged, nm.point).beta;
                const VectorXr expected = base_beta - alpha.gradient(nm.point);
                worst = std::max(worst, (shifted - expected).cwiseAbs().maxCoeff());
            }
            return worst;
        });
    }
}

void run_uncertainty(Runner& r, const CheckOptions& options) {
    struct GridCase {
        std::string name;
        ModelSpec spec;
        std::vector<Real> c0, c1;
    };
    const std::vector<GridCase> cases = {
        {"glauber-m0",
         {GroupTag::WeylHeisenberg, 0.0, 0.0, SeriesTag::None, 64},
         {-1.2, 0.0, 1.2},
         {-1.2, 0.3, 1.2}},
        {"glauber-m2",
         {GroupTag::WeylHeisenberg, 0.0, 2.0, SeriesTag::None, 64},
         {-1.0, 0.6},
         {-0.4, 0.9}},
        {"su2-j3q2-m1q2",
         {GroupTag::SU2, 1.5, 0.5, SeriesTag::None, 0},
         {0.2, 1.1, 2.2, kPi - 0.2},
         {0.3, 2.1}},
        {"su11-dplus-j-1-m1",
         {GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, options.su11_truncation},
         {0.2, 0.8, 1.5},
         {0.0, 1.2}},
        {"twoosc-j-3q4-m7q4",
         {GroupTag::SU11, -0.75, 1.75, SeriesTag::TwoOscillator, options.su11_truncation},
         {0.3, 1.0},
         {0.5, -0.7}},
    };
    for (const GridCase& gc : cases) {
        // Degenerate grids have determinants at exactly zero, so the floor is
        // probed with the tangent-state route: its det noise (~1e-12) sits
        // below the 1e-10 threshold, unlike the log-overlap route (~1e-9).
        r.guarded(CheckSuite::Uncertainty, gc.name + "-det", 1e-10, [&]() -> Real {
            const StateFamily family = build_model(gc.spec);
            Real worst_det = 0.0;
            for (Real x0 : gc.c0)
                for (Real x1 : gc.c1) {
                    const UncertaintyReport rep =
                        uncertainty_check(qgt(family, vec2(x0, x1), Engine::TangentState));
                    worst_det = std::max(worst_det, std::max(Real(0), -rep.det));
                }
            return worst_det;
        });
        r.guarded(CheckSuite::Uncertainty, gc.name + "-minors", 1e-8, [&]() -> Real {
            const StateFamily family = build_model(gc.spec);
            Real worst = 0.0;
            for (Real x0 : gc.c0)
                for (Real x1 : gc.c1) {
                    const UncertaintyReport rep =
                        uncertainty_check(qgt(family, vec2(x0, x1), Engine::TangentState));
                    for (const auto& minor : rep.pairwise)
                        worst = std::max(worst, std::max(Real(0), -minor.value));
                }
            return worst;
        });
        r.guarded(CheckSuite::Uncertainty, gc.name + "-hermitian", 1e-8, [&]() -> Real {
            const StateFamily family = build_model(gc.spec);
            Real worst = 0.0;
            for (Real x0 : gc.c0)
                for (Real x1 : gc.c1) {
                    const MatrixXc c2 = qgt(family, vec2(x0, x1)).c2;
                    worst = std::max(worst, max_abs(c2 - c2.adjoint()));
                }
            return worst;
        });
    }
}

void run_stokes(Runner& r, const CheckOptions&) {
    struct LoopCase {
        Real j, m, theta0;
    };
    for (const LoopCase& lc : {LoopCase{0.5, -0.5, kPi / 3}, LoopCase{0.5, 0.5, kPi / 2}}) {
        const std::string name = "su2-m" + std::string(lc.m > 0 ? "+" : "-") + "1q2-theta" +
                                 (lc.theta0 < 1.1 ? "pi3" : "pi2");
        r.guarded(CheckSuite::Stokes, name, 1e-4, [&]() -> Real {
            const ModelSpec spec{GroupTag::SU2, lc.j, lc.m, SeriesTag::None, 0};
            const StateFamily family = build_model(spec);
            const Real phase = berry_phase_loop(family, latitude_loop(lc.theta0, 720));
            const SigmaField sigma_field = [&](const VectorXr& s) -> MatrixXr {
                return qgt(family, s).sigma;
            };
            const Real flux = sigma_flux(sigma_field, 2.5e-3, lc.theta0, 0.0, 2 * kPi, 400, 9);
            const Real closed_form = -2 * kPi * lc.m * (1 - std::cos(lc.theta0));
            return std::max(angle_distance(phase, flux), angle_distance(phase, closed_form));
        });
    }
}

void run_oracle(Runner& r, const CheckOptions& options) {
    struct OracleCase {
        std::string name;
        ModelSpec spec;
        std::vector<VectorXr> points;
        Real tol;
    };
    const std::vector<OracleCase> cases = {
        {"glauber-m1",
         {GroupTag::WeylHeisenberg, 0.0, 1.0, SeriesTag::None, 64},
         {vec2(0.7, -0.4), vec2(1.2, 0.9)},
         1e-6},
        {"su2-j3q2-m-1q2",
         {GroupTag::SU2, 1.5, -0.5, SeriesTag::None, 0},
         {vec2(0.9, 1.3), vec2(2.2, -0.8)},
         1e-7},
        {"su11-dplus-j-3q2-m3q2",
         {GroupTag::SU11, -1.5, 1.5, SeriesTag::Dplus, options.su11_truncation},
         {vec2(0.9, 0.7), vec2(1.6, -1.1)},
         1e-5},
        {"twoosc-j-1q4-m5q4",
         {GroupTag::SU11, -0.25, 1.25, SeriesTag::TwoOscillator, options.su11_truncation},
         {vec2(0.8, 1.0)},
         1e-5},
    };
    for (const OracleCase& oc : cases) {
        r.guarded(CheckSuite::Oracle, oc.name + "-closed-form", oc.tol, [&]() -> Real {
            const StateFamily family = build_model(oc.spec);
            Real worst = 0.0;
            for (const VectorXr& s : oc.points) {
                const QuantumGeometricTensor reference = analytic_qgt(oc.spec, s);
                for (Engine engine : {Engine::TangentState, Engine::LogOverlapFD})
                    worst = std::max(worst, max_abs(qgt(family, s, engine).c2 - reference.c2));
                const Real det_num = qgt(family, s).c2.determinant().real();
                worst = std::max(worst, std::abs(det_num - analytic_det(oc.spec, s)));
            }
            return worst;
        });
    }

    // Ladder algebra residuals on the numerical series.
    for (const NamedModel& nm : representative_models(options)) {
        r.guarded(CheckSuite::Oracle, nm.name + "-algebra", 1e-10, [&]() -> Real {
            const AlgebraReport rep = ladder_algebra_check(nm.spec);
            Real worst = std::max(rep.commutator_residual_jz, rep.commutator_residual_ladder);
            worst = std::max(worst, rep.casimir_residual);
            worst = std::max(worst, rep.lowest_weight_annihilation);
            return worst;
        });
    }

    // Series bookkeeping truth table.
    r.guarded(CheckSuite::Oracle, "series-rules", 0.5, [&]() -> Real {
        struct Row {
            Complex j;
            Real m;
            SeriesTag series;
            bool expect;
        };
        const std::vector<Row> rows = {
            {{-1.0, 0.0}, 1.0, SeriesTag::Dplus, true},
            {{-1.0, 0.0}, -2.0, SeriesTag::Dplus, false},
            {{-1.0, 0.0}, -1.0, SeriesTag::Dminus, true},
            {{-1.0, 0.0}, 0.0, SeriesTag::Dminus, false},
            {{-0.5, 0.8}, 2.0, SeriesTag::Ck0, true},
            {{-0.5, 0.8}, 0.5, SeriesTag::Ck0, false},
            {{-0.5, 1.3}, 1.5, SeriesTag::Ck12, true},
            {{-0.3, 0.0}, 4.0, SeriesTag::Supplementary, true},
            {{-0.7, 0.0}, 4.0, SeriesTag::Supplementary, false},
            {{-1.7, 0.0}, 1.7, SeriesTag::ProjectiveDiscrete, true},
            {{-0.5, 0.4}, 0.37, SeriesTag::ProjectiveContinuous, true},
            {{-0.25, 0.0}, 0.25, SeriesTag::TwoOscillator, true},
            {{-0.25, 0.0}, 0.75, SeriesTag::TwoOscillator, false},
            {{-0.75, 0.0}, 0.75, SeriesTag::TwoOscillator, true},
        };
        Real mismatches = 0;
        for (const Row& row : rows)
            if (validate_series(row.j, row.m, row.series).ok != row.expect) mismatches += 1;
        return mismatches;
    });

    // Operator-level displacement derivatives against the closed forms.
    r.guarded(CheckSuite::Oracle, "coset-su2-dtheta", 1e-8, [&]() -> Real {
        const ModelSpec spec{GroupTag::SU2, 1.5, -0.5, SeriesTag::None, 0};
        const CosetDecomposition dec = coset_derivative(spec, vec2(1.2, 0.0));
        return std::max(std::abs(dec.a_matrix(0, 0) - Complex(0.5, 0)),
                        std::abs(dec.a_matrix(0, 1) - Complex(-0.5, 0)));
    });
    r.guarded(CheckSuite::Oracle, "coset-su11-drho", 1e-8, [&]() -> Real {
        const ModelSpec spec{GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, options.su11_truncation};
        const CosetDecomposition dec = coset_derivative(spec, vec2(0.9, 0.0));
        return std::max(std::abs(dec.a_matrix(0, 0) - Complex(-0.5, 0)),
                        std::abs(dec.a_matrix(0, 1) - Complex(0.5, 0)));
    });
    r.guarded(CheckSuite::Oracle, "coset-glauber-dalpha1", 1e-8, [&]() -> Real {
        const ModelSpec spec{GroupTag::WeylHeisenberg, 0.0, 0.0, SeriesTag::None, 48};
        const CosetDecomposition dec = coset_derivative(spec, vec2(0.4, -0.3));
        return std::max(std::abs(dec.a_matrix(0, 0) - Complex(1, 0)),
                        std::abs(dec.a_matrix(0, 1) - Complex(-1, 0)));
    });

    // Commuting-generator reduction: engine cumulants must collapse onto
    // classical statistics of the generator spectrum.
    r.guarded(CheckSuite::Oracle, "commuting-reduction", 1e-7, [&]() -> Real {
        const int d = 8;
        VectorXr a1(d), a2(d), w(d);
        VectorXc psi0(d);
        for (int p = 0; p < d; ++p) {
            a1[p] = r.uniform(-1.0, 1.0);
            a2[p] = r.uniform(-1.0, 1.0);
            psi0[p] = Complex(r.uniform(-1.0, 1.0), r.uniform(-1.0, 1.0));
        }
        psi0.normalize();
        w = psi0.cwiseAbs2();

        StateFamily family;
        family.param_dim = 2;
        family.hilbert_dim = d;
        family.domain = {{-5, 5}, {-5, 5}};
        family.coord_names = {"s0", "s1"};
        family.strict_normalization = true;
        family.evaluator = [a1, a2, psi0](const VectorXr& s) -> VectorXc {
            VectorXc out(psi0.size());
            for (Eigen::Index p = 0; p < psi0.size(); ++p)
                out[p] = std::exp(Complex(0, s[0] * a1[p] + s[1] * a2[p])) * psi0[p];
            return out;
        };

        const VectorXr mean = vec2(w.dot(a1), w.dot(a2));
        auto central = [&](Eigen::Index i) -> VectorXr {
            return (i == 0 ? a1 : a2) - VectorXr::Constant(d, mean[i]);
        };
        MatrixXr cov(2, 2);
        for (int jj = 0; jj < 2; ++jj)
            for (int k = 0; k < 2; ++k)
                cov(jj, k) = (w.array() * central(jj).array() * central(k).array()).sum();
        Rank3<Real> skew = make_rank3_r(2);
        for (int jj = 0; jj < 2; ++jj)
            for (int k = 0; k < 2; ++k)
                for (int l = 0; l < 2; ++l)
                    skew[static_cast<size_t>(jj)](k, l) =
                        (w.array() * central(jj).array() * central(k).array() *
                         central(l).array())
                            .sum();

        const VectorXr s0 = vec2(0.3, -0.8);
        const QuantumGeometricTensor tensor = qgt(family, s0);
        Real worst = max_abs(tensor.c2 - cov.cast<Complex>());
        worst = std::max(worst, tensor.sigma.cwiseAbs().maxCoeff());
        const VectorXr beta = berry_connection(family, s0).beta;
        worst = std::max(worst, (beta - mean).cwiseAbs().maxCoeff());
        const ThirdCumulant c3 = third_cumulant(family, s0);
        for (size_t jj = 0; jj < 2; ++jj) {
            worst = std::max(worst, max_abs(c3.c3_1_2[jj] + skew[jj].cast<Complex>()));
            worst = std::max(worst, max_abs(c3.c3_2_1[jj] + skew[jj].cast<Complex>()));
        }
        return worst;
    });
}

void run_bo(Runner& r, const CheckOptions& options) {
    const std::vector<NamedModel> families = {
        {"su2-j1-m-1", {GroupTag::SU2, 1.0, -1.0, SeriesTag::None, 0}, vec2(1.1, 0.7)},
        {"su11-dplus-j-1-m1",
         {GroupTag::SU11, -1.0, 1.0, SeriesTag::Dplus, options.su11_truncation},
         vec2(0.8, 0.5)},
    };
    for (const NamedModel& nm : families) {
        r.guarded(CheckSuite::Bo, nm.name + "-force-gradient", 1e-5, [&]() -> Real {
            const StateFamily family = build_model(nm.spec);
            Real worst = 0.0;
            for (int trial = 0; trial < 2; ++trial) {
                MatrixXr b(2, 2);
                b << r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1);
                const MatrixXr q_real = b * b.transpose();
                MatrixXr q_imag(2, 2);
                const Real c = r.uniform(-0.5, 0.5);
                q_imag << 0, c, -c, 0;
                const InverseMassTensor q(q_real, q_imag);

                const Rank3<Complex> qc = quantum_christoffel(family, nm.point);
                VectorXr f = VectorXr::Zero(2);
                const MatrixXc q_full = q.hermitian();
                for (Eigen::Index l = 0; l < 2; ++l) {
                    Complex acc(0, 0);
                    for (Eigen::Index jj = 0; jj < 2; ++jj)
                        for (Eigen::Index k = 0; k < 2; ++k)
                            acc += q_full(jj, k) * qc[static_cast<size_t>(jj)](l, k);
                    f[l] = -acc.real();
                }
                auto phi_at = [&](const VectorXr& x) {
                    return effective_potential(q, qgt(family, x));
                };
                const Real h = 1e-3;
                for (Eigen::Index l = 0; l < 2; ++l) {
                    VectorXr xp = nm.point, xm = nm.point;
                    xp[l] += h;
                    xm[l] -= h;
                    const Real d1 = (phi_at(xp) - phi_at(xm)) / (2 * h);
                    xp[l] = nm.point[l] + h / 2;
                    xm[l] = nm.point[l] - h / 2;
                    const Real d2 = (phi_at(xp) - phi_at(xm)) / h;
                    worst = std::max(worst, std::abs(f[l] + (4 * d2 - d1) / 3));
                }
            }
            return worst;
        });
        r.guarded(CheckSuite::Bo, nm.name + "-mass-diagonalization", 1e-10, [&]() -> Real {
            const StateFamily family = build_model(nm.spec);
            const QuantumGeometricTensor tensor = qgt(family, nm.point);
            MatrixXr b(2, 2);
            b << r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1);
            MatrixXr q_imag(2, 2);
            const Real c = r.uniform(-0.5, 0.5);
            q_imag << 0, c, -c, 0;
            const InverseMassTensor q(b * b.transpose(), q_imag);
            const MassDiagonalization diag = diagonalize_mass(q, tensor);
            const Real reconstructed =
                (diag.inv_masses.array() * (diag.g_tilde + diag.sigma_tilde).array()).sum();
            return std::abs(reconstructed - effective_potential(q, tensor));
        });
    }
}

}  // namespace

std::optional<CheckSuite> parse_suite(const std::string& text) {
    if (text == "all") return CheckSuite::All;
    if (text == "gauge") return CheckSuite::Gauge;
    if (text == "uncertainty") return CheckSuite::Uncertainty;
    if (text == "stokes") return CheckSuite::Stokes;
    if (text == "oracle") return CheckSuite::Oracle;
    if (text == "bo") return CheckSuite::Bo;
    return std::nullopt;
}

std::string to_string(CheckSuite suite) {
    switch (suite) {
        case CheckSuite::All: return "all";
        case CheckSuite::Gauge: return "gauge";
        case CheckSuite::Uncertainty: return "uncertainty";
        case CheckSuite::Stokes: return "stokes";
        case CheckSuite::Oracle: return "oracle";
        case CheckSuite::Bo: return "bo";
    }
    return "?";
}

std::vector<CheckResult> run_checks(CheckSuite suite, const CheckOptions& options) {
    std::vector<CheckResult> results;
    Runner runner{std::mt19937_64(options.seed), results};
    const bool all = suite == CheckSuite::All;
    if (all || suite == CheckSuite::Gauge) run_gauge(runner, options);
    if (all || suite == CheckSuite::Uncertainty) run_uncertainty(runner, options);
    if (all || suite == CheckSuite::Stokes) run_stokes(runner, options);
    if (all || suite == CheckSuite::Oracle) run_oracle(runner, options);
    if (all || suite == CheckSuite::Bo) run_bo(runner, options);
    return results;
}

}  // namespace qgeom
