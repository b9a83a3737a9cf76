#include "qgeom/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace qgeom {

namespace {

struct EngineResult {
    MatrixXc c2;
    Real estimated_error;
};

EngineResult qgt_tangent_engine(const StateFamily& family, const VectorXr& s,
                                const FDScheme& scheme) {
    const Eigen::Index n = family.param_dim;
    auto tangents_at = [&](Real h) {
        FDScheme one{h, scheme.richardson};
        std::vector<VectorXc> t;
        t.reserve(static_cast<size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k) t.push_back(tangent(family, s, k, one));
        return t;
    };
    auto assemble = [&](const std::vector<VectorXc>& t) {
        const VectorXc psi = evaluate(family, s);
        MatrixXc gamma(n, n);
        VectorXr beta(n);
        for (Eigen::Index k = 0; k < n; ++k)
            beta[k] = (Complex(0, -1) * psi.dot(t[static_cast<size_t>(k)])).real();
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                gamma(j, k) = t[static_cast<size_t>(j)].dot(t[static_cast<size_t>(k)]);
        return (gamma - (beta * beta.transpose()).cast<Complex>()).eval();
    };
    const MatrixXc c2_h = assemble(tangents_at(scheme.h));
    const MatrixXc c2_h2 = assemble(tangents_at(scheme.h / 2));
    // Both inputs are already Richardson-extrapolated; the pair difference is
    // a conservative error estimate for the finer value.
    return {c2_h2, (c2_h - c2_h2).cwiseAbs().maxCoeff()};
}

EngineResult qgt_logfd_engine(const StateFamily& family, const VectorXr& s,
                              const FDScheme& scheme) {
    const Eigen::Index n = family.param_dim;
    StateCache cache(family);
    MatrixXc c2(n, n);
    Real err = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k) {
            const CumulantValue v = cumulant(cache, s, {{j}, {k}}, scheme);
            c2(j, k) = v.value;
            err = std::max(err, v.estimated_error);
        }
    return {c2, err};
}

void validate_tensor_shape(const MatrixXc& c2) {
    const Real herm = (c2 - c2.adjoint()).cwiseAbs().maxCoeff();
    if (herm > 1e-8)
        throw EngineMismatch("geometric tensor is not Hermitian within 1e-8 (residual " +
                             std::to_string(herm) + ")");
}

}  // namespace

QuantumGeometricTensor qgt(const StateFamily& family, const VectorXr& s, Engine engine,
                           const FDScheme& scheme) {
    const EngineResult tangent_side = qgt_tangent_engine(family, s, scheme);
    const EngineResult logfd_side = qgt_logfd_engine(family, s, scheme);

    const Real mismatch = (tangent_side.c2 - logfd_side.c2).cwiseAbs().maxCoeff();
    const Real combined = tangent_side.estimated_error + logfd_side.estimated_error;
    if (mismatch > std::max(1e-6, 100.0 * combined))
        throw EngineMismatch("tangent and log-overlap engines disagree by " +
                             std::to_string(mismatch) +
                             " (combined error estimate " + std::to_string(combined) + ")");

    const EngineResult& chosen = engine == Engine::TangentState ? tangent_side : logfd_side;
    validate_tensor_shape(chosen.c2);

    QuantumGeometricTensor out;
    out.c2 = chosen.c2;
    out.point = ParameterPoint(s, family.coord_names);
    out.g = 0.5 * (chosen.c2.real() + chosen.c2.real().transpose());
    out.sigma = 0.5 * (chosen.c2.imag() - chosen.c2.imag().transpose());
    out.estimated_error = std::max(chosen.estimated_error, mismatch);
    if (out.g.diagonal().minCoeff() < -1e-10)
        throw EngineMismatch("negative metric diagonal; engines or step size unusable here");
    return out;
}

BerryConnection berry_connection(const StateFamily& family, const VectorXr& s,
                                 const FDScheme& scheme) {
    const Eigen::Index n = family.param_dim;
    const VectorXc psi = evaluate(family, s);
    BerryConnection out;
    out.beta = VectorXr(n);
    out.point = ParameterPoint(s, family.coord_names);
    for (Eigen::Index k = 0; k < n; ++k) {
        const Complex raw = Complex(0, -1) * psi.dot(tangent(family, s, k, scheme));
        if (std::abs(raw.imag()) > 1e-6)
            throw NonRealConnection("Berry connection has imaginary residue " +
                                    std::to_string(raw.imag()) + "; family not normalized?");
        out.beta[k] = raw.real();
    }
    return out;
}

ThirdCumulant third_cumulant(const StateFamily& family, const VectorXr& s,
                             const FDScheme& scheme) {
    const Eigen::Index n = family.param_dim;
    StateCache cache(family);
    ThirdCumulant out;
    out.c3_1_2 = make_rank3_c(n);
    out.c3_2_1 = make_rank3_c(n);
    out.point = ParameterPoint(s, family.coord_names);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l) {
                if (l < k) {  // C3(j;kl) symmetric in (k,l)
                    out.c3_1_2[static_cast<size_t>(j)](k, l) =
                        out.c3_1_2[static_cast<size_t>(j)](l, k);
                } else {
                    const CumulantValue v = cumulant(cache, s, {{j}, {k, l}}, scheme);
                    out.c3_1_2[static_cast<size_t>(j)](k, l) = v.value;
                    out.estimated_error = std::max(out.estimated_error, v.estimated_error);
                }
                if (k < j) {  // C3(jk;l) symmetric in (j,k)
                    out.c3_2_1[static_cast<size_t>(j)](k, l) =
                        out.c3_2_1[static_cast<size_t>(k)](j, l);
                } else {
                    const CumulantValue v = cumulant(cache, s, {{j, k}, {l}}, scheme);
                    out.c3_2_1[static_cast<size_t>(j)](k, l) = v.value;
                    out.estimated_error = std::max(out.estimated_error, v.estimated_error);
                }
            }
    return out;
}

Rank3<Complex> qgt_derivative(const StateFamily& family, const VectorXr& s, Real tolerance) {
    const Eigen::Index n = family.param_dim;
    const ThirdCumulant c3 = third_cumulant(family, s);

    // Cumulant route: d_l C2(j;k) = i (C3(jl;k) - C3(j;kl)).
    Rank3<Complex> via_cumulants = make_rank3_c(n);
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                via_cumulants[static_cast<size_t>(l)](j, k) =
                    Complex(0, 1) * (c3.c3_2_1[static_cast<size_t>(j)](l, k) -
                                     c3.c3_1_2[static_cast<size_t>(j)](k, l));

    // Direct route: FD of the c2 field.
    auto c2_field = [&](const VectorXr& x) {
        StateCache cache(family);
        MatrixXc c2(n, n);
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                c2(j, k) = cumulant(cache, x, {{j}, {k}}, default_scheme2()).value;
        return c2;
    };
    Real worst = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
        const MatrixXc direct = fd::field_derivative(c2_field, s, l, 1e-2);
        worst = std::max(worst,
                         (direct - via_cumulants[static_cast<size_t>(l)]).cwiseAbs().maxCoeff());
    }
    if (worst > tolerance)
        throw IdentityViolation("FD of C2 and the third-cumulant combination disagree by " +
                                std::to_string(worst));
    return via_cumulants;
}

Rank3<Complex> quantum_christoffel(const ThirdCumulant& c3) {
    const Eigen::Index n = static_cast<Eigen::Index>(c3.c3_1_2.size());
    auto c12 = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
        return c3.c3_1_2[static_cast<size_t>(a)](b, c);  // C3(a;bc)
    };
    auto c21 = [&](Eigen::Index a, Eigen::Index b, Eigen::Index c) {
        return c3.c3_2_1[static_cast<size_t>(a)](b, c);  // C3(ab;c)
    };
    Rank3<Complex> q = make_rank3_c(n);
    // [jl;k]_q = (d_j C2(l;k) + d_l C2(k;j) - d_k C2(j;l)) / 2 with every
    // derivative expressed through third cumulants; expanding gives the
    // six-term combination below with an overall i/2.
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index l = 0; l < n; ++l)
            for (Eigen::Index k = 0; k < n; ++k)
                q[static_cast<size_t>(j)](l, k) =
                    Complex(0, 0.5) * (c21(l, j, k) - c12(l, k, j) + c21(k, l, j) -
                                       c12(k, j, l) - c21(j, k, l) + c12(j, l, k));
    return q;
}

Rank3<Complex> quantum_christoffel(const StateFamily& family, const VectorXr& s,
                                   const FDScheme& scheme) {
    return quantum_christoffel(third_cumulant(family, s, scheme));
}

ChristoffelField christoffel(const MetricField& g_field, const VectorXr& s, Real fd_step,
                             Real singular_threshold) {
    const Eigen::Index n = s.size();
    std::vector<MatrixXr> dg;
    dg.reserve(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        dg.push_back(fd::field_derivative(g_field, s, i, fd_step));

    ChristoffelField out;
    out.first_kind = christoffel_first_kind(dg);
    out.quantum = make_rank3_c(n);
    for (Eigen::Index i = 0; i < n; ++i)
        out.quantum[static_cast<size_t>(i)] = out.first_kind[static_cast<size_t>(i)].cast<Complex>();
    out.point = ParameterPoint(s);

    const MatrixXr g = g_field(s);
    if (std::abs(g.determinant()) > singular_threshold)
        out.second_kind = christoffel_second_kind(out.first_kind, g.inverse().eval());
    return out;
}

ChristoffelField christoffel(const StateFamily& family, const VectorXr& s) {
    const ThirdCumulant c3 = third_cumulant(family, s);
    MetricField g_field = [&family](const VectorXr& x) {
        return qgt(family, x, Engine::LogOverlapFD).g;
    };
    ChristoffelField out = christoffel(g_field, s, 1e-2);
    out.quantum = quantum_christoffel(c3);  // keep the sigma part; metric route is real-only
    out.point = ParameterPoint(s, family.coord_names);
    return out;
}

RiemannTensor riemann(const MetricField& g_field, const VectorXr& s, Real outer_step,
                      Real inner_step) {
    const Eigen::Index n = s.size();
    const MatrixXr g0 = g_field(s);
    if (std::abs(g0.determinant()) <= 1e-12)
        throw SingularMetric("metric not invertible; curvature undefined here");

    auto gamma2_at = [&](const VectorXr& x) {
        const ChristoffelField f = christoffel(g_field, x, inner_step);
        if (!f.second_kind)
            throw SingularMetric("metric became singular inside the curvature stencil");
        return *f.second_kind;
    };

    // FD of each Gamma^l_ij component field with a Richardson pair.
    const Rank3<Real> gamma0 = gamma2_at(s);
    std::vector<Rank3<Real>> dgamma(static_cast<size_t>(n));
    Real err = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
        auto flat = [&](const VectorXr& x) {
            const Rank3<Real> gm = gamma2_at(x);
            MatrixXr packed(n, n * n);
            for (Eigen::Index l = 0; l < n; ++l)
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index j = 0; j < n; ++j)
                        packed(l, i * n + j) = gm[static_cast<size_t>(l)](i, j);
            return packed;
        };
        Real axis_err = 0.0;
        const MatrixXr d = fd::field_derivative(flat, s, a, outer_step, &axis_err);
        err = std::max(err, axis_err);
        Rank3<Real> unpacked = make_rank3_r(n);
        for (Eigen::Index l = 0; l < n; ++l)
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j < n; ++j)
                    unpacked[static_cast<size_t>(l)](i, j) = d(l, i * n + j);
        dgamma[static_cast<size_t>(a)] = std::move(unpacked);
    }

    RiemannTensor out;
    out.r = riemann_from_connection(gamma0, dgamma);
    out.ricci = ricci_contraction(out.r);
    out.scalar = (g0.inverse() * out.ricci).trace();
    out.estimated_error = err;
    out.point = ParameterPoint(s);

    Real norm = 0.0;
    for (const auto& block : out.r)
        for (const auto& mat : block) norm = std::max(norm, mat.cwiseAbs().maxCoeff());
    if (err > 0.1 * std::max(norm, 1e-6))
        throw NoiseDominated("curvature FD error estimate " + std::to_string(err) +
                             " exceeds 10% of the tensor norm " + std::to_string(norm));
    return out;
}

RiemannTensor riemann(const StateFamily& family, const VectorXr& s) {
    MetricField g_field = [&family](const VectorXr& x) {
        return qgt(family, x, Engine::LogOverlapFD).g;
    };
    RiemannTensor out = riemann(g_field, s);
    out.point = ParameterPoint(s, family.coord_names);
    return out;
}

UncertaintyReport uncertainty_check(const QuantumGeometricTensor& tensor) {
    UncertaintyReport out;
    const Complex det = tensor.c2.determinant();
    out.det = det.real();
    out.schroedinger_ok = out.det >= -1e-10;
    const Eigen::Index n = tensor.dim();
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index k = j + 1; k < n; ++k) {
            const Real value = tensor.g(j, j) * tensor.g(k, k) - tensor.g(j, k) * tensor.g(j, k) -
                               tensor.sigma(j, k) * tensor.sigma(j, k);
            out.pairwise.push_back({j, k, value, value >= -1e-8});
        }
    return out;
}

}  // namespace qgeom
