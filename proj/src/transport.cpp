#include "qgeom/transport.hpp"

#include <cmath>

#include "qgeom/statefam.hpp"

namespace qgeom {

Path latitude_loop(Real pinned_coord0, int samples, Real period) {
    if (samples < 16) throw InvalidConfig("loop needs at least 16 samples");
    Path path;
    path.samples.reserve(static_cast<size_t>(samples) + 1);
    for (int i = 0; i <= samples; ++i) {
        VectorXr s(2);
        s << pinned_coord0, period * Real(i) / Real(samples);
        path.samples.push_back(std::move(s));
    }
    path.periods = {0.0, period};
    return path;
}

BasisFamily as_basis(const StateFamily& family) {
    BasisFamily basis;
    basis.param_dim = family.param_dim;
    basis.hilbert_dim = family.hilbert_dim;
    basis.rank = 1;
    basis.evaluator = [family](const VectorXr& s) -> MatrixXc {
        return evaluate(family, s);
    };
    return basis;
}

std::vector<VectorXr> transport_vector(const ChristoffelProvider& gamma, const Path& path,
                                       const VectorXr& v0) {
    path.validate();
    std::vector<VectorXr> out;
    out.reserve(path.samples.size());
    out.push_back(v0);
    VectorXr v = v0;
    const Eigen::Index n = v0.size();
    for (size_t seg = 0; seg + 1 < path.samples.size(); ++seg) {
        const VectorXr& a = path.samples[seg];
        const VectorXr& b = path.samples[seg + 1];
        const VectorXr ds = b - a;
        const Rank3<Real> g_mid = gamma(0.5 * (a + b));
        // Midpoint (implicit-trapezoid style) update: first a half step with
        // the segment-start vector, then the full step with the half-step one.
        auto step = [&](const VectorXr& w, Real scale) {
            VectorXr dv = VectorXr::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index jj = 0; jj < n; ++jj)
                    for (Eigen::Index k = 0; k < n; ++k)
                        dv[i] -= g_mid[static_cast<size_t>(i)](jj, k) * w[jj] * ds[k] * scale;
            return dv;
        };
        const VectorXr v_half = v + step(v, 0.5);
        v += step(v_half, 1.0);
        out.push_back(v);
    }
    return out;
}

MatrixXc hilbert_connection(const BasisFamily& basis, const VectorXr& s, Eigen::Index k,
                            const FDScheme& scheme) {
    scheme.validate();
    const MatrixXc b0 = basis.evaluator(s);
    const MatrixXc gram = b0.adjoint() * b0;
    const Real ortho = (gram - MatrixXc::Identity(basis.rank, basis.rank)).cwiseAbs().maxCoeff();
    if (ortho > 1e-10)
        throw NonOrthonormalBasis("basis columns deviate from orthonormality by " +
                                  std::to_string(ortho));
    const MatrixXc db = fd::field_derivative(basis.evaluator, s, k, scheme.h);
    MatrixXc conn = b0.adjoint() * db;
    const Real anti = (conn + conn.adjoint()).cwiseAbs().maxCoeff();
    if (anti > 1e-8)
        throw NonOrthonormalBasis("connection is not anti-Hermitian (residual " +
                                  std::to_string(anti) + ")");
    return conn;
}

HilbertCurvature hilbert_riemann(const BasisFamily& basis, const VectorXr& s, Real fd_step) {
    const Eigen::Index n = basis.param_dim;
    const Eigen::Index p = basis.rank;

    std::vector<MatrixXc> conn(static_cast<size_t>(n));
    std::vector<std::vector<MatrixXc>> dconn(static_cast<size_t>(n));  // [d][k] = d_d Gamma~_k
    for (Eigen::Index k = 0; k < n; ++k)
        conn[static_cast<size_t>(k)] = hilbert_connection(basis, s, k, {fd_step, true});
    for (Eigen::Index dcoord = 0; dcoord < n; ++dcoord) {
        dconn[static_cast<size_t>(dcoord)].resize(static_cast<size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k) {
            auto field = [&](const VectorXr& x) {
                return hilbert_connection(basis, x, k, {fd_step, true});
            };
            dconn[static_cast<size_t>(dcoord)][static_cast<size_t>(k)] =
                fd::field_derivative(field, s, dcoord, fd_step);
        }
    }

    HilbertCurvature out;
    out.r_tilde.assign(static_cast<size_t>(n),
                       std::vector<MatrixXc>(static_cast<size_t>(n), MatrixXc::Zero(p, p)));
    out.contraction = MatrixXc::Zero(n, n);
    for (Eigen::Index l = 0; l < n; ++l) {
        for (Eigen::Index k = 0; k < n; ++k) {
            const MatrixXc& gl = conn[static_cast<size_t>(l)];
            const MatrixXc& gk = conn[static_cast<size_t>(k)];
            MatrixXc r = dconn[static_cast<size_t>(k)][static_cast<size_t>(l)] -
                         dconn[static_cast<size_t>(l)][static_cast<size_t>(k)] + gk * gl - gl * gk;
            out.r_tilde[static_cast<size_t>(l)][static_cast<size_t>(k)] = r;
            out.contraction(l, k) = r.trace();
        }
    }
    out.point = ParameterPoint(s, {});
    return out;
}

Real berry_phase_loop(const StateFamily& family, const Path& loop) {
    loop.validate();
    if (!loop.closed())
        throw OpenPath("loop endpoints disagree beyond 1e-12");
    Real total = 0.0;
    VectorXc prev = evaluate(family, loop.samples.front());
    for (size_t i = 1; i < loop.samples.size(); ++i) {
        const VectorXc cur = evaluate(family, loop.samples[i]);
        const Complex ov = prev.dot(cur);  // <prev | cur>
        if (std::abs(ov) < 0.99)
            throw UndersampledLoop("neighbor overlap modulus " + std::to_string(std::abs(ov)) +
                                   " below 0.99; refine the loop");
        total += std::arg(ov);
        prev = cur;
    }
    // Reduce to (-pi, pi].
    const Real two_pi = 2 * EIGEN_PI;
    Real reduced = std::remainder(total, two_pi);
    if (reduced <= -EIGEN_PI) reduced += two_pi;
    return reduced;
}

Real sigma_flux(const SigmaField& sigma, Real c0_lo, Real c0_hi, Real c1_lo, Real c1_hi,
                int n0, int n1) {
    if (n0 < 2 || n1 < 2) throw InvalidConfig("flux grid needs at least 2 nodes per axis");
    const Real h0 = (c0_hi - c0_lo) / (n0 - 1);
    const Real h1 = (c1_hi - c1_lo) / (n1 - 1);
    Real total = 0.0;
    for (int i = 0; i < n0; ++i) {
        const Real w0 = (i == 0 || i == n0 - 1) ? 0.5 : 1.0;
        for (int k = 0; k < n1; ++k) {
            const Real w1 = (k == 0 || k == n1 - 1) ? 0.5 : 1.0;
            VectorXr s(2);
            s << c0_lo + i * h0, c1_lo + k * h1;
            total += w0 * w1 * 2.0 * sigma(s)(0, 1);
        }
    }
    return total * h0 * h1;
}

Path geodesic(const MetricField& g_field, const VectorXr& s0, const VectorXr& v0,
              Real arc_length, int steps, Real metric_fd_step) {
    if (steps < 16) throw InvalidConfig("geodesic integration needs at least 16 steps");
    const Eigen::Index n = s0.size();

    auto acceleration = [&](const VectorXr& s, const VectorXr& v) -> VectorXr {
        const MatrixXr g = g_field(s);
        Rank3<Real> dg(static_cast<size_t>(n));
        for (Eigen::Index k = 0; k < n; ++k)
            dg[static_cast<size_t>(k)] = fd::field_derivative(g_field, s, k, metric_fd_step);
        const Rank3<Real> first = christoffel_first_kind(dg);
        VectorXr rhs = VectorXr::Zero(n);
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index jj = 0; jj < n; ++jj)
                    rhs[k] -= v[i] * v[jj] * first[static_cast<size_t>(i)](jj, k);
        Eigen::FullPivLU<MatrixXr> lu(g);
        if (!lu.isInvertible())
            throw SingularMetric("metric not invertible along the geodesic");
        return lu.solve(rhs);
    };

    auto speed = [&](const VectorXr& s, const VectorXr& v) -> Real {
        return v.dot(g_field(s) * v);
    };

    const Real speed0 = speed(s0, v0);
    const Real dt = arc_length / steps;
    VectorXr s = s0, v = v0;
    Path path;
    path.samples.reserve(static_cast<size_t>(steps) + 1);
    path.samples.push_back(s);
    for (int step = 0; step < steps; ++step) {
        const VectorXr k1s = v, k1v = acceleration(s, v);
        const VectorXr k2s = v + 0.5 * dt * k1v, k2v = acceleration(s + 0.5 * dt * k1s, k2s);
        const VectorXr k3s = v + 0.5 * dt * k2v, k3v = acceleration(s + 0.5 * dt * k2s, k3s);
        const VectorXr k4s = v + dt * k3v, k4v = acceleration(s + dt * k3s, k4s);
        s += dt / 6.0 * (k1s + 2 * k2s + 2 * k3s + k4s);
        v += dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v);
        path.samples.push_back(s);
    }
    const Real drift = std::abs(speed(s, v) - speed0) / std::max(std::abs(speed0), Real(1e-12));
    if (drift > 1e-6)
        throw StepSizeTooLarge("affine speed drifted by relative " + std::to_string(drift) +
                               "; reduce the step");
    return path;
}

}  // namespace qgeom
