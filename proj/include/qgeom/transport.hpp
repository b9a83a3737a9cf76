#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "qgeom/geometry.hpp"

namespace qgeom {

struct Path {
    std::vector<VectorXr> samples;  // uniform in the curve parameter
    // Optional per-coordinate period (0 = aperiodic). Lets a loop sweep an
    // angle chart-contiguously (0 -> 2 pi) and still count as closed.
    std::vector<Real> periods;

    bool closed(Real tol = 1e-12) const {
        if (samples.size() < 2) return false;
        VectorXr diff = samples.front() - samples.back();
        for (Eigen::Index c = 0; c < diff.size(); ++c)
            if (c < static_cast<Eigen::Index>(periods.size()) && periods[c] > 0)
                diff[c] = std::remainder(diff[c], periods[c]);
        return diff.cwiseAbs().maxCoeff() <= tol;
    }
    void validate() const {
        if (samples.size() < 16) throw InvalidConfig("path needs at least 16 samples");
    }
};

// Latitude-style loop: coordinate 0 pinned, coordinate 1 swept over one full
// cycle of length `period`, first sample repeated at the end.
Path latitude_loop(Real pinned_coord0, int samples, Real period = 2 * EIGEN_PI);

// Family returning an ordered set of p orthonormal columns at each point.
struct BasisFamily {
    Eigen::Index param_dim = 0;
    Eigen::Index hilbert_dim = 0;
    Eigen::Index rank = 0;  // p <= d retained states
    std::function<MatrixXc(const VectorXr&)> evaluator;
};

// Single-state family viewed as a rank-1 basis.
BasisFamily as_basis(const StateFamily& family);

struct HilbertCurvature {
    // r_tilde[l][k] = p x p block of R~^lambda_mu for the (l,k) coordinate pair.
    Rank4<Complex> r_tilde;
    MatrixXc contraction;  // R~_lk = sum_lambda R~^lambda_lambda,lk
    ParameterPoint point;
};

using ChristoffelProvider = std::function<Rank3<Real>(const VectorXr&)>;  // second kind, [l](i,j)

// Parallel transport of v0 along the path with a midpoint rule:
// dV^i = -Gamma^i_jk V^j ds^k. Returns the vector at every sample.
std::vector<VectorXr> transport_vector(const ChristoffelProvider& gamma, const Path& path,
                                       const VectorXr& v0);

// Connection matrix Gamma~_k(s) = B(s)^dagger d_k B(s); anti-Hermitian for an
// orthonormal basis (checked to 1e-8, orthonormality to 1e-10).
MatrixXc hilbert_connection(const BasisFamily& basis, const VectorXr& s, Eigen::Index k,
                            const FDScheme& scheme = default_scheme2());

// Curvature R~_lk = d_k Gamma~_l - d_l Gamma~_k + [Gamma~_k, Gamma~_l] with FD
// derivatives of the connection field, plus the trace contraction.
HilbertCurvature hilbert_riemann(const BasisFamily& basis, const VectorXr& s,
                                 Real fd_step = 1e-2);

// Loop integral of the Berry connection via phase-aligned neighbor overlaps;
// result reported modulo 2 pi in (-pi, pi]. Refuses open or undersampled
// loops (any neighbor overlap modulus < 0.99).
Real berry_phase_loop(const StateFamily& family, const Path& loop);

// Flux of 2 sigma over the rectangle [c0_lo, c0_hi] x [c1_lo, c1_hi] by
// trapezoid quadrature on an (n0 x n1) tensor grid.
Real sigma_flux(const SigmaField& sigma, Real c0_lo, Real c0_hi, Real c1_lo, Real c1_hi,
                int n0, int n1);

// Geodesic of the metric field from (s0, v0), integrated in the first-kind
// form g_ki d2s^i/dl2 = -(ds^i/dl)(ds^j/dl)[ij,k] with fixed-step RK4.
// The affine speed must stay conserved within 1e-6 or StepSizeTooLarge.
Path geodesic(const MetricField& g_field, const VectorXr& s0, const VectorXr& v0,
              Real arc_length, int steps, Real metric_fd_step = 1e-3);

}  // namespace qgeom
