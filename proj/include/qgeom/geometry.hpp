#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "qgeom/cumulants.hpp"

namespace qgeom {

// Which route computes the complex geometric tensor:
//  - TangentState: inner products of FD tangent states, gamma_jk - beta_j beta_k.
//  - LogOverlapFD: mixed second derivative of ln S(s', s) on the diagonal.
// Both are always evaluated for cross-checking; the enum picks the returned one.
enum class Engine { TangentState, LogOverlapFD };

// Row index of c2 is the bra-side (primed) derivative; this fixes the
// Hermiticity convention c2(j,k) = conj(c2(k,j)).
struct QuantumGeometricTensor {
    MatrixXc c2;
    ParameterPoint point;
    MatrixXr g;      // symmetric real part (metric)
    MatrixXr sigma;  // antisymmetric imaginary part (curvature two-form)
    Real estimated_error = 0.0;

    Eigen::Index dim() const { return c2.rows(); }
};

struct BerryConnection {
    VectorXr beta;
    ParameterPoint point;
};

struct ThirdCumulant {
    Rank3<Complex> c3_1_2;  // C3(j;kl), symmetric in (k,l)
    Rank3<Complex> c3_2_1;  // C3(jk;l), symmetric in (j,k)
    ParameterPoint point;
    Real estimated_error = 0.0;
};

struct ChristoffelField {
    Rank3<Complex> quantum;                  // [jl;k]_q, layout [j](l,k)
    Rank3<Real> first_kind;                  // [ij,k], layout [i](j,k)
    std::optional<Rank3<Real>> second_kind;  // Gamma^l_ij, layout [l](i,j); absent when g singular
    ParameterPoint point;
};

struct RiemannTensor {
    Rank4<Real> r;   // R^l_{mkj}, layout [l][m](k,j)
    MatrixXr ricci;  // contraction of the upper index with the last lower index
    Real scalar = 0.0;
    Real estimated_error = 0.0;
    ParameterPoint point;
};

struct UncertaintyReport {
    Real det = 0.0;
    bool schroedinger_ok = false;
    struct Minor {
        Eigen::Index j, k;
        Real value;  // g_jj g_kk - g_jk^2 - sigma_jk^2
        bool ok;
    };
    std::vector<Minor> pairwise;
};

using MetricField = std::function<MatrixXr(const VectorXr&)>;
using SigmaField = std::function<MatrixXr(const VectorXr&)>;

// Default FD steps: second-order log-overlap stencils behave best near 1e-3,
// third-order ones near 1e-2 (roundoff grows as h^-3).
inline FDScheme default_scheme2() { return FDScheme{1e-3, true}; }
inline FDScheme default_scheme3() { return FDScheme{1e-2, true}; }

QuantumGeometricTensor qgt(const StateFamily& family, const VectorXr& s,
                           Engine engine = Engine::LogOverlapFD,
                           const FDScheme& scheme = default_scheme2());

BerryConnection berry_connection(const StateFamily& family, const VectorXr& s,
                                 const FDScheme& scheme = default_scheme2());

ThirdCumulant third_cumulant(const StateFamily& family, const VectorXr& s,
                             const FDScheme& scheme = default_scheme3());

// d_l C2(j;k), computed both as an FD derivative of the c2 field and as the
// cumulant combination i (C3(jl;k) - C3(j;kl)); the two must agree within
// `tolerance` and the cumulant-route value is returned. Layout [l](j,k).
Rank3<Complex> qgt_derivative(const StateFamily& family, const VectorXr& s,
                              Real tolerance = 1e-5);

// Metric-route Christoffel symbols from a metric field (first kind always,
// second kind when det g > singular_threshold).
ChristoffelField christoffel(const MetricField& g_field, const VectorXr& s,
                             Real fd_step = 1e-2, Real singular_threshold = 1e-12);

// Quantum Christoffel symbol [jl;k]_q assembled from the six third-cumulant
// terms; needs no metric inverse. Layout [j](l,k).
Rank3<Complex> quantum_christoffel(const StateFamily& family, const VectorXr& s,
                                   const FDScheme& scheme = default_scheme3());
Rank3<Complex> quantum_christoffel(const ThirdCumulant& c3);

// Full Christoffel bundle for a family: quantum part from cumulants, metric
// parts from the engine's g field.
ChristoffelField christoffel(const StateFamily& family, const VectorXr& s);

// Riemann tensor by FD of the second-kind Christoffel field, with Ricci
// contraction and scalar curvature.
RiemannTensor riemann(const MetricField& g_field, const VectorXr& s,
                      Real outer_step = 2e-2, Real inner_step = 1e-2);
RiemannTensor riemann(const StateFamily& family, const VectorXr& s);

UncertaintyReport uncertainty_check(const QuantumGeometricTensor& tensor);

// --- Scalar-templated assembly helpers (pure index algebra, no FD inside) ---

// First-kind Christoffel from the derivative array dg[i](j,k) = d_i g_jk:
// [ij,k] = (d_j g_ik + d_i g_kj - d_k g_ij) / 2, returned as [i](j,k).
template <typename Scalar>
Rank3<Scalar> christoffel_first_kind(const std::vector<Matrix<Scalar>>& dg) {
    const Eigen::Index n = static_cast<Eigen::Index>(dg.size());
    Rank3<Scalar> first(static_cast<size_t>(n), Matrix<Scalar>::Zero(n, n));
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            for (Eigen::Index k = 0; k < n; ++k)
                first[i](j, k) = (dg[j](i, k) + dg[i](k, j) - dg[k](i, j)) / Scalar(2);
    return first;
}

// Second kind via the metric inverse: Gamma^l_ij = g^{kl} [ij,k].
template <typename Scalar>
Rank3<Scalar> christoffel_second_kind(const Rank3<Scalar>& first, const Matrix<Scalar>& g_inverse) {
    const Eigen::Index n = g_inverse.rows();
    Rank3<Scalar> second(static_cast<size_t>(n), Matrix<Scalar>::Zero(n, n));
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) {
                Scalar acc{};
                for (Eigen::Index k = 0; k < n; ++k) acc += g_inverse(k, l) * first[i](j, k);
                second[l](i, j) = acc;
            }
    return second;
}

// Curvature from the connection and its derivative array
// dGamma[a][l](i,j) = d_a Gamma^l_ij:
// R^l_{mkj} = d_j Gamma^l_{km} - d_k Gamma^l_{jm}
//           + Gamma^l_{jn} Gamma^n_{km} - Gamma^l_{kn} Gamma^n_{jm}.
template <typename Scalar>
Rank4<Scalar> riemann_from_connection(const Rank3<Scalar>& gamma,
                                      const std::vector<Rank3<Scalar>>& dgamma) {
    const Eigen::Index n = static_cast<Eigen::Index>(gamma.size());
    Rank4<Scalar> r(static_cast<size_t>(n),
                    std::vector<Matrix<Scalar>>(static_cast<size_t>(n), Matrix<Scalar>::Zero(n, n)));
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index m = 0; m < n; ++m)
            for (Eigen::Index k = 0; k < n; ++k)
                for (Eigen::Index j = 0; j < n; ++j) {
                    Scalar v = dgamma[static_cast<size_t>(j)][static_cast<size_t>(l)](k, m) -
                               dgamma[static_cast<size_t>(k)][static_cast<size_t>(l)](j, m);
                    for (Eigen::Index nn = 0; nn < n; ++nn)
                        v += gamma[static_cast<size_t>(l)](j, nn) * gamma[static_cast<size_t>(nn)](k, m) -
                             gamma[static_cast<size_t>(l)](k, nn) * gamma[static_cast<size_t>(nn)](j, m);
                    r[static_cast<size_t>(l)][static_cast<size_t>(m)](k, j) = v;
                }
    return r;
}

// Ricci_mk = R^l_{mkl} (upper index contracted with the last lower index).
template <typename Scalar>
Matrix<Scalar> ricci_contraction(const Rank4<Scalar>& r) {
    const Eigen::Index n = static_cast<Eigen::Index>(r.size());
    Matrix<Scalar> ric = Matrix<Scalar>::Zero(n, n);
    for (Eigen::Index m = 0; m < n; ++m)
        for (Eigen::Index k = 0; k < n; ++k)
            for (Eigen::Index l = 0; l < n; ++l)
                ric(m, k) += r[static_cast<size_t>(l)][static_cast<size_t>(m)](k, l);
    return ric;
}

}  // namespace qgeom
