#pragma once

#include "qgeom/geometry.hpp"

namespace qgeom {

// Hermitian inverse-mass tensor Q = Q' + i Q'' (Q' symmetric positive
// semidefinite, Q'' antisymmetric).
struct InverseMassTensor {
    MatrixXr q_real;
    MatrixXr q_imag;

    InverseMassTensor(MatrixXr real_part, MatrixXr imag_part)
        : q_real(std::move(real_part)), q_imag(std::move(imag_part)) {
        if (q_real.rows() != q_real.cols() || q_imag.rows() != q_imag.cols() ||
            q_real.rows() != q_imag.rows())
            throw DimensionMismatch("inverse-mass tensor blocks must be square and equal-sized");
        if ((q_real - q_real.transpose()).cwiseAbs().maxCoeff() > 0)
            throw InvalidConfig("Q' must be exactly symmetric");
        if ((q_imag + q_imag.transpose()).cwiseAbs().maxCoeff() > 0)
            throw InvalidConfig("Q'' must be exactly antisymmetric");
        Eigen::SelfAdjointEigenSolver<MatrixXr> es(q_real);
        if (es.eigenvalues().minCoeff() < -1e-12)
            throw InvalidConfig("Q' must be positive semidefinite");
    }

    Eigen::Index dim() const { return q_real.rows(); }
    MatrixXc hermitian() const { return q_real.cast<Complex>() + Complex(0, 1) * q_imag.cast<Complex>(); }
};

struct EffectiveFields {
    Real phi = 0.0;
    VectorXr a_vec;  // vector potential = Berry connection
    VectorXr force;
};

struct MassDiagonalization {
    MatrixXc u;            // unitary, U^dagger Q U diagonal
    VectorXr inv_masses;   // eigenvalues of Q (= 1/M_r)
    VectorXr g_tilde;      // rotated metric weights (carry the 1/2 of the potential)
    VectorXr sigma_tilde;  // rotated curvature weights
};

// Phi = Re(1/2 sum_jk conj(Q_jk) C2(j;k)); checked against the split form
// 1/2 sum (Q' g + Q'' sigma) within 1e-12 and against reality within 1e-10.
Real effective_potential(const InverseMassTensor& q, const QuantumGeometricTensor& tensor);

using QuantumChristoffelField = std::function<Rank3<Complex>(const VectorXr&)>;  // [j](l,k)
using QgtField = std::function<QuantumGeometricTensor(const VectorXr&)>;

// F_l = -Re sum_jk Q_jk [jl;k]_q, cross-checked against the FD gradient of
// the effective potential within `tolerance` (IdentityViolation otherwise).
VectorXr force(const InverseMassTensor& q, const QuantumChristoffelField& christoffel_field,
               const QgtField& qgt_field, const VectorXr& s, Real tolerance = 1e-5);

// Convenience: both fields derived from the family's engines.
EffectiveFields effective_fields(const InverseMassTensor& q, const StateFamily& family,
                                 const VectorXr& s, Real force_tolerance = 1e-5);

// Eigen-decomposition of Q plus the rotated per-point fields; the
// reconstruction sum_r inv_masses_r (g~_r + sigma~_r) equals
// effective_potential within 1e-10.
MassDiagonalization diagonalize_mass(const InverseMassTensor& q,
                                     const QuantumGeometricTensor& tensor);

}  // namespace qgeom
