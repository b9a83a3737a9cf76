#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "qgeom/geometry.hpp"

namespace qgeom {

enum class GroupTag { WeylHeisenberg, SU2, SU11 };

enum class SeriesTag {
    None,                  // Weyl-Heisenberg / SU(2): no series bookkeeping
    Dplus,                 // lowest-weight discrete series, m = -j, -j+1, ...
    Dminus,                // highest-weight discrete series, m = j, j-1, ...
    Ck0,                   // continuous, j = -1/2 + ik, m integer (analytic only)
    Ck12,                  // continuous, j = -1/2 + ik, m half-odd (analytic only)
    Supplementary,         // -1/2 < j < 0, m integer (analytic only)
    ProjectiveDiscrete,    // j < 0 real, m = -j, -j+1, ...
    ProjectiveContinuous,  // j = -1/2 + i delta, m = m0 + integers (analytic only)
    TwoOscillator          // projective discrete j in {-1/4, -3/4} realized on two bosons
};

std::string to_string(GroupTag tag);
std::string to_string(SeriesTag tag);
std::optional<GroupTag> parse_group(const std::string& text);
std::optional<SeriesTag> parse_series(const std::string& text);

struct ModelSpec {
    GroupTag group = GroupTag::WeylHeisenberg;
    Complex j{0.0, 0.0};  // complex so the continuous series fit; numerics need Im j = 0
    Real m = 0.0;
    SeriesTag series = SeriesTag::None;
    int truncation = 128;
};

struct LadderAlgebra {
    MatrixXc j_plus;
    MatrixXc j_minus;
    MatrixXc j_z;
    GroupTag group_tag = GroupTag::SU2;
    VectorXr weights;  // eigenvalues of j_z along the stored basis
};

struct SeriesValidation {
    bool ok = false;
    std::string reason;
};

struct AlgebraReport {
    Real commutator_residual_jz = 0.0;      // max |[Jz, J+-] -+ J+-| on the interior
    Real commutator_residual_ladder = 0.0;  // max |[J+, J-] - rhs| on the interior
    Real casimir_eigenvalue = 0.0;          // on the base state
    Real casimir_residual = 0.0;            // vs j(j+1) (or 1 for [a, a+])
    Real lowest_weight_annihilation = 0.0;  // ||J- |extremal>|| when defined
};

struct CosetDecomposition {
    MatrixXc a_matrix;    // n x 2 coefficients on (raising, lowering)
    VectorXc cartan;      // coefficient on J_z (or the number operator)
    VectorXc identity;    // scalar component
    Real residual = 0.0;  // operator-level remainder after projection
};

// Ladder matrices on the truncated basis for the given spec.
LadderAlgebra build_ladder(const ModelSpec& spec);

// Coherent family over (alpha1, alpha2) / (theta, phi) / (rho, phi). The
// evaluator applies the factored displacement exp(z+ J+) diag(w) exp(z- J-)
// to the base state; each factor is a terminating series on the truncated
// basis, so coefficients are exact up to rounding and the truncation tail.
// Families are strict: norm drift beyond 1e-10 raises TruncationInsufficient.
StateFamily build_model(const ModelSpec& spec);

AlgebraReport ladder_algebra_check(const ModelSpec& spec);

SeriesValidation validate_series(Complex j, Real m, SeriesTag series);
inline SeriesValidation validate_series(const ModelSpec& spec) {
    return validate_series(spec.j, spec.m, spec.series);
}

// Closed-form tensors: Glauber diag(2m+1) with +-i off-diagonals; SU(2)/SU(1,1)
// from X = j(j+1) - m^2 resp. X~ = m^2 - j(j+1) (j(j+1) is real for every
// supported series, including the continuous ones).
QuantumGeometricTensor analytic_qgt(const ModelSpec& spec, const VectorXr& s);
Real analytic_det(const ModelSpec& spec, const VectorXr& s);

// Operator-level expansion of D^dagger d_k D over {raising, lowering, Cartan,
// identity}; raises DecompositionResidual when the remainder exceeds 1e-6.
CosetDecomposition coset_derivative(const ModelSpec& spec, const VectorXr& s);

}  // namespace qgeom
