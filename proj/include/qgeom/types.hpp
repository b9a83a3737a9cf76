#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "qgeom/errors.hpp"

namespace qgeom {

using Real = double;
using Complex = std::complex<Real>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using VectorXr = Vector<Real>;
using VectorXc = Vector<Complex>;
using MatrixXr = Matrix<Real>;
using MatrixXc = Matrix<Complex>;

// Rank-3 and rank-4 dense holders (small n; stored as nested std::vector of
// Eigen matrices keeps slicing expression-friendly).
template <typename Scalar>
using Rank3 = std::vector<Matrix<Scalar>>;  // [i](j,k)
template <typename Scalar>
using Rank4 = std::vector<std::vector<Matrix<Scalar>>>;  // [i][j](k,l)

inline Rank3<Complex> make_rank3_c(Eigen::Index n) {
    return Rank3<Complex>(static_cast<size_t>(n), MatrixXc::Zero(n, n));
}
inline Rank3<Real> make_rank3_r(Eigen::Index n) {
    return Rank3<Real>(static_cast<size_t>(n), MatrixXr::Zero(n, n));
}

// ---------------------------------------------------------------------------
// Parameter points and domains
// ---------------------------------------------------------------------------

struct ParameterPoint {
    VectorXr coords;
    std::vector<std::string> names;  // optional labels, may be empty

    ParameterPoint() = default;
    explicit ParameterPoint(VectorXr c, std::vector<std::string> n = {})
        : coords(std::move(c)), names(std::move(n)) {
        if (coords.size() < 1) throw InvalidConfig("parameter point needs n >= 1");
        if (!coords.allFinite()) throw NonFinite("parameter point has non-finite coordinate");
    }
    Eigen::Index dim() const { return coords.size(); }
};

struct Interval {
    Real lo = -std::numeric_limits<Real>::infinity();
    Real hi = std::numeric_limits<Real>::infinity();
    bool contains(Real x) const { return x >= lo && x <= hi; }
};

using Domain = std::vector<Interval>;

inline bool domain_contains(const Domain& dom, const VectorXr& s) {
    if (static_cast<Eigen::Index>(dom.size()) != s.size()) return false;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (!dom[static_cast<size_t>(i)].contains(s[i])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// State vectors and families
// ---------------------------------------------------------------------------

struct StateVector {
    VectorXc amplitudes;

    StateVector() = default;
    // Validates finiteness and unit norm (tolerance 1e-12 after construction).
    explicit StateVector(VectorXc a) : amplitudes(std::move(a)) {
        if (amplitudes.size() < 2) throw InvalidConfig("state dimension must be >= 2");
        if (!amplitudes.allFinite()) throw NonFinite("state vector has NaN/Inf");
        const Real n = amplitudes.norm();
        if (std::abs(n - 1.0) > 1e-12)
            throw NonFinite("state vector norm deviates from 1 beyond 1e-12");
    }
    Eigen::Index dim() const { return amplitudes.size(); }
};

// Shared mutable diagnostics a family carries through copies: the worst
// normalization drift its evaluator has produced so far.
struct FamilyDiagnostics {
    Real max_norm_drift = 0.0;
};

// Smooth map s (n real coordinates) -> normalized complex state (dimension d).
// Evaluators must be pure and bit-deterministic. `strict_normalization`
// families (the built-in truncated models) fail loudly when the raw evaluator
// output drifts from unit norm beyond drift_tolerance; generic families are
// renormalized silently with the drift recorded in diagnostics.
struct StateFamily {
    Eigen::Index param_dim = 0;
    Eigen::Index hilbert_dim = 0;
    Domain domain;
    std::vector<std::string> coord_names;
    int smoothness_order = 4;
    std::function<VectorXc(const VectorXr&)> evaluator;
    bool strict_normalization = false;
    Real drift_tolerance = 1e-10;
    std::shared_ptr<FamilyDiagnostics> diagnostics = std::make_shared<FamilyDiagnostics>();
};

// Real polynomial gauge angle alpha(s): sum of terms c * prod_i s_i^e_i.
struct GaugeFunction {
    struct Term {
        Real coefficient = 0.0;
        std::vector<int> exponents;  // one entry per coordinate
    };
    std::vector<Term> terms;

    Real operator()(const VectorXr& s) const {
        Real total = 0.0;
        for (const auto& t : terms) {
            Real v = t.coefficient;
            for (size_t i = 0; i < t.exponents.size(); ++i)
                v *= std::pow(s[static_cast<Eigen::Index>(i)], t.exponents[i]);
            total += v;
        }
        return total;
    }

    VectorXr gradient(const VectorXr& s) const {
        VectorXr g = VectorXr::Zero(s.size());
        for (const auto& t : terms) {
            for (Eigen::Index k = 0; k < s.size(); ++k) {
                const int e = t.exponents[static_cast<size_t>(k)];
                if (e == 0) continue;
                Real v = t.coefficient * e;
                for (Eigen::Index i = 0; i < s.size(); ++i) {
                    const int ei = t.exponents[static_cast<size_t>(i)];
                    v *= std::pow(s[i], i == k ? ei - 1 : ei);
                }
                g[k] += v;
            }
        }
        return g;
    }
};

}  // namespace qgeom
