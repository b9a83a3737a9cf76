#pragma once

#include <optional>
#include <vector>

#include "qgeom/statefam.hpp"

namespace qgeom {

// Mixed derivative request acting on the two-sided overlap S(s', s):
// each primed index contributes a (-i d/ds'_k) factor, each unprimed index an
// (i d/ds_k) factor; everything is evaluated on the diagonal s' = s.
struct DerivativeSpec {
    std::vector<Eigen::Index> primed;    // multiset of coordinate indices
    std::vector<Eigen::Index> unprimed;  // multiset of coordinate indices

    int total_order() const {
        return static_cast<int>(primed.size() + unprimed.size());
    }
    void validate(Eigen::Index n) const {
        if (total_order() < 1) throw InvalidConfig("derivative order must be >= 1");
        if (total_order() > 3) throw StencilTooWide("derivative order beyond 3 unsupported");
        for (Eigen::Index i : primed)
            if (i < 0 || i >= n) throw InvalidConfig("primed index out of range");
        for (Eigen::Index i : unprimed)
            if (i < 0 || i >= n) throw InvalidConfig("unprimed index out of range");
    }
};

struct CumulantValue {
    Complex value{};
    DerivativeSpec spec;
    ParameterPoint point;
    Real estimated_error = 0.0;
};

// Mixed moment: the DerivativeSpec applied to S(s', s) itself.
Complex moment(const StateFamily& family, const VectorXr& s, const DerivativeSpec& spec,
               const FDScheme& scheme = {});

// Gauge-invariant cumulant: the same mixed derivative applied to ln S(s', s).
// Every stencil point must satisfy |S - 1| < 0.5 so the principal log branch
// is safe.
CumulantValue cumulant(const StateFamily& family, const VectorXr& s, const DerivativeSpec& spec,
                       const FDScheme& scheme = {});

// Cache-sharing variants used by grid sweeps (same family, many specs).
Complex moment(StateCache& cache, const VectorXr& s, const DerivativeSpec& spec,
               const FDScheme& scheme = {});
CumulantValue cumulant(StateCache& cache, const VectorXr& s, const DerivativeSpec& spec,
                       const FDScheme& scheme = {});

// Complete moment table up to total order 3 at one point. Index layout: all
// arrays are indexed by coordinate; absent entries are signalled by
// IncompleteMomentSet from cumulants_from_moments.
struct MomentSet {
    Eigen::Index n = 0;
    std::optional<VectorXc> m1_unprimed;          // M1(_;l)
    std::optional<VectorXc> m1_primed;            // M1(l;_)
    std::optional<MatrixXc> m2_unprimed;          // M2(_;kl)
    std::optional<MatrixXc> m2_mixed;             // M2(k;l)
    std::optional<MatrixXc> m2_primed;            // M2(kl;_)
    std::optional<Rank3<Complex>> m3_1_2;         // M3(j;kl)
    std::optional<Rank3<Complex>> m3_2_1;         // M3(jk;l)
};

struct CumulantSet {
    VectorXc c1_unprimed;   // C1(_;l)
    VectorXc c1_primed;     // C1(l;_)
    MatrixXc c2_unprimed;   // C2(_;kl)
    MatrixXc c2_mixed;      // C2(k;l)
    MatrixXc c2_primed;     // C2(kl;_)
    Rank3<Complex> c3_1_2;  // C3(j;kl)
    Rank3<Complex> c3_2_1;  // C3(jk;l)
};

// Moment -> cumulant relations up to order 3; indices keep their primed /
// unprimed sides throughout.
CumulantSet cumulants_from_moments(const MomentSet& moments);

// Convenience: measure the full moment table numerically.
MomentSet measure_moments(const StateFamily& family, const VectorXr& s,
                          const FDScheme& scheme2 = {1e-3, true},
                          const FDScheme& scheme3 = {1e-2, true});

}  // namespace qgeom
