#pragma once

#include <map>
#include <vector>

#include "qgeom/fd.hpp"
#include "qgeom/types.hpp"

namespace qgeom {

// Evaluate a family at a point: domain check, finiteness check, and
// normalization policy (strict families fail on drift beyond tolerance;
// permissive families renormalize and record the drift).
VectorXc evaluate(const StateFamily& family, const VectorXr& s);

inline VectorXc evaluate(const StateFamily& family, const ParameterPoint& p) {
    return evaluate(family, p.coords);
}

// S(s', s) = <Psi(s')|Psi(s)> on normalized states.
Complex overlap(const StateFamily& family, const VectorXr& s_primed, const VectorXr& s);

// Principal-branch log of the overlap; requires |S| > 1e-12.
Complex log_overlap(const StateFamily& family, const VectorXr& s_primed, const VectorXr& s);

// Unnormalized derivative state |d_k Psi> by central difference, optional
// Richardson extrapolation.
VectorXc tangent(const StateFamily& family, const VectorXr& s, Eigen::Index k,
                 const FDScheme& scheme = {});

// New family with evaluator s -> exp(-i alpha(s)) |Psi(s)>.
StateFamily apply_gauge(const StateFamily& family, const GaugeFunction& alpha);

// Deterministic per-sweep cache of evaluated states, keyed on exact
// coordinate bits. Not thread-safe; use one instance per worker.
class StateCache {
public:
    explicit StateCache(const StateFamily& family) : family_(&family) {}

    const VectorXc& get(const VectorXr& s) {
        std::vector<Real> key(s.data(), s.data() + s.size());
        auto it = cache_.find(key);
        if (it == cache_.end())
            it = cache_.emplace(std::move(key), evaluate(*family_, s)).first;
        return it->second;
    }

    Complex overlap(const VectorXr& s_primed, const VectorXr& s) {
        return get(s_primed).dot(get(s));  // Eigen dot conjugates the left factor
    }

    const StateFamily& family() const { return *family_; }

private:
    const StateFamily* family_;
    std::map<std::vector<Real>, VectorXc> cache_;
};

}  // namespace qgeom
