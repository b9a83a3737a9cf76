#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "qgeom/types.hpp"

namespace qgeom {

// Central finite-difference scheme. Richardson extrapolation combines the
// step-h and step-h/2 values as (4 v(h/2) - v(h)) / 3 and estimates the
// residual error as |v(h) - v(h/2)| / 15.
struct FDScheme {
    Real h = 1e-3;
    bool richardson = true;

    void validate() const {
        if (!(h >= 1e-6 && h <= 1e-1))
            throw InvalidConfig("FD step must lie in [1e-6, 1e-1]");
    }
};

namespace fd {

struct Node {
    int offset;   // multiple of h
    Real weight;  // divided by h^multiplicity at use site
};

// Central stencils for m-th derivatives, ascending offsets (fixed summation
// order keeps results bit-deterministic).
inline const std::vector<Node>& stencil(int multiplicity) {
    static const std::vector<Node> m1{{-1, -0.5}, {1, 0.5}};
    static const std::vector<Node> m2{{-1, 1.0}, {0, -2.0}, {1, 1.0}};
    static const std::vector<Node> m3{{-2, -0.5}, {-1, 1.0}, {1, -1.0}, {2, 0.5}};
    switch (multiplicity) {
        case 1: return m1;
        case 2: return m2;
        case 3: return m3;
        default: throw StencilTooWide("derivative multiplicity beyond 3 unsupported");
    }
}

// Mixed partial derivative of f at x0 with the given per-axis multiplicities,
// realized as a tensor product of central stencils.
template <typename F>
auto mixed_partial(F&& f, const VectorXr& x0,
                   const std::vector<std::pair<Eigen::Index, int>>& multiplicities, Real h)
    -> decltype(f(x0)) {
    using Value = decltype(f(x0));
    std::function<Value(size_t, VectorXr&, Real)> rec =
        [&](size_t level, VectorXr& x, Real w) -> Value {
        if (level == multiplicities.size()) return w * f(x);
        const auto [axis, mult] = multiplicities[level];
        const Real hm = std::pow(h, mult);
        Value total{};
        const Real saved = x[axis];
        for (const Node& node : stencil(mult)) {
            x[axis] = saved + node.offset * h;
            total += rec(level + 1, x, w * node.weight / hm);
        }
        x[axis] = saved;
        return total;
    };
    VectorXr x = x0;
    return rec(0, x, 1.0);
}

struct Extrapolated {
    Complex value;
    Real estimated_error;
};

// Richardson pair (h, h/2) for a mixed partial of a complex-valued callable.
template <typename F>
Extrapolated richardson_mixed_partial(
    F&& f, const VectorXr& x0,
    const std::vector<std::pair<Eigen::Index, int>>& multiplicities, const FDScheme& scheme) {
    scheme.validate();
    const Complex v1 = mixed_partial(f, x0, multiplicities, scheme.h);
    if (!scheme.richardson) return {v1, 0.0};
    const Complex v2 = mixed_partial(f, x0, multiplicities, scheme.h / 2);
    return {(4.0 * v2 - v1) / 3.0, std::abs(v1 - v2) / 15.0};
}

// First derivative of a matrix-valued field along one coordinate, with the
// same Richardson pair. Returns the extrapolated derivative and the largest
// entrywise pair residual / 15.
template <typename Field>
auto field_derivative(Field&& field, const VectorXr& s, Eigen::Index axis, Real h,
                      Real* estimated_error = nullptr) -> decltype(field(s)) {
    VectorXr sp = s, sm = s;
    sp[axis] = s[axis] + h;
    sm[axis] = s[axis] - h;
    auto d1 = ((field(sp) - field(sm)) / (2 * h)).eval();
    sp[axis] = s[axis] + h / 2;
    sm[axis] = s[axis] - h / 2;
    auto d2 = ((field(sp) - field(sm)) / h).eval();
    if (estimated_error) *estimated_error = (d1 - d2).cwiseAbs().maxCoeff() / 15.0;
    return ((4.0 * d2 - d1) / 3.0).eval();
}

}  // namespace fd
}  // namespace qgeom
